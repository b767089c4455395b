//! Memory states and their canonical integer encoding.
//!
//! An agent remembers its last `h <= H` interactions as `(own, partner)` word
//! pairs, oldest first. States are numbered by length first and then, within
//! a length, by reading the pair digits `2*own + partner` as a base-4 number
//! with the oldest pair most significant. Index 0 is the empty memory.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported history length. `4^(H+1)` must fit comfortably in `usize`.
pub const MAX_HISTORY_LEN: usize = 12;

/// History length used when none is given.
pub const DEFAULT_HISTORY_LEN: usize = 5;

pub const SUCCESS_PAYOFF: i64 = 100;
pub const FAILURE_PAYOFF: i64 = -50;

/// One of the two competing conventions. `A` is always the first word of the pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Word {
    A,
    B,
}

impl Word {
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Word::A => 0,
            Word::B => 1,
        }
    }

    #[inline]
    pub fn from_index(i: usize) -> Word {
        if i == 0 {
            Word::A
        } else {
            Word::B
        }
    }

    #[inline]
    pub fn swapped(self) -> Word {
        match self {
            Word::A => Word::B,
            Word::B => Word::A,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Word::A => 'A',
            Word::B => 'B',
        }
    }
}

/// One remembered interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pair {
    pub own: Word,
    pub partner: Word,
}

impl Pair {
    pub fn new(own: Word, partner: Word) -> Self {
        Pair { own, partner }
    }

    #[inline]
    pub fn digit(self) -> usize {
        2 * self.own.index() + self.partner.index()
    }

    #[inline]
    pub fn from_digit(d: usize) -> Self {
        Pair {
            own: Word::from_index(d >> 1),
            partner: Word::from_index(d & 1),
        }
    }

    pub fn success(self) -> bool {
        self.own == self.partner
    }

    pub fn payoff(self) -> i64 {
        if self.success() {
            SUCCESS_PAYOFF
        } else {
            FAILURE_PAYOFF
        }
    }

    pub fn swapped(self) -> Self {
        Pair::new(self.own.swapped(), self.partner.swapped())
    }
}

/// Number of memory states for history length `h`: `(4^(h+1) - 1) / 3`.
#[inline]
pub const fn state_count(h: usize) -> usize {
    ((1usize << (2 * (h + 1))) - 1) / 3
}

/// First index used by states of length `len`.
#[inline]
const fn length_offset(len: usize) -> usize {
    ((1usize << (2 * len)) - 1) / 3
}

pub(crate) fn check_history_len(h: usize, min: usize) -> Result<()> {
    if h < min || h > MAX_HISTORY_LEN {
        return Err(Error::InvalidHistoryLen {
            got: h,
            min,
            max: MAX_HISTORY_LEN,
        });
    }
    Ok(())
}

/// Canonical integer code of a memory state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateIndex(pub usize);

impl StateIndex {
    pub const EMPTY: StateIndex = StateIndex(0);

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An agent's memory: at most `H` pairs, oldest first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MemoryState {
    pairs: Vec<Pair>,
}

impl MemoryState {
    pub fn empty() -> Self {
        MemoryState { pairs: Vec::new() }
    }

    pub fn from_pairs(pairs: Vec<Pair>) -> Self {
        MemoryState { pairs }
    }

    /// `h` copies of `(word, word)`.
    pub fn homogeneous(word: Word, h: usize) -> Self {
        MemoryState {
            pairs: vec![Pair::new(word, word); h],
        }
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn successes(&self) -> usize {
        self.pairs.iter().filter(|p| p.success()).count()
    }

    /// Accumulated payoff over the remembered interactions.
    pub fn score(&self) -> i64 {
        self.pairs.iter().map(|p| p.payoff()).sum()
    }

    /// Appends `(own, partner)`, dropping the oldest pair once the memory is full.
    pub fn shift(&self, own: Word, partner: Word, h: usize) -> MemoryState {
        let skip = (self.pairs.len() + 1).saturating_sub(h);
        let mut pairs = Vec::with_capacity(h);
        pairs.extend_from_slice(&self.pairs[skip.min(self.pairs.len())..]);
        if h > 0 {
            pairs.push(Pair::new(own, partner));
        }
        MemoryState { pairs }
    }

    /// Relabels A and B in every pair.
    pub fn swapped(&self) -> MemoryState {
        MemoryState {
            pairs: self.pairs.iter().map(|p| p.swapped()).collect(),
        }
    }

    pub fn encode(&self, h: usize) -> Result<StateIndex> {
        encode_state(self, h)
    }
}

impl fmt::Display for MemoryState {
    /// `"AA|BA"`: own then partner word per pair, oldest first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.pairs.iter().enumerate() {
            if k > 0 {
                f.write_str("|")?;
            }
            write!(f, "{}{}", p.own.as_char(), p.partner.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for MemoryState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Ok(MemoryState::empty());
        }
        let word = |c: u8| match c {
            b'A' => Ok(Word::A),
            b'B' => Ok(Word::B),
            _ => Err(Error::StateSyntax(s.to_string())),
        };
        s.split('|')
            .map(|tok| match tok.as_bytes() {
                [o, p] => Ok(Pair::new(word(*o)?, word(*p)?)),
                _ => Err(Error::StateSyntax(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()
            .map(MemoryState::from_pairs)
    }
}

pub fn encode_state(state: &MemoryState, h: usize) -> Result<StateIndex> {
    let len = state.len();
    if len > h {
        return Err(Error::MemoryTooLong { len, max: h });
    }
    let within = state
        .pairs
        .iter()
        .fold(0usize, |acc, p| acc * 4 + p.digit());
    Ok(StateIndex(length_offset(len) + within))
}

pub fn decode_state(index: StateIndex, h: usize) -> Result<MemoryState> {
    let count = state_count(h);
    let i = index.0;
    if i >= count {
        return Err(Error::IndexOutOfRange { index: i, count });
    }
    let mut len = 0;
    while length_offset(len + 1) <= i {
        len += 1;
    }
    let mut within = i - length_offset(len);
    let mut pairs = vec![Pair::from_digit(0); len];
    for slot in pairs.iter_mut().rev() {
        *slot = Pair::from_digit(within & 3);
        within >>= 2;
    }
    Ok(MemoryState { pairs })
}

/// Index of the memory holding `H` copies of `(word, word)`.
pub fn homogeneous_index(word: Word, h: usize) -> StateIndex {
    let digit = 3 * word.index();
    let within = (0..h).fold(0usize, |acc, _| acc * 4 + digit);
    StateIndex(length_offset(h) + within)
}

/// Index of the A/B-relabelled state.
pub fn swap_index(index: StateIndex, h: usize) -> Result<StateIndex> {
    decode_state(index, h)?.swapped().encode(h)
}

/// Iterates all states of history length `h` in index order.
pub fn enumerate_states(h: usize) -> impl Iterator<Item = (StateIndex, MemoryState)> {
    (0..state_count(h)).map(move |i| {
        let idx = StateIndex(i);
        (idx, decode_state(idx, h).expect("index below state_count"))
    })
}
