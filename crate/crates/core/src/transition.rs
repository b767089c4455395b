use crate::error::Result;
use crate::state::{check_history_len, decode_state, state_count, StateIndex, Word};

/// Precompiled shift function: `next(i, own, partner)` is the index reached from
/// state `i` after playing `own` against `partner`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionTable {
    history_len: usize,
    // Row-major over (state, 2*own + partner).
    next: Vec<u32>,
}

impl TransitionTable {
    pub fn build(h: usize) -> Result<Self> {
        check_history_len(h, 1)?;
        let n = state_count(h);
        let mut next = Vec::with_capacity(4 * n);
        for i in 0..n {
            let m = decode_state(StateIndex(i), h)?;
            for d in 0..4 {
                let (own, partner) = (Word::from_index(d >> 1), Word::from_index(d & 1));
                next.push(m.shift(own, partner, h).encode(h)?.get() as u32);
            }
        }
        Ok(TransitionTable {
            history_len: h,
            next,
        })
    }

    pub fn history_len(&self) -> usize {
        self.history_len
    }

    pub fn state_count(&self) -> usize {
        self.next.len() / 4
    }

    #[inline]
    pub fn next(&self, i: StateIndex, own: Word, partner: Word) -> StateIndex {
        StateIndex(self.next[4 * i.0 + 2 * own.index() + partner.index()] as usize)
    }

    /// All four successors of `i`, ordered AA, AB, BA, BB.
    #[inline]
    pub fn successors(&self, i: StateIndex) -> [StateIndex; 4] {
        let row = &self.next[4 * i.0..4 * i.0 + 4];
        [
            StateIndex(row[0] as usize),
            StateIndex(row[1] as usize),
            StateIndex(row[2] as usize),
            StateIndex(row[3] as usize),
        ]
    }
}
