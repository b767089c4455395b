//! Finite-population Monte Carlo engine.
//!
//! One interaction picks two distinct agents uniformly at random, lets each
//! produce a word from its own memory state and updates both memories. A
//! population round is `N` interactions. A run converges once the fraction
//! of successful interactions over the last `window_rounds * N` interactions
//! reaches the consensus threshold; the check happens after every
//! interaction and the reported time is the (1-based) round it happened in.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::PolicyTable;
use crate::state::{StateIndex, Word};
use crate::transition::TransitionTable;

pub const DEFAULT_MAX_ROUNDS: usize = 1000;
pub const DEFAULT_CONSENSUS_THRESHOLD: f64 = 0.98;
pub const DEFAULT_WINDOW_ROUNDS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub population: usize,
    pub max_rounds: usize,
    pub consensus_threshold: f64,
    pub window_rounds: usize,
    pub seed: u64,
    pub record_trajectory: bool,
    /// Words counted by the usage-fraction trajectory; `None` means `N`.
    pub usage_window: Option<usize>,
}

impl SimConfig {
    pub fn new(population: usize, seed: u64) -> Self {
        SimConfig {
            population,
            max_rounds: DEFAULT_MAX_ROUNDS,
            consensus_threshold: DEFAULT_CONSENSUS_THRESHOLD,
            window_rounds: DEFAULT_WINDOW_ROUNDS,
            seed,
            record_trajectory: false,
            usage_window: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population < 2 {
            return bad(format!("population must be >= 2, got {}", self.population));
        }
        if !(self.consensus_threshold > 0.0 && self.consensus_threshold <= 1.0) {
            return bad(format!(
                "consensus threshold must lie in (0, 1], got {}",
                self.consensus_threshold
            ));
        }
        if self.window_rounds == 0 {
            return bad("window_rounds must be >= 1".into());
        }
        if self.max_rounds < self.window_rounds {
            return bad(format!(
                "max_rounds ({}) must be >= window_rounds ({})",
                self.max_rounds, self.window_rounds
            ));
        }
        if self.usage_window == Some(0) {
            return bad("usage window must be >= 1 word".into());
        }
        Ok(())
    }

    /// Interactions covered by the convergence window.
    pub fn window_len(&self) -> usize {
        self.window_rounds * self.population
    }

    /// Successes needed inside the window: `ceil(threshold * window_len)`.
    pub fn required_successes(&self) -> usize {
        let exact = self.consensus_threshold * self.window_len() as f64;
        // Products like 0.98 * 300 land a hair above the integer.
        (exact - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    ConsensusA,
    ConsensusB,
    NoConsensus,
}

impl Outcome {
    pub fn consensus(word: Word) -> Self {
        match word {
            Word::A => Outcome::ConsensusA,
            Word::B => Outcome::ConsensusB,
        }
    }

    pub fn word(self) -> Option<Word> {
        match self {
            Outcome::ConsensusA => Some(Word::A),
            Outcome::ConsensusB => Some(Word::B),
            Outcome::NoConsensus => None,
        }
    }

    pub fn swapped(self) -> Self {
        match self {
            Outcome::ConsensusA => Outcome::ConsensusB,
            Outcome::ConsensusB => Outcome::ConsensusA,
            Outcome::NoConsensus => Outcome::NoConsensus,
        }
    }

    /// Short label used in output tables.
    pub fn label(self) -> &'static str {
        match self {
            Outcome::ConsensusA => "A",
            Outcome::ConsensusB => "B",
            Outcome::NoConsensus => "none",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub outcome: Outcome,
    /// Round in which the criterion fired; `None` without consensus.
    pub consensus_time: Option<usize>,
    pub rounds_executed: usize,
    /// Usage fraction of word A at the end of each executed round.
    pub trajectory: Option<Vec<f64>>,
    pub seed: u64,
}

/// Fixed-capacity ring of booleans with a running count of `true` entries.
#[derive(Clone, Debug)]
pub struct CountingWindow {
    buf: Vec<bool>,
    head: usize,
    filled: usize,
    count: usize,
}

impl CountingWindow {
    pub fn new(capacity: usize) -> Self {
        CountingWindow {
            buf: vec![false; capacity.max(1)],
            head: 0,
            filled: 0,
            count: 0,
        }
    }

    #[inline]
    pub fn push(&mut self, v: bool) {
        if self.filled == self.buf.len() {
            self.count -= self.buf[self.head] as usize;
        } else {
            self.filled += 1;
        }
        self.buf[self.head] = v;
        self.count += v as usize;
        self.head += 1;
        if self.head == self.buf.len() {
            self.head = 0;
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.filled
    }

    pub fn is_empty(&self) -> bool {
        self.filled == 0
    }

    pub fn capacity(&self) -> usize {
        self.buf.len()
    }

    /// Recounts the stored entries from scratch.
    pub fn recount(&self) -> usize {
        if self.filled == self.buf.len() {
            self.buf.iter().filter(|&&b| b).count()
        } else {
            self.buf[..self.filled].iter().filter(|&&b| b).count()
        }
    }

    /// Fraction of `true` among stored entries.
    pub fn fraction(&self) -> Option<f64> {
        (self.filled > 0).then(|| self.count as f64 / self.filled as f64)
    }
}

/// Fraction of word A among the last `window` words (or all of them if fewer).
pub fn usage_fraction(words: &[Word], window: usize) -> Option<f64> {
    let tail = &words[words.len().saturating_sub(window)..];
    if tail.is_empty() {
        return None;
    }
    let a = tail.iter().filter(|&&w| w == Word::A).count();
    Some(a as f64 / tail.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interaction {
    pub first: Word,
    pub second: Word,
}

impl Interaction {
    pub fn success(&self) -> bool {
        self.first == self.second
    }
}

/// Agent memories plus the sliding success window.
#[derive(Clone, Debug)]
pub struct Population {
    states: Vec<StateIndex>,
    successes: CountingWindow,
}

impl Population {
    /// `n` agents with empty memories.
    pub fn new(n: usize, window_len: usize) -> Self {
        Population {
            states: vec![StateIndex::EMPTY; n],
            successes: CountingWindow::new(window_len),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[StateIndex] {
        &self.states
    }

    pub fn successes(&self) -> &CountingWindow {
        &self.successes
    }

    /// Plays agents `a` and `b` against each other with the given uniform draws.
    pub fn play(
        &mut self,
        a: usize,
        b: usize,
        u_a: f64,
        u_b: f64,
        policy: &PolicyTable,
        trans: &TransitionTable,
    ) -> Interaction {
        debug_assert_ne!(a, b);
        let (sa, sb) = (self.states[a], self.states[b]);
        let wa = policy.produce_word(sa, u_a);
        let wb = policy.produce_word(sb, u_b);
        self.states[a] = trans.next(sa, wa, wb);
        self.states[b] = trans.next(sb, wb, wa);
        let out = Interaction {
            first: wa,
            second: wb,
        };
        self.successes.push(out.success());
        out
    }

    /// One interaction between a uniformly drawn pair of distinct agents.
    pub fn interact<R: Rng + ?Sized>(
        &mut self,
        policy: &PolicyTable,
        trans: &TransitionTable,
        rng: &mut R,
    ) -> Interaction {
        let n = self.states.len();
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let u_a: f64 = rng.random();
        let u_b: f64 = rng.random();
        self.play(a, b, u_a, u_b, policy, trans)
    }
}

fn check_compatible(policy: &PolicyTable, trans: &TransitionTable) -> Result<()> {
    if policy.history_len() != trans.history_len() {
        return Err(Error::InvalidConfig(format!(
            "policy history length {} does not match transition table {}",
            policy.history_len(),
            trans.history_len()
        )));
    }
    Ok(())
}

/// Runs one simulation seeded with `config.seed`.
pub fn run(config: &SimConfig, policy: &PolicyTable) -> Result<RunResult> {
    let trans = TransitionTable::build(policy.history_len())?;
    run_with_table(config, policy, &trans)
}

pub fn run_with_table(
    config: &SimConfig,
    policy: &PolicyTable,
    trans: &TransitionTable,
) -> Result<RunResult> {
    config.validate()?;
    check_compatible(policy, trans)?;
    Ok(run_seeded(config, policy, trans, config.seed))
}

fn run_seeded(
    config: &SimConfig,
    policy: &PolicyTable,
    trans: &TransitionTable,
    seed: u64,
) -> RunResult {
    let n = config.population;
    let window_len = config.window_len();
    let required = config.required_successes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pop = Population::new(n, window_len);
    let mut usage = config
        .record_trajectory
        .then(|| CountingWindow::new(config.usage_window.unwrap_or(n)));
    let mut trajectory = config.record_trajectory.then(Vec::new);
    let mut last_success: Option<Word> = None;
    let mut interactions = 0usize;

    for round in 1..=config.max_rounds {
        for _ in 0..n {
            let it = pop.interact(policy, trans, &mut rng);
            interactions += 1;
            if it.success() {
                last_success = Some(it.first);
            }
            if let Some(u) = usage.as_mut() {
                u.push(it.first == Word::A);
                u.push(it.second == Word::A);
            }
            if interactions >= window_len && pop.successes.count() >= required {
                if let (Some(t), Some(u)) = (trajectory.as_mut(), usage.as_ref()) {
                    t.push(u.fraction().unwrap_or(0.0));
                }
                // `required >= 1` successes are in the window, so one was seen.
                let word = last_success.expect("a successful interaction precedes consensus");
                return RunResult {
                    outcome: Outcome::consensus(word),
                    consensus_time: Some(round),
                    rounds_executed: round,
                    trajectory,
                    seed,
                };
            }
        }
        if let (Some(t), Some(u)) = (trajectory.as_mut(), usage.as_ref()) {
            t.push(u.fraction().unwrap_or(0.0));
        }
    }
    RunResult {
        outcome: Outcome::NoConsensus,
        consensus_time: None,
        rounds_executed: config.max_rounds,
        trajectory,
        seed,
    }
}

/// Seed of run `k` in a batch with master seed `master`.
///
/// Each run reads the first word of its own ChaCha stream, so the derivation
/// is independent of scheduling.
pub fn derive_seed(master: u64, k: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(k);
    rng.next_u64()
}

/// `runs` independent simulations; run `k` is seeded with `derive_seed(config.seed, k)`.
///
/// Runs execute on the current rayon pool; the result order is the run order.
pub fn run_batch(config: &SimConfig, policy: &PolicyTable, runs: usize) -> Result<Vec<RunResult>> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be >= 1".into()));
    }
    config.validate()?;
    let trans = TransitionTable::build(policy.history_len())?;
    Ok((0..runs as u64)
        .into_par_iter()
        .map(|k| run_seeded(config, policy, &trans, derive_seed(config.seed, k)))
        .collect())
}

/// Serial reference for [`run_batch`].
pub fn run_batch_serial(
    config: &SimConfig,
    policy: &PolicyTable,
    runs: usize,
) -> Result<Vec<RunResult>> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be >= 1".into()));
    }
    config.validate()?;
    let trans = TransitionTable::build(policy.history_len())?;
    Ok((0..runs as u64)
        .map(|k| run_seeded(config, policy, &trans, derive_seed(config.seed, k)))
        .collect())
}
