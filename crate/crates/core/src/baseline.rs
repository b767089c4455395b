//! Minimal naming game over two words with a fixed individual bias.
//!
//! Agents hold inventories that are subsets of `{A, B}`, initially empty. A
//! speaker with an empty or full inventory says A with probability `p`, a
//! speaker with one word says that word. A hearer that knows the word agrees
//! and both inventories collapse to it; otherwise the hearer learns the word.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{collective_bias, BiasEstimate};
use crate::error::{Error, Result};
use crate::sim::{derive_seed, Outcome, RunResult, DEFAULT_MAX_ROUNDS};
use crate::state::Word;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub population: usize,
    /// Probability of saying A whenever the speaker has a free choice.
    pub bias: f64,
    pub runs: usize,
    pub max_rounds: usize,
    pub seed: u64,
}

impl BaselineConfig {
    pub fn new(population: usize, bias: f64, runs: usize, seed: u64) -> Self {
        BaselineConfig {
            population,
            bias,
            runs,
            max_rounds: DEFAULT_MAX_ROUNDS,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidConfig(format!(
                "population must be >= 2, got {}",
                self.population
            )));
        }
        if !(0.0..=1.0).contains(&self.bias) {
            return Err(Error::InvalidConfig(format!(
                "bias must lie in [0, 1], got {}",
                self.bias
            )));
        }
        if self.runs == 0 || self.max_rounds == 0 {
            return Err(Error::InvalidConfig("runs and max_rounds must be >= 1".into()));
        }
        Ok(())
    }
}

/// A word inventory; bit 0 holds A, bit 1 holds B.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Inventory(u8);

impl Inventory {
    pub const EMPTY: Inventory = Inventory(0);

    pub fn only(w: Word) -> Self {
        Inventory(1 << w.index())
    }

    pub fn both() -> Self {
        Inventory(0b11)
    }

    pub fn contains(self, w: Word) -> bool {
        self.0 & (1 << w.index()) != 0
    }

    pub fn insert(&mut self, w: Word) {
        self.0 |= 1 << w.index();
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// The single word held, if exactly one.
    pub fn single(self) -> Option<Word> {
        match self.0 {
            0b01 => Some(Word::A),
            0b10 => Some(Word::B),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BaselineStep {
    pub speaker: usize,
    pub hearer: usize,
    pub word: Word,
    pub success: bool,
}

/// Inventories plus per-word counts of agents holding exactly that word.
#[derive(Clone, Debug)]
pub struct BaselinePopulation {
    inventories: Vec<Inventory>,
    only_a: usize,
    only_b: usize,
}

impl BaselinePopulation {
    pub fn new(n: usize) -> Self {
        BaselinePopulation {
            inventories: vec![Inventory::EMPTY; n],
            only_a: 0,
            only_b: 0,
        }
    }

    pub fn from_inventories(inventories: Vec<Inventory>) -> Self {
        let only_a = inventories.iter().filter(|i| i.single() == Some(Word::A)).count();
        let only_b = inventories.iter().filter(|i| i.single() == Some(Word::B)).count();
        BaselinePopulation {
            inventories,
            only_a,
            only_b,
        }
    }

    pub fn inventories(&self) -> &[Inventory] {
        &self.inventories
    }

    /// Word every agent holds exclusively, if any.
    pub fn consensus(&self) -> Option<Word> {
        let n = self.inventories.len();
        if self.only_a == n {
            Some(Word::A)
        } else if self.only_b == n {
            Some(Word::B)
        } else {
            None
        }
    }

    fn set(&mut self, agent: usize, inv: Inventory) {
        match self.inventories[agent].single() {
            Some(Word::A) => self.only_a -= 1,
            Some(Word::B) => self.only_b -= 1,
            None => {}
        }
        match inv.single() {
            Some(Word::A) => self.only_a += 1,
            Some(Word::B) => self.only_b += 1,
            None => {}
        }
        self.inventories[agent] = inv;
    }

    /// Speaker utters, hearer responds. `u` drives the speaker's free choice.
    pub fn exchange(&mut self, speaker: usize, hearer: usize, bias: f64, u: f64) -> BaselineStep {
        let inv = self.inventories[speaker];
        let word = inv.single().unwrap_or(if u < bias { Word::A } else { Word::B });
        let success = self.inventories[hearer].contains(word);
        if success {
            self.set(speaker, Inventory::only(word));
            self.set(hearer, Inventory::only(word));
        } else {
            let mut h = self.inventories[hearer];
            h.insert(word);
            self.set(hearer, h);
        }
        BaselineStep {
            speaker,
            hearer,
            word,
            success,
        }
    }

    /// One interaction between a uniformly drawn ordered pair.
    pub fn step<R: Rng + ?Sized>(&mut self, bias: f64, rng: &mut R) -> BaselineStep {
        let n = self.inventories.len();
        let speaker = rng.random_range(0..n);
        let mut hearer = rng.random_range(0..n - 1);
        if hearer >= speaker {
            hearer += 1;
        }
        let u: f64 = rng.random();
        self.exchange(speaker, hearer, bias, u)
    }
}

fn run_seeded(config: &BaselineConfig, seed: u64) -> RunResult {
    let n = config.population;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pop = BaselinePopulation::new(n);
    for round in 1..=config.max_rounds {
        for _ in 0..n {
            pop.step(config.bias, &mut rng);
            if let Some(w) = pop.consensus() {
                return RunResult {
                    outcome: Outcome::consensus(w),
                    consensus_time: Some(round),
                    rounds_executed: round,
                    trajectory: None,
                    seed,
                };
            }
        }
    }
    RunResult {
        outcome: Outcome::NoConsensus,
        consensus_time: None,
        rounds_executed: config.max_rounds,
        trajectory: None,
        seed,
    }
}

/// One run seeded directly with `config.seed`.
pub fn baseline_run(config: &BaselineConfig) -> Result<RunResult> {
    config.validate()?;
    Ok(run_seeded(config, config.seed))
}

/// `config.runs` runs; run `k` uses `derive_seed(config.seed, k)`.
pub fn baseline_batch(config: &BaselineConfig) -> Result<Vec<RunResult>> {
    config.validate()?;
    Ok((0..config.runs as u64)
        .into_par_iter()
        .map(|k| run_seeded(config, derive_seed(config.seed, k)))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasCurvePoint {
    pub bias: f64,
    pub estimate: BiasEstimate,
    pub mean_consensus_rounds: f64,
}

/// Collective bias of the minimal game for every individual bias in `grid`.
///
/// `template.bias` is ignored. Each grid point gets its own master seed
/// derived from `template.seed` and its position, so adding points does not
/// perturb the others.
pub fn baseline_bias_curve(template: &BaselineConfig, grid: &[f64]) -> Result<Vec<BiasCurvePoint>> {
    grid.iter()
        .enumerate()
        .map(|(g, &p)| {
            let config = BaselineConfig {
                bias: p,
                seed: derive_seed(template.seed, g as u64),
                ..template.clone()
            };
            let results = baseline_batch(&config)?;
            let times: Vec<f64> = results
                .iter()
                .filter_map(|r| r.consensus_time.map(|t| t as f64))
                .collect();
            let mean = if times.is_empty() {
                f64::NAN
            } else {
                times.iter().sum::<f64>() / times.len() as f64
            };
            Ok(BiasCurvePoint {
                bias: p,
                estimate: collective_bias(&results)?,
                mean_consensus_rounds: mean,
            })
        })
        .collect()
}
