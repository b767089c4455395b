//! Statistics over batches of runs and policy diagnostics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, Discrete};

use crate::error::{Error, Result};
use crate::policy::PolicyTable;
use crate::sim::{Outcome, RunResult};
use crate::state::{StateIndex, Word};

/// Jensen-Shannon distance below which an empty-memory policy counts as neutral.
pub const NEUTRALITY_THRESHOLD: f64 = 0.005;

/// Relative slack when comparing binomial point probabilities.
const BINOMIAL_RELATIVE_TOLERANCE: f64 = 1e-7;

/// Share of consensus runs that ended on word A.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasEstimate {
    /// NaN when no run reached consensus.
    pub fraction_a: f64,
    /// Plug-in binomial standard error `sqrt(f (1 - f) / n_consensus)`.
    pub sem: f64,
    pub n_runs: usize,
    pub n_consensus: usize,
    pub n_no_consensus: usize,
}

impl BiasEstimate {
    pub fn from_counts(n_a: usize, n_b: usize, n_none: usize) -> Self {
        let n = n_a + n_b;
        let (fraction_a, sem) = if n == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let f = n_a as f64 / n as f64;
            (f, (f * (1.0 - f) / n as f64).sqrt())
        };
        BiasEstimate {
            fraction_a,
            sem,
            n_runs: n + n_none,
            n_consensus: n,
            n_no_consensus: n_none,
        }
    }

    /// Fraction of all runs that reached consensus.
    pub fn convergence_fraction(&self) -> f64 {
        self.n_consensus as f64 / self.n_runs as f64
    }
}

pub fn collective_bias(results: &[RunResult]) -> Result<BiasEstimate> {
    if results.is_empty() {
        return Err(Error::InvalidConfig("no runs to summarise".into()));
    }
    let (mut a, mut b, mut none) = (0, 0, 0);
    for r in results {
        match r.outcome {
            Outcome::ConsensusA => a += 1,
            Outcome::ConsensusB => b += 1,
            Outcome::NoConsensus => none += 1,
        }
    }
    Ok(BiasEstimate::from_counts(a, b, none))
}

/// Smallest value reaching the highest count.
pub fn mode(values: impl IntoIterator<Item = usize>) -> Option<usize> {
    let mut hist = BTreeMap::new();
    for v in values {
        *hist.entry(v).or_insert(0usize) += 1;
    }
    mode_of_histogram(&hist)
}

fn mode_of_histogram(hist: &BTreeMap<usize, usize>) -> Option<usize> {
    // BTreeMap iterates ascending; strict `>` keeps the smallest round on ties.
    let mut best: Option<(usize, usize)> = None;
    for (&round, &count) in hist {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((round, count));
        }
    }
    best.map(|(r, _)| r)
}

/// Histogram of consensus rounds split by the word agreed on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsensusTimePdf {
    pub counts_a: BTreeMap<usize, usize>,
    pub counts_b: BTreeMap<usize, usize>,
}

impl ConsensusTimePdf {
    pub fn counts(&self, w: Word) -> &BTreeMap<usize, usize> {
        match w {
            Word::A => &self.counts_a,
            Word::B => &self.counts_b,
        }
    }

    pub fn total(&self, w: Word) -> usize {
        self.counts(w).values().sum()
    }

    pub fn mode(&self, w: Word) -> Option<usize> {
        mode_of_histogram(self.counts(w))
    }

    /// `(round, count_strong, count_weak)` for every round between the first
    /// and last observed consensus time.
    pub fn rows(&self, strong: Word) -> Vec<(usize, usize, usize)> {
        let (s, w) = (self.counts(strong), self.counts(strong.swapped()));
        let lo = s.keys().chain(w.keys()).min().copied();
        let hi = s.keys().chain(w.keys()).max().copied();
        match (lo, hi) {
            (Some(lo), Some(hi)) => (lo..=hi)
                .map(|r| {
                    (
                        r,
                        s.get(&r).copied().unwrap_or(0),
                        w.get(&r).copied().unwrap_or(0),
                    )
                })
                .collect(),
            _ => Vec::new(),
        }
    }
}

pub fn consensus_time_stats(results: &[RunResult]) -> Result<ConsensusTimePdf> {
    let mut pdf = ConsensusTimePdf::default();
    for r in results {
        let (Some(t), Some(w)) = (r.consensus_time, r.outcome.word()) else {
            continue;
        };
        let hist = match w {
            Word::A => &mut pdf.counts_a,
            Word::B => &mut pdf.counts_b,
        };
        *hist.entry(t).or_insert(0) += 1;
    }
    if pdf.counts_a.is_empty() && pdf.counts_b.is_empty() {
        return Err(Error::NoConsensus);
    }
    Ok(pdf)
}

/// Jensen-Shannon distance (base-2 logarithms), in `[0, 1]`.
pub fn js_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must share a support");
    fn kl_to_mid(a: f64, m: f64) -> f64 {
        if a == 0.0 {
            0.0
        } else {
            a * (a / m).log2()
        }
    }
    let div: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let m = 0.5 * (a + b);
            0.5 * (kl_to_mid(a, m) + kl_to_mid(b, m))
        })
        .sum();
    div.clamp(0.0, 1.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndividualBias {
    /// Probability of word A from the empty memory.
    pub prob_a: f64,
    pub js_distance: f64,
    pub neutral: bool,
}

pub fn individual_bias(policy: &PolicyTable) -> IndividualBias {
    let q = policy.prob_a(StateIndex::EMPTY);
    let d = js_distance(&[q, 1.0 - q], &[0.5, 0.5]);
    IndividualBias {
        prob_a: q,
        js_distance: d,
        neutral: d < NEUTRALITY_THRESHOLD,
    }
}

/// Two-sided exact binomial test: total probability of outcomes no more
/// likely than `k` under `Binomial(n, p)`.
pub fn exact_binomial_test(k: u64, n: u64, p: f64) -> Result<f64> {
    if k > n {
        return Err(Error::InvalidConfig(format!("k = {k} exceeds n = {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!("p = {p} outside [0, 1]")));
    }
    let dist = Binomial::new(p, n).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let observed = dist.pmf(k) * (1.0 + BINOMIAL_RELATIVE_TOLERANCE);
    let total: f64 = (0..=n).map(|i| dist.pmf(i)).filter(|&d| d <= observed).sum();
    Ok(total.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongWord {
    pub word: Word,
    pub population: usize,
    pub fraction_a: f64,
    /// The fraction lies within two standard errors of one half.
    pub ambiguous: bool,
}

/// Minimum consensus runs a population size needs to decide the strong word.
pub const STRONG_WORD_MIN_RUNS: usize = 100;

/// The word favoured at the largest population size with enough consensus runs.
pub fn determine_strong_word(sweep: &[(usize, BiasEstimate)]) -> Result<StrongWord> {
    let (population, est) = sweep
        .iter()
        .filter(|(_, e)| e.n_consensus >= STRONG_WORD_MIN_RUNS)
        .max_by_key(|(n, _)| *n)
        .ok_or(Error::NoConsensus)?;
    let f = est.fraction_a;
    Ok(StrongWord {
        word: if f >= 0.5 { Word::A } else { Word::B },
        population: *population,
        fraction_a: f,
        ambiguous: (f - 0.5).abs() <= 2.0 * est.sem,
    })
}

/// Observed production counts for one memory state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedCounts {
    pub state_index: usize,
    pub observed_k: u64,
    pub n: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub state_index: usize,
    pub expected_p: f64,
    pub observed_k: u64,
    pub n: u64,
    pub p_value: f64,
    pub pass: bool,
}

/// Binomial test of observed word-A counts against the policy, one row per input.
pub fn validate_counts(
    policy: &PolicyTable,
    counts: &[ObservedCounts],
    alpha: f64,
) -> Vec<std::result::Result<ValidationRow, String>> {
    counts
        .iter()
        .map(|c| {
            if c.state_index >= policy.state_count() {
                return Err(format!(
                    "state {} out of range ({} states)",
                    c.state_index,
                    policy.state_count()
                ));
            }
            if c.n == 0 {
                return Err(format!("state {}: zero trials", c.state_index));
            }
            let expected_p = policy.prob_a(StateIndex(c.state_index));
            let p_value =
                exact_binomial_test(c.observed_k, c.n, expected_p).map_err(|e| e.to_string())?;
            Ok(ValidationRow {
                state_index: c.state_index,
                expected_p,
                observed_k: c.observed_k,
                n: c.n,
                p_value,
                pass: p_value >= alpha,
            })
        })
        .collect()
}
