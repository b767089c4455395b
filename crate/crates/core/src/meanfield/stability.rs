//! Homogeneous fixed points and their linear stability.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::largest_eigenvalue;
use crate::error::Result;
use crate::policy::{PolicyTable, WordPair};
use crate::state::{homogeneous_index, StateIndex, Word};
use crate::transition::TransitionTable;

/// Real parts within this distance of zero are reported as marginal.
pub const MARGINAL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn classify(lambda: Complex64) -> Self {
        if lambda.re < -MARGINAL_TOLERANCE {
            Stability::Stable
        } else if lambda.re > MARGINAL_TOLERANCE {
            Stability::Unstable
        } else {
            Stability::Marginal
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

/// Analysis of one consensus candidate (all memories full of one word).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub word: Word,
    pub state: StateIndex,
    /// `max_k |x_k - sum_ij x_i x_j P_k(i, j)|` at the candidate.
    pub residual: f64,
    pub lambda_max: Complex64,
    pub class: Stability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub word_pair: WordPair,
    pub history_len: usize,
    pub all_a: FixedPointReport,
    pub all_b: FixedPointReport,
}

/// Fixed-point residual at `x = delta_n`: `max_k |delta_kn - P_k(n, n)|`.
pub fn fixed_point_residual(policy: &PolicyTable, trans: &TransitionTable, n: StateIndex) -> f64 {
    let q = policy.prob_a(n);
    let weights = [q * q, q * (1.0 - q), (1.0 - q) * q, (1.0 - q) * (1.0 - q)];
    // The four successors are distinct, so each carries one weight.
    let mut worst = 0.0f64;
    let mut mass_on_n = 0.0;
    for (k, w) in trans.successors(n).into_iter().zip(weights) {
        if k == n {
            mass_on_n += w;
        } else {
            worst = worst.max(w);
        }
    }
    worst.max((1.0 - mass_on_n).abs())
}

/// Residuals of the all-A and all-B candidates, in that order.
pub fn homogeneous_candidates(
    policy: &PolicyTable,
    trans: &TransitionTable,
) -> [(Word, StateIndex, f64); 2] {
    let h = policy.history_len();
    [Word::A, Word::B].map(|w| {
        let n = homogeneous_index(w, h);
        (w, n, fixed_point_residual(policy, trans, n))
    })
}

/// Jacobian of the rate equation restricted to the simplex at `x = delta_n`.
///
/// Rows and columns run over every state except `n` in index order. Entry
/// `(i, j)` is `-delta_ij + 2 [T_i(j, n) - T_i(n, n)]` with the symmetrised
/// transition tensor `T_k(i, j) = (P_k(i, j) + P_k(j, i)) / 2`.
pub fn reduced_jacobian(
    policy: &PolicyTable,
    trans: &TransitionTable,
    n: StateIndex,
) -> DMatrix<f64> {
    let size = policy.state_count();
    let dim = size - 1;
    let reduce = |s: StateIndex| -> Option<usize> {
        use std::cmp::Ordering::*;
        match s.0.cmp(&n.0) {
            Less => Some(s.0),
            Equal => None,
            Greater => Some(s.0 - 1),
        }
    };
    let qn = policy.prob_a(n);
    let mut jac = DMatrix::<f64>::zeros(dim, dim);

    // 2 T_i(j, n) = P_i(j, n) + P_i(n, j), column by column.
    for j in 0..size {
        let sj = StateIndex(j);
        let Some(col) = reduce(sj) else { continue };
        let qj = policy.prob_a(sj);
        let from_j = [qj * qn, qj * (1.0 - qn), (1.0 - qj) * qn, (1.0 - qj) * (1.0 - qn)];
        let from_n = [qn * qj, qn * (1.0 - qj), (1.0 - qn) * qj, (1.0 - qn) * (1.0 - qj)];
        for (k, w) in trans.successors(sj).into_iter().zip(from_j) {
            if let Some(row) = reduce(k) {
                jac[(row, col)] += w;
            }
        }
        for (k, w) in trans.successors(n).into_iter().zip(from_n) {
            if let Some(row) = reduce(k) {
                jac[(row, col)] += w;
            }
        }
        jac[(col, col)] -= 1.0;
    }

    // Minus the n-th column, 2 T_i(n, n) = 2 P_i(n, n), on every column.
    let self_weights = [qn * qn, qn * (1.0 - qn), (1.0 - qn) * qn, (1.0 - qn) * (1.0 - qn)];
    for (k, w) in trans.successors(n).into_iter().zip(self_weights) {
        if w == 0.0 {
            continue;
        }
        if let Some(row) = reduce(k) {
            for col in 0..dim {
                jac[(row, col)] -= 2.0 * w;
            }
        }
    }
    jac
}

pub fn analyze_fixed_point(
    policy: &PolicyTable,
    trans: &TransitionTable,
    word: Word,
) -> Result<FixedPointReport> {
    let n = homogeneous_index(word, policy.history_len());
    let lambda_max = largest_eigenvalue(&reduced_jacobian(policy, trans, n))?;
    Ok(FixedPointReport {
        word,
        state: n,
        residual: fixed_point_residual(policy, trans, n),
        lambda_max,
        class: Stability::classify(lambda_max),
    })
}

/// Residuals, rightmost reduced-Jacobian eigenvalues and classifications for
/// both consensus candidates.
pub fn stability_report(policy: &PolicyTable) -> Result<StabilityReport> {
    let trans = TransitionTable::build(policy.history_len())?;
    let (all_a, all_b) = rayon::join(
        || analyze_fixed_point(policy, &trans, Word::A),
        || analyze_fixed_point(policy, &trans, Word::B),
    );
    Ok(StabilityReport {
        word_pair: policy.word_pair().clone(),
        history_len: policy.history_len(),
        all_a: all_a?,
        all_b: all_b?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{synth_policy, SynthKind};

    fn setup(kind: SynthKind, h: usize) -> (PolicyTable, TransitionTable) {
        (
            synth_policy(kind, h).unwrap(),
            TransitionTable::build(h).unwrap(),
        )
    }

    #[test]
    fn residual_examples() {
        let (p, t) = setup(SynthKind::Constant(1.0), 2);
        let [(_, _, ra), (_, _, rb)] = homogeneous_candidates(&p, &t);
        assert_eq!(ra, 0.0);
        assert_eq!(rb, 1.0);

        // q = 1/2: the candidate keeps a quarter of its mass.
        let (p, t) = setup(SynthKind::Uniform, 1);
        let [(_, _, ra), (_, _, rb)] = homogeneous_candidates(&p, &t);
        assert_eq!(ra, 0.75);
        assert_eq!(rb, 0.75);

        let (p, t) = setup(SynthKind::WordSwapSymmetric { seed: 5 }, 3);
        let [(_, _, ra), (_, _, rb)] = homogeneous_candidates(&p, &t);
        assert_eq!(ra, rb);
    }

    #[test]
    fn constant_one_h1_is_minus_identity() {
        let (p, t) = setup(SynthKind::Constant(1.0), 1);
        let j = reduced_jacobian(&p, &t, homogeneous_index(Word::A, 1));
        assert_eq!(j, -DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn constant_one_h2_is_unipotent_shift() {
        // Off-diagonal entries survive at H = 2 (the chain empty -> AA -> AA|AA),
        // but the matrix is -I plus a nilpotent part.
        let (p, t) = setup(SynthKind::Constant(1.0), 2);
        let j = reduced_jacobian(&p, &t, homogeneous_index(Word::A, 2));
        let plus_i = &j + DMatrix::<f64>::identity(20, 20);
        assert!(plus_i.iter().any(|v| *v != 0.0));
        let mut pow = plus_i.clone();
        for _ in 0..20 {
            pow = &pow * &plus_i;
        }
        assert!(pow.iter().all(|v| *v == 0.0));
        let lam = largest_eigenvalue(&j).unwrap();
        assert_eq!(lam, Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn report_for_constant_policy() {
        let p = synth_policy(SynthKind::Constant(1.0), 2).unwrap();
        let r = stability_report(&p).unwrap();
        assert_eq!(r.all_a.lambda_max, Complex64::new(-1.0, 0.0));
        assert_eq!(r.all_a.class, Stability::Stable);
        assert_eq!(r.all_a.residual, 0.0);
        assert_eq!(r.all_b.residual, 1.0);
    }

    #[test]
    fn symmetric_policy_has_mirror_spectra() {
        for kind in [SynthKind::Uniform, SynthKind::WordSwapSymmetric { seed: 21 }] {
            let r = stability_report(&synth_policy(kind, 2).unwrap()).unwrap();
            assert!((r.all_a.lambda_max - r.all_b.lambda_max).norm() < 1e-9);
        }
    }

    #[test]
    fn classification_thresholds() {
        assert_eq!(Stability::classify(Complex64::new(-1e-5, 0.0)), Stability::Stable);
        assert_eq!(Stability::classify(Complex64::new(-7.39e-16, 0.0)), Stability::Marginal);
        assert_eq!(Stability::classify(Complex64::new(0.0, 1.0)), Stability::Marginal);
        assert_eq!(Stability::classify(Complex64::new(2e-6, 0.0)), Stability::Unstable);
    }
}
