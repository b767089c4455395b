//! Reference computations that deliberately avoid the library's fast paths.
//!
//! Shared with the acceptance suite of the CLI crate via `#[path]`.

#![allow(dead_code)]

use convlab_core::meanfield::rhs_into;
use convlab_core::state::{decode_state, encode_state, state_count, StateIndex, Word};
use convlab_core::{PolicyTable, TransitionTable};

/// `P_k(i, j)` rebuilt from decode/shift/encode, without the transition table.
pub fn brute_pair_probs(policy: &PolicyTable, i: usize, j: usize) -> Vec<(usize, f64)> {
    let h = policy.history_len();
    let (qi, qj) = (policy.probs()[i], policy.probs()[j]);
    let mi = decode_state(StateIndex(i), h).unwrap();
    let mut out = Vec::new();
    for (own, p_own) in [(Word::A, qi), (Word::B, 1.0 - qi)] {
        for (partner, p_partner) in [(Word::A, qj), (Word::B, 1.0 - qj)] {
            let k = encode_state(&mi.shift(own, partner, h), h).unwrap().get();
            out.push((k, p_own * p_partner));
        }
    }
    out
}

/// `-x_k + sum_i sum_j x_i x_j P_k(i, j)` by the full double sum.
pub fn brute_rhs(policy: &PolicyTable, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out: Vec<f64> = x.iter().map(|v| -v).collect();
    for i in 0..n {
        for j in 0..n {
            let w = x[i] * x[j];
            if w == 0.0 {
                continue;
            }
            for (k, p) in brute_pair_probs(policy, i, j) {
                out[k] += w * p;
            }
        }
    }
    out
}

/// Reduced Jacobian at `delta_n` from central differences of the rate
/// equation, projected onto the simplex by subtracting the `n`-th column.
pub fn fd_reduced_jacobian(
    policy: &PolicyTable,
    trans: &TransitionTable,
    n: usize,
    step: f64,
) -> Vec<Vec<f64>> {
    let size = state_count(policy.history_len());
    let mut base = vec![0.0; size];
    base[n] = 1.0;
    let column = |m: usize| -> Vec<f64> {
        let (mut plus, mut minus) = (base.clone(), base.clone());
        plus[m] += step;
        minus[m] -= step;
        let (mut fp, mut fm) = (vec![0.0; size], vec![0.0; size]);
        rhs_into(&plus, policy, trans, &mut fp);
        rhs_into(&minus, policy, trans, &mut fm);
        fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * step)).collect()
    };
    let full: Vec<Vec<f64>> = (0..size).map(column).collect(); // full[col][row]
    let keep: Vec<usize> = (0..size).filter(|&s| s != n).collect();
    keep.iter()
        .map(|&r| keep.iter().map(|&c| full[c][r] - full[n][r]).collect())
        .collect()
}

/// `C(n, k)` in exact integer arithmetic.
pub fn binomial_coefficient(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Two-sided exact binomial p-value at `p = 1/2` from integer counts.
pub fn fair_coin_p_value(k: u64, n: u64) -> f64 {
    let observed = binomial_coefficient(n, k);
    let tail: u128 = (0..=n)
        .map(|i| binomial_coefficient(n, i))
        .filter(|&c| c <= observed)
        .sum();
    tail as f64 / 2f64.powi(n as i32)
}

/// Jensen-Shannon distance between `(1, 0)` and `(1/2, 1/2)` written out by hand.
///
/// The midpoint is `(3/4, 1/4)`, so `KL(P||M) = log2(4/3)` and
/// `KL(Q||M) = (log2(2/3) + log2(2)) / 2`.
pub fn js_point_mass_vs_uniform() -> f64 {
    let ln2 = std::f64::consts::LN_2;
    let kl_p = (4.0f64 / 3.0).ln() / ln2;
    let kl_q = 0.5 * ((2.0f64 / 3.0).ln() / ln2 + 1.0);
    (0.5 * (kl_p + kl_q)).sqrt()
}

/// Random point on the simplex (normalised exponentials).
pub fn random_simplex<R: rand::Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}
