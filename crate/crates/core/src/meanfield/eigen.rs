//! Rightmost eigenvalue of a real square matrix.
//!
//! The matrix is first split into the strongly connected components of its
//! sparsity graph. Permuting by a topological order of those components makes
//! it block upper triangular, so the spectrum is the union of the diagonal
//! blocks' spectra. Singleton blocks contribute their diagonal entry exactly,
//! which matters for the nilpotent-plus-diagonal Jacobians produced by
//! deterministic policies. Remaining blocks go through a dense real Schur
//! decomposition, or through shifted power iteration when larger than the
//! dense limit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};

/// Largest block handed to the dense solver.
pub const DENSE_LIMIT: usize = 4096;

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 100_000;
const POWER_MAX_ITER: usize = 200_000;

/// Eigenvalue with the largest real part; among (near) ties the one with the
/// largest imaginary magnitude. Complex pairs are reported with `im >= 0`.
pub fn largest_eigenvalue(m: &DMatrix<f64>) -> Result<Complex64> {
    largest_eigenvalue_with_limit(m, DENSE_LIMIT)
}

/// [`largest_eigenvalue`] with a configurable dense-solver limit.
///
/// Blocks above the limit use power iteration on `A + sigma I` with
/// `sigma = ||A||_inf`. That converges to the eigenvalue of largest modulus of
/// the shifted matrix, which is the rightmost eigenvalue whenever the latter
/// is real and simple; complex dominant pairs are reported as
/// [`Error::NoConvergence`].
pub fn largest_eigenvalue_with_limit(m: &DMatrix<f64>, dense_limit: usize) -> Result<Complex64> {
    let eigs = spectrum(m, dense_limit)?;
    pick_rightmost(&eigs).ok_or(Error::InvalidConfig("empty matrix".into()))
}

/// All eigenvalues (dense blocks) or block representatives (iterative blocks).
fn spectrum(m: &DMatrix<f64>, dense_limit: usize) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidConfig(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut eigs = Vec::with_capacity(n);
    for block in diagonal_blocks(m) {
        if block.len() == 1 {
            let i = block[0];
            eigs.push(Complex64::new(m[(i, i)], 0.0));
            continue;
        }
        let sub = DMatrix::from_fn(block.len(), block.len(), |r, c| m[(block[r], block[c])]);
        if block.len() <= dense_limit {
            let schur = nalgebra::linalg::Schur::try_new(sub, SCHUR_EPS, SCHUR_MAX_ITER)
                .ok_or(Error::NoConvergence("real Schur decomposition"))?;
            eigs.extend(schur.complex_eigenvalues().iter().copied());
        } else {
            eigs.push(Complex64::new(shifted_power_iteration(&sub)?, 0.0));
        }
    }
    Ok(eigs)
}

/// Index sets of the strongly connected components of the nonzero pattern.
fn diagonal_blocks(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut g = DiGraph::<(), ()>::with_capacity(n, n);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for c in 0..n {
        for r in 0..n {
            if r != c && m[(r, c)] != 0.0 {
                g.add_edge(nodes[c], nodes[r], ());
            }
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|comp| {
            let mut idx: Vec<usize> = comp.into_iter().map(|v| v.index()).collect();
            idx.sort_unstable();
            idx
        })
        .collect()
}

fn pick_rightmost(eigs: &[Complex64]) -> Option<Complex64> {
    let scale = eigs.iter().fold(1.0f64, |s, z| s.max(z.norm()));
    let tie = 1e-12 * scale;
    let best_re = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    eigs.iter()
        .filter(|z| z.re >= best_re - tie)
        .max_by(|a, b| a.im.abs().total_cmp(&b.im.abs()))
        .map(|z| Complex64::new(z.re, z.im.abs()))
}

fn shifted_power_iteration(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    let sigma = (0..n)
        .map(|r| a.row(r).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let scale = sigma.max(1.0);
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] += sigma;
    }
    // Deterministic start with weight on every coordinate.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut mu = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let w = &shifted * &v;
        let next_mu = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(-sigma);
        }
        let next_v = w / norm;
        let resid = (&shifted * &next_v - next_v.clone() * next_v.dot(&(&shifted * &next_v))).norm();
        v = next_v;
        if (next_mu - mu).abs() < 1e-13 * scale && resid < 1e-9 * scale {
            return Ok(next_mu - sigma);
        }
        mu = next_mu;
    }
    Err(Error::NoConvergence("shifted power iteration"))
}
