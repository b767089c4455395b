use crate::error::{Error, Result};
use crate::policy::PolicyTable;
use crate::state::StateIndex;
use crate::transition::TransitionTable;

/// Tolerated negative mass per entry (integrator round-off).
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;
/// Tolerated deviation of the total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Fractions of agents in every memory state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateDistribution {
    x: Vec<f64>,
}

impl StateDistribution {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = x
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < -NEGATIVE_TOLERANCE)
        {
            return Err(Error::NotOnSimplex(format!("x[{i}] = {v}")));
        }
        let sum: f64 = x.iter().sum();
        if (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::NotOnSimplex(format!("total mass {sum}")));
        }
        Ok(StateDistribution { x })
    }

    /// All mass on state `i`.
    pub fn delta(i: StateIndex, n: usize) -> Self {
        let mut x = vec![0.0; n];
        x[i.0] = 1.0;
        StateDistribution { x }
    }

    pub fn uniform(n: usize) -> Self {
        StateDistribution {
            x: vec![1.0 / n as f64; n],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.x.iter().sum()
    }
}

/// Outcome distribution `P_k(i, j)` of agent `i` meeting agent `j`.
///
/// Returns the successors of `i` with non-zero probability, ordered AA, AB,
/// BA, BB by (own, partner) word.
pub fn pair_transition_probs(
    i: StateIndex,
    j: StateIndex,
    policy: &PolicyTable,
    trans: &TransitionTable,
) -> Vec<(StateIndex, f64)> {
    let (qi, qj) = (policy.prob_a(i), policy.prob_a(j));
    let weights = [
        qi * qj,
        qi * (1.0 - qj),
        (1.0 - qi) * qj,
        (1.0 - qi) * (1.0 - qj),
    ];
    trans
        .successors(i)
        .into_iter()
        .zip(weights)
        .filter(|(_, w)| *w != 0.0)
        .collect()
}

/// `s = sum_i x_i q_i`: probability that a randomly drawn agent says A.
pub fn production_probability(x: &[f64], policy: &PolicyTable) -> f64 {
    x.iter().zip(policy.probs()).map(|(xi, qi)| xi * qi).sum()
}

/// Rate equation `dx_k/dt = -x_k + sum_ij x_i x_j P_k(i, j)`.
pub fn rhs(x: &StateDistribution, policy: &PolicyTable, trans: &TransitionTable) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    rhs_into(x.as_slice(), policy, trans, &mut out);
    out
}

/// Allocation-free right-hand side for any `x`, on the simplex or not.
///
/// The partner draw only enters through `Q = sum_j x_j q_j` and the total mass
/// `S`, so agent `i` sends `x_i` to its four successors with weights
/// `q_i Q`, `q_i (S - Q)`, `(1 - q_i) Q` and `(1 - q_i)(S - Q)`. On the simplex
/// `S = 1`; keeping `S` makes this the exact quadratic form everywhere, which
/// the Jacobian cross-checks rely on.
pub fn rhs_into(x: &[f64], policy: &PolicyTable, trans: &TransitionTable, out: &mut [f64]) {
    debug_assert_eq!(x.len(), out.len());
    let q = policy.probs();
    let mass: f64 = x.iter().sum();
    let pa: f64 = x.iter().zip(q).map(|(xi, qi)| xi * qi).sum();
    let pb = mass - pa;
    for (o, xi) in out.iter_mut().zip(x) {
        *o = -xi;
    }
    for (i, (&xi, &qi)) in x.iter().zip(q).enumerate() {
        if xi == 0.0 {
            continue;
        }
        let [aa, ab, ba, bb] = trans.successors(StateIndex(i));
        let (sa, sb) = (xi * qi, xi * (1.0 - qi));
        out[aa.0] += sa * pa;
        out[ab.0] += sa * pb;
        out[ba.0] += sb * pa;
        out[bb.0] += sb * pb;
    }
}
