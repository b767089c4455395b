//! Deterministic large-population limit.
//!
//! The state occupancy `x_k` evolves by `dx_k/dt = -x_k + sum_ij x_i x_j P_k(i, j)`,
//! where `P_k(i, j)` is the probability that an agent in state `i` moves to `k`
//! after meeting an agent in state `j`. Time is measured so that one
//! population round of the simulator corresponds to [`TIME_PER_ROUND`].

pub mod eigen;
mod integrate;
mod rates;
mod stability;

pub use eigen::{largest_eigenvalue, largest_eigenvalue_with_limit, DENSE_LIMIT};
pub use integrate::{integrate, IntegrateOptions, Integration, Sample, TIME_PER_ROUND};
pub use rates::{
    pair_transition_probs, production_probability, rhs, rhs_into, StateDistribution,
    MASS_TOLERANCE, NEGATIVE_TOLERANCE,
};
pub use stability::{
    analyze_fixed_point, fixed_point_residual, homogeneous_candidates, reduced_jacobian,
    stability_report, FixedPointReport, Stability, StabilityReport, MARGINAL_TOLERANCE,
};
