use serde::{Deserialize, Serialize};

use super::rates::{production_probability, rhs_into, StateDistribution};
use crate::error::{Error, Result};
use crate::policy::PolicyTable;
use crate::state::{homogeneous_index, Word};
use crate::transition::TransitionTable;

/// Mean-field time elapsed per simulated population round.
///
/// A round is `N` interactions and each updates two agents, so every agent is
/// updated twice per round on average; the rate equation absorbs that factor
/// into its time unit.
pub const TIME_PER_ROUND: f64 = 2.0;

/// Past this magnitude any entry signals a diverging integration.
const BLOW_UP: f64 = 2.0;
/// Drift of the total mass tolerated before renormalising.
const RENORMALIZE_ABOVE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Stop once `max_k |dx_k/dt|` falls below this.
    pub stop_tol: f64,
    /// Record every n-th step (the first and last points are always kept).
    pub record_every: usize,
    /// Keep the full distribution at recorded points.
    pub keep_states: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            dt: 0.05,
            t_max: 500.0,
            stop_tol: 1e-10,
            record_every: 1,
            keep_states: false,
        }
    }
}

/// Observables at one integration time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// Probability that a random agent produces word A.
    pub production: f64,
    pub mass_all_a: f64,
    pub mass_all_b: f64,
    pub total_mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Integration {
    pub samples: Vec<Sample>,
    /// Distributions at the recorded samples when requested.
    pub states: Option<Vec<Vec<f64>>>,
    pub terminal: StateDistribution,
    pub t_end: f64,
    pub steps: usize,
    /// Whether the stopping tolerance was met before `t_max`.
    pub steady: bool,
    /// `max_k |dx_k/dt|` at the terminal state.
    pub final_rate: f64,
}

impl Integration {
    /// Homogeneous state the run ended in, if the terminal mass sits there.
    pub fn homogeneous_outcome(&self, tol: f64, h: usize) -> Option<Word> {
        let x = self.terminal.as_slice();
        [Word::A, Word::B]
            .into_iter()
            .find(|&w| (x[homogeneous_index(w, h).0] - 1.0).abs() < tol)
    }
}

struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Classic fixed-step RK4 on the rate equation, starting from `x0`.
pub fn integrate(
    x0: &StateDistribution,
    policy: &PolicyTable,
    trans: &TransitionTable,
    opts: &IntegrateOptions,
) -> Result<Integration> {
    if !(opts.dt.is_finite() && opts.dt > 0.0) {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {}", opts.dt)));
    }
    if !(opts.t_max >= 0.0) {
        return Err(Error::InvalidConfig(format!("t_max must be >= 0, got {}", opts.t_max)));
    }
    let n = x0.len();
    if n != policy.state_count() || n != trans.state_count() {
        return Err(Error::InvalidConfig(format!(
            "distribution has {n} states, policy {}",
            policy.state_count()
        )));
    }
    let h = policy.history_len();
    let (ia, ib) = (homogeneous_index(Word::A, h).0, homogeneous_index(Word::B, h).0);
    let every = opts.record_every.max(1);

    let sample = |t: f64, x: &[f64]| Sample {
        t,
        production: production_probability(x, policy),
        mass_all_a: x[ia],
        mass_all_b: x[ib],
        total_mass: x.iter().sum(),
    };

    let mut x = x0.as_slice().to_vec();
    let mut ws = Workspace {
        k1: vec![0.0; n],
        k2: vec![0.0; n],
        k3: vec![0.0; n],
        k4: vec![0.0; n],
        tmp: vec![0.0; n],
    };
    let mut samples = vec![sample(0.0, &x)];
    let mut states = opts.keep_states.then(|| vec![x.clone()]);
    let dt = opts.dt;
    let total_steps = (opts.t_max / dt).round() as usize;
    let mut step = 0usize;
    let mut steady = false;
    let mut last_recorded = 0usize;

    loop {
        rhs_into(&x, policy, trans, &mut ws.k1);
        let rate = max_abs(&ws.k1);
        if rate < opts.stop_tol {
            steady = true;
            break;
        }
        if step == total_steps {
            break;
        }
        rk4_step(&mut x, dt, policy, trans, &mut ws);
        step += 1;
        let t = step as f64 * dt;

        if x.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP) {
            return Err(Error::IntegratorBlowUp { t });
        }
        let mass: f64 = x.iter().sum();
        if (mass - 1.0).abs() > RENORMALIZE_ABOVE {
            x.iter_mut().for_each(|v| *v /= mass);
        }
        if step % every == 0 {
            samples.push(sample(t, &x));
            if let Some(s) = states.as_mut() {
                s.push(x.clone());
            }
            last_recorded = step;
        }
    }

    let t_end = step as f64 * dt;
    if last_recorded != step {
        samples.push(sample(t_end, &x));
        if let Some(s) = states.as_mut() {
            s.push(x.clone());
        }
    }
    let final_rate = {
        rhs_into(&x, policy, trans, &mut ws.k1);
        max_abs(&ws.k1)
    };
    Ok(Integration {
        samples,
        states,
        terminal: StateDistribution::new(x)?,
        t_end,
        steps: step,
        steady,
        final_rate,
    })
}

/// One RK4 step; expects `ws.k1` to hold the rate at `x`.
fn rk4_step(
    x: &mut [f64],
    dt: f64,
    policy: &PolicyTable,
    trans: &TransitionTable,
    ws: &mut Workspace,
) {
    let half = 0.5 * dt;
    for ((t, xi), k) in ws.tmp.iter_mut().zip(x.iter()).zip(&ws.k1) {
        *t = xi + half * k;
    }
    rhs_into(&ws.tmp, policy, trans, &mut ws.k2);
    for ((t, xi), k) in ws.tmp.iter_mut().zip(x.iter()).zip(&ws.k2) {
        *t = xi + half * k;
    }
    rhs_into(&ws.tmp, policy, trans, &mut ws.k3);
    for ((t, xi), k) in ws.tmp.iter_mut().zip(x.iter()).zip(&ws.k3) {
        *t = xi + dt * k;
    }
    rhs_into(&ws.tmp, policy, trans, &mut ws.k4);
    let sixth = dt / 6.0;
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += sixth * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    }
}
