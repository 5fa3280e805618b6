use serde::Serialize;

use crate::integrator::Trajectory;
use crate::model::{ModelParams, StateVector};

/// Relative slack allowed above the invariant-region bounds.
pub const REGION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCheck {
    pub inside: bool,
    /// Index of the first sample exceeding a bound.
    pub first_violation: Option<usize>,
    /// `max(N_B(0), Lambda_B / d)`
    pub bird_bound: f64,
    /// `max(N_T(0), Lambda_T / delta)`
    pub tick_bound: f64,
}

/// Checks that total bird and tick populations never exceed the larger of
/// their starting value and their equilibrium total. Expects a constant-inflow
/// trajectory; violations are reported, not raised.
pub fn invariant_region_check(traj: &Trajectory<StateVector>, params: &ModelParams) -> RegionCheck {
    let start = traj.first();
    let bird_bound = start.total_birds().max(params.tau_b * params.n_b0 / params.d);
    let tick_bound = start.total_ticks().max(params.tau_t * params.n_t0 / params.delta);
    let first_violation = traj.samples.iter().position(|x| {
        x.total_birds() > bird_bound * (1.0 + REGION_TOL) || x.total_ticks() > tick_bound * (1.0 + REGION_TOL)
    });
    RegionCheck {
        inside: first_violation.is_none(),
        first_violation,
        bird_bound,
        tick_bound,
    }
}
