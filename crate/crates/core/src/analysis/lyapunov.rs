//! Goh-Volterra function around an interior equilibrium, evaluated along
//! sampled trajectories.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::model::{Compartment, ModelParams, StateVector};

/// Compartments entering the function; `R` does not.
const TERMS: [Compartment; 6] = [
    Compartment::SusceptibleBirds,
    Compartment::ExposedBirds,
    Compartment::InfectiousBirds,
    Compartment::SusceptibleTicks,
    Compartment::ExposedTicks,
    Compartment::InfectiousTicks,
];

/// Weights `A` (on `I_B`) and `B` (on `I_T`); every other term has weight 1.
pub fn lyapunov_weights(equilibrium: &StateVector, params: &ModelParams) -> Result<(f64, f64)> {
    let p = params;
    if p.sigma + p.d <= 0.0 || p.delta <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "sigma + d, delta".into(),
            reason: "must be positive for the Lyapunov weights".into(),
        });
    }
    let a = (p.beta_2 * equilibrium.s_b() + p.beta_3 * equilibrium.s_t()) / (p.sigma + p.d);
    let b = (p.beta_1 * equilibrium.s_b() + p.tick_to_tick() * equilibrium.s_t()) / p.delta;
    Ok((a, b))
}

fn require_positive(x: &StateVector, what: &str) -> Result<()> {
    match TERMS.iter().find(|&&c| x[c].is_nan() || x[c] <= 0.0) {
        Some(c) => Err(Error::InvalidParameter {
            name: c.label().into(),
            reason: format!(
                "{what} must be strictly positive where a logarithm is taken, got {}",
                x[*c]
            ),
        }),
        None => Ok(()),
    }
}

/// `sum_c w_c (x_c - x*_c - x*_c ln(x_c / x*_c))`
pub fn lyapunov_value(x: &StateVector, equilibrium: &StateVector, params: &ModelParams) -> Result<f64> {
    require_positive(equilibrium, "equilibrium")?;
    require_positive(x, "state")?;
    let (a, b) = lyapunov_weights(equilibrium, params)?;
    Ok(value_unchecked(x, equilibrium, a, b))
}

fn value_unchecked(x: &StateVector, eq: &StateVector, a: f64, b: f64) -> f64 {
    TERMS
        .iter()
        .map(|&c| {
            let w = match c {
                Compartment::InfectiousBirds => a,
                Compartment::InfectiousTicks => b,
                _ => 1.0,
            };
            let (v, s) = (x[c], eq[c]);
            w * s * excess_over_log((v - s) / s)
        })
        .sum()
}

/// `r - ln(1 + r)`, kept strictly positive for tiny nonzero `r` where the
/// direct form cancels to zero.
fn excess_over_log(r: f64) -> f64 {
    if r.abs() < 1e-3 {
        r * r * (0.5 - r * (1.0 / 3.0 - r * (0.25 - r / 5.0)))
    } else {
        r - r.ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovSample {
    pub t: f64,
    pub value: f64,
    /// Central-difference estimate (one-sided at the ends).
    pub derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub samples: Vec<LyapunovSample>,
    /// `1e-8 * max |L|`
    pub tolerance: f64,
    /// Share of samples with `dL/dt <= tolerance`.
    pub fraction_nonincreasing: f64,
    /// Same share over the last half of the samples.
    pub tail_fraction_nonincreasing: f64,
}

pub fn lyapunov_diagnostic(
    traj: &Trajectory<StateVector>,
    equilibrium: &StateVector,
    params: &ModelParams,
) -> Result<LyapunovReport> {
    require_positive(equilibrium, "equilibrium")?;
    let (a, b) = lyapunov_weights(equilibrium, params)?;
    let mut values = Vec::with_capacity(traj.samples.len());
    for x in &traj.samples {
        require_positive(x, "trajectory")?;
        values.push(value_unchecked(x, equilibrium, a, b));
    }

    let dt = traj.grid.dt();
    let n = values.len();
    let derivative = |k: usize| -> f64 {
        if k == 0 {
            (values[1] - values[0]) / dt
        } else if k == n - 1 {
            (values[n - 1] - values[n - 2]) / dt
        } else {
            (values[k + 1] - values[k - 1]) / (2.0 * dt)
        }
    };
    let samples: Vec<LyapunovSample> = traj
        .grid
        .times()
        .enumerate()
        .map(|(k, t)| LyapunovSample {
            t,
            value: values[k],
            derivative: derivative(k),
        })
        .collect();

    let tolerance = 1e-8 * values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let share = |s: &[LyapunovSample]| s.iter().filter(|x| x.derivative <= tolerance).count() as f64 / s.len() as f64;
    Ok(LyapunovReport {
        fraction_nonincreasing: share(&samples),
        tail_fraction_nonincreasing: share(&samples[n / 2..]),
        tolerance,
        samples,
    })
}
