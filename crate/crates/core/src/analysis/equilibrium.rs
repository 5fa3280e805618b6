use nalgebra::{Complex, SVector};
use serde::Serialize;

use super::stability::{all_strictly_stable, eigenvalues, jacobian_at};
use crate::error::{Error, Result};
use crate::integrator::{integrate, TimeGrid};
use crate::model::{self, Compartment, ModelParams, ModelVariant, RecruitmentMode, StateVector};

/// Newton stops once `max |f(x)| < NEWTON_TOL`.
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 200;
const MAX_HALVINGS: usize = 20;
/// Infected compartments below this are treated as extinct.
pub const EXTINCT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EquilibriumKind {
    DiseaseFree,
    Endemic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub point: StateVector,
    pub kind: EquilibriumKind,
    /// `max |f(point)|` as computed, never rounded to zero.
    pub residual_norm: f64,
    /// Jacobian spectrum, descending real part.
    #[serde(serialize_with = "serialize_complex")]
    pub eigenvalues: Vec<Complex<f64>>,
    pub locally_stable: bool,
    /// Newton iterations spent (zero for closed-form points).
    pub iterations: usize,
}

fn serialize_complex<S: serde::Serializer>(values: &[Complex<f64>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(values.len()))?;
    for v in values {
        seq.serialize_element(&[v.re, v.im])?;
    }
    seq.end()
}

/// `(tau_B N_B0 / d, 0, 0, 0, tau_T N_T0 / delta, 0, 0)`.
pub fn disease_free_equilibrium(params: &ModelParams) -> Result<StateVector> {
    params.validate()?;
    for (name, rate) in [("d", params.d), ("delta", params.delta)] {
        if rate <= 0.0 {
            return Err(Error::InvalidParameter {
                name: name.into(),
                reason: "death rate must be positive".into(),
            });
        }
    }
    Ok(StateVector([
        params.tau_b * params.n_b0 / params.d,
        0.0,
        0.0,
        0.0,
        params.tau_t * params.n_t0 / params.delta,
        0.0,
        0.0,
    ]))
}

/// The disease-free steady state of the chosen recruitment mode: the closed
/// form for constant inflow, the empty population for proportional births.
pub fn disease_free_steady_state(params: &ModelParams) -> Result<StateVector> {
    match params.recruitment_mode {
        RecruitmentMode::ConstantInflow => disease_free_equilibrium(params),
        RecruitmentMode::Proportional => {
            params.validate()?;
            Ok(StateVector::ZERO)
        }
    }
}

fn report_at(point: StateVector, params: &ModelParams, iterations: usize) -> Result<EquilibriumReport> {
    let residual_norm = model::evaluate(&point, [0.0; 3], params, ModelVariant::Consistent).max_abs();
    let eigenvalues = eigenvalues(&jacobian_at(&point, params)?)?;
    let kind = if Compartment::INFECTED.iter().all(|&c| point[c].abs() < EXTINCT) {
        EquilibriumKind::DiseaseFree
    } else {
        EquilibriumKind::Endemic
    };
    Ok(EquilibriumReport {
        point,
        kind,
        residual_norm,
        locally_stable: all_strictly_stable(&eigenvalues),
        eigenvalues,
        iterations,
    })
}

/// Stability report at the disease-free steady state of the chosen mode.
pub fn disease_free_report(params: &ModelParams) -> Result<EquilibriumReport> {
    report_at(disease_free_steady_state(params)?, params, 0)
}

/// Damped Newton iteration on `f(x) = 0` for the base system.
///
/// A step is halved (up to 20 times) until the max-abs residual decreases. A
/// root whose infected compartments are all below `1e-8` is reported as
/// [`EquilibriumKind::DiseaseFree`].
pub fn endemic_equilibrium(params: &ModelParams, guess: &StateVector) -> Result<EquilibriumReport> {
    params.validate()?;
    guess.ensure_finite()?;
    let f = |x: &StateVector| model::evaluate(x, [0.0; 3], params, ModelVariant::Consistent);

    let mut x = *guess;
    let mut fx = f(&x);
    let mut residual = fx.max_abs();
    let mut iterations = 0;
    while residual >= NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER || !residual.is_finite() {
            return Err(Error::NewtonNoConvergence { iterations, residual });
        }
        iterations += 1;
        let jac = model::state_jacobian(&x, [0.0; 3], params, ModelVariant::Consistent);
        let rhs = SVector::<f64, 7>::from_column_slice(&fx.0);
        let step = jac.lu().solve(&rhs).ok_or(Error::Singular("Jacobian in Newton step"))?;

        let mut scale = 1.0;
        let mut trial;
        let mut f_trial;
        let mut halvings = 0;
        loop {
            trial = StateVector(std::array::from_fn(|i| x.0[i] - scale * step[i]));
            f_trial = f(&trial);
            if f_trial.max_abs() < residual || halvings == MAX_HALVINGS {
                break;
            }
            scale *= 0.5;
            halvings += 1;
        }
        x = trial;
        fx = f_trial;
        residual = fx.max_abs();
    }

    if let Some(c) = Compartment::ALL.iter().find(|&&c| x[c] < -EXTINCT) {
        return Err(Error::NonPhysicalRoot {
            compartment: c.label().into(),
            value: x[*c],
        });
    }
    report_at(x, params, iterations)
}

/// Starting point for [`endemic_equilibrium`]: the disease-free state seeded
/// with one individual in each infected compartment, relaxed along the flow for
/// `burn_in` time units so Newton starts inside the endemic basin.
pub fn default_endemic_guess(params: &ModelParams, burn_in: f64) -> Result<StateVector> {
    let mut seed = disease_free_equilibrium(params)?;
    for c in Compartment::INFECTED {
        seed[c] += 1.0;
    }
    let grid = TimeGrid::with_step(0.0, burn_in, 0.01)?;
    let traj = integrate(
        |_, x: &StateVector| model::evaluate(x, [0.0; 3], params, ModelVariant::Consistent),
        seed,
        grid,
    )?;
    Ok(*traj.last())
}

/// Each closed-form steady-state expression evaluated with the root's
/// values on its right-hand side, next to the root itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormEndemicValues {
    /// `(compartment, closed-form value, root value)`
    pub entries: Vec<(Compartment, f64, f64)>,
}

pub fn closed_form_endemic_values(root: &StateVector, params: &ModelParams) -> ClosedFormEndemicValues {
    let p = params;
    let [s_b, _e_b, i_b, _r, _s_t, e_t, i_t] = root.0;
    let tick_force = p.beta_3 * i_b + p.tick_to_tick() * i_t;
    let closed = [
        p.tau_b * p.n_b0 / (p.beta_1 * i_t + p.beta_2 * i_b + p.d),
        (p.sigma + p.d + p.mu) * i_b / p.alpha_b,
        p.alpha_b * p.beta_1 * i_t * s_b / ((p.alpha_b + p.d) * (p.sigma + p.d + p.mu) - p.alpha_b * p.beta_2),
        p.sigma * i_b / p.d,
        p.tau_t * p.n_t0 / (tick_force + p.delta),
        p.tau_t * p.n_t0 * tick_force / ((tick_force + p.delta) * (p.delta - p.alpha_t)),
        p.alpha_t * e_t / p.delta,
    ];
    ClosedFormEndemicValues {
        entries: Compartment::ALL
            .iter()
            .zip(closed)
            .map(|(&c, v)| (c, v, root[c]))
            .collect(),
    }
}
