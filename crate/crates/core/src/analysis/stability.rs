use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{self, Matrix7, ModelParams, ModelVariant, RecruitmentMode, StateVector};

/// Real parts below `-EPS_EIG` count as strictly stable.
pub const EPS_EIG: f64 = 1e-9;

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 10_000;
const RESIDUAL_TOL: f64 = 1e-8;

/// Analytic Jacobian of the base system at `state`.
///
/// In proportional recruitment the birth terms contribute `tau_B` to every
/// bird column of the `S_B` row and `tau_T` to every tick column of the `S_T`
/// row; constant inflow contributes nothing.
pub fn jacobian_at(state: &StateVector, params: &ModelParams) -> Result<Matrix7> {
    state.ensure_finite()?;
    params.validate()?;
    Ok(model::state_jacobian(state, [0.0; 3], params, ModelVariant::Consistent))
}

/// All eigenvalues of a 7x7 real matrix, sorted by descending real part.
pub fn eigenvalues(matrix: &Matrix7) -> Result<Vec<Complex<f64>>> {
    eigenvalues_dyn(&DMatrix::from_column_slice(7, 7, matrix.as_slice()))
}

/// Dense nonsymmetric eigenvalues through a real Schur decomposition.
///
/// Every returned value is checked by the smallest singular value of
/// `A - lambda I`, which must not exceed `1e-8 * ||A||_F`.
pub fn eigenvalues_dyn(matrix: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if let Some(pos) = matrix.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            field: format!("matrix entry {pos}"),
        });
    }
    let n = matrix.nrows();
    let schur =
        nalgebra::linalg::Schur::try_new(matrix.clone(), SCHUR_EPS, SCHUR_MAX_ITER).ok_or(Error::EigenNoConvergence)?;
    let mut values: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::EigenNoConvergence);
    }

    let norm = matrix.norm();
    let complex = matrix.map(|v| Complex::new(v, 0.0));
    for value in &values {
        let mut shifted = complex.clone();
        for i in 0..n {
            shifted[(i, i)] -= value;
        }
        let sigma_min = shifted.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
        if sigma_min > RESIDUAL_TOL * norm.max(f64::MIN_POSITIVE) {
            return Err(Error::EigenResidual {
                value: format!("{value}"),
                residual: sigma_min,
            });
        }
    }

    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(values)
}

/// Largest real part; the spectral abscissa.
pub fn spectral_abscissa(values: &[Complex<f64>]) -> f64 {
    values.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn all_strictly_stable(values: &[Complex<f64>]) -> bool {
    values.iter().all(|v| v.re < -EPS_EIG)
}

/// Two independent verdicts on local stability of the disease-free state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DfeStability {
    /// All eigenvalues of the proportional-recruitment Jacobian have real part
    /// below `-EPS_EIG`.
    pub spectral_stable: bool,
    /// `d > tau_B` and `delta > tau_T`.
    pub inequality_stable: bool,
}

impl DfeStability {
    pub fn agree(&self) -> bool {
        self.spectral_stable == self.inequality_stable
    }
}

/// Local stability of the disease-free steady state under proportional
/// recruitment.
///
/// With births `tau * N(t)` the disease-free steady state is the empty
/// population (a nonzero one exists only when `tau_B = d` and `tau_T = delta`),
/// so the Jacobian is taken at the origin. There it is block triangular with
/// diagonal `tau_B - d, -(alpha_B + d), -(sigma + d + mu), -d, tau_T - delta,
/// -(delta + alpha_T), -delta`.
pub fn dfe_stability_condition(params: &ModelParams) -> Result<DfeStability> {
    let proportional = params.with_mode(RecruitmentMode::Proportional);
    let jac = jacobian_at(&StateVector::ZERO, &proportional)?;
    let values = eigenvalues(&jac)?;
    Ok(DfeStability {
        spectral_stable: all_strictly_stable(&values),
        inequality_stable: params.d > params.tau_b && params.delta > params.tau_t,
    })
}

/// The two exposed-tick thresholds for endemic stability and whether a given
/// exposed-tick level clears them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndemicThresholds {
    /// `delta (tau_B - d) / (beta_1 alpha_T)`
    pub bird_threshold: f64,
    /// `(delta / alpha_T) (tau_T - delta) / (theta + lambda)`
    pub tick_threshold: f64,
    pub bird_holds: bool,
    pub tick_holds: bool,
}

impl EndemicThresholds {
    pub fn both_hold(&self) -> bool {
        self.bird_holds && self.tick_holds
    }
}

pub fn endemic_threshold_predicates(params: &ModelParams, e_t_star: f64) -> Result<EndemicThresholds> {
    params.validate()?;
    let p = params;
    if p.beta_1 * p.alpha_t == 0.0 {
        return Err(Error::InvalidParameter {
            name: "beta_1 * alpha_T".into(),
            reason: "must be positive".into(),
        });
    }
    if p.tick_to_tick() * p.alpha_t == 0.0 {
        return Err(Error::InvalidParameter {
            name: "(theta + lambda) * alpha_T".into(),
            reason: "must be positive".into(),
        });
    }
    let bird_threshold = p.delta * (p.tau_b - p.d) / (p.beta_1 * p.alpha_t);
    let tick_threshold = (p.delta / p.alpha_t) * ((p.tau_t - p.delta) / p.tick_to_tick());
    Ok(EndemicThresholds {
        bird_threshold,
        tick_threshold,
        bird_holds: e_t_star > bird_threshold,
        tick_holds: e_t_star > tick_threshold,
    })
}
