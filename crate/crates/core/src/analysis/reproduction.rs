use nalgebra::{DMatrix, Matrix4};
use serde::Serialize;

use super::equilibrium::disease_free_equilibrium;
use super::stability::eigenvalues_dyn;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Basic reproduction number, computed from the closed forms and
/// from the next-generation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct R0Report {
    /// Bird-to-bird component.
    pub r_b: f64,
    /// Tick-to-tick component.
    pub r_t: f64,
    /// Cross component.
    pub r_tb: f64,
    /// The composite closed form `[1/2 (R_B + R_T) + ((R_B + R_T)^2 - 4 (R_B R_T + R_TB))]^(1/2)`,
    /// `None` when the radicand is negative.
    pub r0_formula: Option<f64>,
    /// Spectral radius of `F V^-1`. All threshold logic uses this value.
    pub r0_spectral: f64,
    /// `|r0_formula - r0_spectral|`.
    pub agreement: Option<f64>,
}

/// New-infection matrix `F` and transition matrix `V` of the infected
/// subsystem `(E_B, I_B, E_T, I_T)` linearised at the disease-free state.
pub fn next_generation_blocks(params: &ModelParams) -> Result<(Matrix4<f64>, Matrix4<f64>)> {
    let p = params;
    let dfe = disease_free_equilibrium(p)?;
    let (s_b, s_t) = (dfe.s_b(), dfe.s_t());
    #[rustfmt::skip]
    let f = Matrix4::new(
        0.0, p.beta_2 * s_b, 0.0, p.beta_1 * s_b,
        0.0, 0.0,            0.0, 0.0,
        0.0, p.beta_3 * s_t, 0.0, p.tick_to_tick() * s_t,
        0.0, 0.0,            0.0, 0.0,
    );
    #[rustfmt::skip]
    let v = Matrix4::new(
        p.alpha_b + p.d, 0.0,                    0.0,               0.0,
        -p.alpha_b,      p.sigma + p.d + p.mu,   0.0,               0.0,
        0.0,             0.0,                    p.delta + p.alpha_t, 0.0,
        0.0,             0.0,                    -p.alpha_t,        p.delta,
    );
    Ok((f, v))
}

pub fn r0(params: &ModelParams) -> Result<R0Report> {
    params.validate()?;
    let p = params;
    let bird_den = p.d * (p.d + p.alpha_b) * (p.d + p.mu + p.sigma);
    let tick_den = p.delta * p.delta * (p.alpha_t + p.delta);
    if bird_den.is_nan() || tick_den.is_nan() || bird_den <= 0.0 || tick_den <= 0.0 {
        return Err(Error::Singular("transition matrix V"));
    }

    let (f, v) = next_generation_blocks(p)?;
    let v_inv = v.try_inverse().ok_or(Error::Singular("transition matrix V"))?;
    let k = f * v_inv;
    let r0_spectral = eigenvalues_dyn(&DMatrix::from_column_slice(4, 4, k.as_slice()))?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);

    let r_b = p.beta_2 * p.tau_b * p.alpha_b / bird_den;
    let r_t = p.tau_t * p.alpha_t * p.tick_to_tick() / tick_den;
    let r_tb = p.beta_2 * p.tau_b * p.alpha_b * p.beta_1 * p.tau_t * p.alpha_t / (bird_den * tick_den);
    let sum = r_b + r_t;
    let radicand = 0.5 * sum + (sum * sum - 4.0 * (r_b * r_t + r_tb));
    let r0_formula = (radicand >= 0.0).then(|| radicand.sqrt());

    Ok(R0Report {
        r_b,
        r_t,
        r_tb,
        r0_formula,
        r0_spectral,
        agreement: r0_formula.map(|r| (r - r0_spectral).abs()),
    })
}
