//! Parameters, state types and right-hand sides of the bird-tick model.
//!
//! Compartment order everywhere is `(S_B, E_B, I_B, R, S_T, E_T, I_T)`.
//!
//! Two readings of the equations are kept apart explicitly:
//!
//! * [`RecruitmentMode`] decides whether births are a constant inflow
//!   `tau * N(0)` or proportional to the current total `tau * N(t)`.
//! * [`ModelVariant`] decides how the controlled system treats bird recovery.
//!   `PaperExact` keeps the literal controlled equations
//!   (`dI_B/dt = alpha_B E_B - alpha_B I_B - mu I_B`, `dR/dt = u2 I_B - d R`);
//!   `Consistent` uses `-(sigma + u2 + d + mu) I_B` and `(sigma + u2) I_B`, so a
//!   zero control reproduces the base system exactly.
//!
//! The exposed-tick loss is `-(delta + alpha_T) E_T` in every variant. The
//! literal base system shows `- delta E_T + alpha_T E_T`, which disagrees with
//! the steady-state system, the Jacobian and the flow diagram.

use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate, TimeGrid, Trajectory};

pub type Matrix7 = SMatrix<f64, 7, 7>;

/// How births enter the susceptible classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecruitmentMode {
    /// `Lambda_B = tau_B * N_B0`, `Lambda_T = tau_T * N_T0`.
    #[default]
    ConstantInflow,
    /// `Lambda_B = tau_B * N_B(t)`, `Lambda_T = tau_T * N_T(t)`.
    Proportional,
}

/// Reading of the controlled system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    PaperExact,
    #[default]
    Consistent,
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelVariant::PaperExact => "paper",
            ModelVariant::Consistent => "consistent",
        })
    }
}

impl fmt::Display for RecruitmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecruitmentMode::ConstantInflow => "constant",
            RecruitmentMode::Proportional => "proportional",
        })
    }
}

/// Rate constants of the model. Defaults are the published simulation values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Per-capita bird birth rate.
    pub tau_b: f64,
    /// Per-capita tick birth rate.
    pub tau_t: f64,
    /// Tick-bite infection rate of birds.
    pub beta_1: f64,
    /// Bird-to-bird (faecal) infection rate.
    pub beta_2: f64,
    /// Bird-to-tick infection rate.
    pub beta_3: f64,
    /// Non-viraemic co-feeding transmission rate among ticks.
    pub theta: f64,
    /// Transovarial transmission rate among ticks.
    pub lambda: f64,
    /// Exposed to infectious progression, birds.
    pub alpha_b: f64,
    /// Exposed to infectious progression, ticks.
    pub alpha_t: f64,
    /// Natural bird death rate.
    pub d: f64,
    /// Disease-induced bird death rate.
    pub mu: f64,
    /// Bird recovery rate.
    pub sigma: f64,
    /// Tick death rate.
    pub delta: f64,
    /// Reference bird population used by constant recruitment.
    pub n_b0: f64,
    /// Reference tick population used by constant recruitment.
    pub n_t0: f64,
    pub recruitment_mode: RecruitmentMode,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            tau_b: 8.33,
            tau_t: 0.167,
            beta_1: 2e-4,
            beta_2: 0.05,
            beta_3: 1.95e-3,
            theta: 3.9e-7,
            lambda: 3.68e-4,
            alpha_b: 0.182,
            alpha_t: 0.182,
            d: 0.087,
            mu: 0.2,
            sigma: 1.25,
            delta: 0.083,
            n_b0: 50.0,
            n_t0: 100.0,
            recruitment_mode: RecruitmentMode::ConstantInflow,
        }
    }
}

impl ModelParams {
    /// Names accepted by [`ModelParams::get`] and [`ModelParams::set`].
    pub const KEYS: [&'static str; 15] = [
        "tau_B", "tau_T", "beta_1", "beta_2", "beta_3", "theta", "lambda", "alpha_B", "alpha_T", "d", "mu", "sigma",
        "delta", "N_B0", "N_T0",
    ];

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "tau_B" => &mut self.tau_b,
            "tau_T" => &mut self.tau_t,
            "beta_1" => &mut self.beta_1,
            "beta_2" => &mut self.beta_2,
            "beta_3" => &mut self.beta_3,
            "theta" => &mut self.theta,
            "lambda" => &mut self.lambda,
            "alpha_B" => &mut self.alpha_b,
            "alpha_T" => &mut self.alpha_t,
            "d" => &mut self.d,
            "mu" => &mut self.mu,
            "sigma" => &mut self.sigma,
            "delta" => &mut self.delta,
            "N_B0" => &mut self.n_b0,
            "N_T0" => &mut self.n_t0,
            _ => return None,
        })
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let mut copy = *self;
        copy.slot(key).map(|v| *v)
    }

    /// Sets a rate by its table name. Returns `false` for an unknown name.
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        match self.slot(key) {
            Some(slot) => {
                *slot = value;
                true
            }
            None => false,
        }
    }

    pub fn with_mode(mut self, mode: RecruitmentMode) -> Self {
        self.recruitment_mode = mode;
        self
    }

    /// Every rate finite and nonnegative, reference populations positive.
    pub fn validate(&self) -> Result<()> {
        for key in Self::KEYS {
            let value = self.get(key).expect("known key");
            if !value.is_finite() {
                return Err(Error::NonFinite { field: key.to_string() });
            }
            if value < 0.0 {
                return Err(Error::InvalidParameter {
                    name: key.to_string(),
                    reason: format!("must be >= 0, got {value}"),
                });
            }
        }
        for (key, value) in [("N_B0", self.n_b0), ("N_T0", self.n_t0)] {
            if value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: key.to_string(),
                    reason: format!("must be > 0, got {value}"),
                });
            }
        }
        Ok(())
    }

    /// Bird recruitment `Lambda_B` at the given state.
    pub fn bird_inflow(&self, state: &StateVector) -> f64 {
        match self.recruitment_mode {
            RecruitmentMode::ConstantInflow => self.tau_b * self.n_b0,
            RecruitmentMode::Proportional => self.tau_b * state.total_birds(),
        }
    }

    /// Tick recruitment `Lambda_T` at the given state, before any control.
    pub fn tick_inflow(&self, state: &StateVector) -> f64 {
        match self.recruitment_mode {
            RecruitmentMode::ConstantInflow => self.tau_t * self.n_t0,
            RecruitmentMode::Proportional => self.tau_t * state.total_ticks(),
        }
    }

    /// Combined tick-to-tick transmission `theta + lambda`.
    pub fn tick_to_tick(&self) -> f64 {
        self.theta + self.lambda
    }
}

/// Compartment labels in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Compartment {
    #[serde(rename = "S_B")]
    SusceptibleBirds,
    #[serde(rename = "E_B")]
    ExposedBirds,
    #[serde(rename = "I_B")]
    InfectiousBirds,
    #[serde(rename = "R")]
    Recovered,
    #[serde(rename = "S_T")]
    SusceptibleTicks,
    #[serde(rename = "E_T")]
    ExposedTicks,
    #[serde(rename = "I_T")]
    InfectiousTicks,
}

impl Compartment {
    pub const ALL: [Compartment; 7] = [
        Compartment::SusceptibleBirds,
        Compartment::ExposedBirds,
        Compartment::InfectiousBirds,
        Compartment::Recovered,
        Compartment::SusceptibleTicks,
        Compartment::ExposedTicks,
        Compartment::InfectiousTicks,
    ];

    /// The four compartments carrying infection.
    pub const INFECTED: [Compartment; 4] = [
        Compartment::ExposedBirds,
        Compartment::InfectiousBirds,
        Compartment::ExposedTicks,
        Compartment::InfectiousTicks,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn label(self) -> &'static str {
        match self {
            Compartment::SusceptibleBirds => "S_B",
            Compartment::ExposedBirds => "E_B",
            Compartment::InfectiousBirds => "I_B",
            Compartment::Recovered => "R",
            Compartment::SusceptibleTicks => "S_T",
            Compartment::ExposedTicks => "E_T",
            Compartment::InfectiousTicks => "I_T",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == label)
    }
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Population counts of the seven compartments.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector(pub [f64; 7]);

impl StateVector {
    pub const ZERO: StateVector = StateVector([0.0; 7]);

    /// Initial condition used by the published simulations.
    pub fn table_initial() -> Self {
        StateVector([100.0, 80.0, 80.0, 60.0, 100.0, 80.0, 80.0])
    }

    pub fn s_b(&self) -> f64 {
        self.0[0]
    }
    pub fn e_b(&self) -> f64 {
        self.0[1]
    }
    pub fn i_b(&self) -> f64 {
        self.0[2]
    }
    pub fn r(&self) -> f64 {
        self.0[3]
    }
    pub fn s_t(&self) -> f64 {
        self.0[4]
    }
    pub fn e_t(&self) -> f64 {
        self.0[5]
    }
    pub fn i_t(&self) -> f64 {
        self.0[6]
    }

    pub fn total_birds(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2] + self.0[3]
    }

    pub fn total_ticks(&self) -> f64 {
        self.0[4] + self.0[5] + self.0[6]
    }

    /// Largest of the four infected compartments.
    pub fn max_infected(&self) -> f64 {
        Compartment::INFECTED
            .iter()
            .map(|&c| self[c])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rejects NaN or infinite entries, naming the first offending compartment.
    pub fn ensure_finite(&self) -> Result<()> {
        match Compartment::ALL.iter().find(|&&c| !self[c].is_finite()) {
            Some(c) => Err(Error::NonFinite {
                field: c.label().to_string(),
            }),
            None => Ok(()),
        }
    }
}

impl Index<Compartment> for StateVector {
    type Output = f64;
    fn index(&self, c: Compartment) -> &f64 {
        &self.0[c.index()]
    }
}

impl IndexMut<Compartment> for StateVector {
    fn index_mut(&mut self, c: Compartment) -> &mut f64 {
        &mut self.0[c.index()]
    }
}

/// Upper caps `m_i` of the three controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlBounds(pub [f64; 3]);

impl Default for ControlBounds {
    fn default() -> Self {
        ControlBounds([1.0; 3])
    }
}

impl ControlBounds {
    pub fn uniform(m: f64) -> Self {
        ControlBounds([m; 3])
    }

    pub fn unbounded() -> Self {
        ControlBounds([f64::INFINITY; 3])
    }
}

/// Control intensities `(u1, u2, u3)` together with their caps.
///
/// `0 <= u_i <= m_i` holds for every value that can be constructed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlVector {
    u: [f64; 3],
    bounds: ControlBounds,
}

impl ControlVector {
    pub fn zero(bounds: ControlBounds) -> Self {
        Self { u: [0.0; 3], bounds }
    }

    /// Projects `raw` onto `[0, m_i]` componentwise.
    pub fn clamped(raw: [f64; 3], bounds: ControlBounds) -> Self {
        let mut u = [0.0; 3];
        for i in 0..3 {
            u[i] = raw[i].max(0.0).min(bounds.0[i]);
        }
        Self { u, bounds }
    }

    /// Accepts `raw` only if every component already satisfies its bound.
    pub fn try_new(raw: [f64; 3], bounds: ControlBounds) -> Result<Self> {
        for (i, (&value, &bound)) in raw.iter().zip(&bounds.0).enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    field: format!("u{}", i + 1),
                });
            }
            if value < 0.0 || value > bound {
                return Err(Error::ControlOutOfBounds {
                    index: i + 1,
                    value,
                    bound,
                });
            }
        }
        Ok(Self { u: raw, bounds })
    }

    pub fn values(&self) -> [f64; 3] {
        self.u
    }

    pub fn bounds(&self) -> ControlBounds {
        self.bounds
    }

    pub fn u1(&self) -> f64 {
        self.u[0]
    }
    pub fn u2(&self) -> f64 {
        self.u[1]
    }
    pub fn u3(&self) -> f64 {
        self.u[2]
    }
}

/// Time derivative of the uncontrolled system.
pub fn rhs_base(state: &StateVector, params: &ModelParams) -> Result<StateVector> {
    state.ensure_finite()?;
    params.validate()?;
    Ok(evaluate(state, [0.0; 3], params, ModelVariant::Consistent))
}

/// Time derivative of the controlled system under the chosen variant.
pub fn rhs_control(
    state: &StateVector,
    controls: &ControlVector,
    params: &ModelParams,
    variant: ModelVariant,
) -> Result<StateVector> {
    state.ensure_finite()?;
    params.validate()?;
    ControlVector::try_new(controls.u, controls.bounds)?;
    Ok(evaluate(state, controls.u, params, variant))
}

/// Integrates the uncontrolled system on `grid`, validating inputs once.
pub fn simulate_base(x0: &StateVector, params: &ModelParams, grid: TimeGrid) -> Result<Trajectory<StateVector>> {
    x0.ensure_finite()?;
    params.validate()?;
    integrate(
        |_, x: &StateVector| evaluate(x, [0.0; 3], params, ModelVariant::Consistent),
        *x0,
        grid,
    )
}

/// Unchecked right-hand side; the hot path for the integrators.
#[inline]
pub(crate) fn evaluate(x: &StateVector, u: [f64; 3], p: &ModelParams, variant: ModelVariant) -> StateVector {
    let [s_b, e_b, i_b, r, s_t, e_t, i_t] = x.0;
    let [u1, u2, u3] = u;

    let bird_inflow = p.bird_inflow(x);
    let tick_inflow = p.tick_inflow(x) * (1.0 - u3);

    let bird_infection = (1.0 - u1) * p.beta_1 * i_t * s_b + (1.0 - u2) * p.beta_2 * i_b * s_b;
    let tick_infection = p.beta_3 * i_b * s_t + p.tick_to_tick() * i_t * s_t;

    let (ib_rate, recovered_inflow) = match variant {
        ModelVariant::Consistent => ((p.sigma + u2 + p.d + p.mu) * i_b, (p.sigma + u2) * i_b),
        ModelVariant::PaperExact => ((p.alpha_b + p.mu) * i_b, u2 * i_b),
    };

    StateVector([
        bird_inflow - bird_infection - p.d * s_b,
        bird_infection - (p.alpha_b + p.d) * e_b,
        p.alpha_b * e_b - ib_rate,
        recovered_inflow - p.d * r,
        tick_inflow - tick_infection - p.delta * s_t,
        tick_infection - (p.delta + p.alpha_t) * e_t,
        p.alpha_t * e_t - p.delta * i_t,
    ])
}

/// Analytic state Jacobian `d f / d x` of the controlled system.
///
/// With zero controls and the `Consistent` variant this is the Jacobian of the
/// base system.
pub fn state_jacobian(x: &StateVector, u: [f64; 3], p: &ModelParams, variant: ModelVariant) -> Matrix7 {
    let [s_b, _e_b, i_b, _r, s_t, _e_t, i_t] = x.0;
    let [u1, u2, u3] = u;
    let a1 = (1.0 - u1) * p.beta_1;
    let a2 = (1.0 - u2) * p.beta_2;
    let k = p.tick_to_tick();

    let mut j = Matrix7::zeros();
    if p.recruitment_mode == RecruitmentMode::Proportional {
        for c in 0..4 {
            j[(0, c)] += p.tau_b;
        }
        for c in 4..7 {
            j[(4, c)] += p.tau_t * (1.0 - u3);
        }
    }

    let bird_force = a1 * i_t + a2 * i_b;
    j[(0, 0)] += -bird_force - p.d;
    j[(0, 2)] += -a2 * s_b;
    j[(0, 6)] += -a1 * s_b;

    j[(1, 0)] = bird_force;
    j[(1, 1)] = -(p.alpha_b + p.d);
    j[(1, 2)] = a2 * s_b;
    j[(1, 6)] = a1 * s_b;

    j[(2, 1)] = p.alpha_b;
    match variant {
        ModelVariant::Consistent => {
            j[(2, 2)] = -(p.sigma + u2 + p.d + p.mu);
            j[(3, 2)] = p.sigma + u2;
        }
        ModelVariant::PaperExact => {
            j[(2, 2)] = -(p.alpha_b + p.mu);
            j[(3, 2)] = u2;
        }
    }
    j[(3, 3)] = -p.d;

    let tick_force = p.beta_3 * i_b + k * i_t;
    j[(4, 2)] += -p.beta_3 * s_t;
    j[(4, 4)] += -tick_force - p.delta;
    j[(4, 6)] += -k * s_t;

    j[(5, 2)] = p.beta_3 * s_t;
    j[(5, 4)] = tick_force;
    j[(5, 5)] = -(p.delta + p.alpha_t);
    j[(5, 6)] = k * s_t;

    j[(6, 5)] = p.alpha_t;
    j[(6, 6)] = -p.delta;
    j
}

/// Columns `d f / d u_i`. The controlled system is affine in `u`, so these do
/// not depend on `u`.
pub fn control_sensitivity(x: &StateVector, p: &ModelParams, variant: ModelVariant) -> [StateVector; 3] {
    let [s_b, _, i_b, _, _, _, i_t] = x.0;
    let via_bite = p.beta_1 * i_t * s_b;
    let via_faeces = p.beta_2 * i_b * s_b;

    let du1 = StateVector([via_bite, -via_bite, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let treated = match variant {
        ModelVariant::Consistent => -i_b,
        ModelVariant::PaperExact => 0.0,
    };
    let du2 = StateVector([via_faeces, -via_faeces, treated, i_b, 0.0, 0.0, 0.0]);
    let du3 = StateVector([0.0, 0.0, 0.0, 0.0, -p.tick_inflow(x), 0.0, 0.0]);
    [du1, du2, du3]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Term-by-term transcription of the base equations, kept separate from
    /// `evaluate` on purpose.
    fn base_oracle(x: [f64; 7], p: &ModelParams) -> [f64; 7] {
        let (sb, eb, ib, r, st, et, it) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6]);
        let lb = p.tau_b * p.n_b0;
        let lt = p.tau_t * p.n_t0;
        [
            lb - p.beta_1 * it * sb - p.beta_2 * ib * sb - p.d * sb,
            p.beta_1 * it * sb + p.beta_2 * ib * sb - p.alpha_b * eb - p.d * eb,
            p.alpha_b * eb - p.sigma * ib - p.d * ib - p.mu * ib,
            p.sigma * ib - p.d * r,
            lt - p.beta_3 * ib * st - p.theta * it * st - p.lambda * st * it - p.delta * st,
            p.beta_3 * ib * st + p.theta * it * st + p.lambda * st * it - p.delta * et - p.alpha_t * et,
            p.alpha_t * et - p.delta * it,
        ]
    }

    fn paper_control_oracle(x: [f64; 7], u: [f64; 3], p: &ModelParams) -> [f64; 7] {
        let (sb, eb, ib, r, st, et, it) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6]);
        let (u1, u2, u3) = (u[0], u[1], u[2]);
        let lb = p.tau_b * p.n_b0;
        let lt = p.tau_t * p.n_t0;
        [
            lb - (1.0 - u1) * p.beta_1 * it * sb - (1.0 - u2) * p.beta_2 * ib * sb - p.d * sb,
            (1.0 - u1) * p.beta_1 * it * sb + (1.0 - u2) * p.beta_2 * ib * sb - p.alpha_b * eb - p.d * eb,
            p.alpha_b * eb - p.alpha_b * ib - p.mu * ib,
            u2 * ib - p.d * r,
            lt * (1.0 - u3) - p.beta_3 * ib * st - p.theta * it * st - p.lambda * st * it - p.delta * st,
            p.beta_3 * ib * st + p.theta * it * st + p.lambda * st * it - p.delta * et - p.alpha_t * et,
            p.alpha_t * et - p.delta * it,
        ]
    }

    fn assert_close(a: &[f64; 7], b: &[f64; 7], rel: f64) {
        for i in 0..7 {
            let scale = a[i].abs().max(b[i].abs()).max(1.0);
            assert!(
                (a[i] - b[i]).abs() <= rel * scale,
                "component {i}: {} vs {}",
                a[i],
                b[i]
            );
        }
    }

    #[test]
    fn table_defaults() {
        let p = ModelParams::default();
        assert_eq!(p.beta_1, 2e-4);
        assert_eq!(p.theta, 3.9e-7);
        assert_eq!(p.d, 0.087);
        assert_eq!(p.sigma, 1.25);
        assert_eq!(p.delta, 0.083);
        assert_eq!(p.tau_b, 8.33);
        assert_eq!(p.tau_t, 0.167);
        assert_eq!(p.n_b0, 50.0);
        assert_eq!(p.n_t0, 100.0);
        assert_eq!(
            StateVector::table_initial().0,
            [100.0, 80.0, 80.0, 60.0, 100.0, 80.0, 80.0]
        );
    }

    #[test]
    fn zero_state_gives_pure_inflow() {
        let p = ModelParams::default();
        let f = rhs_base(&StateVector::ZERO, &p).unwrap();
        assert_eq!(f.0, [p.tau_b * p.n_b0, 0.0, 0.0, 0.0, p.tau_t * p.n_t0, 0.0, 0.0]);
    }

    #[test]
    fn closed_form_dfe_is_fixed_point() {
        let p = ModelParams::default();
        let dfe = StateVector([
            p.tau_b * p.n_b0 / p.d,
            0.0,
            0.0,
            0.0,
            p.tau_t * p.n_t0 / p.delta,
            0.0,
            0.0,
        ]);
        let f = rhs_base(&dfe, &p).unwrap();
        assert!(f.max_abs() < 1e-12, "{f:?}");
    }

    #[test]
    fn base_matches_term_oracle_at_table_state() {
        let p = ModelParams::default();
        let x = StateVector::table_initial();
        let f = rhs_base(&x, &p).unwrap();
        assert_close(&f.0, &base_oracle(x.0, &p), 1e-13);
    }

    #[test]
    fn paper_exact_matches_term_oracle_with_table_controls() {
        let p = ModelParams::default();
        let x = StateVector::table_initial();
        let u = ControlVector::try_new([0.02, 0.01, 0.05], ControlBounds::default()).unwrap();
        let f = rhs_control(&x, &u, &p, ModelVariant::PaperExact).unwrap();
        assert_close(&f.0, &paper_control_oracle(x.0, u.values(), &p), 1e-13);
    }

    #[test]
    fn full_tick_control_removes_recruitment() {
        let p = ModelParams::default();
        let x = StateVector([10.0, 0.0, 0.0, 0.0, 50.0, 0.0, 0.0]);
        let u = ControlVector::try_new([0.0, 0.0, 1.0], ControlBounds::default()).unwrap();
        for variant in [ModelVariant::PaperExact, ModelVariant::Consistent] {
            let f = rhs_control(&x, &u, &p, variant).unwrap();
            assert_eq!(f.s_t(), -p.delta * 50.0);
        }
    }

    #[test]
    fn zero_control_consistent_reduces_to_base() {
        let p = ModelParams::default();
        let x = StateVector::table_initial();
        let u = ControlVector::zero(ControlBounds::default());
        let a = rhs_control(&x, &u, &p, ModelVariant::Consistent).unwrap();
        assert_eq!(a, rhs_base(&x, &p).unwrap());
    }

    #[test]
    fn rejects_non_finite_state_by_name() {
        let mut x = StateVector::table_initial();
        x[Compartment::ExposedTicks] = f64::NAN;
        let err = rhs_base(&x, &ModelParams::default()).unwrap_err();
        assert!(err.to_string().contains("E_T"), "{err}");
    }

    #[test]
    fn rejects_out_of_bounds_control() {
        let err = ControlVector::try_new([0.5, 1.2, 0.0], ControlBounds::default()).unwrap_err();
        assert!(matches!(err, Error::ControlOutOfBounds { index: 2, .. }));
        let clamped = ControlVector::clamped([-1.0, 1.2, 0.3], ControlBounds::default());
        assert_eq!(clamped.values(), [0.0, 1.0, 0.3]);
    }

    #[test]
    fn rejects_negative_rate() {
        let mut p = ModelParams::default();
        p.mu = -0.1;
        let err = rhs_base(&StateVector::ZERO, &p).unwrap_err();
        assert!(err.to_string().contains("mu"));
    }

    #[test]
    fn param_keys_round_trip() {
        let mut p = ModelParams::default();
        for (i, key) in ModelParams::KEYS.iter().enumerate() {
            assert!(p.set(key, i as f64 + 0.5));
            assert_eq!(p.get(key), Some(i as f64 + 0.5));
        }
        assert!(!p.set("beta_9", 1.0));
    }

    #[test]
    fn total_population_identities() {
        let p = ModelParams::default();
        let x = StateVector::table_initial();
        let f = rhs_base(&x, &p).unwrap();
        let dnt = f.s_t() + f.e_t() + f.i_t();
        let expect_t = p.tau_t * p.n_t0 - p.delta * x.total_ticks();
        assert!((dnt - expect_t).abs() <= 1e-12 * expect_t.abs().max(1.0));
        let dnb = f.s_b() + f.e_b() + f.i_b() + f.r();
        let expect_b = p.tau_b * p.n_b0 - p.d * x.total_birds() - p.mu * x.i_b();
        assert!((dnb - expect_b).abs() <= 1e-12 * expect_b.abs().max(1.0));
    }

    #[test]
    fn control_sensitivity_matches_affine_difference() {
        let p = ModelParams::default();
        let x = StateVector::table_initial();
        for variant in [ModelVariant::PaperExact, ModelVariant::Consistent] {
            let base = evaluate(&x, [0.0; 3], &p, variant);
            let cols = control_sensitivity(&x, &p, variant);
            for i in 0..3 {
                let mut u = [0.0; 3];
                u[i] = 1.0;
                let shifted = evaluate(&x, u, &p, variant);
                for c in 0..7 {
                    let diff = shifted.0[c] - base.0[c];
                    assert!((diff - cols[i].0[c]).abs() < 1e-9, "{variant} u{} row {c}", i + 1);
                }
            }
        }
    }
}
