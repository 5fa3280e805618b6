//! Three-control optimal-control problem: objective, Hamiltonian, adjoint
//! system, pointwise minimiser and the forward-backward sweep.
//!
//! The Hamiltonian is built from the same right-hand side the integrator
//! uses, `H = L(x, u) + lambda . f(x, u)`, and the adjoint is its exact
//! negative state gradient.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate_backward, integrate_driven, Lerp, OdeState, TimeGrid, Trajectory};
use crate::model::{
    self, control_sensitivity, state_jacobian, Compartment, ControlBounds, ControlVector, ModelParams, ModelVariant,
    StateVector,
};

/// Objectives above this (or NaN) abort the sweep.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// State-cost weights `C1..C3` (on `E_B`, `I_B`, `N_T`) and control-cost
/// weights `D1..D3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub c: [f64; 3],
    pub d: [f64; 3],
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            c: [1.0; 3],
            d: [10.0; 3],
        }
    }
}

impl CostWeights {
    pub fn new(c: [f64; 3], d: [f64; 3]) -> Self {
        Self { c, d }
    }

    /// Finite, nonnegative state weights and strictly positive control weights.
    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.c.iter().enumerate() {
            if !c.is_finite() || *c < 0.0 {
                return Err(Error::InvalidParameter {
                    name: format!("C{}", i + 1),
                    reason: format!("must be finite and >= 0, got {c}"),
                });
            }
        }
        for (i, d) in self.d.iter().enumerate() {
            if !d.is_finite() || *d <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: format!("D{}", i + 1),
                    reason: format!("must be finite and > 0, got {d}"),
                });
            }
        }
        Ok(())
    }

    /// `d L / d x`
    fn state_gradient(&self) -> [f64; 7] {
        let [c1, c2, c3] = self.c;
        [0.0, c1, c2, 0.0, c3, c3, c3]
    }
}

/// Costates `lambda_1..lambda_7`, paired with `(S_B, E_B, I_B, R, S_T, E_T, I_T)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AdjointVector(pub [f64; 7]);

impl AdjointVector {
    pub const ZERO: AdjointVector = AdjointVector([0.0; 7]);

    pub fn dot(&self, v: &StateVector) -> f64 {
        self.0.iter().zip(v.0.iter()).map(|(a, b)| a * b).sum()
    }
}

impl Index<Compartment> for AdjointVector {
    type Output = f64;
    fn index(&self, c: Compartment) -> &f64 {
        &self.0[c.index()]
    }
}

impl OdeState for AdjointVector {
    fn add_scaled(&self, other: &Self, h: f64) -> Self {
        AdjointVector(self.0.add_scaled(&other.0, h))
    }
    fn first_non_finite(&self) -> Option<usize> {
        self.0.first_non_finite()
    }
    fn component_label(index: usize) -> String {
        format!("l{}", index + 1)
    }
}

impl Lerp for AdjointVector {
    fn lerp(&self, other: &Self, w: f64) -> Self {
        AdjointVector(self.0.lerp(&other.0, w))
    }
}

/// Integrand `C1 E_B + C2 I_B + C3 N_T + 1/2 sum D_i u_i^2`.
pub fn running_cost(x: &StateVector, u: [f64; 3], weights: &CostWeights) -> f64 {
    let [c1, c2, c3] = weights.c;
    let quad: f64 = (0..3).map(|i| weights.d[i] * u[i] * u[i]).sum();
    c1 * x.e_b() + c2 * x.i_b() + c3 * x.total_ticks() + 0.5 * quad
}

/// Trapezoidal quadrature of the running cost over the shared grid.
pub fn objective(
    states: &Trajectory<StateVector>,
    controls: &Trajectory<ControlVector>,
    weights: &CostWeights,
) -> Result<f64> {
    if states.grid != controls.grid || states.samples.len() != controls.samples.len() {
        return Err(Error::GridMismatch("state and control trajectories differ".into()));
    }
    let h = states.grid.dt();
    let n = states.samples.len();
    let integrand = |k: usize| running_cost(&states.samples[k], controls.samples[k].values(), weights);
    let interior: f64 = (1..n - 1).map(integrand).sum();
    Ok(h * (0.5 * integrand(0) + interior + 0.5 * integrand(n - 1)))
}

/// `H = L(x, u) + lambda . f(x, u)` with `f` the controlled right-hand side.
pub fn hamiltonian(
    state: &StateVector,
    adjoint: &AdjointVector,
    controls: &ControlVector,
    weights: &CostWeights,
    params: &ModelParams,
    variant: ModelVariant,
) -> f64 {
    let u = controls.values();
    running_cost(state, u, weights) + adjoint.dot(&model::evaluate(state, u, params, variant))
}

/// `d lambda / dt = -dH/dx = -(dL/dx + J^T lambda)`.
pub fn adjoint_rhs(
    adjoint: &AdjointVector,
    state: &StateVector,
    controls: &ControlVector,
    weights: &CostWeights,
    params: &ModelParams,
    variant: ModelVariant,
) -> AdjointVector {
    let jac = state_jacobian(state, controls.values(), params, variant);
    let grad = weights.state_gradient();
    AdjointVector(std::array::from_fn(|j| {
        let mut s = grad[j];
        for i in 0..7 {
            s += jac[(i, j)] * adjoint.0[i];
        }
        -s
    }))
}

/// `dH/du_i = D_i u_i + lambda . df/du_i`.
pub fn control_gradient(
    state: &StateVector,
    adjoint: &AdjointVector,
    controls: &ControlVector,
    weights: &CostWeights,
    params: &ModelParams,
    variant: ModelVariant,
) -> [f64; 3] {
    let cols = control_sensitivity(state, params, variant);
    let u = controls.values();
    std::array::from_fn(|i| weights.d[i] * u[i] + adjoint.dot(&cols[i]))
}

fn unconstrained_minimiser(
    state: &StateVector,
    adjoint: &AdjointVector,
    weights: &CostWeights,
    params: &ModelParams,
    variant: ModelVariant,
) -> [f64; 3] {
    let cols = control_sensitivity(state, params, variant);
    std::array::from_fn(|i| -adjoint.dot(&cols[i]) / weights.d[i])
}

/// Pointwise minimiser of `H` over `[0, m_1] x [0, m_2] x [0, m_3]`.
///
/// `H` is a separable convex quadratic in `u`, so the minimiser is the
/// projection of the stationary point:
///
/// * `u1 = beta_1 I_T S_B (lambda_2 - lambda_1) / D1`
/// * `u2 = [beta_2 I_B S_B (lambda_2 - lambda_1) + (lambda_3 - lambda_4) I_B] / D2`
///   (the `lambda_3` term is absent under [`ModelVariant::PaperExact`])
/// * `u3 = lambda_5 Lambda_T / D3`
pub fn optimal_controls(
    state: &StateVector,
    adjoint: &AdjointVector,
    weights: &CostWeights,
    bounds: ControlBounds,
    params: &ModelParams,
    variant: ModelVariant,
) -> Result<ControlVector> {
    weights.validate()?;
    Ok(ControlVector::clamped(
        unconstrained_minimiser(state, adjoint, weights, params, variant),
        bounds,
    ))
}

/// Forward state and backward adjoint for a fixed control trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Pass {
    pub states: Trajectory<StateVector>,
    pub adjoints: Trajectory<AdjointVector>,
    pub objective: f64,
}

/// Integrates the state forward under `controls`, then the adjoint backward
/// from `lambda(T) = 0` along the frozen state.
pub fn solve_pass(
    x0: &StateVector,
    controls: &Trajectory<ControlVector>,
    weights: &CostWeights,
    params: &ModelParams,
    variant: ModelVariant,
) -> Result<Pass> {
    let grid = controls.grid;
    let states = integrate_driven(
        |_, x: &StateVector, u: &ControlVector| model::evaluate(x, u.values(), params, variant),
        *x0,
        grid,
        controls,
    )?;
    let frozen = Trajectory {
        grid,
        samples: states
            .samples
            .iter()
            .copied()
            .zip(controls.samples.iter().copied())
            .collect(),
    };
    let adjoints = integrate_backward(
        |_, lam: &AdjointVector, (x, u): &(StateVector, ControlVector)| {
            adjoint_rhs(lam, x, u, weights, params, variant)
        },
        AdjointVector::ZERO,
        grid,
        &frozen,
    )?;
    let objective = objective(&states, controls, weights)?;
    Ok(Pass {
        states,
        adjoints,
        objective,
    })
}

/// First-order change of the objective predicted by the adjoint for the
/// control perturbation `delta` (sampled on the same grid):
/// `integral of sum_i dH/du_i * delta_i dt`.
pub fn predicted_objective_change(
    pass: &Pass,
    controls: &Trajectory<ControlVector>,
    delta: &Trajectory<[f64; 3]>,
    weights: &CostWeights,
    params: &ModelParams,
    variant: ModelVariant,
) -> Result<f64> {
    if delta.grid != controls.grid || pass.states.grid != controls.grid {
        return Err(Error::GridMismatch("perturbation, controls and pass differ".into()));
    }
    let n = controls.samples.len();
    let integrand = |k: usize| {
        let g = control_gradient(
            &pass.states.samples[k],
            &pass.adjoints.samples[k],
            &controls.samples[k],
            weights,
            params,
            variant,
        );
        (0..3).map(|i| g[i] * delta.samples[k][i]).sum::<f64>()
    };
    let interior: f64 = (1..n - 1).map(integrand).sum();
    Ok(controls.grid.dt() * (0.5 * integrand(0) + interior + 0.5 * integrand(n - 1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Relaxation `omega` in `(0, 1]`.
    pub omega: f64,
    /// Stop once the max-abs control update falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            omega: 0.5,
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub state_traj: Trajectory<StateVector>,
    pub adjoint_traj: Trajectory<AdjointVector>,
    pub control_traj: Trajectory<ControlVector>,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective of the control iterate at the start of each iteration.
    pub objective_history: Vec<f64>,
}

fn check_objective(iteration: usize, objective: f64) -> Result<()> {
    if objective.is_nan() || objective > DIVERGENCE_LIMIT {
        return Err(Error::SweepDiverged { iteration, objective });
    }
    Ok(())
}

/// Forward-backward sweep starting from `u = 0`.
///
/// Each iteration integrates the state forward, the adjoint backward, computes
/// the pointwise minimiser and relaxes towards it. The returned trajectories
/// are a final consistent pass with the last control iterate. Running out of
/// iterations is not an error: the result carries `converged = false`.
pub fn forward_backward_sweep(
    x0: &StateVector,
    grid: TimeGrid,
    weights: &CostWeights,
    bounds: ControlBounds,
    params: &ModelParams,
    variant: ModelVariant,
    options: SweepOptions,
) -> Result<SweepResult> {
    params.validate()?;
    weights.validate()?;
    x0.ensure_finite()?;
    if !(options.omega > 0.0 && options.omega <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "omega".into(),
            reason: format!("relaxation must lie in (0, 1], got {}", options.omega),
        });
    }
    if options.tol.is_nan() || options.tol <= 0.0 || options.max_iter == 0 {
        return Err(Error::InvalidParameter {
            name: "tol / max_iter".into(),
            reason: "tolerance and iteration budget must be positive".into(),
        });
    }
    for (i, m) in bounds.0.iter().enumerate() {
        if m.is_nan() || *m < 0.0 {
            return Err(Error::InvalidParameter {
                name: format!("u{}_bound", i + 1),
                reason: format!("must be >= 0, got {m}"),
            });
        }
    }

    let omega = options.omega;
    let mut controls = Trajectory::constant(grid, ControlVector::zero(bounds));
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iter {
        iterations += 1;
        let pass = solve_pass(x0, &controls, weights, params, variant)?;
        check_objective(iterations, pass.objective)?;
        history.push(pass.objective);

        let mut change = 0.0f64;
        for k in 0..controls.samples.len() {
            let old = controls.samples[k].values();
            let cand = unconstrained_minimiser(
                &pass.states.samples[k],
                &pass.adjoints.samples[k],
                weights,
                params,
                variant,
            );
            let cand = ControlVector::clamped(cand, bounds).values();
            // Relaxation only approaches a saturated candidate geometrically;
            // once within `tol`, put the component on the active bound.
            let relaxed: [f64; 3] = std::array::from_fn(|i| {
                let v = omega * cand[i] + (1.0 - omega) * old[i];
                let saturated = cand[i] == 0.0 || cand[i] == bounds.0[i];
                if saturated && (v - cand[i]).abs() < options.tol {
                    cand[i]
                } else {
                    v
                }
            });
            let next = ControlVector::clamped(relaxed, bounds);
            for (new, prev) in next.values().iter().zip(&old) {
                change = change.max((new - prev).abs());
            }
            controls.samples[k] = next;
        }
        if change < options.tol {
            converged = true;
            break;
        }
    }

    let last = solve_pass(x0, &controls, weights, params, variant)?;
    check_objective(iterations, last.objective)?;
    Ok(SweepResult {
        state_traj: last.states,
        adjoint_traj: last.adjoints,
        control_traj: controls,
        objective_value: last.objective,
        iterations,
        converged,
        objective_history: history,
    })
}

/// One line of [`ExistenceReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistenceItem {
    pub condition: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistenceReport {
    pub items: Vec<ExistenceItem>,
}

impl ExistenceReport {
    pub fn all_hold(&self) -> bool {
        self.items.iter().all(|i| i.holds)
    }

    /// Whether the item whose name starts with `prefix` holds.
    pub fn holds(&self, prefix: &str) -> Option<bool> {
        self.items
            .iter()
            .find(|i| i.condition.starts_with(prefix))
            .map(|i| i.holds)
    }
}

/// Checks the verifiable hypotheses of the existence result: caps in `(0, 1]`,
/// positive weights (convexity in `u`), nonempty control set.
pub fn existence_preconditions(weights: &CostWeights, bounds: &ControlBounds) -> ExistenceReport {
    let m = bounds.0;
    let item = |condition: &str, holds: bool| ExistenceItem {
        condition: condition.to_string(),
        holds,
    };
    ExistenceReport {
        items: vec![
            item("bounds: 0 < m_i <= 1", m.iter().all(|&v| v > 0.0 && v <= 1.0)),
            item(
                "convexity: D_i > 0",
                weights.d.iter().all(|&v| v.is_finite() && v > 0.0),
            ),
            item(
                "state weights: C_i > 0",
                weights.c.iter().all(|&v| v.is_finite() && v > 0.0),
            ),
            item("nonempty control set: m_i >= 0", m.iter().all(|&v| v >= 0.0)),
        ],
    }
}
