//! Bird–tick disease transmission model: the ODE system, a fixed-step RK4
//! integrator, equilibrium and stability analysis, an optimal-control solver
//! and a scenario runner.

pub mod analysis;
pub mod control;
pub mod error;
pub mod integrator;
pub mod model;
pub mod scenario;

pub use control::{forward_backward_sweep, AdjointVector, CostWeights, SweepOptions, SweepResult};
pub use error::{Error, Result};
pub use integrator::{integrate, integrate_backward, integrate_driven, TimeGrid, Trajectory};
pub use model::{
    control_sensitivity, rhs_base, rhs_control, simulate_base, state_jacobian, Compartment, ControlBounds,
    ControlVector, Matrix7, ModelParams, ModelVariant, RecruitmentMode, StateVector,
};
pub use scenario::{
    builtin_scenario, builtin_scenarios, load_config, run_scenario, simulate, RunReport, ScenarioConfig,
};
