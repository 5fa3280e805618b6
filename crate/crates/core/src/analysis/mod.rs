//! Equilibria, stability, reproduction number and trajectory diagnostics.

mod equilibrium;
mod lyapunov;
mod region;
mod reproduction;
mod stability;

pub use equilibrium::{
    closed_form_endemic_values, default_endemic_guess, disease_free_equilibrium, disease_free_report,
    disease_free_steady_state, endemic_equilibrium, ClosedFormEndemicValues, EquilibriumKind, EquilibriumReport,
    EXTINCT, NEWTON_MAX_ITER, NEWTON_TOL,
};
pub use lyapunov::{lyapunov_diagnostic, lyapunov_value, lyapunov_weights, LyapunovReport, LyapunovSample};
pub use region::{invariant_region_check, RegionCheck, REGION_TOL};
pub use reproduction::{next_generation_blocks, r0, R0Report};
pub use stability::{
    all_strictly_stable, dfe_stability_condition, eigenvalues, eigenvalues_dyn, endemic_threshold_predicates,
    jacobian_at, spectral_abscissa, DfeStability, EndemicThresholds, EPS_EIG,
};
