//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use tickfever_core::analysis::{
    default_endemic_guess, dfe_stability_condition, disease_free_equilibrium, endemic_equilibrium,
    endemic_threshold_predicates, invariant_region_check, r0, EquilibriumKind,
};
use tickfever_core::control::{
    adjoint_rhs, hamiltonian, solve_pass, AdjointVector, CostWeights, SweepOptions, SweepResult,
};
use tickfever_core::integrator::{integrate, TimeGrid, Trajectory};
use tickfever_core::model::{
    rhs_base, simulate_base, Compartment, ControlBounds, ControlVector, ModelParams, ModelVariant, StateVector,
};
use tickfever_core::scenario::{builtin_scenario, simulate};
use tickfever_core::{forward_backward_sweep, RecruitmentMode};

use common::{central, draw_params, draw_start_inside, perturbed_table, rng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run_base(p: &ModelParams, x0: StateVector, t1: f64) -> Trajectory<StateVector> {
    simulate_base(&x0, p, TimeGrid::with_step(0.0, t1, 0.01).unwrap()).unwrap()
}

fn c1_dfe_exactness() -> Outcome {
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
    let residual = rhs_base(&dfe, &p).unwrap().max_abs();
    outcome(residual < 1e-12, format!("max |f(DFE)| = {residual:e}"))
}

fn c2_dfe_stability_equivalence() -> Outcome {
    let mut rng = rng(2);
    let mut mismatches = 0;
    let mut draws = 0;
    while draws < 1000 {
        let mut p = draw_params(&mut rng).with_mode(RecruitmentMode::Proportional);
        p.tau_b = rng.random_range(0.05..2.0);
        p.d = rng.random_range(0.05..2.0);
        p.tau_t = rng.random_range(0.05..2.0);
        p.delta = rng.random_range(0.05..2.0);
        if (p.d - p.tau_b).abs() <= 1e-6 || (p.delta - p.tau_t).abs() <= 1e-6 {
            continue;
        }
        draws += 1;
        let v = dfe_stability_condition(&p).unwrap();
        let inequality = p.d > p.tau_b && p.delta > p.tau_t;
        if !v.agree() || v.inequality_stable != inequality {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches in {draws} draws"))
}

fn c3_r0_threshold() -> Outcome {
    let mut rng = rng(3);
    let (mut below, mut above, mut buffer) = (0, 0, 0);
    let mut counterexamples = Vec::new();
    for i in 0..200 {
        let p = draw_params(&mut rng);
        let x0 = draw_start_inside(&mut rng, &p);
        let r = r0(&p).unwrap().r0_spectral;
        if (0.95..=1.05).contains(&r) {
            buffer += 1;
            continue;
        }
        let end = *run_base(&p, x0, 2000.0).last();
        let max_inf = end.max_infected();
        if r < 0.95 {
            below += 1;
            if !Compartment::INFECTED.iter().all(|&c| end[c] < 1e-6) {
                counterexamples.push(format!("draw {i}: r0 = {r:.4}, max infected {max_inf:e}"));
            }
        } else {
            above += 1;
            if max_inf.is_nan() || max_inf <= 1e-3 {
                counterexamples.push(format!("draw {i}: r0 = {r:.4}, max infected {max_inf:e}"));
            }
        }
    }
    for c in &counterexamples {
        println!("    counterexample {c}");
    }
    outcome(
        counterexamples.is_empty(),
        format!(
            "{below} below, {above} above, {buffer} in buffer, {} counterexamples",
            counterexamples.len()
        ),
    )
}

fn c4_invariant_region() -> Outcome {
    let mut rng = rng(4);
    let mut escaped = 0;
    for _ in 0..100 {
        let p = draw_params(&mut rng);
        let x0 = draw_start_inside(&mut rng, &p);
        let dfe = disease_free_equilibrium(&p).unwrap();
        assert!(x0.total_birds() <= dfe.s_b() && x0.total_ticks() <= dfe.s_t());
        if !invariant_region_check(&run_base(&p, x0, 100.0), &p).inside {
            escaped += 1;
        }
    }
    outcome(escaped == 0, format!("{escaped} of 100 starts left the region"))
}

/// Converged sweeps on perturbed default rates, shared by criteria 5 and 6.
struct SweepCase {
    params: ModelParams,
    weights: CostWeights,
    bounds: ControlBounds,
    variant: ModelVariant,
    x0: StateVector,
    result: SweepResult,
}

/// Tight enough that the relaxed iterate is stationary to well below 1e-5.
const ACCEPTANCE_TOL: f64 = 1e-9;

fn sweep_cases() -> Vec<SweepCase> {
    let mut rng = rng(5);
    (0..20)
        .map(|i| {
            let params = perturbed_table(&mut rng);
            let weights = CostWeights::new(
                std::array::from_fn(|_| rng.random_range(0.5..2.0)),
                std::array::from_fn(|_| rng.random_range(5.0..20.0)),
            );
            let bounds = ControlBounds(std::array::from_fn(|_| rng.random_range(0.5..1.0)));
            let variant = if i % 2 == 0 {
                ModelVariant::Consistent
            } else {
                ModelVariant::PaperExact
            };
            let x0 = StateVector::table_initial();
            let grid = TimeGrid::with_step(0.0, 40.0, 0.01).unwrap();
            let options = SweepOptions {
                tol: ACCEPTANCE_TOL,
                max_iter: 2000,
                ..SweepOptions::default()
            };
            let result = forward_backward_sweep(&x0, grid, &weights, bounds, &params, variant, options).unwrap();
            SweepCase {
                params,
                weights,
                bounds,
                variant,
                x0,
                result,
            }
        })
        .collect()
}

fn c5_adjoint_correctness(cases: &[SweepCase]) -> Outcome {
    let mut rng = rng(55);
    let mut worst = 0.0f64;
    let mut unconverged = 0;
    for case in cases {
        let r = &case.result;
        if !r.converged {
            unconverged += 1;
            continue;
        }
        for _ in 0..50 {
            let k = rng.random_range(0..r.state_traj.samples.len());
            let (x, lam, u) = (
                r.state_traj.samples[k],
                r.adjoint_traj.samples[k],
                r.control_traj.samples[k],
            );
            let d = adjoint_rhs(&lam, &x, &u, &case.weights, &case.params, case.variant);
            for j in 0..7 {
                let h_of = |v: f64| {
                    let mut y = x;
                    y.0[j] = v;
                    hamiltonian(&y, &lam, &u, &case.weights, &case.params, case.variant)
                };
                let fd = central(h_of, x.0[j], 1e-6);
                worst = worst.max((d.0[j] + fd).abs());
            }
        }
    }
    outcome(
        unconverged == 0 && worst < 1e-5,
        format!("{unconverged} unconverged sweeps, worst |adjoint + dH/dx| = {worst:e}"),
    )
}

/// `dH/du_i` by the three-point one-sided formula, exact for the quadratic
/// dependence of `H` on `u` and never leaving `u_i >= 0`.
fn dh_du(case: &SweepCase, x: &StateVector, lam: &AdjointVector, u: &ControlVector, i: usize) -> f64 {
    let h = 1e-4;
    let at = |s: f64| {
        let mut v = u.values();
        v[i] += s;
        let c = ControlVector::clamped(v, ControlBounds::unbounded());
        hamiltonian(x, lam, &c, &case.weights, &case.params, case.variant)
    };
    (-3.0 * at(0.0) + 4.0 * at(h) - at(2.0 * h)) / (2.0 * h)
}

fn stationarity_violation(case: &SweepCase) -> f64 {
    let r = &case.result;
    let mut worst = 0.0f64;
    for k in 0..r.state_traj.samples.len() {
        let (x, lam, u) = (
            r.state_traj.samples[k],
            r.adjoint_traj.samples[k],
            r.control_traj.samples[k],
        );
        for i in 0..3 {
            let g = dh_du(case, &x, &lam, &u, i);
            let ui = u.values()[i];
            let m = case.bounds.0[i];
            let violation = if ui == 0.0 {
                (-g).max(0.0)
            } else if ui == m {
                g.max(0.0)
            } else {
                g.abs()
            };
            worst = worst.max(violation);
        }
    }
    worst
}

fn c6_pmp_stationarity(cases: &[SweepCase]) -> Outcome {
    let mut worst = 0.0f64;
    let mut not_improved = 0;
    for case in cases.iter().filter(|c| c.result.converged) {
        worst = worst.max(stationarity_violation(case));
        let zero = Trajectory::constant(case.result.control_traj.grid, ControlVector::zero(case.bounds));
        let j0 = solve_pass(&case.x0, &zero, &case.weights, &case.params, case.variant)
            .unwrap()
            .objective;
        if case.result.objective_value > j0 + 1e-9 {
            not_improved += 1;
        }
    }

    // The default optimal scenario against random feasible constant controls.
    let cfg = builtin_scenario("optimal").unwrap();
    let weights = cfg.weights.unwrap();
    let options = SweepOptions {
        tol: ACCEPTANCE_TOL,
        max_iter: 2000,
        ..cfg.sweep_options
    };
    let result = forward_backward_sweep(
        &cfg.initial,
        cfg.grid,
        &weights,
        cfg.bounds,
        &cfg.params,
        cfg.variant,
        options,
    )
    .unwrap();
    let case = SweepCase {
        params: cfg.params,
        weights,
        bounds: cfg.bounds,
        variant: cfg.variant,
        x0: cfg.initial,
        result,
    };
    worst = worst.max(stationarity_violation(&case));
    let mut rng = rng(6);
    let mut beaten = 0;
    let mut best_constant = f64::INFINITY;
    for _ in 0..20 {
        let u: [f64; 3] = std::array::from_fn(|i| rng.random_range(0.0..cfg.bounds.0[i]));
        let controls = Trajectory::constant(cfg.grid, ControlVector::try_new(u, cfg.bounds).unwrap());
        let j = solve_pass(&cfg.initial, &controls, &weights, &cfg.params, cfg.variant)
            .unwrap()
            .objective;
        best_constant = best_constant.min(j);
        if case.result.objective_value > j {
            beaten += 1;
        }
    }
    let converged = case.result.converged && cases.iter().all(|c| c.result.converged);
    outcome(
        converged && worst < 1e-5 && not_improved == 0 && beaten == 0,
        format!(
            "worst stationarity {worst:e}, {not_improved} sweeps worse than u = 0, \
             J* = {:.6} vs best constant {best_constant:.6} ({beaten} beat it)",
            case.result.objective_value
        ),
    )
}

fn c7_fig2() -> Outcome {
    let run = &simulate(&builtin_scenario("fig2").unwrap()).unwrap()[0];
    let end = run.states.last();
    let mut r_monotone = true;
    let mut prev = f64::NEG_INFINITY;
    for (t, x) in run.states.iter() {
        if t > 2.0 {
            r_monotone &= x.r() >= prev;
            prev = x.r();
        }
    }
    outcome(
        end.i_t() < 1e-3 && end.e_t() < 1e-3 && r_monotone,
        format!(
            "I_T(40) = {:.6e}, E_T(40) = {:.6e}, R non-decreasing for t > 2: {r_monotone}",
            end.i_t(),
            end.e_t()
        ),
    )
}

fn c8_fig3() -> Outcome {
    let a = simulate(&builtin_scenario("fig3a").unwrap()).unwrap();
    let peaks: Vec<f64> = a
        .iter()
        .map(|r| {
            r.states
                .samples
                .iter()
                .map(|x| x.i_b())
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let peaks_ok = peaks.windows(2).all(|w| w[1] > w[0]);

    let b = simulate(&builtin_scenario("fig3b").unwrap()).unwrap();
    let grid = b[0].states.grid;
    let d_ok = (0..=grid.n_steps()).filter(|&k| grid.time(k) > 1.0).all(|k| {
        b.windows(2)
            .all(|w| w[1].states.samples[k].i_b() < w[0].states.samples[k].i_b())
    });

    // Tail: the last quarter of the horizon.
    let c = simulate(&builtin_scenario("fig3d").unwrap()).unwrap();
    let grid = c[0].states.grid;
    let tail_start = 3 * grid.n_steps() / 4;
    let delta_ok = (tail_start..=grid.n_steps()).all(|k| {
        c.windows(2)
            .all(|w| w[1].states.samples[k].e_t() < w[0].states.samples[k].e_t())
    });
    outcome(
        peaks_ok && d_ok && delta_ok,
        format!("alpha_B peaks increasing: {peaks_ok}, I_B decreasing in d: {d_ok}, E_T tail decreasing in delta: {delta_ok}"),
    )
}

fn c9_endemic_cross_validation() -> Outcome {
    let mut rng = rng(9);
    let mut accepted = 0;
    let mut mismatched = Vec::new();
    let mut predicates_hold = 0;
    while accepted < 20 {
        let p = draw_params(&mut rng);
        let r = r0(&p).unwrap().r0_spectral;
        if r <= 1.2 {
            continue;
        }
        accepted += 1;
        let report = endemic_equilibrium(&p, &default_endemic_guess(&p, 200.0).unwrap());
        let mut seed = disease_free_equilibrium(&p).unwrap();
        for c in Compartment::INFECTED {
            seed[c] += 1.0;
        }
        let limit = *run_base(&p, seed, 1e4).last();
        match report {
            Ok(rep) if rep.kind == EquilibriumKind::Endemic => {
                let worst = Compartment::ALL
                    .iter()
                    .map(|&c| (rep.point[c] - limit[c]).abs() / rep.point[c].abs())
                    .fold(0.0, f64::max);
                if worst.is_nan() || worst >= 1e-4 {
                    mismatched.push(format!("r0 = {r:.3}: worst relative gap {worst:e}"));
                }
                let t = endemic_threshold_predicates(&p, rep.point.e_t()).unwrap();
                if t.both_hold() {
                    predicates_hold += 1;
                } else {
                    println!(
                        "    predicate shortfall: r0 = {r:.3}, E_T* = {:.4e}, bird threshold {:.4e} ({}), \
                         tick threshold {:.4e} ({}), params {p:?}",
                        rep.point.e_t(),
                        t.bird_threshold,
                        t.bird_holds,
                        t.tick_threshold,
                        t.tick_holds
                    );
                }
            }
            Ok(rep) => mismatched.push(format!("r0 = {r:.3}: Newton returned {:?}", rep.kind)),
            Err(e) => mismatched.push(format!("r0 = {r:.3}: {e}")),
        }
    }
    for m in &mismatched {
        println!("    root mismatch {m}");
    }
    let share = predicates_hold as f64 / accepted as f64;
    outcome(
        mismatched.is_empty() && share >= 0.9,
        format!(
            "{} of {accepted} roots off the integration limit, threshold predicates hold in {predicates_hold}/{accepted}",
            mismatched.len()
        ),
    )
}

fn c10_integrator_order() -> Outcome {
    let err = |n: usize| {
        let traj = integrate(|_, x: &f64| -x, 1.0, TimeGrid::new(0.0, 1.0, n).unwrap()).unwrap();
        (traj.last() - (-1.0f64).exp()).abs()
    };
    let ratio = err(10) / err(20);
    outcome((12.0..=20.0).contains(&ratio), format!("error ratio {ratio:.3}"))
}

fn main() {
    let mut all_pass = true;
    let mut report = |name: &str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = o.pass && in_time;
        all_pass &= pass;
        println!(
            "{} {name}: {} [{:.3} s, limit {:.3} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        );
    };

    report(
        "1 disease-free equilibrium exactness",
        Duration::from_millis(1),
        &mut c1_dfe_exactness,
    );
    report(
        "2 disease-free stability equivalence",
        Duration::from_secs(10),
        &mut c2_dfe_stability_equivalence,
    );
    report(
        "3 reproduction-number threshold",
        Duration::from_secs(120),
        &mut c3_r0_threshold,
    );
    report("4 invariant region", Duration::from_secs(30), &mut c4_invariant_region);

    let start = Instant::now();
    let cases = sweep_cases();
    let sweep_time = start.elapsed();
    println!(
        "     (20 converged-sweep cases prepared in {:.3} s)",
        sweep_time.as_secs_f64()
    );
    report(
        "5 adjoint correctness",
        Duration::from_secs(120) - sweep_time.min(Duration::from_secs(120)),
        &mut || c5_adjoint_correctness(&cases),
    );
    report("6 stationarity and improvement", Duration::from_secs(180), &mut || {
        c6_pmp_stationarity(&cases)
    });
    report("7 fig2 tick extinction", Duration::from_secs(5), &mut c7_fig2);
    report("8 fig3 monotonicity", Duration::from_secs(30), &mut c8_fig3);
    report(
        "9 endemic root cross-validation",
        Duration::from_secs(180),
        &mut c9_endemic_cross_validation,
    );
    report("10 integrator order", Duration::from_secs(1), &mut c10_integrator_order);

    if !all_pass {
        std::process::exit(1);
    }
}
