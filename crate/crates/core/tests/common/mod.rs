#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tickfever_core::analysis::disease_free_equilibrium;
use tickfever_core::{ModelParams, RecruitmentMode, StateVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Random constant-inflow parameters. Loss rates stay in [0.2, 1.5] so every
/// trajectory settles well within the long horizons used by the tests;
/// transmission rates span three decades so draws land on both sides of the
/// threshold.
pub fn draw_params(rng: &mut ChaCha8Rng) -> ModelParams {
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let mut p = ModelParams {
        tau_b: u(0.1, 2.0),
        tau_t: u(0.1, 2.0),
        n_b0: u(10.0, 100.0),
        n_t0: u(10.0, 100.0),
        d: u(0.2, 1.5),
        delta: u(0.2, 1.5),
        alpha_b: u(0.2, 1.5),
        alpha_t: u(0.2, 1.5),
        sigma: u(0.2, 1.5),
        mu: u(0.0, 0.5),
        recruitment_mode: RecruitmentMode::ConstantInflow,
        ..ModelParams::default()
    };
    p.beta_1 = log_uniform(rng, 1e-4, 1e-1);
    p.beta_2 = log_uniform(rng, 1e-4, 1e-1);
    p.beta_3 = log_uniform(rng, 1e-4, 1e-1);
    p.theta = log_uniform(rng, 1e-5, 1e-2);
    p.lambda = log_uniform(rng, 1e-5, 1e-2);
    p
}

/// Default rates, each scaled by an independent factor in [0.8, 1.2].
pub fn perturbed_table(rng: &mut ChaCha8Rng) -> ModelParams {
    let mut p = ModelParams::default();
    for key in ModelParams::KEYS {
        let v = p.get(key).unwrap() * rng.random_range(0.8..1.2);
        p.set(key, v);
    }
    p
}

/// A start inside the invariant region: each total at most its equilibrium
/// total, a few infected individuals in every infected class.
pub fn draw_start_inside(rng: &mut ChaCha8Rng, p: &ModelParams) -> StateVector {
    let dfe = disease_free_equilibrium(p).unwrap();
    let (nb, nt) = (dfe.s_b(), dfe.s_t());
    let mut split = |total: f64, parts: usize| -> Vec<f64> {
        let w: Vec<f64> = (0..parts).map(|_| rng.random_range(0.05..1.0)).collect();
        let scale = rng.random_range(0.1..1.0) * total / w.iter().sum::<f64>();
        w.iter().map(|x| x * scale).collect()
    };
    let b = split(nb, 4);
    let t = split(nt, 3);
    StateVector([b[0], b[1], b[2], b[3], t[0], t[1], t[2]])
}

/// Central difference using the representable step `(x + h) - (x - h)`.
pub fn central<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let (hi, lo) = (x + h, x - h);
    (f(hi) - f(lo)) / (hi - lo)
}

pub mod strategies {
    use proptest::prelude::*;
    use tickfever_core::{ModelParams, RecruitmentMode, StateVector};

    /// Same ranges as [`super::draw_params`]; contact rates are log-uniform.
    pub fn params() -> impl Strategy<Value = ModelParams> {
        let rate = || 0.2..1.5f64;
        let log10 = |lo: f64, hi: f64| (lo..hi).prop_map(|e: f64| 10f64.powf(e));
        (
            (0.1..2.0f64, 0.1..2.0f64, 10.0..100.0f64, 10.0..100.0f64, 0.0..0.5f64),
            (rate(), rate(), rate(), rate(), rate()),
            (
                log10(-4.0, -1.0),
                log10(-4.0, -1.0),
                log10(-4.0, -1.0),
                log10(-5.0, -2.0),
                log10(-5.0, -2.0),
            ),
        )
            .prop_map(|(a, r, c)| ModelParams {
                tau_b: a.0,
                tau_t: a.1,
                n_b0: a.2,
                n_t0: a.3,
                mu: a.4,
                d: r.0,
                delta: r.1,
                alpha_b: r.2,
                alpha_t: r.3,
                sigma: r.4,
                beta_1: c.0,
                beta_2: c.1,
                beta_3: c.2,
                theta: c.3,
                lambda: c.4,
                recruitment_mode: RecruitmentMode::ConstantInflow,
            })
    }

    pub fn mode() -> impl Strategy<Value = RecruitmentMode> {
        prop_oneof![
            Just(RecruitmentMode::ConstantInflow),
            Just(RecruitmentMode::Proportional)
        ]
    }

    pub fn state(max: f64) -> impl Strategy<Value = StateVector> {
        proptest::array::uniform7(0.0..max).prop_map(StateVector)
    }

    pub fn positive_state(min: f64, max: f64) -> impl Strategy<Value = StateVector> {
        proptest::array::uniform7(min..max).prop_map(StateVector)
    }
}
