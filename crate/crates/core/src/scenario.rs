//! Scenario configuration, the built-in reference scenarios, and the runner that
//! writes trajectory CSVs plus a JSON report.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::analysis::{
    default_endemic_guess, disease_free_report, endemic_equilibrium, r0, EquilibriumReport, R0Report,
};
use crate::control::{
    existence_preconditions, forward_backward_sweep, AdjointVector, CostWeights, ExistenceReport, SweepOptions,
};
use crate::error::{Error, Result};
use crate::integrator::{integrate_driven, TimeGrid, Trajectory};
use crate::model::{
    self, Compartment, ControlBounds, ControlVector, ModelParams, ModelVariant, RecruitmentMode, StateVector,
};

pub const DEFAULT_T1: f64 = 40.0;
pub const DEFAULT_DT: f64 = 0.01;
/// Burn-in used to seed the endemic Newton solve.
const ENDEMIC_BURN_IN: f64 = 200.0;

/// Keys that may be swept besides the model rates.
pub const CONTROL_KEYS: [&str; 3] = ["u1", "u2", "u3"];

/// One swept parameter and its values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn new(key: &str, values: &[f64]) -> Self {
        Self {
            key: key.to_string(),
            values: values.to_vec(),
        }
    }
}

/// Every key accepted by a sweep.
pub fn valid_sweep_keys() -> Vec<String> {
    ModelParams::KEYS
        .iter()
        .chain(CONTROL_KEYS.iter())
        .map(|k| k.to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub id: String,
    pub params: ModelParams,
    pub initial: StateVector,
    pub grid: TimeGrid,
    pub variant: ModelVariant,
    /// Constant control intensities for simulation runs.
    pub controls: [f64; 3],
    pub bounds: ControlBounds,
    /// When set, the run solves the optimal-control problem instead of using
    /// `controls`.
    pub weights: Option<CostWeights>,
    pub sweep_options: SweepOptions,
    pub sweeps: Vec<Sweep>,
    /// Compartment whose peak is summarised in the report.
    pub focus: Option<Compartment>,
    pub out_dir: PathBuf,
    pub stem: String,
    /// Run out-of-bound control values literally instead of clamping them.
    pub allow_unbounded: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            id: "custom".into(),
            params: ModelParams::default(),
            initial: StateVector::table_initial(),
            grid: TimeGrid::with_step(0.0, DEFAULT_T1, DEFAULT_DT).expect("valid default grid"),
            variant: ModelVariant::default(),
            controls: [0.0; 3],
            bounds: ControlBounds::default(),
            weights: None,
            sweep_options: SweepOptions::default(),
            sweeps: Vec::new(),
            focus: None,
            out_dir: PathBuf::from("out"),
            stem: "custom".into(),
            allow_unbounded: false,
        }
    }
}

impl ScenarioConfig {
    /// Replaces the horizon; without an explicit step count the grid keeps a
    /// step close to the current one.
    pub fn set_horizon(&mut self, t1: Option<f64>, n_steps: Option<usize>) -> Result<()> {
        let t1 = t1.unwrap_or(self.grid.t1());
        self.grid = match n_steps {
            Some(n) => TimeGrid::new(self.grid.t0(), t1, n)?,
            None => TimeGrid::with_step(self.grid.t0(), t1, self.grid.dt())?,
        };
        Ok(())
    }

    fn effective_bounds(&self) -> ControlBounds {
        if self.allow_unbounded {
            ControlBounds::unbounded()
        } else {
            self.bounds
        }
    }

    fn is_controlled(&self) -> bool {
        self.weights.is_some()
            || self.controls.iter().any(|&u| u != 0.0)
            || self.sweeps.iter().any(|s| CONTROL_KEYS.contains(&s.key.as_str()))
    }

    /// Checks sweep keys and values before anything runs.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.initial.ensure_finite()?;
        let valid = valid_sweep_keys();
        for sweep in &self.sweeps {
            if !valid.contains(&sweep.key) {
                return Err(Error::UnknownSweepKey {
                    key: sweep.key.clone(),
                    valid,
                });
            }
            if let Some(v) = sweep.values.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: sweep.key.clone(),
                    reason: format!("sweep value {v} is not finite"),
                });
            }
        }
        for (i, u) in self.controls.iter().enumerate() {
            if !u.is_finite() || *u < 0.0 {
                return Err(Error::InvalidParameter {
                    name: format!("u{}", i + 1),
                    reason: format!("control must be finite and >= 0, got {u}"),
                });
            }
        }
        if let Some(w) = &self.weights {
            w.validate()?;
        }
        Ok(())
    }

    /// The individual runs: the base configuration when there is no sweep,
    /// otherwise one member per swept value.
    pub fn members(&self) -> Vec<Member> {
        let base = Member {
            label: "base".into(),
            key: None,
            value: None,
            params: self.params,
            controls: self.controls,
        };
        if self.sweeps.is_empty() {
            return vec![base];
        }
        let mut out = Vec::new();
        for sweep in &self.sweeps {
            for &value in &sweep.values {
                let mut m = base.clone();
                m.label = format!("{}_{}", sweep.key, value);
                m.key = Some(sweep.key.clone());
                m.value = Some(value);
                match CONTROL_KEYS.iter().position(|k| *k == sweep.key) {
                    Some(i) => m.controls[i] = value,
                    None => {
                        m.params.set(&sweep.key, value);
                    }
                }
                out.push(m);
            }
        }
        out
    }
}

/// A single run of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub label: String,
    pub key: Option<String>,
    pub value: Option<f64>,
    pub params: ModelParams,
    /// Requested constant controls, before clamping.
    pub controls: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberRun {
    pub member: Member,
    pub states: Trajectory<StateVector>,
    pub controls: Trajectory<ControlVector>,
    pub adjoints: Option<Trajectory<AdjointVector>>,
    pub objective: Option<f64>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
}

/// Runs every member in memory; nothing is written.
pub fn simulate(config: &ScenarioConfig) -> Result<Vec<MemberRun>> {
    config.validate()?;
    let bounds = config.effective_bounds();
    config
        .members()
        .into_iter()
        .map(|member| {
            member.params.validate()?;
            match &config.weights {
                Some(weights) => {
                    let r = forward_backward_sweep(
                        &config.initial,
                        config.grid,
                        weights,
                        bounds,
                        &member.params,
                        config.variant,
                        config.sweep_options,
                    )?;
                    Ok(MemberRun {
                        member,
                        states: r.state_traj,
                        controls: r.control_traj,
                        adjoints: Some(r.adjoint_traj),
                        objective: Some(r.objective_value),
                        converged: Some(r.converged),
                        iterations: Some(r.iterations),
                    })
                }
                None => {
                    let u = ControlVector::clamped(member.controls, bounds);
                    let controls = Trajectory::constant(config.grid, u);
                    let (p, variant) = (member.params, config.variant);
                    let states = integrate_driven(
                        |_, x: &StateVector, u: &ControlVector| model::evaluate(x, u.values(), &p, variant),
                        config.initial,
                        config.grid,
                        &controls,
                    )?;
                    Ok(MemberRun {
                        member,
                        states,
                        controls,
                        adjoints: None,
                        objective: None,
                        converged: None,
                        iterations: None,
                    })
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub compartment: Compartment,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberSummary {
    pub label: String,
    pub key: Option<String>,
    pub value: Option<f64>,
    /// Controls actually applied (after clamping), for constant-control runs.
    pub applied_controls: Option<[f64; 3]>,
    pub csv: String,
    pub terminal_state: StateVector,
    pub peak: Option<Peak>,
    pub objective: Option<f64>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub variant: ModelVariant,
    pub recruitment_mode: RecruitmentMode,
    pub params: ModelParams,
    pub grid: TimeGrid,
    pub r0: R0Report,
    pub disease_free: EquilibriumReport,
    /// Newton root from the relaxed seed, constant-inflow runs only.
    pub endemic: Option<EquilibriumReport>,
    /// Why `endemic` is absent, when it is.
    pub endemic_note: Option<String>,
    pub existence: Option<ExistenceReport>,
    pub terminal_state: StateVector,
    pub objective: Option<f64>,
    pub members: Vec<MemberSummary>,
    pub duration_seconds: f64,
}

/// Creates `dir` if needed and proves it accepts new files.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    let fail = |source| Error::OutputNotWritable {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(format!(".write-probe-{}", std::process::id()));
    fs::File::create(&probe).map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)?;
    Ok(())
}

fn csv_header(with_controls: bool, with_adjoint: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(Compartment::ALL.iter().map(|c| c.label().to_string()));
    if with_controls {
        h.extend(["u1", "u2", "u3"].map(String::from));
    }
    if with_adjoint {
        h.extend((1..=7).map(|i| format!("l{i}")));
    }
    h
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes one trajectory: state columns, then controls and adjoint if given.
pub fn write_trajectory_csv(
    path: &Path,
    states: &Trajectory<StateVector>,
    controls: Option<&Trajectory<ControlVector>>,
    adjoints: Option<&Trajectory<AdjointVector>>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(csv_header(controls.is_some(), adjoints.is_some()))?;
    for (k, (t, x)) in states.iter().enumerate() {
        let mut row: Vec<String> = std::iter::once(t).chain(x.0).map(fmt).collect();
        if let Some(c) = controls {
            row.extend(c.samples[k].values().map(fmt));
        }
        if let Some(a) = adjoints {
            row.extend(a.samples[k].0.map(fmt));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_trajectory_csv`]: header and numeric rows.
pub fn read_trajectory_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|e| Error::InvalidParameter {
                    name: path.display().to_string(),
                    reason: format!("bad number `{s}`: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn peak_of(states: &Trajectory<StateVector>, c: Compartment) -> Peak {
    let (t, value) = states
        .iter()
        .map(|(t, x)| (t, x[c]))
        .fold(
            (f64::NAN, f64::NEG_INFINITY),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );
    Peak {
        compartment: c,
        t,
        value,
    }
}

fn member_file(stem: &str, member: &Member) -> String {
    match member.key {
        None => format!("{stem}.csv"),
        Some(_) => format!("{stem}_{}.csv", member.label),
    }
}

/// Runs the scenario and writes `<stem>.csv` (or one `<stem>_<key>_<value>.csv`
/// per sweep member) and `<stem>_report.json` into the output directory.
/// The directory is checked before any computation.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    ensure_writable(&config.out_dir)?;
    config.validate()?;

    let p = &config.params;
    let r0 = r0(p)?;
    let disease_free = disease_free_report(p)?;
    let (endemic, endemic_note) = match p.recruitment_mode {
        RecruitmentMode::Proportional => (None, Some("not computed under proportional recruitment".to_string())),
        RecruitmentMode::ConstantInflow => {
            match default_endemic_guess(p, ENDEMIC_BURN_IN).and_then(|g| endemic_equilibrium(p, &g)) {
                Ok(rep) => (Some(rep), None),
                Err(e) => (None, Some(e.to_string())),
            }
        }
    };
    let existence = config
        .weights
        .map(|w| existence_preconditions(&w, &config.effective_bounds()));

    let runs = simulate(config)?;
    let controlled = config.is_controlled();
    let mut members = Vec::with_capacity(runs.len());
    for run in &runs {
        let file = member_file(&config.stem, &run.member);
        write_trajectory_csv(
            &config.out_dir.join(&file),
            &run.states,
            controlled.then_some(&run.controls),
            run.adjoints.as_ref(),
        )?;
        members.push(MemberSummary {
            label: run.member.label.clone(),
            key: run.member.key.clone(),
            value: run.member.value,
            applied_controls: run.adjoints.is_none().then(|| run.controls.first().values()),
            csv: file,
            terminal_state: *run.states.last(),
            peak: config.focus.map(|c| peak_of(&run.states, c)),
            objective: run.objective,
            converged: run.converged,
            iterations: run.iterations,
        });
    }

    let first = &runs[0];
    let report = RunReport {
        scenario: config.id.clone(),
        variant: config.variant,
        recruitment_mode: p.recruitment_mode,
        params: *p,
        grid: config.grid,
        r0,
        disease_free,
        endemic,
        endemic_note,
        existence,
        terminal_state: *first.states.last(),
        objective: first.objective,
        members,
        duration_seconds: start.elapsed().as_secs_f64(),
    };
    let mut f = fs::File::create(config.out_dir.join(format!("{}_report.json", config.stem)))?;
    serde_json::to_writer_pretty(&mut f, &report)?;
    f.write_all(b"\n")?;
    Ok(report)
}

fn builtin(id: &str, t1: f64, variant: ModelVariant) -> ScenarioConfig {
    ScenarioConfig {
        id: id.into(),
        stem: id.into(),
        variant,
        grid: TimeGrid::with_step(0.0, t1, DEFAULT_DT).expect("valid builtin grid"),
        ..ScenarioConfig::default()
    }
}

/// Names of the built-in scenarios, in listing order.
pub const BUILTIN_NAMES: [&str; 12] = [
    "fig2", "fig3a", "fig3b", "fig3c", "fig3d", "fig4a", "fig4b", "fig4c", "fig4d", "fig5a", "fig5b", "optimal",
];

/// One-line description of a built-in scenario.
pub fn builtin_description(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2" => "base model, default parameters, no control, T = 40",
        "fig3a" => "alpha_B swept over 0.1..0.5, infectious birds",
        "fig3b" => "bird death rate d swept over 0.5, 1.0, 1.5, infectious birds",
        "fig3c" => "alpha_T swept over 0.1..0.3 and delta over 0.08..0.4, infectious ticks",
        "fig3d" => "delta swept over 0.08..0.4, exposed ticks",
        "fig4a" => "controlled run with u = (0.02, 0.01, 0.05)",
        "fig4b" => "u2 swept over 0.2, 0.6, 1.0",
        "fig4c" => "u1 swept over 0.02, 5, 20, 25 (clamped to the cap unless unbounded)",
        "fig4d" => "u2 swept over 0.3..1.2 (clamped to the cap unless unbounded)",
        "fig5a" => "u2 swept over 0.08, 0.48, 0.88, recovered birds, T = 50",
        "fig5b" => "sigma swept over 1.0..3.0, recovered birds, T = 50",
        "optimal" => "forward-backward sweep, C = (1,1,1), D = (10,10,10), caps 0.9, T = 40",
        _ => return None,
    })
}

/// The built-in reference scenarios.
pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    use Compartment::*;
    use ModelVariant::*;
    let table_controls = [0.02, 0.01, 0.05];
    let with = |mut c: ScenarioConfig, f: &dyn Fn(&mut ScenarioConfig)| {
        f(&mut c);
        c
    };
    vec![
        builtin("fig2", 40.0, Consistent),
        with(builtin("fig3a", 40.0, Consistent), &|c| {
            c.sweeps = vec![Sweep::new("alpha_B", &[0.1, 0.2, 0.3, 0.4, 0.5])];
            c.focus = Some(InfectiousBirds);
        }),
        with(builtin("fig3b", 40.0, Consistent), &|c| {
            c.sweeps = vec![Sweep::new("d", &[0.5, 1.0, 1.5])];
            c.focus = Some(InfectiousBirds);
        }),
        with(builtin("fig3c", 40.0, Consistent), &|c| {
            c.sweeps = vec![
                Sweep::new("alpha_T", &[0.1, 0.2, 0.3]),
                Sweep::new("delta", &[0.08, 0.16, 0.24, 0.32, 0.4]),
            ];
            c.focus = Some(InfectiousTicks);
        }),
        with(builtin("fig3d", 40.0, Consistent), &|c| {
            c.sweeps = vec![Sweep::new("delta", &[0.08, 0.16, 0.24, 0.32, 0.4])];
            c.focus = Some(ExposedTicks);
        }),
        with(builtin("fig4a", 40.0, PaperExact), &|c| {
            c.controls = table_controls;
            c.focus = Some(InfectiousBirds);
        }),
        with(builtin("fig4b", 40.0, PaperExact), &|c| {
            c.controls = table_controls;
            c.sweeps = vec![Sweep::new("u2", &[0.2, 0.6, 1.0])];
            c.focus = Some(InfectiousBirds);
        }),
        with(builtin("fig4c", 40.0, PaperExact), &|c| {
            c.controls = table_controls;
            c.sweeps = vec![Sweep::new("u1", &[0.02, 5.0, 20.0, 25.0])];
            c.focus = Some(ExposedBirds);
        }),
        with(builtin("fig4d", 40.0, PaperExact), &|c| {
            c.controls = table_controls;
            c.sweeps = vec![Sweep::new("u2", &[0.3, 0.6, 0.9, 1.0, 1.2])];
            c.focus = Some(InfectiousBirds);
        }),
        with(builtin("fig5a", 50.0, PaperExact), &|c| {
            c.controls = table_controls;
            c.sweeps = vec![Sweep::new("u2", &[0.08, 0.48, 0.88])];
            c.focus = Some(Recovered);
        }),
        with(builtin("fig5b", 50.0, Consistent), &|c| {
            c.sweeps = vec![Sweep::new("sigma", &[1.0, 1.5, 2.0, 2.5, 3.0])];
            c.focus = Some(Recovered);
        }),
        with(builtin("optimal", 40.0, Consistent), &|c| {
            c.weights = Some(CostWeights::new([1.0; 3], [10.0; 3]));
            c.bounds = ControlBounds::uniform(0.9);
        }),
    ]
}

pub fn builtin_scenario(name: &str) -> Result<ScenarioConfig> {
    builtin_scenarios()
        .into_iter()
        .find(|c| c.id == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

/// Keys accepted in a configuration file besides the model rates.
pub const CONFIG_KEYS: [&str; 35] = [
    "name",
    "stem",
    "out_dir",
    "t1",
    "n_steps",
    "variant",
    "mode",
    "S_B",
    "E_B",
    "I_B",
    "R",
    "S_T",
    "E_T",
    "I_T",
    "u1",
    "u2",
    "u3",
    "u1_bound",
    "u2_bound",
    "u3_bound",
    "C1",
    "C2",
    "C3",
    "D1",
    "D2",
    "D3",
    "optimal",
    "omega",
    "tol",
    "max_iter",
    "sweep_param",
    "sweep_values",
    "focus",
    "allow_unbounded_controls",
    "dt",
];

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line where `key` is assigned, for error messages.
fn key_line(src: &str, key: &str) -> usize {
    src.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(1, |i| i + 1)
}

/// Loads a flat `key = value` configuration file (TOML syntax). Missing keys
/// keep their defaults; unknown keys are rejected by name.
///
/// Recognised keys: the model rates (`tau_B`, `beta_1`, `alpha_B`, ...), the
/// initial compartments (`S_B` ... `I_T`), constant controls `u1..u3` and
/// their caps `u1_bound..u3_bound`, cost weights `C1..C3`, `D1..D3` (any of
/// them, or `optimal = true`, turns on the optimal-control solve), sweep
/// settings `omega`, `tol`, `max_iter`, the grid `t1` with `n_steps` or `dt`,
/// `variant` (`paper`/`consistent`), `mode` (`constant`/`proportional`),
/// `sweep_param` with `sweep_values`, `focus` (a compartment label),
/// `allow_unbounded_controls`, and output naming `name`, `stem`, `out_dir`.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let src = fs::read_to_string(path)?;
    parse_config(&src, path)
}

/// [`load_config`] on an in-memory source; `path` is only used in messages.
pub fn parse_config(src: &str, path: &Path) -> Result<ScenarioConfig> {
    let table: toml::Table = toml::from_str(src).map_err(|e| Error::ConfigParse {
        path: path.to_path_buf(),
        line: e.span().map_or(1, |s| line_of(src, s.start)),
        message: e.message().to_string(),
    })?;

    let bad = |key: &str, message: String| Error::ConfigParse {
        path: path.to_path_buf(),
        line: key_line(src, key),
        message: format!("key `{key}`: {message}"),
    };
    let number = |key: &str, v: &toml::Value| -> Result<f64> {
        match v {
            toml::Value::Float(f) => Ok(*f),
            toml::Value::Integer(i) => Ok(*i as f64),
            other => Err(bad(key, format!("expected a number, found {}", other.type_str()))),
        }
    };
    let string = |key: &str, v: &toml::Value| -> Result<String> {
        v.as_str()
            .map(String::from)
            .ok_or_else(|| bad(key, format!("expected a string, found {}", v.type_str())))
    };

    let mut c = ScenarioConfig::default();
    let mut t1 = None;
    let mut n_steps = None;
    let mut dt = None;
    let mut c_w = [1.0; 3];
    let mut d_w = [10.0; 3];
    let mut optimal = false;
    let mut sweep_param = None;
    let mut sweep_values = None;
    let mut name_set = false;
    let mut stem_set = false;

    for (key, value) in &table {
        let k = key.as_str();
        if ModelParams::KEYS.contains(&k) {
            c.params.set(k, number(k, value)?);
            continue;
        }
        if let Some(comp) = Compartment::from_label(k) {
            c.initial[comp] = number(k, value)?;
            continue;
        }
        match k {
            "u1" | "u2" | "u3" => c.controls[k[1..].parse::<usize>().unwrap() - 1] = number(k, value)?,
            "u1_bound" | "u2_bound" | "u3_bound" => {
                c.bounds.0[k[1..2].parse::<usize>().unwrap() - 1] = number(k, value)?
            }
            "C1" | "C2" | "C3" => {
                c_w[k[1..].parse::<usize>().unwrap() - 1] = number(k, value)?;
                optimal = true;
            }
            "D1" | "D2" | "D3" => {
                d_w[k[1..].parse::<usize>().unwrap() - 1] = number(k, value)?;
                optimal = true;
            }
            "optimal" => {
                optimal |= value
                    .as_bool()
                    .ok_or_else(|| bad(k, format!("expected a boolean, found {}", value.type_str())))?
            }
            "allow_unbounded_controls" => {
                c.allow_unbounded = value
                    .as_bool()
                    .ok_or_else(|| bad(k, format!("expected a boolean, found {}", value.type_str())))?
            }
            "omega" => c.sweep_options.omega = number(k, value)?,
            "tol" => c.sweep_options.tol = number(k, value)?,
            "max_iter" => {
                c.sweep_options.max_iter = value
                    .as_integer()
                    .and_then(|i| usize::try_from(i).ok())
                    .ok_or_else(|| bad(k, "expected a nonnegative integer".into()))?
            }
            "t1" => t1 = Some(number(k, value)?),
            "dt" => dt = Some(number(k, value)?),
            "n_steps" => {
                n_steps = Some(
                    value
                        .as_integer()
                        .and_then(|i| usize::try_from(i).ok())
                        .ok_or_else(|| bad(k, "expected a nonnegative integer".into()))?,
                )
            }
            "variant" => {
                c.variant = match string(k, value)?.as_str() {
                    "paper" => ModelVariant::PaperExact,
                    "consistent" => ModelVariant::Consistent,
                    other => return Err(bad(k, format!("expected `paper` or `consistent`, found `{other}`"))),
                }
            }
            "mode" => {
                c.params.recruitment_mode = match string(k, value)?.as_str() {
                    "constant" => RecruitmentMode::ConstantInflow,
                    "proportional" => RecruitmentMode::Proportional,
                    other => {
                        return Err(bad(
                            k,
                            format!("expected `constant` or `proportional`, found `{other}`"),
                        ))
                    }
                }
            }
            "focus" => {
                let label = string(k, value)?;
                c.focus = Some(
                    Compartment::from_label(&label).ok_or_else(|| bad(k, format!("unknown compartment `{label}`")))?,
                );
            }
            "sweep_param" => sweep_param = Some(string(k, value)?),
            "sweep_values" => {
                let arr = value
                    .as_array()
                    .ok_or_else(|| bad(k, format!("expected an array, found {}", value.type_str())))?;
                sweep_values = Some(arr.iter().map(|v| number(k, v)).collect::<Result<Vec<f64>>>()?);
            }
            "name" => {
                c.id = string(k, value)?;
                name_set = true;
            }
            "stem" => {
                c.stem = string(k, value)?;
                stem_set = true;
            }
            "out_dir" => c.out_dir = PathBuf::from(string(k, value)?),
            _ => {
                return Err(Error::UnknownKey {
                    path: path.to_path_buf(),
                    key: k.to_string(),
                });
            }
        }
    }

    if name_set && !stem_set {
        c.stem = c.id.clone();
    }
    if optimal {
        c.weights = Some(CostWeights::new(c_w, d_w));
    }
    match (sweep_param, sweep_values) {
        (Some(key), Some(values)) => c.sweeps = vec![Sweep { key, values }],
        (None, None) => {}
        (Some(_), None) => return Err(bad("sweep_param", "needs `sweep_values`".into())),
        (None, Some(_)) => return Err(bad("sweep_values", "needs `sweep_param`".into())),
    }
    let t1 = t1.unwrap_or(DEFAULT_T1);
    c.grid = match (n_steps, dt) {
        (Some(n), _) => TimeGrid::new(0.0, t1, n)?,
        (None, Some(dt)) => TimeGrid::with_step(0.0, t1, dt)?,
        (None, None) => TimeGrid::with_step(0.0, t1, DEFAULT_DT)?,
    };
    c.validate()?;
    Ok(c)
}
