use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use tickfever_core::analysis::{
    default_endemic_guess, dfe_stability_condition, disease_free_report, endemic_equilibrium, r0,
};
use tickfever_core::scenario::{builtin_description, BUILTIN_NAMES};
use tickfever_core::{
    builtin_scenario, load_config, run_scenario, CostWeights, Error, ModelVariant, RecruitmentMode, Result, RunReport,
    ScenarioConfig,
};

/// Bird-tick disease model: scenario runs, threshold analysis and optimal control.
#[derive(Debug, Parser)]
#[command(name = "tickfever", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory for CSV and report files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Number of integration steps over the horizon.
    #[arg(long, global = true, value_name = "N")]
    steps: Option<usize>,

    /// Final time.
    #[arg(long, global = true, value_name = "T")]
    t1: Option<f64>,

    /// Controlled-system form.
    #[arg(long, global = true)]
    variant: Option<VariantArg>,

    /// Recruitment mode.
    #[arg(long, global = true)]
    mode: Option<ModeArg>,

    /// Use control values above their caps as given instead of clamping.
    #[arg(long, global = true)]
    allow_unbounded_controls: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a built-in scenario or a configuration file.
    Run {
        /// Scenario name (see `list`) or path to a config file.
        target: String,
    },
    /// List the built-in scenarios.
    List,
    /// Reproduction numbers as JSON.
    R0 { config: Option<PathBuf> },
    /// Disease-free and endemic equilibria as JSON.
    Equilibria { config: Option<PathBuf> },
    /// Solve the optimal-control problem and write its trajectories.
    Optimal { config: Option<PathBuf> },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Paper,
    Consistent,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Constant,
    Proportional,
}

impl Cli {
    fn apply(&self, mut config: ScenarioConfig) -> Result<ScenarioConfig> {
        if let Some(dir) = &self.out {
            config.out_dir = dir.clone();
        }
        if self.t1.is_some() || self.steps.is_some() {
            config.set_horizon(self.t1, self.steps)?;
        }
        if let Some(v) = self.variant {
            config.variant = match v {
                VariantArg::Paper => ModelVariant::PaperExact,
                VariantArg::Consistent => ModelVariant::Consistent,
            };
        }
        if let Some(m) = self.mode {
            config.params.recruitment_mode = match m {
                ModeArg::Constant => RecruitmentMode::ConstantInflow,
                ModeArg::Proportional => RecruitmentMode::Proportional,
            };
        }
        if self.allow_unbounded_controls {
            config.allow_unbounded = true;
        }
        Ok(config)
    }

    fn config_or(
        &self,
        path: Option<&Path>,
        fallback: impl FnOnce() -> Result<ScenarioConfig>,
    ) -> Result<ScenarioConfig> {
        let base = match path {
            Some(p) => load_config(p)?,
            None => fallback()?,
        };
        self.apply(base)
    }
}

fn resolve_target(target: &str) -> Result<ScenarioConfig> {
    let path = Path::new(target);
    if path.is_file() {
        load_config(path)
    } else if BUILTIN_NAMES.contains(&target) {
        builtin_scenario(target)
    } else if path.extension().is_some() {
        // Looks like a path; report the missing file rather than an unknown name.
        load_config(path)
    } else {
        builtin_scenario(target)
    }
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn print_run(config: &ScenarioConfig, report: &RunReport) {
    println!(
        "scenario {} ({}, {})",
        report.scenario, report.variant, report.recruitment_mode
    );
    println!("r0 = {:.6}", report.r0.r0_spectral);
    if let Some(j) = report.objective {
        let m = &report.members[0];
        println!(
            "objective = {j:.6} after {} iterations (converged: {})",
            m.iterations.unwrap_or(0),
            m.converged.unwrap_or(false)
        );
    }
    for m in &report.members {
        println!("wrote {}", config.out_dir.join(&m.csv).display());
    }
    println!(
        "wrote {}",
        config.out_dir.join(format!("{}_report.json", config.stem)).display()
    );
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::List => {
            for name in BUILTIN_NAMES {
                println!("{name:<8} {}", builtin_description(name).unwrap_or(""));
            }
        }
        Command::Run { target } => {
            let config = cli.apply(resolve_target(target)?)?;
            let report = run_scenario(&config)?;
            print_run(&config, &report);
        }
        Command::R0 { config } => {
            let c = cli.config_or(config.as_deref(), || Ok(ScenarioConfig::default()))?;
            print_json(&serde_json::to_value(r0(&c.params)?)?)?;
        }
        Command::Equilibria { config } => {
            let c = cli.config_or(config.as_deref(), || Ok(ScenarioConfig::default()))?;
            let p = &c.params;
            let (endemic, note) = match p.recruitment_mode {
                RecruitmentMode::Proportional => {
                    (None, Some("not computed under proportional recruitment".to_string()))
                }
                RecruitmentMode::ConstantInflow => {
                    match default_endemic_guess(p, 200.0).and_then(|g| endemic_equilibrium(p, &g)) {
                        Ok(rep) => (Some(rep), None),
                        Err(e @ (Error::NewtonNoConvergence { .. } | Error::NonPhysicalRoot { .. })) => {
                            (None, Some(e.to_string()))
                        }
                        Err(e) => return Err(e),
                    }
                }
            };
            print_json(&json!({
                "recruitment_mode": p.recruitment_mode,
                "disease_free": disease_free_report(p)?,
                "disease_free_stability": dfe_stability_condition(p)?,
                "endemic": endemic,
                "endemic_note": note,
            }))?;
        }
        Command::Optimal { config } => {
            let mut c = cli.config_or(config.as_deref(), || builtin_scenario("optimal"))?;
            if c.weights.is_none() {
                c.weights = Some(CostWeights::default());
            }
            let report = run_scenario(&c)?;
            print_run(&c, &report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
