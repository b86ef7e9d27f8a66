//! Command-line front end for `custctl_core`.

/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub mod config;
pub mod output;

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use custctl_core::{compare_strategies, run_sweep, solve, Objective, Preset, SweepParameter};

use config::{ExperimentConfig, Format, OutputConfig, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "custctl",
    version,
    about = "Optimal marketing controls for the R/C/P customer model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one optimal-control problem and write its trajectory.
    Solve(CommonArgs),
    /// Compare no-control, constant, heuristic and optimal strategies.
    Compare(CommonArgs),
    /// Repeat the comparison over a range of one parameter.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        experiment: ExperimentArgs,
    },
    /// Print the effective run configuration as JSON.
    Config {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        experiment: ExperimentArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Named scenario (scenario1, scenario2, scenario3, scenario3-l1, comparison-default).
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = Objective::from_str)]
    pub objective: Option<Objective>,
    /// Grid intervals.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Weight of the new control in each update.
    #[arg(long)]
    pub relax: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_parser = SweepParameter::from_str)]
    pub param: Option<SweepParameter>,
    /// Comma-separated values; defaults depend on the parameter.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub converged: bool,
    pub written: Vec<PathBuf>,
}

impl CommonArgs {
    fn build(&self, default_preset: Preset) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(key)) => RunConfig::from_preset(Preset::from_str(key)?),
            (None, None) => RunConfig::from_preset(default_preset),
        };
        if let Some(o) = self.objective {
            cfg.objective = Some(o);
        }
        let s = &mut cfg.settings;
        if let Some(n) = self.n {
            s.intervals = Some(n);
        }
        if let Some(tol) = self.tol {
            s.tol_delta = tol;
        }
        if let Some(r) = self.relax {
            s.relaxation = r;
        }
        if let Some(m) = self.max_iters {
            s.max_iters = m;
        }
        cfg.settings.validate()?;
        if self.out.is_some() || self.format.is_some() {
            let mut out = cfg.output.take().unwrap_or_default();
            if let Some(dir) = &self.out {
                out.dir = dir.clone();
            }
            if let Some(f) = self.format {
                out.format = f;
            }
            cfg.output = Some(out);
        }
        cfg.scenario()?;
        Ok(cfg)
    }
}

impl ExperimentArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        match (&mut cfg.experiment, self.param) {
            (Some(exp), Some(p)) if exp.param != p => {
                *exp = ExperimentConfig {
                    param: p,
                    values: None,
                };
            }
            (None, Some(p)) => {
                cfg.experiment = Some(ExperimentConfig {
                    param: p,
                    values: None,
                })
            }
            _ => {}
        }
        if let (Some(exp), Some(values)) = (&mut cfg.experiment, &self.values) {
            exp.values = Some(values.clone());
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Solve(args) => {
            let cfg = args.build(Preset::Scenario1)?;
            let res = solve(&cfg.scenario()?, &cfg.settings)?;
            let OutputConfig { dir, format } = cfg.output();
            let written = output::write_solve(&dir, format, &res, &cfg.resolved()?)?;
            say!(
                "cost {} after {} iterations{}",
                res.cost,
                res.iterations,
                if res.converged {
                    ""
                } else {
                    " (not converged)"
                }
            );
            Ok(Outcome {
                converged: res.converged,
                written,
            })
        }
        Command::Compare(args) => {
            let cfg = args.build(Preset::ComparisonDefault)?;
            let table = compare_strategies(&cfg.scenario()?, &cfg.settings)?;
            let OutputConfig { dir, format } = cfg.output();
            let written =
                output::write_table(&dir, "comparison", format, &table, &cfg.resolved()?)?;
            for row in &table.rows {
                say!("{:<17} {}", row.strategy.key(), row.cost);
            }
            Ok(Outcome {
                converged: table.rows.iter().all(|r| r.converged),
                written,
            })
        }
        Command::Sweep { common, experiment } => {
            let mut cfg = common.build(Preset::ComparisonDefault)?;
            experiment.apply(&mut cfg);
            let spec = cfg.sweep_spec()?;
            let table = run_sweep(&spec, &cfg.settings)?;
            let OutputConfig { dir, format } = cfg.output();
            let stem = format!("sweep_{}", spec.parameter.key());
            let written = output::write_table(&dir, &stem, format, &table, &cfg.resolved()?)?;
            let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!(
                    "warning: {failed} cell(s) failed; see the error fields in the JSON output"
                );
            }
            say!(
                "{} rows over {} values of {}",
                table.rows.len(),
                spec.values.len(),
                spec.parameter
            );
            let converged = table.rows.iter().all(|r| r.converged && r.error.is_none());
            Ok(Outcome { converged, written })
        }
        Command::Config { common, experiment } => {
            let mut cfg = common.build(Preset::Scenario1)?;
            experiment.apply(&mut cfg);
            if cfg.experiment.is_some() {
                cfg.sweep_spec()?;
            }
            let text = serde_json::to_string_pretty(&cfg).context("serialising config")?;
            say!("{text}");
            Ok(Outcome {
                converged: true,
                written: Vec::new(),
            })
        }
    }
}
