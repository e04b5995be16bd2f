//! The `twcc` command: distance sweeps, single-point reports and self-checks.

pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use twcc_core::channel_model::ProtocolParams;
use twcc_core::optimize::optimize_point;
use twcc_core::pipeline::{evaluate, Pipeline};
use twcc_core::sweep::{sweep, SweepPoint};
use twcc_core::validation::{dominance_check, monte_carlo_check};

use config::{Format, RunConfig};
use output::{point_rows, validation_rows, write_csv, write_json, Destination};

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Engine(#[from] twcc_core::Error),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Engine(_) | CliError::Output(_) => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "twcc",
    version,
    about = "Finite-key SNS twin-field QKD rates with two-way post-processing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize every selected pipeline over the distance grid.
    Sweep(CommonArgs),
    /// Run the exhaustive bound dominance and Monte Carlo threshold checks.
    Validate(CommonArgs),
    /// Full reports for each selected pipeline at one distance.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Fiber length between the two users, in km.
        #[arg(long)]
        distance: f64,
        /// Evaluate the configured starting parameters instead of optimizing them.
        #[arg(long)]
        no_optimize: bool,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; overrides the configuration and defaults to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for the optimizer restarts and the Monte Carlo sampler.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated pipelines, e.g. `plain,twcc,oper,aopp`.
    #[arg(long, value_delimiter = ',')]
    pub pipelines: Option<Vec<Pipeline>>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Total pulse pairs sent.
    #[arg(long)]
    pub pulses: Option<f64>,
}

impl CommonArgs {
    /// The configuration file, if any, with command-line overrides applied and checked.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            c.sweep.seed = s;
            c.validation.seed = s;
        }
        if let Some(p) = &self.pipelines {
            c.sweep.pipelines = p.clone();
        }
        if let Some(f) = self.format {
            c.output.format = f;
        }
        if let Some(o) = &self.out {
            c.output.path = Some(o.clone());
        }
        if let Some(n) = self.pulses {
            c.sweep.total_pulses = n;
        }
        c.validate()?;
        Ok(c)
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep(args) => run_sweep(&args.resolve()?),
        Command::Validate(args) => run_validate(&args.resolve()?),
        Command::Report {
            common,
            distance,
            no_optimize,
        } => run_report(&common.resolve()?, distance, no_optimize),
    }
}

fn destination(c: &RunConfig) -> Destination {
    Destination::new(c.output.path.clone())
}

fn run_sweep(c: &RunConfig) -> Result<(), CliError> {
    let result = sweep(&c.device, &c.sweep)?;
    let out = destination(c);
    match c.output.format {
        Format::Csv => write_csv(&out, &point_rows(&result.points))?,
        Format::Json => write_json(&out, &result)?,
    }
    for s in &result.summaries {
        match s.max_distance_km {
            Some(d) => eprintln!("{}: positive rate up to {d:.1} km", s.pipeline),
            None => eprintln!("{}: no positive rate on the grid", s.pipeline),
        }
    }
    Ok(())
}

fn run_validate(c: &RunConfig) -> Result<(), CliError> {
    let v = &c.validation;
    let dominance = dominance_check(v.max_total)?;
    let monte_carlo = monte_carlo_check(&v.scenario, &v.targets, v.seed)?;
    let out = destination(c);
    match c.output.format {
        Format::Csv => write_csv(&out, &validation_rows(&dominance, &monte_carlo))?,
        Format::Json => write_json(
            &out,
            &serde_json::json!({ "dominance": dominance, "monte_carlo": monte_carlo }),
        )?,
    }
    let mut failures = Vec::new();
    for s in dominance.summaries.iter().filter(|s| s.violations > 0) {
        failures.push(format!(
            "{} has {} violations",
            s.check.name(),
            s.violations
        ));
    }
    for m in monte_carlo.iter().filter(|m| !m.passed) {
        failures.push(format!(
            "{:?} at {:e} fails in {} of {} trials",
            m.quantity, m.target, m.failures, m.trials
        ));
    }
    if failures.is_empty() {
        eprintln!("all checks passed");
        Ok(())
    } else {
        Err(CliError::Validation(failures.join("; ")))
    }
}

fn run_report(c: &RunConfig, distance_km: f64, no_optimize: bool) -> Result<(), CliError> {
    if !(distance_km >= 0.0 && distance_km.is_finite()) {
        return Err(CliError::Config(format!(
            "distance {distance_km} km must be non-negative"
        )));
    }
    let s = &c.sweep;
    let mut points = Vec::new();
    let mut reports = Vec::new();
    for &pipeline in &s.pipelines {
        let (source, report, evaluations) = if no_optimize {
            let p = ProtocolParams::symmetric(s.total_pulses, distance_km, &s.start);
            (
                s.start,
                evaluate(&c.device, &p, pipeline, &s.budget, &s.options),
                1,
            )
        } else {
            let o = optimize_point(
                &c.device,
                s.total_pulses,
                distance_km,
                pipeline,
                &s.budget,
                &s.options,
                &s.start,
                &s.optimizer,
                s.seed,
            );
            (o.source, o.report, o.evaluations)
        };
        let report = report?;
        points.push(SweepPoint::from_report(
            &c.device,
            source,
            evaluations,
            report.clone(),
        ));
        reports.push(report);
    }
    let out = destination(c);
    match c.output.format {
        Format::Csv => write_csv(&out, &point_rows(&points)),
        Format::Json => write_json(&out, &reports),
    }
}
