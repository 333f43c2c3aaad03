//! The `ac-mask` command line: `sweep`, `pdf` and `validate`.
//!
//! Exit codes: 0 on success, 1 for I/O failures, 2 for recipe or flag
//! errors, 3 when an engine fails and fallback is disabled, 4 when a
//! validation check fails.

pub mod config;
pub mod output;
pub mod validate;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::analytic_ser::{Engine, SerScenario, pdf_zeta, pdf_zeta_numeric, ser_heuristic_with};
use crate::channel::{LinkBudget, MaskConstellation, RicianParams};
use crate::error::Error;
use crate::mc_engine::{McConfig, density_histogram, point_seed, run_curve, sample_statistic};
use config::{McSection, OutputFormat, PdfConfig, SweepConfig};
use output::{Metadata, PdfRow, Source, SweepRow};
use validate::{MODULES, ValidateOptions};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "AC_MASK_WORKERS";

/// Failures of a command, each with its own exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("I/O error: {0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    Schema(String),
    #[error("engine failure: {0}")]
    Convergence(String),
    #[error("validation failed: {0}")]
    Validate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Schema(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Validate(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain { .. } | Error::InvalidOrder(_) | Error::IndexOutOfRange { .. } | Error::Config(_) => {
                CliError::Schema(e.to_string())
            }
            Error::DegenerateChannel(_)
            | Error::NonConvergence { .. }
            | Error::Quadrature { .. }
            | Error::Regime { .. } => CliError::Convergence(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ac-mask", version, about = "SER of M-ASK over Rician fading with amplitude-only channel knowledge")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytical and simulated SER over a grid of operating points.
    Sweep(RunArgs),
    /// Density of the heuristic statistic, analytical and simulated.
    Pdf(RunArgs),
    /// Runs the built-in self-checks.
    Validate(ValidateArgs),
}

/// Flags shared by `sweep` and `pdf`; each overrides the recipe.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML recipe.
    #[arg(long)]
    pub config: PathBuf,
    /// Output path without extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo trials per point; enables simulation in `sweep`.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Restrict to the checks of one module.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(MODULES))]
    pub filter: Option<String>,
    /// Shift added to every threshold by the threshold-equivalence check.
    #[arg(long, hide = true, default_value_t = 0.0, allow_negative_numbers = true)]
    pub perturb_threshold: f64,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Sweep(a) => cmd_sweep(a).map(|_| ()),
        Command::Pdf(a) => cmd_pdf(a).map(|_| ()),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn apply_mc_overrides(section: &mut McSection, args: &RunArgs) {
    if let Some(s) = args.seed {
        section.seed = Some(s);
    }
    if let Some(t) = args.trials {
        section.trials = Some(t);
    }
    if let Some(w) = args.workers {
        section.workers = Some(w);
    }
}

fn apply_output_overrides(out: &mut config::OutputSection, args: &RunArgs) {
    if let Some(p) = &args.out {
        out.path = p.to_string_lossy().into_owned();
    }
    if let Some(f) = args.format {
        out.format = f;
    }
}

fn scenario(
    order: usize,
    branches: usize,
    k_factor: f64,
    omega: f64,
    snr_db: f64,
    series: crate::specfun::SeriesConfig,
) -> Result<SerScenario, CliError> {
    let link = LinkBudget::new(snr_db, omega, 1.0)?;
    Ok(SerScenario::new(
        MaskConstellation::new(order)?,
        RicianParams::new(k_factor, omega)?,
        branches,
        link.sigma_n_sq,
        series,
    )?)
}

/// Runs `sweep`; returns the rows and the files written.
pub fn cmd_sweep(args: &RunArgs) -> Result<(Vec<SweepRow>, Vec<PathBuf>), CliError> {
    let started = Instant::now();
    let started_unix = unix_now();
    let mut cfg: SweepConfig = config::load(&args.config)?;
    if args.trials.is_some() && cfg.mc.is_none() {
        cfg.mc = Some(McSection::default());
    }
    if let Some(mc) = cfg.mc.as_mut() {
        apply_mc_overrides(mc, args);
    }
    apply_output_overrides(&mut cfg.output, args);
    cfg.check()?;
    let series = cfg.series.resolve()?;
    let s = &cfg.sweep;
    let snr_grid = s.snr_db.points();
    let mc_base = cfg.mc.as_ref().map(McSection::resolve);
    if let Some(mc) = &mc_base {
        mc.validate()?;
    }

    let mut rows = Vec::new();
    for &order in &s.orders {
        for &branches in &s.antennas {
            for &k_factor in &s.k_factors {
                let template = scenario(order, branches, k_factor, s.omega, snr_grid[0], series)?;
                let base_row = SweepRow {
                    source: Source::Analytic,
                    detector: String::new(),
                    engine: String::new(),
                    order,
                    branches,
                    k_factor,
                    omega: s.omega,
                    phase_noise: 0.0,
                    snr_db: 0.0,
                    ser: 0.0,
                    ci_low: None,
                    ci_high: None,
                    errors: None,
                    trials: None,
                    seed: None,
                };
                for &engine in &s.engines {
                    for &snr_db in &snr_grid {
                        let sc = scenario(order, branches, k_factor, s.omega, snr_db, series)?;
                        let r = ser_heuristic_with(&sc, engine, s.allow_fallback).map_err(|e| {
                            CliError::from(e).with_context(&format!(
                                "{engine} at M={order} N={branches} K={k_factor} SNR={snr_db} dB"
                            ))
                        })?;
                        rows.push(SweepRow {
                            detector: "ac-heuristic".into(),
                            engine: engine.name().into(),
                            snr_db,
                            ser: r.ser,
                            ..base_row.clone()
                        });
                    }
                }
                let Some(mc_base) = mc_base else { continue };
                for &detector in &s.detectors {
                    for &level in &s.phase_noise {
                        let mc = McConfig {
                            phase_noise_level: level,
                            ..mc_base
                        };
                        let curve = run_curve(detector, &template, &snr_grid, &mc)?;
                        for p in curve.points {
                            rows.push(SweepRow {
                                source: Source::Mc,
                                detector: detector.name().into(),
                                phase_noise: level,
                                snr_db: p.snr_db,
                                ser: p.ser,
                                ci_low: Some(p.ci_low),
                                ci_high: Some(p.ci_high),
                                errors: Some(p.errors),
                                trials: Some(p.trials),
                                seed: Some(p.seed),
                                ..base_row.clone()
                            });
                        }
                    }
                }
            }
        }
    }
    output::sort_rows(&mut rows);
    let meta = Metadata {
        artifact: "ser-sweep",
        version: env!("CARGO_PKG_VERSION"),
        command: "sweep",
        config_hash: config::config_hash(&cfg),
        started_unix_s: started_unix,
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    let csv = output::sweep_csv(&rows)?;
    let written = output::emit(&PathBuf::from(&cfg.output.path), cfg.output.format, csv, &meta, &rows)?;
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok((rows, written))
}

impl CliError {
    fn with_context(self, ctx: &str) -> Self {
        match self {
            CliError::Io(m) => CliError::Io(format!("{ctx}: {m}")),
            CliError::Schema(m) => CliError::Schema(format!("{ctx}: {m}")),
            CliError::Convergence(m) => CliError::Convergence(format!("{ctx}: {m} (fallback disabled)")),
            CliError::Validate(m) => CliError::Validate(format!("{ctx}: {m}")),
        }
    }
}

/// Runs `pdf`; returns the rows and the files written.
pub fn cmd_pdf(args: &RunArgs) -> Result<(Vec<PdfRow>, Vec<PathBuf>), CliError> {
    let started = Instant::now();
    let started_unix = unix_now();
    let mut cfg: PdfConfig = config::load(&args.config)?;
    apply_mc_overrides(&mut cfg.mc, args);
    if let Some(t) = args.trials {
        cfg.pdf.samples = t;
    }
    apply_output_overrides(&mut cfg.output, args);
    cfg.check()?;
    let series = cfg.series.resolve()?;
    let p = &cfg.pdf;
    let sc = scenario(p.order, p.antennas, p.k_factor, p.omega, p.snr_db, series)?;
    let mc = cfg.mc.resolve();
    let grid = p.zeta.points();
    let mut rows = Vec::new();
    for m in cfg.symbols() {
        let samples = sample_statistic(&sc, m, p.samples, point_seed(mc.seed, m), mc.workers)?;
        let hist = density_histogram(&samples, &grid);
        let mut fallbacks = 0;
        for (&zeta, &h) in grid.iter().zip(&hist) {
            let analytic = match p.engine {
                Engine::ApproachI => match pdf_zeta(zeta, m, &sc) {
                    Err(Error::Regime { .. }) if p.allow_fallback => {
                        fallbacks += 1;
                        pdf_zeta_numeric(zeta, m, &sc)
                    }
                    r => r,
                },
                _ => pdf_zeta_numeric(zeta, m, &sc),
            }
            .map_err(|e| CliError::from(e).with_context(&format!("density at zeta={zeta}, m={m}")))?;
            rows.push(PdfRow {
                m,
                zeta,
                pdf_analytic: analytic,
                pdf_mc_histogram: h,
            });
        }
        if fallbacks > 0 {
            log::warn!("approach-i density left its validity regime at {fallbacks} grid points for m = {m}; used numeric there");
        }
    }
    let meta = Metadata {
        artifact: "zeta-density",
        version: env!("CARGO_PKG_VERSION"),
        command: "pdf",
        config_hash: config::config_hash(&cfg),
        started_unix_s: started_unix,
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    let csv = output::pdf_csv(&rows)?;
    let written = output::emit(&PathBuf::from(&cfg.output.path), cfg.output.format, csv, &meta, &rows)?;
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok((rows, written))
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let opts = ValidateOptions {
        threshold_shift: args.perturb_threshold,
    };
    let outcomes = validate::run_checks(args.filter.as_deref(), &opts);
    let mut first_failure = None;
    for o in &outcomes {
        let secs = o.elapsed.as_secs_f64();
        match &o.result {
            Ok(()) => println!("PASS {}/{} ({secs:.2} s)", o.module, o.name),
            Err(msg) => {
                println!("FAIL {}/{} ({secs:.2} s): {msg}", o.module, o.name);
                first_failure.get_or_insert_with(|| format!("check `{}` failed: {msg}", o.name));
            }
        }
    }
    match first_failure {
        Some(m) => Err(CliError::Validate(m)),
        None => {
            println!("{} checks passed", outcomes.len());
            Ok(())
        }
    }
}
