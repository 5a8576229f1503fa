use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use condsqueeze::harness::{
    self, ConfigFile, DetectionMode, OutputFormat, Preset, SweepConfig, ORACLE_BINS, ORACLE_TOL,
};
use condsqueeze::Error;

/// Conditional squeezing of a pulsed optomechanical oscillator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep the mean thermal occupation and write a table.
    Sweep(SweepArgs),
    /// Evaluate a single occupation and print the full record as JSON.
    Point(PointArgs),
    /// Write the optimal and exponential output mode profiles.
    Modes(ModesArgs),
    /// Compare the closed-form covariance against the time-binned simulation.
    Selftest,
}

#[derive(Args)]
struct PhysArgs {
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Flat TOML file; explicit flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    g_over_kappa: Option<f64>,
    #[arg(long)]
    gamma_over_kappa: Option<f64>,
    #[arg(long)]
    kappa_tau: Option<f64>,
    /// Detection efficiency.
    #[arg(long)]
    eta: Option<f64>,
    /// Homodyne phase in radians.
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    phys: PhysArgs,
    #[arg(long)]
    nbar_min: Option<f64>,
    #[arg(long)]
    nbar_max: Option<f64>,
    #[arg(long)]
    nbar_points: Option<usize>,
    /// Repeat to sweep several modes.
    #[arg(long, value_enum)]
    mode: Vec<DetectionMode>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Also write sweep.svg.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    phys: PhysArgs,
    #[arg(long)]
    nbar: f64,
    #[arg(long, value_enum, default_value = "optimal")]
    mode: DetectionMode,
}

#[derive(Args)]
struct ModesArgs {
    #[command(flatten)]
    phys: PhysArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Print to stdout; a closed pipe (`| head`) is not an error.
fn emit(line: impl std::fmt::Display) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn override_opt<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// defaults < preset < config file < flags.
fn resolve(phys: &PhysArgs) -> Result<SweepConfig, Error> {
    let mut cfg = SweepConfig::default();
    let mut file = match &phys.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(p) = phys.preset {
        cfg.base = p.base();
        file.preset = None;
    }
    file.apply(&mut cfg)?;
    let b = &mut cfg.base;
    override_opt(&mut b.g_over_kappa, phys.g_over_kappa);
    override_opt(&mut b.gamma_over_kappa, phys.gamma_over_kappa);
    override_opt(&mut b.kappa_tau, phys.kappa_tau);
    override_opt(&mut b.eta, phys.eta);
    override_opt(&mut b.theta, phys.theta);
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.cmd {
        Cmd::Sweep(a) => {
            let mut cfg = resolve(&a.phys)?;
            override_opt(&mut cfg.nbar_min, a.nbar_min);
            override_opt(&mut cfg.nbar_max, a.nbar_max);
            override_opt(&mut cfg.nbar_points, a.nbar_points);
            if !a.mode.is_empty() {
                cfg.modes = a.mode;
            }
            override_opt(&mut cfg.out_dir, a.out);
            override_opt(&mut cfg.format, a.format);
            cfg.svg |= a.svg;
            let out = harness::run_sweep(&cfg)?;
            for f in &out.files {
                emit(f.display());
            }
            Ok(true)
        }
        Cmd::Point(a) => {
            let cfg = resolve(&a.phys)?;
            let report = harness::run_point_report(&cfg.base, a.nbar, a.mode)?;
            emit(report.to_json()?);
            Ok(true)
        }
        Cmd::Modes(a) => {
            let mut cfg = resolve(&a.phys)?;
            override_opt(&mut cfg.out_dir, a.out);
            let r = harness::emit_mode_profiles(&cfg.base, &cfg.out_dir)?;
            emit(serde_json::to_string_pretty(&r)?);
            Ok(true)
        }
        Cmd::Selftest => {
            let checks = harness::oracle_suite()?;
            let mut ok = true;
            for c in &checks {
                ok &= c.passed;
                emit(format_args!(
                    "{} g/kappa={} gamma/kappa={:e} kappa_tau={} gain={:.4} deviation={:.3e} (tol {ORACLE_TOL:e}, {ORACLE_BINS} bins) nu_min={:.6}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.g_over_kappa,
                    c.gamma_over_kappa,
                    c.kappa_tau,
                    c.gain,
                    c.deviation,
                    c.min_symplectic
                ));
            }
            Ok(ok)
        }
    }
}

fn error_json(e: &Error) -> serde_json::Value {
    let (kind, nbar) = match e {
        Error::AtPoint { nbar, source } => (source.kind(), Some(*nbar)),
        other => (other.kind(), None),
    };
    let mut inner = serde_json::json!({ "kind": kind, "message": e.to_string() });
    if let Some(n) = nbar {
        inner["nbar"] = n.into();
    }
    serde_json::json!({ "error": inner })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(2)
        }
    }
}
