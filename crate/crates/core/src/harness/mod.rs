//! Batch driver: single points, occupation sweeps, mode-profile export and
//! the oracle self-test.
//!
//! All physical inputs are dimensionless ratios to kappa.

mod config;
mod selftest;
mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cm::JointCM;
use crate::conditioning::{condition_homodyne, ConditionalResult};
use crate::covariance::{apply_loss, filtered_state, CmExport};
use crate::error::{Error, Result};
use crate::modes::{self, l2_distance, mode_overlap, GainReport, TemporalMode};
use crate::params::SystemParams;
use crate::propagator::Propagator;

pub use config::{ConfigFile, OutputFormat};
pub use selftest::{oracle_check, oracle_suite, OracleCheck, ORACLE_BINS, ORACLE_SETS, ORACLE_TOL};
pub use svg::{render_svg, Series};

/// Version tag written into the CSV header comment.
pub const CSV_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMode {
    /// Mode following `M_13(s)`.
    #[value(name = "optimal")]
    Optimal,
    /// Exponential mode `e^{G s}` of the adiabatic regime.
    #[value(name = "adiabatic")]
    AdiabaticExponential,
    /// Optimal mode behind a beam splitter standing in for the mode mismatch
    /// with the exponential profile.
    #[value(name = "optimal-lossy")]
    OptimalWithOverlapLoss,
}

impl DetectionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DetectionMode::Optimal => "optimal",
            DetectionMode::AdiabaticExponential => "adiabatic_exponential",
            DetectionMode::OptimalWithOverlapLoss => "optimal_with_overlap_loss",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "optimal" => Ok(Self::Optimal),
            "adiabatic" | "adiabatic_exponential" => Ok(Self::AdiabaticExponential),
            "optimal-lossy" | "optimal_with_overlap_loss" => Ok(Self::OptimalWithOverlapLoss),
            other => Err(Error::Config(format!("unknown detection mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Levitated nanoparticle beyond the adiabatic regime:
    /// `g/kappa = 0.62`, `gamma/kappa = 2.8e-10`, `kappa tau = 8`.
    Delic2018,
    /// Weak coupling, long pulse: `g/kappa = 0.05`, `gamma/kappa = 1e-10`, `kappa tau = 200`.
    Adiabatic,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "delic2018" => Ok(Self::Delic2018),
            "adiabatic" => Ok(Self::Adiabatic),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    pub fn base(&self) -> BaseParams {
        match self {
            Preset::Delic2018 => BaseParams {
                g_over_kappa: 0.62,
                gamma_over_kappa: 2.8e-10,
                kappa_tau: 8.0,
                eta: 1.0,
                theta: 0.0,
            },
            Preset::Adiabatic => BaseParams {
                g_over_kappa: 0.05,
                gamma_over_kappa: 1e-10,
                kappa_tau: 200.0,
                eta: 1.0,
                theta: 0.0,
            },
        }
    }
}

/// Everything but the occupation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseParams {
    pub g_over_kappa: f64,
    pub gamma_over_kappa: f64,
    pub kappa_tau: f64,
    pub eta: f64,
    pub theta: f64,
}

impl Default for BaseParams {
    fn default() -> Self {
        Preset::Delic2018.base()
    }
}

impl BaseParams {
    pub fn params(&self, nbar: f64) -> Result<SystemParams> {
        SystemParams::dimensionless(self.g_over_kappa, self.gamma_over_kappa, self.kappa_tau)?
            .with_nbar(nbar)?
            .with_eta(self.eta)?
            .with_theta(self.theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub base: BaseParams,
    pub nbar_min: f64,
    pub nbar_max: f64,
    pub nbar_points: usize,
    pub modes: Vec<DetectionMode>,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub svg: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            base: BaseParams::default(),
            nbar_min: 1e-2,
            nbar_max: 1e8,
            nbar_points: 61,
            modes: vec![DetectionMode::Optimal],
            out_dir: PathBuf::from("out"),
            format: OutputFormat::Csv,
            svg: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nbar_points < 2 {
            return Err(Error::Config(format!(
                "nbar_points = {} must be at least 2",
                self.nbar_points
            )));
        }
        if !(self.nbar_min > 0.0 && self.nbar_max > self.nbar_min && self.nbar_max.is_finite()) {
            return Err(Error::Config(format!(
                "occupation range [{}, {}] must be positive and increasing",
                self.nbar_min, self.nbar_max
            )));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("no detection mode selected".into()));
        }
        self.base.params(self.nbar_min).map(|_| ())
    }

    /// Log-spaced occupations, endpoints included.
    pub fn nbar_grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.nbar_min.log10(), self.nbar_max.log10());
        let n = self.nbar_points;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.nbar_max
                } else if i == 0 {
                    self.nbar_min
                } else {
                    10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub nbar: f64,
    pub gain: f64,
    pub eta_effective: f64,
    pub sigma_cond: f64,
    pub s_cond_db: f64,
    pub mode: DetectionMode,
    pub wall_time_s: f64,
}

/// Full record of one pipeline evaluation.
#[derive(Debug, Clone)]
pub struct PointReport {
    pub row: SweepRow,
    pub params: SystemParams,
    pub gain: GainReport,
    /// Signed overlap with the exponential mode, when the mode kind needed it.
    pub overlap: Option<f64>,
    pub cm: JointCM,
    pub conditional: ConditionalResult,
}

#[derive(Serialize)]
struct PointJson<'a> {
    row: &'a SweepRow,
    gain: &'a GainReport,
    overlap: Option<f64>,
    cm: CmExport,
    conditional: &'a ConditionalResult,
}

impl PointReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PointJson {
            row: &self.row,
            gain: &self.gain,
            overlap: self.overlap,
            cm: CmExport::new(&self.params, &self.cm),
            conditional: &self.conditional,
        })?)
    }
}

/// The detection mode profile and the transmittance standing in for it.
fn detection_profile(
    prop: &Propagator,
    tau: f64,
    mode: DetectionMode,
) -> Result<(TemporalMode, f64, Option<f64>)> {
    match mode {
        DetectionMode::Optimal => Ok((modes::optimal_output_mode(prop, tau)?, 1.0, None)),
        DetectionMode::AdiabaticExponential => {
            Ok((modes::adiabatic_output_mode(prop, tau)?, 1.0, None))
        }
        DetectionMode::OptimalWithOverlapLoss => {
            let opt = modes::optimal_output_mode(prop, tau)?;
            let overlap = mode_overlap(&opt, &modes::adiabatic_output_mode(prop, tau)?)?;
            // amplitude overlap -> power transmittance
            Ok((opt, overlap * overlap, Some(overlap)))
        }
    }
}

fn evaluate(base: &BaseParams, nbar: f64, mode: DetectionMode) -> Result<PointReport> {
    let start = Instant::now();
    let params = base.params(nbar)?;
    let prop = Propagator::new(&params);
    let tau = params.kappa_tau();
    let gain = modes::gain(&prop, tau);
    let (profile, mismatch, overlap) = detection_profile(&prop, tau, mode)?;
    let eta_effective = params.eta() * mismatch;
    let state = filtered_state(&params, &profile)?;
    let cm = apply_loss(&state.cm, eta_effective)?;
    let conditional = condition_homodyne(&cm, params.theta())?;
    Ok(PointReport {
        row: SweepRow {
            nbar,
            gain: gain.gain,
            eta_effective,
            sigma_cond: conditional.sigma_cond,
            s_cond_db: conditional.s_cond_db,
            mode,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
        params,
        gain,
        overlap,
        cm,
        conditional,
    })
}

/// propagator -> temporal mode -> joint CM -> loss -> homodyne conditioning.
pub fn run_point_report(base: &BaseParams, nbar: f64, mode: DetectionMode) -> Result<PointReport> {
    evaluate(base, nbar, mode).map_err(|e| Error::AtPoint {
        nbar,
        source: Box::new(e),
    })
}

pub fn run_point(base: &BaseParams, nbar: f64, mode: DetectionMode) -> Result<SweepRow> {
    run_point_report(base, nbar, mode).map(|r| r.row)
}

/// Rows ordered by detection mode (config order), then by occupation.
pub fn sweep_rows(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let grid = cfg.nbar_grid();
    let jobs: Vec<(DetectionMode, f64)> = cfg
        .modes
        .iter()
        .flat_map(|&m| grid.iter().map(move |&n| (m, n)))
        .collect();
    jobs.par_iter()
        .map(|&(m, n)| run_point(&cfg.base, n, m))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub files: Vec<PathBuf>,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(contents).map_err(io)
}

fn base_comment(base: &BaseParams) -> String {
    format!(
        "# g_over_kappa={:e} gamma_over_kappa={:e} kappa_tau={:e} eta={:e} theta={:e}",
        base.g_over_kappa, base.gamma_over_kappa, base.kappa_tau, base.eta, base.theta
    )
}

/// Deterministic CSV: no timing column, fixed-width scientific notation.
pub fn sweep_csv(base: &BaseParams, rows: &[SweepRow]) -> String {
    let mut s = format!(
        "# condsqueeze sweep v{CSV_VERSION} columns: nbar,gain,eta_effective,sigma_cond,s_cond_db,mode\n{}\n",
        base_comment(base)
    );
    s.push_str("nbar,gain,eta_effective,sigma_cond,s_cond_db,mode\n");
    for r in rows {
        s.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
            r.nbar,
            r.gain,
            r.eta_effective,
            r.sigma_cond,
            r.s_cond_db,
            r.mode.as_str()
        ));
    }
    s
}

pub fn sweep_json(base: &BaseParams, rows: &[SweepRow]) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        version: u32,
        base: &'a BaseParams,
        rows: &'a [SweepRow],
    }
    Ok(serde_json::to_string_pretty(&Doc {
        version: CSV_VERSION,
        base,
        rows,
    })?)
}

pub fn sweep_series(cfg: &SweepConfig, rows: &[SweepRow]) -> Vec<Series> {
    cfg.modes
        .iter()
        .map(|m| Series {
            label: m.as_str().to_string(),
            points: rows
                .iter()
                .filter(|r| r.mode == *m)
                .map(|r| (r.nbar, r.s_cond_db))
                .collect(),
        })
        .collect()
}

/// Evaluate the sweep and write `sweep.csv` or `sweep.json` (plus `sweep.svg`)
/// into the output directory.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    let rows = sweep_rows(cfg)?;
    let mut files = Vec::new();
    let (name, body) = match cfg.format {
        OutputFormat::Csv => ("sweep.csv", sweep_csv(&cfg.base, &rows)),
        OutputFormat::Json => ("sweep.json", sweep_json(&cfg.base, &rows)?),
    };
    let path = cfg.out_dir.join(name);
    write_file(&path, body.as_bytes())?;
    files.push(path);
    if cfg.svg {
        let svg = render_svg(
            &sweep_series(cfg, &rows),
            "mean occupation n\u{304}",
            "conditional squeezing S_cond [dB]",
        );
        let path = cfg.out_dir.join("sweep.svg");
        write_file(&path, svg.as_bytes())?;
        files.push(path);
    }
    Ok(SweepOutput { rows, files })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeProfileReport {
    pub path: PathBuf,
    pub overlap: f64,
    pub l2_distance: f64,
}

/// Optimal and exponential output profiles on the shared grid.
pub fn mode_profiles_csv(base: &BaseParams) -> Result<(String, f64, f64)> {
    let params = base.params(0.0)?;
    let prop = Propagator::new(&params);
    let tau = params.kappa_tau();
    let opt = modes::optimal_output_mode(&prop, tau)?;
    let ad = modes::adiabatic_output_mode(&prop, tau)?;
    let overlap = mode_overlap(&opt, &ad)?;
    let dist = l2_distance(&opt, &ad)?;
    let mut s = format!(
        "# condsqueeze modes v{CSV_VERSION} overlap={overlap:.12e} l2_distance={dist:.12e}\n{}\n",
        base_comment(base)
    );
    s.push_str("time,optimal_out,adiabatic_out\n");
    for (i, t) in opt.grid().times().enumerate() {
        s.push_str(&format!(
            "{t:.12e},{:.12e},{:.12e}\n",
            opt.values()[i],
            ad.values()[i]
        ));
    }
    Ok((s, overlap, dist))
}

pub fn emit_mode_profiles(base: &BaseParams, out_dir: &Path) -> Result<ModeProfileReport> {
    let (csv, overlap, l2_distance) = mode_profiles_csv(base)?;
    let path = out_dir.join("modes.csv");
    write_file(&path, csv.as_bytes())?;
    Ok(ModeProfileReport {
        path,
        overlap,
        l2_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nbar_grid_is_log_spaced() {
        let cfg = SweepConfig {
            nbar_min: 1.0,
            nbar_max: 1e4,
            nbar_points: 5,
            ..Default::default()
        };
        let g = cfg.nbar_grid();
        assert_eq!(g.len(), 5);
        for (a, b) in g.iter().zip([1.0, 10.0, 100.0, 1e3, 1e4]) {
            assert!((a - b).abs() < 1e-9 * b);
        }
    }

    #[test]
    fn default_grid_spans_ground_state_to_impossible() {
        let g = SweepConfig::default().nbar_grid();
        assert_eq!(g.len(), 61);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[60], 1e8);
    }

    #[test]
    fn invalid_sweeps_are_rejected() {
        let bad = [
            SweepConfig {
                nbar_points: 1,
                ..Default::default()
            },
            SweepConfig {
                nbar_min: 0.0,
                ..Default::default()
            },
            SweepConfig {
                nbar_min: 10.0,
                nbar_max: 1.0,
                ..Default::default()
            },
            SweepConfig {
                modes: vec![],
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn zero_transmittance_gives_no_squeezing() {
        let base = BaseParams {
            eta: 0.0,
            ..Preset::Delic2018.base()
        };
        for mode in [DetectionMode::Optimal, DetectionMode::AdiabaticExponential] {
            let r = run_point(&base, 1.0, mode).unwrap();
            assert_eq!(r.s_cond_db, 0.0);
        }
    }

    #[test]
    fn zero_coupling_error_names_the_point() {
        let base = BaseParams {
            g_over_kappa: 0.0,
            ..Preset::Delic2018.base()
        };
        match run_point(&base, 42.0, DetectionMode::Optimal) {
            Err(Error::AtPoint { nbar, source }) => {
                assert_eq!(nbar, 42.0);
                assert!(matches!(*source, Error::NoCoupling));
            }
            other => panic!("{other:?}"),
        }
        assert!(mode_profiles_csv(&base).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            DetectionMode::parse("optimal-lossy").unwrap(),
            DetectionMode::OptimalWithOverlapLoss
        );
        assert_eq!(
            DetectionMode::parse("adiabatic").unwrap(),
            DetectionMode::AdiabaticExponential
        );
        assert!(DetectionMode::parse("heterodyne").is_err());
        assert_eq!(Preset::parse("delic2018").unwrap(), Preset::Delic2018);
    }
}
