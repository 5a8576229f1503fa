//! Flat TOML run configuration.
//!
//! Precedence when building a [`SweepConfig`]: defaults, then preset, then
//! file, then explicit command-line values (applied by the caller).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DetectionMode, Preset, SweepConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Every key is optional; unknown keys are an error so typos do not pass silently.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub g_over_kappa: Option<f64>,
    pub gamma_over_kappa: Option<f64>,
    pub kappa_tau: Option<f64>,
    pub eta: Option<f64>,
    pub theta: Option<f64>,
    pub nbar_min: Option<f64>,
    pub nbar_max: Option<f64>,
    pub nbar_points: Option<usize>,
    pub modes: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub svg: Option<bool>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Overlay this file on `cfg`. A preset named in the file replaces the
    /// physical parameters first; explicit keys then override it.
    pub fn apply(&self, cfg: &mut SweepConfig) -> Result<()> {
        if let Some(p) = &self.preset {
            cfg.base = Preset::parse(p)?.base();
        }
        let b = &mut cfg.base;
        set(&mut b.g_over_kappa, self.g_over_kappa);
        set(&mut b.gamma_over_kappa, self.gamma_over_kappa);
        set(&mut b.kappa_tau, self.kappa_tau);
        set(&mut b.eta, self.eta);
        set(&mut b.theta, self.theta);
        set(&mut cfg.nbar_min, self.nbar_min);
        set(&mut cfg.nbar_max, self.nbar_max);
        set(&mut cfg.nbar_points, self.nbar_points);
        if let Some(ms) = &self.modes {
            cfg.modes = ms
                .iter()
                .map(|m| DetectionMode::parse(m))
                .collect::<Result<_>>()?;
        }
        set(&mut cfg.out_dir, self.out.clone());
        set(&mut cfg.format, self.format);
        set(&mut cfg.svg, self.svg);
        Ok(())
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}
