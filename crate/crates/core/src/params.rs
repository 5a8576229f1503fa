//! Physical parameters of one pulsed protocol run.
//!
//! Rates are stored in units of the optical decay rate `kappa`, so every
//! downstream computation runs with `kappa = 1`. The physical `kappa` is kept
//! only so that results can be reported back in the caller's units.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    kappa: f64,
    g: f64,
    gamma: f64,
    kappa_tau: f64,
    n0: f64,
    n_th: f64,
    eta: f64,
    theta: f64,
}

fn check(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

impl SystemParams {
    /// Build from rates in arbitrary (common) units and a pulse duration in
    /// the inverse unit. Occupations default to zero, `eta` to 1 and `theta`
    /// to 0.
    pub fn from_rates(kappa: f64, gamma: f64, g: f64, tau: f64) -> Result<Self> {
        check("kappa", kappa, kappa > 0.0, "must be positive")?;
        check("gamma", gamma, gamma >= 0.0, "must be non-negative")?;
        check("g", g, g >= 0.0, "must be non-negative")?;
        check("tau", tau, tau > 0.0, "must be positive")?;
        Ok(Self {
            kappa,
            g: g / kappa,
            gamma: gamma / kappa,
            kappa_tau: kappa * tau,
            n0: 0.0,
            n_th: 0.0,
            eta: 1.0,
            theta: 0.0,
        })
    }

    /// Build directly from the dimensionless ratios `g/kappa`, `gamma/kappa`
    /// and `kappa*tau`.
    pub fn dimensionless(g_over_kappa: f64, gamma_over_kappa: f64, kappa_tau: f64) -> Result<Self> {
        Self::from_rates(1.0, gamma_over_kappa, g_over_kappa, kappa_tau)
    }

    pub fn with_occupations(mut self, n0: f64, n_th: f64) -> Result<Self> {
        check("n0", n0, n0 >= 0.0, "must be non-negative")?;
        check("n_th", n_th, n_th >= 0.0, "must be non-negative")?;
        self.n0 = n0;
        self.n_th = n_th;
        Ok(self)
    }

    /// Mechanics in equilibrium with its bath: `n0 = n_th = nbar`.
    pub fn with_nbar(self, nbar: f64) -> Result<Self> {
        self.with_occupations(nbar, nbar)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        check("eta", eta, (0.0..=1.0).contains(&eta), "must lie in [0, 1]")?;
        self.eta = eta;
        Ok(self)
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        check("theta", theta, true, "must be finite")?;
        self.theta = theta;
        Ok(self)
    }

    /// Physical optical decay rate in the caller's units.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn g_over_kappa(&self) -> f64 {
        self.g
    }
    pub fn gamma_over_kappa(&self) -> f64 {
        self.gamma
    }
    pub fn kappa_tau(&self) -> f64 {
        self.kappa_tau
    }
    pub fn n0(&self) -> f64 {
        self.n0
    }
    pub fn n_th(&self) -> f64 {
        self.n_th
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Adiabatic amplification rate `G = g^2/kappa`, in units of kappa.
    pub fn rate_g(&self) -> f64 {
        self.g * self.g
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec::thermal(self.n0, self.n_th)
    }

    /// `K = diag(kappa, kappa, gamma/2, gamma/2)` in units of kappa.
    pub fn damping(&self) -> [f64; 4] {
        [1.0, 1.0, 0.5 * self.gamma, 0.5 * self.gamma]
    }
}

/// Initial-state covariance and input-noise covariance density, both diagonal
/// over `(X_c, Y_c, X_m, Y_m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma0: [f64; 4],
    pub sigma_in: [f64; 4],
}

impl NoiseSpec {
    /// Optical vacuum, thermal mechanics with `n0` quanta, thermal bath with
    /// `n_th` quanta.
    pub fn thermal(n0: f64, n_th: f64) -> Self {
        let m0 = 2.0 * n0 + 1.0;
        let mth = 2.0 * n_th + 1.0;
        Self {
            sigma0: [1.0, 1.0, m0, m0],
            sigma_in: [1.0, 1.0, mth, mth],
        }
    }

    pub fn sigma0_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&self.sigma0.into())
    }

    pub fn sigma_in_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&self.sigma_in.into())
    }
}
