//! Temporal mode profiles of the input and output light.
//!
//! The output mode optimally coupled to the mechanics follows `M_13(s)`; the
//! input mode follows `M_31(tau - s)`. In the adiabatic regime both reduce to
//! exponentials `exp(+-G s)` with `G = g^2/kappa`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::Propagator;
use crate::quadrature::{psi, simpson, PanelRule, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    OptimalOut,
    OptimalIn,
    AdiabaticOut,
    AdiabaticIn,
    Custom,
}

impl ModeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeKind::OptimalOut => "optimal_out",
            ModeKind::OptimalIn => "optimal_in",
            ModeKind::AdiabaticOut => "adiabatic_out",
            ModeKind::AdiabaticIn => "adiabatic_in",
            ModeKind::Custom => "custom",
        }
    }
}

/// `f(s) = sum_j c_j exp(nu_j s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    pub terms: Vec<(f64, f64)>,
}

impl ExpSum {
    pub fn eval(&self, s: f64) -> f64 {
        self.terms.iter().map(|&(c, nu)| c * (nu * s).exp()).sum()
    }

    /// `int_0^tau f(s) h(s) ds` in closed form.
    pub fn inner(&self, other: &ExpSum, tau: f64) -> f64 {
        let mut acc = 0.0;
        for &(c, nu) in &self.terms {
            for &(d, mu) in &other.terms {
                acc += c * d * psi(nu + mu, tau);
            }
        }
        acc
    }

    fn scaled(&self, k: f64) -> ExpSum {
        ExpSum {
            terms: self.terms.iter().map(|&(c, nu)| (k * c, nu)).collect(),
        }
    }
}

/// A normalized real profile on `[0, tau]`.
#[derive(Debug, Clone)]
pub struct TemporalMode {
    grid: TimeGrid,
    values: Vec<f64>,
    kind: ModeKind,
    analytic: Option<ExpSum>,
}

impl TemporalMode {
    fn from_analytic(grid: TimeGrid, kind: ModeKind, f: ExpSum) -> Self {
        let values = grid.times().map(|s| f.eval(s)).collect();
        Self {
            grid,
            values,
            kind,
            analytic: Some(f),
        }
    }

    /// User-supplied profile; renormalized to unit L2 norm on ingestion.
    pub fn custom(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidMode(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMode("non-finite sample".into()));
        }
        let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
        let norm = simpson(&sq, grid.dt()).sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidMode("profile has zero norm".into()));
        }
        Ok(Self {
            grid,
            values: values.into_iter().map(|v| v / norm).collect(),
            kind: ModeKind::Custom,
            analytic: None,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn kind(&self) -> ModeKind {
        self.kind
    }
    pub fn analytic(&self) -> Option<&ExpSum> {
        self.analytic.as_ref()
    }
    pub fn tau(&self) -> f64 {
        self.grid.tau()
    }

    /// Same samples, with the closed form dropped, so that downstream code
    /// takes the generic grid path.
    pub fn sampled_only(&self) -> Self {
        Self {
            analytic: None,
            ..self.clone()
        }
    }

    /// Profile value at `s`; closed form when known, else linear interpolation.
    pub fn eval(&self, s: f64) -> f64 {
        if let Some(f) = &self.analytic {
            return f.eval(s);
        }
        let x = (s / self.grid.dt()).clamp(0.0, self.grid.intervals() as f64);
        let i = (x.floor() as usize).min(self.grid.intervals() - 1);
        let w = x - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    pub fn norm_sq(&self) -> f64 {
        match &self.analytic {
            Some(f) => f.inner(f, self.tau()),
            None => {
                let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
                simpson(&sq, self.grid.dt())
            }
        }
    }

    fn resampled(&self, grid: TimeGrid) -> Self {
        let values = grid.times().map(|s| self.eval(s)).collect();
        Self {
            grid,
            values,
            kind: self.kind,
            analytic: self.analytic.clone(),
        }
    }

    /// Two-column `time,value` CSV.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "time,{}", self.kind.as_str())?;
        for (t, v) in self.grid.times().zip(&self.values) {
            writeln!(w, "{t:.12e},{v:.12e}")?;
        }
        Ok(())
    }
}

/// Amplification gain of the two-mode-squeezing pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainReport {
    /// `1 + 2 kappa int_0^tau M_31(s)^2 ds`
    pub gain: f64,
    /// `gain - 1`, kept separately because it is tiny for short pulses
    pub excess: f64,
    /// `G = g^2/kappa`, in units of kappa
    pub rate_g: f64,
    /// `exp(2 G tau)`
    pub adiabatic_gain: f64,
}

/// Panel width (units of 1/kappa) of the Gauss-Legendre rules; resolves the
/// `1/kappa` and `1/lambda` transients to machine precision.
pub(crate) const PANEL_WIDTH: f64 = 0.25;

pub fn gain(prop: &Propagator, tau: f64) -> GainReport {
    let rate_g = prop.params().rate_g();
    let adiabatic_gain = (2.0 * rate_g * tau).exp();
    if tau <= 0.0 || prop.params().g_over_kappa() == 0.0 {
        return GainReport {
            gain: 1.0,
            excess: 0.0,
            rate_g,
            adiabatic_gain,
        };
    }
    let rule = PanelRule::new(tau, PANEL_WIDTH);
    let integral = rule.integrate(|s| prop.m13(s).powi(2));
    GainReport {
        gain: 1.0 + 2.0 * integral,
        excess: 2.0 * integral,
        rate_g,
        adiabatic_gain,
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
            reason: "mode needs a positive pulse duration",
        })
    }
}

/// `M_13(s)` as an exponential sum `(g/lambda)(e^{mu_+ s} - e^{mu_- s})`.
fn m13_expsum(prop: &Propagator) -> ExpSum {
    let p = prop.params();
    let lam = prop.lambda();
    let c = -0.5 * (1.0 + 0.5 * p.gamma_over_kappa());
    let amp = p.g_over_kappa() / lam;
    ExpSum {
        terms: vec![(amp, c + 0.5 * lam), (-amp, c - 0.5 * lam)],
    }
}

/// `f_out(s) = sqrt(2 kappa / (gain - 1)) M_13(s)` on the default grid.
pub fn optimal_output_mode(prop: &Propagator, tau: f64) -> Result<TemporalMode> {
    check_tau(tau)?;
    optimal_output_mode_on(prop, TimeGrid::default_for(tau))
}

pub fn optimal_output_mode_on(prop: &Propagator, grid: TimeGrid) -> Result<TemporalMode> {
    let f = optimal_out_expsum(prop, grid.tau())?;
    Ok(TemporalMode::from_analytic(grid, ModeKind::OptimalOut, f))
}

fn optimal_out_expsum(prop: &Propagator, tau: f64) -> Result<ExpSum> {
    check_tau(tau)?;
    if prop.params().g_over_kappa() == 0.0 {
        return Err(Error::NoCoupling);
    }
    let report = gain(prop, tau);
    if !(report.excess > 0.0) {
        return Err(Error::NoCoupling);
    }
    Ok(m13_expsum(prop).scaled((2.0 / report.excess).sqrt()))
}

/// `f_in(s) = sqrt(2 kappa / (gain - 1)) M_31(tau - s)` on the default grid.
pub fn optimal_input_mode(prop: &Propagator, tau: f64) -> Result<TemporalMode> {
    check_tau(tau)?;
    optimal_input_mode_on(prop, TimeGrid::default_for(tau))
}

pub fn optimal_input_mode_on(prop: &Propagator, grid: TimeGrid) -> Result<TemporalMode> {
    let tau = grid.tau();
    let out = optimal_out_expsum(prop, tau)?;
    let f = ExpSum {
        terms: out
            .terms
            .iter()
            .map(|&(c, nu)| (c * (nu * tau).exp(), -nu))
            .collect(),
    };
    Ok(TemporalMode::from_analytic(grid, ModeKind::OptimalIn, f))
}

fn adiabatic_rate(prop: &Propagator) -> Result<f64> {
    let rate = prop.params().rate_g();
    if rate > 0.0 {
        Ok(rate)
    } else {
        Err(Error::NoCoupling)
    }
}

/// `sqrt(2G / (e^{2G tau} - 1)) e^{G s}` on the default grid.
pub fn adiabatic_output_mode(prop: &Propagator, tau: f64) -> Result<TemporalMode> {
    check_tau(tau)?;
    adiabatic_output_mode_on(prop, TimeGrid::default_for(tau))
}

pub fn adiabatic_output_mode_on(prop: &Propagator, grid: TimeGrid) -> Result<TemporalMode> {
    check_tau(grid.tau())?;
    let rate = adiabatic_rate(prop)?;
    let amp = (2.0 * rate / (2.0 * rate * grid.tau()).exp_m1()).sqrt();
    let f = ExpSum {
        terms: vec![(amp, rate)],
    };
    Ok(TemporalMode::from_analytic(grid, ModeKind::AdiabaticOut, f))
}

/// `sqrt(2G / (1 - e^{-2G tau})) e^{-G s}` on the default grid.
pub fn adiabatic_input_mode(prop: &Propagator, tau: f64) -> Result<TemporalMode> {
    check_tau(tau)?;
    adiabatic_input_mode_on(prop, TimeGrid::default_for(tau))
}

pub fn adiabatic_input_mode_on(prop: &Propagator, grid: TimeGrid) -> Result<TemporalMode> {
    check_tau(grid.tau())?;
    let rate = adiabatic_rate(prop)?;
    let amp = (2.0 * rate / -(-2.0 * rate * grid.tau()).exp_m1()).sqrt();
    let f = ExpSum {
        terms: vec![(amp, -rate)],
    };
    Ok(TemporalMode::from_analytic(grid, ModeKind::AdiabaticIn, f))
}

/// Signed overlap `int_0^tau f(s) h(s) ds` of two normalized profiles.
pub fn mode_overlap(f: &TemporalMode, h: &TemporalMode) -> Result<f64> {
    if (f.tau() - h.tau()).abs() > 1e-12 * f.tau().max(h.tau()) {
        return Err(Error::InvalidMode(format!(
            "profiles cover different durations ({} vs {})",
            f.tau(),
            h.tau()
        )));
    }
    if let (Some(a), Some(b)) = (f.analytic(), h.analytic()) {
        return Ok(a.inner(b, f.tau()));
    }
    if f.grid() == h.grid() {
        let prod: Vec<f64> = f.values.iter().zip(&h.values).map(|(a, b)| a * b).collect();
        return Ok(simpson(&prod, f.grid.dt()));
    }
    let (fine, coarse) = if f.grid.intervals() >= h.grid.intervals() {
        (f, h)
    } else {
        (h, f)
    };
    log::warn!(
        "mode_overlap: resampling {} profile from {} to {} intervals",
        coarse.kind.as_str(),
        coarse.grid.intervals(),
        fine.grid.intervals()
    );
    let resampled = coarse.resampled(fine.grid);
    mode_overlap(fine, &resampled)
}

/// L2 distance between two normalized profiles.
pub fn l2_distance(f: &TemporalMode, h: &TemporalMode) -> Result<f64> {
    let ov = mode_overlap(f, h)?;
    Ok((f.norm_sq() + h.norm_sq() - 2.0 * ov).max(0.0).sqrt())
}
