//! Time grids and the integration rules shared by the mode and covariance code.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use serde::Serialize;

/// `int_0^t exp(a u) du`, accurate for all `a` including `a -> 0`.
pub fn psi(a: f64, t: f64) -> f64 {
    if a == 0.0 {
        t
    } else {
        (a * t).exp_m1() / a
    }
}

/// `int_0^t exp(a s + b (t - s)) ds`, evaluated without overflow of the
/// intermediate exponentials.
pub fn chi(a: f64, b: f64, t: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    (hi * t).exp() * psi(lo - hi, t)
}

/// Uniform grid on `[0, tau]` with an even number of intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    tau: f64,
    intervals: usize,
}

impl TimeGrid {
    /// `intervals` is rounded up to the next even number (at least 2).
    pub fn new(tau: f64, intervals: usize) -> Self {
        let intervals = intervals.max(2);
        Self {
            tau,
            intervals: intervals + intervals % 2,
        }
    }

    /// `max(2048, ceil(64 kappa tau))` intervals, `tau` in units of 1/kappa.
    pub fn default_for(kappa_tau: f64) -> Self {
        let n = (64.0 * kappa_tau).ceil() as usize;
        Self::new(kappa_tau, n.max(2048))
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn intervals(&self) -> usize {
        self.intervals
    }
    pub fn len(&self) -> usize {
        self.intervals + 1
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dt(&self) -> f64 {
        self.tau / self.intervals as f64
    }
    pub fn time(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.tau
        } else {
            i as f64 * self.dt()
        }
    }
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time(i))
    }
}

pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Composite Simpson on an odd number of samples; equals one Richardson step
/// on the trapezoid sums at spacing `dt` and `2 dt`.
pub fn simpson(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    debug_assert!(n % 2 == 1, "simpson needs an even number of intervals");
    if n < 3 {
        return 0.0;
    }
    let mut acc = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * dt / 3.0
}

const GL_DEGREE: usize = 12;

fn gl_reference() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(GL_DEGREE)
            .expect("degree >= 2")
            .into_node_weight_pairs()
    })
}

/// Composite Gauss-Legendre rule over `[0, tau]`, nodes stored once so that
/// several integrands can share them.
#[derive(Debug, Clone)]
pub struct PanelRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PanelRule {
    /// Panels no wider than `max_width`.
    pub fn new(tau: f64, max_width: f64) -> Self {
        let panels = ((tau / max_width).ceil() as usize).max(1);
        let width = tau / panels as f64;
        let reference = gl_reference();
        let mut nodes = Vec::with_capacity(panels * reference.len());
        let mut weights = Vec::with_capacity(panels * reference.len());
        for k in 0..panels {
            let a = k as f64 * width;
            for &(x, w) in reference {
                nodes.push(a + 0.5 * width * (x + 1.0));
                weights.push(0.5 * width * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(s))
            .sum()
    }

    /// Weighted sum of pre-sampled values at the rule's nodes.
    pub fn sum(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_limits() {
        assert_eq!(psi(0.0, 2.5), 2.5);
        assert!((psi(1e-14, 2.0) - 2.0).abs() < 1e-12);
        assert!((psi(-1.0, 3.0) - (1.0 - (-3f64).exp())).abs() < 1e-15);
        assert!((psi(0.5, 2.0) - 2.0 * (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn chi_matches_direct_formula() {
        let (a, b, t) = (0.3f64, -1.2f64, 4.0f64);
        let direct = ((a * t).exp() - (b * t).exp()) / (a - b);
        assert!((chi(a, b, t) - direct).abs() < 1e-13 * direct);
        assert!((chi(b, a, t) - direct).abs() < 1e-13 * direct);
        assert!((chi(0.2, 0.2, 3.0) - 3.0 * 0.6f64.exp()).abs() < 1e-14);
        // large exponents stay finite
        assert!(chi(-2.0, 0.1, 400.0).is_finite());
    }

    #[test]
    fn grid_has_even_intervals() {
        let g = TimeGrid::new(1.0, 7);
        assert_eq!(g.intervals(), 8);
        assert_eq!(g.len(), 9);
        assert_eq!(g.time(8), 1.0);
        let g = TimeGrid::default_for(200.0);
        assert_eq!(g.intervals(), 12800);
        assert_eq!(TimeGrid::default_for(8.0).intervals(), 2048);
    }

    #[test]
    fn rules_integrate_exponentials() {
        let tau = 8.0;
        let exact = psi(-1.3, tau);
        let grid = TimeGrid::new(tau, 2048);
        let vals: Vec<f64> = grid.times().map(|t| (-1.3 * t).exp()).collect();
        assert!((trapezoid(&vals, grid.dt()) - exact).abs() < 1e-5);
        assert!((simpson(&vals, grid.dt()) - exact).abs() < 1e-11);
        let rule = PanelRule::new(tau, 0.25);
        assert!((rule.integrate(|t| (-1.3 * t).exp()) - exact).abs() < 1e-14);
    }
}
