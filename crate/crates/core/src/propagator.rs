//! Drift matrix of the blue-sideband Langevin equation and its exponential.
//!
//! With `u = (X_c, Y_c, X_m, Y_m)` the linear dynamics read
//! `du/dt = A u + sqrt(2K) n`. `A` is symmetric, so `M(s) = exp(A s)` is
//! evaluated through one real symmetric eigendecomposition.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};

use crate::error::{Error, Result};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix {
    pub a: Matrix4<f64>,
}

/// Drift matrix over `(X_c, Y_c, X_m, Y_m)` in units of kappa.
pub fn build_drift(p: &SystemParams) -> DriftMatrix {
    let (g, hg) = (p.g_over_kappa(), 0.5 * p.gamma_over_kappa());
    #[rustfmt::skip]
    let a = Matrix4::new(
        -1.0, 0.0,  g,   0.0,
        0.0, -1.0,  0.0, -g,
        g,    0.0, -hg,  0.0,
        0.0, -g,    0.0, -hg,
    );
    DriftMatrix { a }
}

/// `lambda = sqrt((kappa - gamma/2)^2 + 4 g^2)` in units of kappa.
pub fn lambda(p: &SystemParams) -> f64 {
    let d = 1.0 - 0.5 * p.gamma_over_kappa();
    (d * d + 4.0 * p.g_over_kappa().powi(2)).sqrt()
}

/// One spectral component `exp(mu s) q q^T` of the propagator.
#[derive(Debug, Clone, Copy)]
pub struct Mode {
    pub mu: f64,
    pub q: Vector4<f64>,
}

impl Mode {
    pub fn projector(&self, i: usize, j: usize) -> f64 {
        self.q[i] * self.q[j]
    }
}

/// The family `M(s) = exp(A s)` for a fixed drift.
#[derive(Debug, Clone)]
pub struct Propagator {
    drift: DriftMatrix,
    params: SystemParams,
    modes: [Mode; 4],
    lambda: f64,
}

impl Propagator {
    pub fn new(p: &SystemParams) -> Self {
        let drift = build_drift(p);
        let eig = SymmetricEigen::new(drift.a);
        let modes = std::array::from_fn(|l| Mode {
            mu: eig.eigenvalues[l],
            q: eig.eigenvectors.column(l).into_owned(),
        });
        Self {
            drift,
            params: *p,
            modes,
            lambda: lambda(p),
        }
    }

    pub fn drift(&self) -> &DriftMatrix {
        &self.drift
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Eigenpairs of the drift matrix.
    pub fn modes(&self) -> &[Mode; 4] {
        &self.modes
    }

    /// Largest drift eigenvalue `(-(kappa + gamma/2) + lambda)/2`; positive
    /// when the amplification outruns the intrinsic damping.
    pub fn growth_rate(&self) -> f64 {
        0.5 * (-(1.0 + 0.5 * self.params.gamma_over_kappa()) + self.lambda)
    }

    pub fn sample(&self, s: f64) -> Result<Matrix4<f64>> {
        if s < 0.0 || s.is_nan() {
            return Err(Error::NegativeTime(s));
        }
        Ok(self.sample_unchecked(s))
    }

    pub(crate) fn sample_unchecked(&self, s: f64) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for mode in &self.modes {
            m += mode.q * mode.q.transpose() * (mode.mu * s).exp();
        }
        m
    }

    /// `M_13(s)`, the coupling profile from the initial mechanics to the cavity.
    pub fn m13(&self, s: f64) -> f64 {
        analytic_m13_unchecked(&self.params, s)
    }
}

/// Matrix exponential `exp(A s)` through the symmetric eigendecomposition of `A`.
pub fn propagate(drift: &DriftMatrix, s: f64) -> Result<Matrix4<f64>> {
    if s < 0.0 || s.is_nan() {
        return Err(Error::NegativeTime(s));
    }
    let eig = SymmetricEigen::new(drift.a);
    let e = eig.eigenvalues.map(|mu| (mu * s).exp());
    Ok(eig.eigenvectors * Matrix4::from_diagonal(&e) * eig.eigenvectors.transpose())
}

/// Closed form `M_13(t) = (g/lambda)[e^{-(t/2)(kappa + gamma/2 - lambda)} - e^{-(t/2)(kappa + gamma/2 + lambda)}]`.
pub fn analytic_m13(p: &SystemParams, t: f64) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(analytic_m13_unchecked(p, t))
}

fn analytic_m13_unchecked(p: &SystemParams, t: f64) -> f64 {
    let g = p.g_over_kappa();
    let decay = 0.5 * (1.0 + 0.5 * p.gamma_over_kappa());
    let lam = lambda(p);
    // sinh form is the same expression, stable as lambda -> 0
    g * (-decay * t).exp() * sinhc_half(lam, t)
}

/// `2 sinh(lambda t / 2) / lambda`, with the limit `t` at `lambda = 0`.
fn sinhc_half(lam: f64, t: f64) -> f64 {
    let x = 0.5 * lam * t;
    if x.abs() < 1e-8 {
        t * (1.0 + x * x / 6.0)
    } else {
        2.0 * x.sinh() / lam
    }
}

/// Closed-form propagator built from the two decoupled 2x2 quadrature blocks
/// `(X_c, X_m)` and `(Y_c, Y_m)`.
pub fn analytic_propagator(p: &SystemParams, s: f64) -> Result<Matrix4<f64>> {
    if s < 0.0 || s.is_nan() {
        return Err(Error::NegativeTime(s));
    }
    let g = p.g_over_kappa();
    let hg = 0.5 * p.gamma_over_kappa();
    let lam = lambda(p);
    let mean = -0.5 * (1.0 + hg);
    let block = |sign: f64| {
        let b = Matrix2::new(-1.0, sign * g, sign * g, -hg);
        let shifted = b - Matrix2::identity() * mean;
        ((Matrix2::identity() * (0.5 * lam * s).cosh()) + shifted * sinhc_half(lam, s))
            * (mean * s).exp()
    };
    let (bx, by) = (block(1.0), block(-1.0));
    let mut m = Matrix4::zeros();
    for (blk, off) in [(bx, 0usize), (by, 1usize)] {
        for i in 0..2 {
            for j in 0..2 {
                m[(2 * i + off, 2 * j + off)] = blk[(i, j)];
            }
        }
    }
    Ok(m)
}
