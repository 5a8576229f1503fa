//! Two-mode Gaussian covariance matrices over `(X_out, Y_out, X_m, Y_m)`.
//!
//! Quadratures are normalized as `X = a + a^dag`, `Y = (a - a^dag)/i`, so
//! `[X, Y] = 2i` and the vacuum has unit variance.

use nalgebra::{Matrix2, Matrix4};
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on the smallest symplectic eigenvalue below 1.
pub const PHYSICALITY_TOL: f64 = 1e-9;
/// Relative tolerance on `|V - V^T|` accepted by [`physicality_check`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Joint covariance matrix in block form `[[v_out, v_c], [v_c^T, v_m]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointCM {
    pub v_out: Matrix2<f64>,
    pub v_c: Matrix2<f64>,
    pub v_m: Matrix2<f64>,
}

fn symmetrize2(m: Matrix2<f64>) -> Matrix2<f64> {
    (m + m.transpose()) * 0.5
}

impl JointCM {
    /// Diagonal blocks are symmetrized on assembly.
    pub fn from_blocks(v_out: Matrix2<f64>, v_c: Matrix2<f64>, v_m: Matrix2<f64>) -> Self {
        Self {
            v_out: symmetrize2(v_out),
            v_c,
            v_m: symmetrize2(v_m),
        }
    }

    /// Split a full 4x4 matrix, rejecting it when it is not symmetric.
    pub fn from_matrix(v: &Matrix4<f64>) -> Result<Self> {
        check_symmetric(v)?;
        let v = (v + v.transpose()) * 0.5;
        Ok(Self {
            v_out: v.fixed_view::<2, 2>(0, 0).into_owned(),
            v_c: v.fixed_view::<2, 2>(0, 2).into_owned(),
            v_m: v.fixed_view::<2, 2>(2, 2).into_owned(),
        })
    }

    pub fn identity() -> Self {
        Self::from_blocks(Matrix2::identity(), Matrix2::zeros(), Matrix2::identity())
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        let mut v = Matrix4::zeros();
        v.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.v_out);
        v.fixed_view_mut::<2, 2>(0, 2).copy_from(&self.v_c);
        v.fixed_view_mut::<2, 2>(2, 0)
            .copy_from(&self.v_c.transpose());
        v.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.v_m);
        v
    }

    /// Symplectic eigenvalues `(nu_minus, nu_plus)`, ascending.
    pub fn symplectic_eigenvalues(&self) -> [f64; 2] {
        // Two-mode invariants: Delta = det A + det B + 2 det C, nu_+^2 nu_-^2 = det V.
        let delta =
            self.v_out.determinant() + self.v_m.determinant() + 2.0 * self.v_c.determinant();
        let det = self.matrix().determinant();
        let disc = (delta * delta - 4.0 * det).max(0.0);
        if disc.sqrt() < 1e-4 * delta.abs() {
            // Near-degenerate pair: the square root above amplifies rounding
            // to ~sqrt(eps), so use a symmetric eigenproblem instead.
            if let Some(nu) = self.symplectic_eigenvalues_sym() {
                return nu;
            }
        }
        let nu_plus_sq = 0.5 * (delta + disc.sqrt());
        let nu_minus_sq = if nu_plus_sq > 0.0 {
            det / nu_plus_sq
        } else {
            0.0
        };
        [nu_minus_sq.max(0.0).sqrt(), nu_plus_sq.max(0.0).sqrt()]
    }

    /// `K = V^{1/2} Omega V^{1/2}` is antisymmetric with eigenvalues `+-i nu`,
    /// so `K^T K` is symmetric with eigenvalues `nu^2`. Needs `V > 0`.
    fn symplectic_eigenvalues_sym(&self) -> Option<[f64; 2]> {
        let eig = self.matrix().symmetric_eigen();
        if eig.eigenvalues.min() <= 0.0 {
            return None;
        }
        let sqrt_v = eig.eigenvectors
            * Matrix4::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let k = sqrt_v * symplectic_form() * sqrt_v;
        let nu_sq = (k.transpose() * k).symmetric_eigenvalues();
        Some([nu_sq.min().max(0.0).sqrt(), nu_sq.max().max(0.0).sqrt()])
    }

    /// Largest entrywise deviation from `reference`, relative to
    /// `max(|reference entry|, 1)` so that near-zero entries are compared
    /// against the vacuum scale.
    pub fn max_relative_deviation(&self, reference: &JointCM) -> f64 {
        let (a, b) = (self.matrix(), reference.matrix());
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
            .fold(0.0, f64::max)
    }

    pub fn physicality(&self) -> Physicality {
        let nu = self.symplectic_eigenvalues();
        Physicality {
            physical: nu[0] >= 1.0 - PHYSICALITY_TOL,
            min_symplectic: nu[0],
            max_asymmetry: 0.0,
        }
    }
}

/// Outcome of a physicality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Physicality {
    pub physical: bool,
    pub min_symplectic: f64,
    pub max_asymmetry: f64,
}

fn max_asymmetry(v: &Matrix4<f64>) -> f64 {
    (v - v.transpose()).amax()
}

fn check_symmetric(v: &Matrix4<f64>) -> Result<f64> {
    let asym = max_asymmetry(v);
    if asym > SYMMETRY_TOL * v.amax().max(1.0) || !asym.is_finite() {
        return Err(Error::NonSymmetric {
            max_asymmetry: asym,
        });
    }
    Ok(asym)
}

/// Check `V + i Omega >= 0` through the smallest symplectic eigenvalue.
pub fn physicality_check(v: &Matrix4<f64>) -> Result<Physicality> {
    let asym = check_symmetric(v)?;
    let cm = JointCM::from_matrix(v)?;
    Ok(Physicality {
        max_asymmetry: asym,
        ..cm.physicality()
    })
}

/// Symplectic form for `[X, Y] = 2i` ordering `(X1, Y1, X2, Y2)` (without the factor 2).
pub fn symplectic_form() -> Matrix4<f64> {
    let mut o = Matrix4::zeros();
    o[(0, 1)] = 1.0;
    o[(1, 0)] = -1.0;
    o[(2, 3)] = 1.0;
    o[(3, 2)] = -1.0;
    o
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending, by the closed form.
pub fn eig2_sym(m: &Matrix2<f64>) -> [f64; 2] {
    let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mean = 0.5 * (a + c);
    let r = (0.5 * (a - c)).hypot(b);
    let hi = mean + r;
    // det / hi avoids cancellation for the small eigenvalue
    let lo = if hi.abs() > 0.0 && mean > 0.0 {
        (a * c - b * b) / hi
    } else {
        mean - r
    };
    [lo, hi]
}
