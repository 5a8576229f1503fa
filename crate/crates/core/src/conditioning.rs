//! Homodyne conditioning of the mechanics on the filtered output mode.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::cm::{eig2_sym, JointCM};
use crate::error::{Error, Result};

/// Measured-quadrature variances at or below this are rejected.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalResult {
    #[serde(serialize_with = "ser_matrix2")]
    pub v_cond: Matrix2<f64>,
    /// Smaller eigenvalue of `v_cond`, in vacuum units.
    pub sigma_cond: f64,
    /// Larger eigenvalue of `v_cond`.
    pub sigma_anti: f64,
    pub s_cond_db: f64,
    pub theta: f64,
    /// Orientation of the squeezed eigenvector in the `(X_m, Y_m)` plane, in `(-pi/2, pi/2]`.
    pub principal_angle: f64,
}

fn ser_matrix2<S: serde::Serializer>(
    m: &Matrix2<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]].serialize(s)
}

fn quadrature_direction(theta: f64) -> Vector2<f64> {
    Vector2::new(theta.cos(), theta.sin())
}

fn wrap_half_pi(angle: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut a = angle;
    while a <= -FRAC_PI_2 {
        a += PI;
    }
    while a > FRAC_PI_2 {
        a -= PI;
    }
    a
}

fn result_from(v: Matrix2<f64>, theta: f64) -> Result<ConditionalResult> {
    let v = (v + v.transpose()) * 0.5;
    let [lo, hi] = eig2_sym(&v);
    let major = 0.5 * (2.0 * v[(0, 1)]).atan2(v[(0, 0)] - v[(1, 1)]);
    Ok(ConditionalResult {
        v_cond: v,
        sigma_cond: lo,
        sigma_anti: hi,
        s_cond_db: squeezing_db(lo)?,
        theta,
        principal_angle: wrap_half_pi(major + std::f64::consts::FRAC_PI_2),
    })
}

/// Mechanical CM after homodyne detection of `X_theta = X cos(theta) + Y sin(theta)`
/// of the optical mode: rotate the optical basis, then take the rank-one Schur
/// complement on the amplitude quadrature.
pub fn condition_homodyne(v: &JointCM, theta: f64) -> Result<ConditionalResult> {
    let dir = quadrature_direction(theta);
    let var = dir.dot(&(v.v_out * dir));
    if !(var > DEGENERACY_TOL) {
        return Err(Error::DegenerateMeasurement { variance: var });
    }
    // row of the rotated cross block that belongs to the measured quadrature
    let c = v.v_c.transpose() * dir;
    result_from(v.v_m - c * c.transpose() / var, theta)
}

/// Same update written with the Moore-Penrose pseudoinverse of the projected
/// optical block, `V_m - V_c^T (Pi V_out Pi)^+ V_c`.
pub fn condition_homodyne_pinv(v: &JointCM, theta: f64) -> Result<ConditionalResult> {
    let dir = quadrature_direction(theta);
    let proj = dir * dir.transpose();
    let projected = proj * v.v_out * proj;
    if !(projected.norm() > DEGENERACY_TOL) {
        return Err(Error::DegenerateMeasurement {
            variance: projected.norm(),
        });
    }
    let pinv = projected
        .pseudo_inverse(DEGENERACY_TOL * projected.norm().max(1.0))
        .map_err(|_| Error::DegenerateMeasurement {
            variance: projected.norm(),
        })?;
    result_from(v.v_m - v.v_c.transpose() * pinv * v.v_c, theta)
}

/// `S = max(0, -20 log10(sigma))`.
pub fn squeezing_db(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma_cond",
            value: sigma,
            reason: "conditional variance must be positive",
        });
    }
    Ok((-20.0 * sigma.log10()).max(0.0))
}

pub fn phase_scan(v: &JointCM, thetas: &[f64]) -> Result<Vec<ConditionalResult>> {
    thetas.iter().map(|&t| condition_homodyne(v, t)).collect()
}

/// Conditional mechanical CM for the ideal adiabatic two-mode squeezer after
/// detecting the amplitude quadrature.
pub fn adiabatic_conditional_cm(gain: f64, n0: f64) -> Matrix2<f64> {
    let m0 = 2.0 * n0 + 1.0;
    Matrix2::new(
        m0 / (gain + (gain - 1.0) * m0),
        0.0,
        0.0,
        2.0 * gain * (n0 + 1.0) - 1.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{apply_loss, two_mode_squeezed_thermal};
    use std::f64::consts::PI;

    #[test]
    fn uncorrelated_mode_leaves_mechanics_alone() {
        let vm = Matrix2::new(3.0, 0.4, 0.4, 2.0);
        let v = JointCM::from_blocks(Matrix2::new(2.0, 0.1, 0.1, 5.0), Matrix2::zeros(), vm);
        for theta in [0.0, 0.3, 1.2, PI] {
            let r = condition_homodyne(&v, theta).unwrap();
            assert!((r.v_cond - vm).amax() < 1e-15);
        }
    }

    #[test]
    fn adiabatic_gain_two_ground_state() {
        let v = two_mode_squeezed_thermal(2.0, 0.0);
        let r = condition_homodyne(&v, 0.0).unwrap();
        assert!((r.v_cond - Matrix2::new(1.0 / 3.0, 0.0, 0.0, 3.0)).amax() < 1e-14);
        assert!((r.sigma_cond - 1.0 / 3.0).abs() < 1e-14);
        assert!((r.s_cond_db - 9.542425094393248).abs() < 1e-9);
        assert!(r.principal_angle.abs() < 1e-12);
        assert!((r.v_cond - adiabatic_conditional_cm(2.0, 0.0)).amax() < 1e-14);
    }

    #[test]
    fn adiabatic_high_occupation_limit() {
        let n0 = 1e4;
        let r = condition_homodyne(&two_mode_squeezed_thermal(3.0, n0), 0.0).unwrap();
        assert!((r.v_cond[(0, 0)] - 0.5).abs() < 1e-4 * 0.5);
        assert!((r.v_cond[(1, 1)] - 6e4).abs() < 1e-3 * 6e4);
    }

    #[test]
    fn squeezing_db_values() {
        assert_eq!(squeezing_db(1.0).unwrap(), 0.0);
        assert!((squeezing_db(1.0 / 3.0).unwrap() - 9.542).abs() < 1e-3);
        assert_eq!(squeezing_db(2.0).unwrap(), 0.0);
        assert!(squeezing_db(0.0).is_err());
        assert!(squeezing_db(-1.0).is_err());
        assert!(squeezing_db(f64::NAN).is_err());
    }

    #[test]
    fn phase_scan_is_phase_insensitive_for_tms() {
        let v = two_mode_squeezed_thermal(2.5, 3.0);
        let rs = phase_scan(&v, &[0.0, PI / 4.0, PI / 2.0, PI]).unwrap();
        for r in &rs {
            assert!((r.sigma_cond - rs[0].sigma_cond).abs() < 1e-8 * rs[0].sigma_cond);
            assert!((r.sigma_anti - rs[0].sigma_anti).abs() < 1e-8 * rs[0].sigma_anti);
        }
        // theta and theta + pi give the same state
        assert!((rs[3].v_cond - rs[0].v_cond).amax() < 1e-12);
        // squeezed axis rotates with the measured quadrature
        assert!(
            (rs[1].principal_angle + PI / 4.0).abs() < 1e-9
                || (rs[1].principal_angle - PI / 4.0).abs() < 1e-9
        );
    }

    #[test]
    fn pseudoinverse_path_agrees() {
        let v = apply_loss(&two_mode_squeezed_thermal(2.7, 12.0), 0.8).unwrap();
        for theta in [0.0, 0.4, 1.1, 2.0, 3.0] {
            let a = condition_homodyne(&v, theta).unwrap();
            let b = condition_homodyne_pinv(&v, theta).unwrap();
            assert!((a.v_cond - b.v_cond).amax() < 1e-10 * a.v_cond.amax());
        }
    }

    #[test]
    fn explicit_limit_of_general_measurement() {
        // V_m - V_c^T (V_out + D_theta)^{-1} V_c with D_theta = R(-theta) diag(d, 1/d) R(-theta)^T, d -> 0
        let v = apply_loss(&two_mode_squeezed_thermal(2.2, 1.0), 0.9).unwrap();
        for theta in [0.0f64, 0.7, 2.5] {
            let (c, s) = (theta.cos(), theta.sin());
            let r = Matrix2::new(c, -s, s, c);
            let exact = condition_homodyne(&v, theta).unwrap().v_cond;
            let mut prev = f64::INFINITY;
            for d in [1e-2, 1e-4, 1e-6] {
                let dm = r * Matrix2::new(d, 0.0, 0.0, 1.0 / d) * r.transpose();
                let inv = (v.v_out + dm).try_inverse().unwrap();
                let approx = v.v_m - v.v_c.transpose() * inv * v.v_c;
                let err = (approx - exact).amax();
                assert!(err < prev);
                prev = err;
            }
            assert!(prev < 1e-4);
        }
    }

    #[test]
    fn degenerate_measurement_rejected() {
        let v = JointCM::from_blocks(
            Matrix2::new(0.0, 0.0, 0.0, 1.0),
            Matrix2::zeros(),
            Matrix2::identity(),
        );
        assert!(matches!(
            condition_homodyne(&v, 0.0),
            Err(Error::DegenerateMeasurement { .. })
        ));
        assert!(condition_homodyne(&v, PI / 2.0).is_ok());
    }

    #[test]
    fn conditioning_never_raises_the_small_eigenvalue() {
        for (g, n0, eta) in [(1.5, 0.0, 1.0), (3.0, 10.0, 0.5), (1.1, 1e3, 0.9)] {
            let v = apply_loss(&two_mode_squeezed_thermal(g, n0), eta).unwrap();
            let r = condition_homodyne(&v, 0.3).unwrap();
            assert!(r.sigma_cond <= eig2_sym(&v.v_m)[0] + 1e-12);
            assert!(r.v_cond.determinant() >= 1.0 - 1e-9);
        }
    }
}
