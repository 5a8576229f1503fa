//! Joint covariance of the filtered output mode and the mechanics at `tau`.
//!
//! Every entry of the joint CM is a covariance between two linear functionals
//! of the initial quadratures `u(0)` and of the white input noises `n(s)`:
//!
//! * filtered output `X_out^i = -int f n_i + sqrt(2k) sum_j u_j(0) int f M_ij
//!   + sqrt(2k) int n_k(s) H_ik(s) ds`, `H_ik(s) = int_s^tau f(s') M_ik(s'-s) sqrt(2K_k) ds'`
//! * mechanics `u_m(tau) = sum_j M_mj(tau) u_j(0) + int M_mk(tau-s) sqrt(2K_k) n_k(s) ds`
//!
//! Writing `M(s) = sum_l exp(mu_l s) q_l q_l^T` reduces all of them to a
//! handful of scalar integrals over the mode profile, collected in
//! [`ModeIntegrals`]. Those are evaluated either with the inner integrals in
//! closed form (profiles known as exponential sums) or on the sample grid
//! with a Richardson check.

use nalgebra::{Matrix2, SMatrix, SVector};
use serde::Serialize;

use crate::cm::JointCM;
use crate::error::{Error, Result};
use crate::modes::{ExpSum, TemporalMode, PANEL_WIDTH};
use crate::params::{NoiseSpec, SystemParams};
use crate::propagator::Propagator;
use crate::quadrature::{psi, trapezoid, PanelRule};

/// Largest accepted relative change of the grid-path CM between the sample
/// grid and its every-other-point subgrid.
pub const REFINEMENT_TOL: f64 = 1e-4;

/// Joint CM together with the detection mode that produced it.
#[derive(Debug, Clone)]
pub struct FilteredState {
    pub cm: JointCM,
    pub mode: TemporalMode,
    pub params: SystemParams,
    /// Relative CM change at 2x grid refinement (0 when evaluated in closed form).
    pub refinement_change: f64,
}

/// Scalar integrals over the profile `f` and the drift eigenvalues `mu_l`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct ModeIntegrals {
    /// `int f^2`
    ff: f64,
    /// `int f(s) e^{mu_l s}`
    fwd: [f64; 4],
    /// `int f(s) e^{mu_l (tau - s)}`
    bwd: [f64; 4],
    /// `int f h_l`, `h_l(s) = int_s^tau f(s') e^{mu_l (s' - s)} ds'`
    fh: [f64; 4],
    /// `int h_l h_l'`
    hh: [[f64; 4]; 4],
    /// `int h_l(s) e^{mu_l' (tau - s)}`
    hb: [[f64; 4]; 4],
}

impl ModeIntegrals {
    fn combine(&self, other: &Self, a: f64, b: f64) -> Self {
        let mix = |x: f64, y: f64| a * x + b * y;
        let mut out = Self {
            ff: mix(self.ff, other.ff),
            ..Default::default()
        };
        for l in 0..4 {
            out.fwd[l] = mix(self.fwd[l], other.fwd[l]);
            out.bwd[l] = mix(self.bwd[l], other.bwd[l]);
            out.fh[l] = mix(self.fh[l], other.fh[l]);
            for m in 0..4 {
                out.hh[l][m] = mix(self.hh[l][m], other.hh[l][m]);
                out.hb[l][m] = mix(self.hb[l][m], other.hb[l][m]);
            }
        }
        out
    }

    /// Inner integrals in closed form, outer ones by composite Gauss-Legendre.
    fn closed_form(prop: &Propagator, f: &ExpSum, tau: f64) -> Self {
        let mus: [f64; 4] = std::array::from_fn(|l| prop.modes()[l].mu);
        let mut out = Self {
            ff: f.inner(f, tau),
            ..Default::default()
        };
        for (l, &mu) in mus.iter().enumerate() {
            out.fwd[l] = f.terms.iter().map(|&(c, nu)| c * psi(nu + mu, tau)).sum();
            out.bwd[l] = f
                .terms
                .iter()
                .map(|&(c, nu)| c * crate::quadrature::chi(nu, mu, tau))
                .sum();
        }
        let rule = PanelRule::new(tau, PANEL_WIDTH);
        let nodes = rule.nodes();
        let fvals: Vec<f64> = nodes.iter().map(|&s| f.eval(s)).collect();
        let h: Vec<Vec<f64>> = mus
            .iter()
            .map(|&mu| {
                nodes
                    .iter()
                    .map(|&s| {
                        f.terms
                            .iter()
                            .map(|&(c, nu)| c * (nu * s).exp() * psi(nu + mu, tau - s))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let back: Vec<Vec<f64>> = mus
            .iter()
            .map(|&mu| nodes.iter().map(|&s| (mu * (tau - s)).exp()).collect())
            .collect();
        let w = rule.weights();
        for l in 0..4 {
            out.fh[l] = (0..nodes.len()).map(|n| w[n] * fvals[n] * h[l][n]).sum();
            for m in 0..4 {
                out.hh[l][m] = (0..nodes.len()).map(|n| w[n] * h[l][n] * h[m][n]).sum();
                out.hb[l][m] = (0..nodes.len()).map(|n| w[n] * h[l][n] * back[m][n]).sum();
            }
        }
        out
    }

    /// Trapezoid on every `stride`-th grid sample, with `h_l` accumulated by
    /// the matching trapezoid recursion from `tau` backwards.
    fn on_grid(prop: &Propagator, mode: &TemporalMode, stride: usize) -> Self {
        let grid = mode.grid();
        let tau = grid.tau();
        let dt = grid.dt() * stride as f64;
        let idx: Vec<usize> = (0..grid.len()).step_by(stride).collect();
        let times: Vec<f64> = idx.iter().map(|&i| grid.time(i)).collect();
        let f: Vec<f64> = idx.iter().map(|&i| mode.values()[i]).collect();
        let n = f.len();
        let mus: [f64; 4] = std::array::from_fn(|l| prop.modes()[l].mu);

        let mut out = Self {
            ff: trapezoid(&f.iter().map(|v| v * v).collect::<Vec<_>>(), dt),
            ..Default::default()
        };
        let mut h = vec![vec![0.0; n]; 4];
        let mut back = vec![vec![0.0; n]; 4];
        for (l, &mu) in mus.iter().enumerate() {
            let decay = (mu * dt).exp();
            for k in (0..n - 1).rev() {
                h[l][k] = decay * h[l][k + 1] + 0.5 * dt * (f[k] + decay * f[k + 1]);
            }
            for k in 0..n {
                back[l][k] = (mu * (tau - times[k])).exp();
            }
            let fwd: Vec<f64> = (0..n).map(|k| f[k] * (mu * times[k]).exp()).collect();
            let bwd: Vec<f64> = (0..n).map(|k| f[k] * back[l][k]).collect();
            let fh: Vec<f64> = (0..n).map(|k| f[k] * h[l][k]).collect();
            out.fwd[l] = trapezoid(&fwd, dt);
            out.bwd[l] = trapezoid(&bwd, dt);
            out.fh[l] = trapezoid(&fh, dt);
        }
        for l in 0..4 {
            for m in 0..4 {
                let hh: Vec<f64> = (0..n).map(|k| h[l][k] * h[m][k]).collect();
                let hb: Vec<f64> = (0..n).map(|k| h[l][k] * back[m][k]).collect();
                out.hh[l][m] = trapezoid(&hh, dt);
                out.hb[l][m] = trapezoid(&hb, dt);
            }
        }
        out
    }
}

/// `sqrt(2 K_k)` in units of sqrt(kappa).
fn noise_gain(p: &SystemParams) -> [f64; 4] {
    p.damping().map(|k| (2.0 * k).sqrt())
}

#[allow(clippy::needless_range_loop)]
fn mechanical_block_impl(prop: &Propagator, noise: &NoiseSpec, tau: f64) -> Matrix2<f64> {
    let modes = prop.modes();
    let d = noise_gain(prop.params());
    let m_tau = prop.sample_unchecked(tau);
    let mut v = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            let (ma, mb) = (a + 2, b + 2);
            let mut acc = 0.0;
            for j in 0..4 {
                acc += noise.sigma0[j] * m_tau[(ma, j)] * m_tau[(mb, j)];
            }
            for k in 0..4 {
                let mut s = 0.0;
                for l in modes {
                    for l2 in modes {
                        s += l.projector(ma, k) * l2.projector(mb, k) * psi(l.mu + l2.mu, tau);
                    }
                }
                acc += noise.sigma_in[k] * d[k] * d[k] * s;
            }
            v[(a, b)] = acc;
        }
    }
    (v + v.transpose()) * 0.5
}

#[allow(clippy::needless_range_loop)]
fn assemble(prop: &Propagator, noise: &NoiseSpec, tau: f64, it: &ModeIntegrals) -> JointCM {
    let modes = prop.modes();
    let d = noise_gain(prop.params());
    let sqrt2 = std::f64::consts::SQRT_2;
    let m_tau = prop.sample_unchecked(tau);

    // loading of the filtered output quadrature i on u_j(0)
    let c_out = |i: usize, j: usize| -> f64 {
        sqrt2
            * (0..4)
                .map(|l| modes[l].projector(i, j) * it.fwd[l])
                .sum::<f64>()
    };

    let mut v_out = Matrix2::zeros();
    for i in 0..2 {
        for i2 in 0..2 {
            let mut acc = 0.0;
            for j in 0..4 {
                acc += noise.sigma0[j] * c_out(i, j) * c_out(i2, j);
            }
            for k in 0..4 {
                let mut w = 0.0;
                if i == k && i2 == k {
                    w += it.ff;
                }
                if i == k {
                    w -= sqrt2
                        * d[k]
                        * (0..4)
                            .map(|l| modes[l].projector(i2, k) * it.fh[l])
                            .sum::<f64>();
                }
                if i2 == k {
                    w -= sqrt2
                        * d[k]
                        * (0..4)
                            .map(|l| modes[l].projector(i, k) * it.fh[l])
                            .sum::<f64>();
                }
                let mut s = 0.0;
                for l in 0..4 {
                    for l2 in 0..4 {
                        s += modes[l].projector(i, k) * modes[l2].projector(i2, k) * it.hh[l][l2];
                    }
                }
                w += 2.0 * d[k] * d[k] * s;
                acc += noise.sigma_in[k] * w;
            }
            v_out[(i, i2)] = acc;
        }
    }

    let mut v_c = Matrix2::zeros();
    for i in 0..2 {
        for b in 0..2 {
            let m = b + 2;
            let mut acc = 0.0;
            for j in 0..4 {
                acc += noise.sigma0[j] * c_out(i, j) * m_tau[(m, j)];
            }
            for k in 0..4 {
                let mut w = 0.0;
                if i == k {
                    w -= d[k]
                        * (0..4)
                            .map(|l| modes[l].projector(m, k) * it.bwd[l])
                            .sum::<f64>();
                }
                let mut s = 0.0;
                for l in 0..4 {
                    for l2 in 0..4 {
                        s += modes[l].projector(i, k) * modes[l2].projector(m, k) * it.hb[l][l2];
                    }
                }
                w += sqrt2 * d[k] * d[k] * s;
                acc += noise.sigma_in[k] * w;
            }
            v_c[(i, b)] = acc;
        }
    }

    JointCM::from_blocks(v_out, v_c, mechanical_block_impl(prop, noise, tau))
}

fn max_rel_change(a: &JointCM, b: &JointCM) -> f64 {
    let (a, b) = (a.matrix(), b.matrix());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / x.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Lossless joint CM of the mode `f` of the output light and the mechanics.
pub fn filtered_state(p: &SystemParams, mode: &TemporalMode) -> Result<FilteredState> {
    let tau = p.kappa_tau();
    if (mode.tau() - tau).abs() > 1e-12 * tau {
        return Err(Error::InvalidMode(format!(
            "mode covers tau = {} but the pulse lasts {}",
            mode.tau(),
            tau
        )));
    }
    let prop = Propagator::new(p);
    let noise = p.noise();
    let (cm, refinement_change) = match mode.analytic() {
        Some(f) => (
            assemble(
                &prop,
                &noise,
                tau,
                &ModeIntegrals::closed_form(&prop, f, tau),
            ),
            0.0,
        ),
        None => {
            let fine = ModeIntegrals::on_grid(&prop, mode, 1);
            let coarse = ModeIntegrals::on_grid(&prop, mode, 2);
            let change = max_rel_change(
                &assemble(&prop, &noise, tau, &fine),
                &assemble(&prop, &noise, tau, &coarse),
            );
            if !(change <= REFINEMENT_TOL) {
                return Err(Error::QuadratureNotConverged { rel_change: change });
            }
            let extrapolated = fine.combine(&coarse, 4.0 / 3.0, -1.0 / 3.0);
            (assemble(&prop, &noise, tau, &extrapolated), change)
        }
    };
    Ok(FilteredState {
        cm,
        mode: mode.clone(),
        params: *p,
        refinement_change,
    })
}

/// Mechanical covariance at `tau`, the lower-right block of the solution of
/// `dV/dt = A V + V A^T + 2 K sigma_in`, `V(0) = sigma_0`.
pub fn mechanical_block(p: &SystemParams) -> Matrix2<f64> {
    mechanical_block_impl(&Propagator::new(p), &p.noise(), p.kappa_tau())
}

pub fn output_block(p: &SystemParams, mode: &TemporalMode) -> Result<Matrix2<f64>> {
    Ok(filtered_state(p, mode)?.cm.v_out)
}

pub fn cross_block(p: &SystemParams, mode: &TemporalMode) -> Result<Matrix2<f64>> {
    Ok(filtered_state(p, mode)?.cm.v_c)
}

/// Detection-chain loss on the output mode: a beam splitter of transmittance
/// `eta` mixing in vacuum.
pub fn apply_loss(v: &JointCM, eta: f64) -> Result<JointCM> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            reason: "must lie in [0, 1]",
        });
    }
    Ok(JointCM::from_blocks(
        v.v_out * eta + Matrix2::identity() * (1.0 - eta),
        v.v_c * eta.sqrt(),
        v.v_m,
    ))
}

/// Ideal two-mode squeezed state of light and a thermal oscillator produced
/// by the adiabatic Bogoliubov map with gain `gain` from `n0` quanta.
pub fn two_mode_squeezed_thermal(gain: f64, n0: f64) -> JointCM {
    let m0 = 2.0 * n0 + 1.0;
    let out = gain + (gain - 1.0) * m0;
    let mech = gain * m0 + gain - 1.0;
    let c = 2.0 * (gain * (gain - 1.0)).sqrt() * (n0 + 1.0);
    JointCM::from_blocks(
        Matrix2::identity() * out,
        Matrix2::new(c, 0.0, 0.0, -c),
        Matrix2::identity() * mech,
    )
}

type M6 = SMatrix<f64, 6, 6>;

/// Independent reference for the joint CM: the pulse is cut into `n_bins`
/// slots, the state `u` advances by the exact per-slot propagator, and the
/// filtered output `sum_k f(t_k) [-sqrt(dt) xi_k + sqrt(2 kappa) u_k dt]` is
/// accumulated alongside it. First order in the slot width, including in the
/// uncertainty relation: the result can undershoot it by O(dt).
pub fn binned_oracle(p: &SystemParams, mode: &TemporalMode, n_bins: usize) -> Result<JointCM> {
    let tau = p.kappa_tau();
    if n_bins == 0 {
        return Err(Error::InvalidParameter {
            name: "n_bins",
            value: 0.0,
            reason: "must be positive",
        });
    }
    let dt = tau / n_bins as f64;
    let prop = Propagator::new(p);
    let phi = prop.sample_unchecked(dt);
    let noise = p.noise();
    let d = noise_gain(p);
    let sqrt2 = std::f64::consts::SQRT_2;

    let mut cov = M6::zeros();
    for j in 0..4 {
        cov[(j, j)] = noise.sigma0[j];
    }
    let sig_in = SVector::<f64, 4>::from(noise.sigma_in);
    let mut t_mat = M6::identity();
    t_mat.fixed_view_mut::<4, 4>(0, 0).copy_from(&phi);
    let mut b = SMatrix::<f64, 6, 4>::zeros();
    for j in 0..4 {
        for k in 0..4 {
            b[(j, k)] = phi[(j, k)] * d[k] * dt.sqrt();
        }
    }
    for k in 0..n_bins {
        let fk = mode.eval(k as f64 * dt);
        for i in 0..2 {
            t_mat[(4 + i, i)] = sqrt2 * fk * dt;
            b[(4 + i, i)] = -fk * dt.sqrt();
        }
        let noise_cov = b * SMatrix::<f64, 4, 4>::from_diagonal(&sig_in) * b.transpose();
        cov = t_mat * cov * t_mat.transpose() + noise_cov;
    }
    let pick = [4usize, 5, 2, 3];
    let v = nalgebra::Matrix4::from_fn(|r, c| cov[(pick[r], pick[c])]);
    JointCM::from_matrix(&((v + v.transpose()) * 0.5))
}

/// JSON form of a CM: parameters, blocks row-major, symplectic eigenvalues.
#[derive(Debug, Clone, Serialize)]
pub struct CmExport {
    pub params: SystemParams,
    pub v_out: [f64; 4],
    pub v_c: [f64; 4],
    pub v_m: [f64; 4],
    pub symplectic_eigenvalues: [f64; 2],
}

fn row_major(m: &Matrix2<f64>) -> [f64; 4] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

impl CmExport {
    pub fn new(params: &SystemParams, cm: &JointCM) -> Self {
        Self {
            params: *params,
            v_out: row_major(&cm.v_out),
            v_c: row_major(&cm.v_c),
            v_m: row_major(&cm.v_m),
            symplectic_eigenvalues: cm.symplectic_eigenvalues(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
