//! Cross-check of the closed-form joint CM against the time-binned
//! simulation over parameter sets from the adiabatic to the strongly
//! non-adiabatic regime.

use serde::Serialize;

use crate::covariance::{binned_oracle, filtered_state};
use crate::error::Result;
use crate::modes::optimal_output_mode;
use crate::params::SystemParams;
use crate::propagator::Propagator;

/// `(g/kappa, gamma/kappa, kappa tau)`.
pub const ORACLE_SETS: [(f64, f64, f64); 5] = [
    (0.1, 0.0, 40.0),
    (0.15, 1e-4, 20.0),
    (0.3, 1e-3, 10.0),
    (0.62, 2.8e-10, 8.0),
    (1.0, 0.1, 4.0),
];

/// Occupation used for every set.
pub const ORACLE_NBAR: f64 = 10.0;
pub const ORACLE_BINS: usize = 1 << 14;
/// Bound on [`crate::cm::JointCM::max_relative_deviation`].
pub const ORACLE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub g_over_kappa: f64,
    pub gamma_over_kappa: f64,
    pub kappa_tau: f64,
    pub gain: f64,
    pub deviation: f64,
    pub min_symplectic: f64,
    pub passed: bool,
}

pub fn oracle_check(set: (f64, f64, f64), n_bins: usize) -> Result<OracleCheck> {
    let (g, gamma, kt) = set;
    let p = SystemParams::dimensionless(g, gamma, kt)?.with_nbar(ORACLE_NBAR)?;
    let prop = Propagator::new(&p);
    let mode = optimal_output_mode(&prop, kt)?;
    let state = filtered_state(&p, &mode)?;
    let oracle = binned_oracle(&p, &mode, n_bins)?;
    let deviation = state.cm.max_relative_deviation(&oracle);
    let phys = state.cm.physicality();
    Ok(OracleCheck {
        g_over_kappa: g,
        gamma_over_kappa: gamma,
        kappa_tau: kt,
        gain: crate::modes::gain(&prop, kt).gain,
        deviation,
        min_symplectic: phys.min_symplectic,
        passed: deviation <= ORACLE_TOL && phys.physical,
    })
}

/// All sets at [`ORACLE_BINS`] bins, evaluated in parallel.
pub fn oracle_suite() -> Result<Vec<OracleCheck>> {
    use rayon::prelude::*;
    ORACLE_SETS
        .par_iter()
        .map(|&s| oracle_check(s, ORACLE_BINS))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_oracle_converges_towards_closed_form() {
        // First order in the bin width: doubling the bins should roughly
        // halve the deviation.
        let set = ORACLE_SETS[4];
        let a = oracle_check(set, 512).unwrap().deviation;
        let b = oracle_check(set, 1024).unwrap().deviation;
        assert!(b < 0.6 * a && b > 0.4 * a, "{a} {b}");
    }
}
