//! Conditional squeezing of a mechanical oscillator by a blue-detuned
//! optomechanical pulse followed by homodyne detection of a temporal mode of
//! the leaking light.
//!
//! The pipeline is linear-Gaussian throughout:
//! [`propagator`] builds `M(s) = exp(A s)`, [`modes`] selects the detected
//! temporal mode, [`covariance`] assembles the joint covariance of that mode
//! and the mechanics, [`conditioning`] applies the homodyne update, and
//! [`harness`] drives parameter sweeps.

// `!(x > tol)` is used on purpose so that NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cm;
pub mod conditioning;
pub mod covariance;
pub mod error;
pub mod harness;
pub mod modes;
pub mod params;
pub mod propagator;
pub mod quadrature;

pub use cm::{physicality_check, JointCM, Physicality};
pub use conditioning::{condition_homodyne, phase_scan, squeezing_db, ConditionalResult};
pub use covariance::{apply_loss, binned_oracle, filtered_state, FilteredState};
pub use error::{Error, Result};
pub use modes::{gain, mode_overlap, GainReport, ModeKind, TemporalMode};
pub use params::{NoiseSpec, SystemParams};
pub use propagator::{analytic_m13, build_drift, propagate, DriftMatrix, Propagator};
