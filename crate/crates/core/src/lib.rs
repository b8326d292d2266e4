//! Simulation and verification toolkit for continuous-variable quantum
//! cloning onto cavity polaritons.
//!
//! The crate has two independent computational layers that check each other:
//!
//! - [`gaussian`]: a moment engine for multimode Gaussian states evolved
//!   through Bogoliubov (linear) mode transformations. All protocol-level
//!   statistics come from here.
//! - [`fock`]: a dense truncated-Fock-space oracle that builds the same
//!   states and unitaries exactly (up to truncation) and recomputes every
//!   moment from first principles.
//!
//! On top of those, [`polariton`] carries the closed-form cavity model
//! (photon dispersion, Hopfield coefficients, branch energies), [`cloning`]
//! implements the amplifier + mode-mixer cloning pipeline with its spin
//! ensemble input and readout stage, and [`validation`] bundles the
//! cross-checks between the layers into a reportable suite.
//!
//! Quadrature convention throughout: `Q = a + a†`, `P = i(a† − a)`, so the
//! vacuum has `Var Q = Var P = 1` and a coherent state of amplitude γ has
//! means `(2 Re γ, 2 Im γ)`.

// Validation guards are written `!(x > 0.0)` rather than `x <= 0.0` so that
// NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloning;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod polariton;
pub mod validation;

use thiserror::Error;

/// Error type shared by all modules of this crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter is outside the domain an operation is defined on.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Two objects that must live on the same mode register do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A Fock space would exceed the configured amplitude cap.
    #[error("state space too large: requires {required} amplitudes, cap is {cap}")]
    CapExceeded { required: usize, cap: usize },
    /// A request that is representable but deliberately not supported.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use cloning::{
    fidelity, run_cloning, spin_mode_moments, CloneParams, CloneReport, CloneStats, SpinEnsemble,
};
pub use gaussian::{BogoliubovMap, GaussianState, ModeMoments};
pub use polariton::{CavityParams, HopfieldPair};
