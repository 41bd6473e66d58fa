//! Fourier-based correlation witnesses for two-qudit and multi-qudit entanglement.
//!
//! The crate builds the generalized Pauli operators and their Fourier basis,
//! computes the separable bounds of the two correlation witnesses (the
//! projector correlation `C_d` and the amplitude correlation `R_d`), evaluates
//! MES-fraction and Schmidt-number certificates, and simulates the two-setting
//! measurement protocol with finite shots.

pub mod bounds;
pub mod error;
pub mod format;
pub mod linalg;
pub mod measure;
pub mod multipartite;
pub mod noise;
pub mod qudit;
pub mod state_io;
pub mod witness;

pub use bounds::{separable_bound_m, BoundResult};
pub use error::{QwError, Result};
pub use linalg::{ComplexMatrix, EigenDecomposition, C64};
pub use qudit::{BasisLabel, QuditState};
pub use witness::{evaluate_witnesses, WitnessReport};

/// Tolerance used when deciding strict inequalities: a violation requires
/// `margin > EPS_DECIDE`.
pub const EPS_DECIDE: f64 = 1e-9;

/// Version tag carried by every serialized output.
pub const SCHEMA: &str = "qwitness/1";
