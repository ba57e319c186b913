//! Boundary feedback stabilization of a damped Euler–Bernoulli beam with a
//! time-varying state delay.
//!
//! The crate is organized along the computational pipeline:
//!
//! * [`spectral`]: closed-form eigenstructure of the delay-free operator
//!   (eigenvalues, eigenvector normalizations, dual-basis coefficients,
//!   Riesz constants, Gram blocks).
//! * [`reduction`]: the finite-dimensional delayed model `(A, B, M)` built from
//!   the first `N0` mode pairs, the mode-count small-gain test and the
//!   Kalman controllability check.
//! * [`synthesis`]: pole placement for one or two boundary torques.
//! * [`robustness`]: the Lyapunov–Krasovskii LMI, a self-contained
//!   semidefinite feasibility search, certificate verification and the
//!   closed-form small-gain delay bounds.
//! * [`simulation`]: fixed-step integration of the modal delay-differential
//!   system, field reconstruction, norms and ISS diagnostics.
//! * [`benchmark`]: the reference scenario (beam, poles, delay, disturbances,
//!   initial history) used by the presets and the acceptance suite.

pub mod benchmark;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod reduction;
pub mod robustness;
pub mod simulation;
pub mod spectral;
pub mod synthesis;

pub use error::{Error, Result};
pub use reduction::TruncatedModel;
pub use spectral::{BeamParams, Branch, ModeIndex, RieszConstants, SpectralMode};
pub use synthesis::{ActuationConfig, FeedbackGain};
