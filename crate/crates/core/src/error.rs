use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid beam parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `N0` does not capture every unstable mode, so `λ_{N0+1,+1}` may vanish
    /// and the mode-count condition is meaningless.
    #[error("N0 = {n0} is below the number of unstable modes ({unstable})")]
    BelowUnstableCount { n0: usize, unstable: usize },

    #[error("pair (A, B) is not controllable for the selected inputs")]
    Uncontrollable,

    #[error("invalid target poles: {0}")]
    InvalidPoles(String),

    #[error("pole placement failed: {0}")]
    Placement(String),

    #[error("matrix is not Hurwitz (spectral abscissa {abscissa})")]
    NotHurwitz { abscissa: f64 },

    #[error("no delay could be certified on the grid (smallest point {h_min})")]
    NoneCertified { h_min: f64 },

    #[error("the LMI is infeasible at kappa = 0 for h_M = {h_max}")]
    InfeasibleAtZeroRate { h_max: f64 },

    #[error("delay h({t}) = {h} leaves the admissible interval [{h_min}, {h_max}]")]
    DelayOutOfRange { t: f64, h: f64, h_min: f64, h_max: f64 },

    #[error("initial history is not pinned at the ends: {0}")]
    NotPinned(String),

    #[error("simulation diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("certificate parse error at line {line}: {message}")]
    CertificateParse { line: usize, message: String },
}
