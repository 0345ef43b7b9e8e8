use thiserror::Error;

/// Failure modes shared by every solver in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Array shapes disagree with the grid they claim to sample.
    #[error("structural error: {0}")]
    Structural(String),
    /// Input data violates a representation invariant (e.g. Hermitian symmetry).
    #[error("data error: {0}")]
    Data(String),
    /// A physical or numerical parameter violates an operation's precondition.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Incompatible combination of grid and model constants.
    #[error("configuration error: {0}")]
    Configuration(String),
    /// A monitored quantity left its admissible range during a run.
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("caustic at x = {x}: velocity gradient {gradient} <= -1/dt")]
    Caustic { x: f64, gradient: f64 },
    #[error("cutoff error: |dS/dx| = {slope} exceeds 0.9 p_max = {limit}")]
    Cutoff { slope: f64, limit: f64 },
    #[error("node error: |psi|^2 = {density} below the density floor at x = {x}")]
    Node { x: f64, density: f64 },
    #[error("phase unwrap ambiguity at x = {x}: wrapped jump {jump}")]
    Unwrap { x: f64, jump: f64 },
    #[error("measurement error: {0}")]
    Measurement(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for errors caused by the caller's choice of parameters rather than by
    /// something that happened during a run.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::Configuration(_) | Error::Structural(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
