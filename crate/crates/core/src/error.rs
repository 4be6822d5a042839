use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("diode is not forward conducting at V_DC = {v_dc} V")]
    NonConductingDiode { v_dc: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("response never drops to half power within the sampled range")]
    NotReached,

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("bit count {bits} is not a multiple of {bits_per_symbol} bits per symbol")]
    BitCountMismatch { bits: usize, bits_per_symbol: usize },

    #[error("sample rate {sample_rate:.4e} Hz is below the required {required:.4e} Hz")]
    SampleRateTooLow { sample_rate: f64, required: f64 },

    #[error("frame synchronization failed (normalized peak {peak:.3})")]
    SyncFailed { peak: f64 },

    #[error("equalizer diverged (coefficient norm {norm:.3e})")]
    Divergence { norm: f64 },

    #[error("underdetermined: {anchors} independent anchors for {parameters} free parameters")]
    Underdetermined { anchors: usize, parameters: usize },

    #[error("every point of the sweep failed to evaluate")]
    AllPointsInvalid,

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by malformed input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Validation(_)
                | Error::BitCountMismatch { .. }
                | Error::SampleRateTooLow { .. }
                | Error::Underdetermined { .. }
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Validation(format!("json: {e}"))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Validation(format!("csv: {e}"))
    }
}
