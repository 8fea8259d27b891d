use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A value outside the physical or model validity range.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed call: empty grids, mismatched lengths, step too large.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("degenerate reference: {0}")]
    DegenerateReference(String),

    #[error("calibration inconsistency: {0}")]
    CalibrationInconsistent(String),
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
