use thiserror::Error;

/// Errors raised by the factorization library.
#[derive(Debug, Error)]
pub enum NmfError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid problem: {0}")]
    Invalid(String),

    #[error("labels required when rho > 0")]
    LabelsRequired,

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("non-finite value produced by {update} update at iteration {iteration}")]
    NonFinite { update: &'static str, iteration: usize },

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NmfError>;

impl From<csv::Error> for NmfError {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(io) => NmfError::Io(io),
                other => NmfError::Parse(format!("{other:?}")),
            }
        } else {
            NmfError::Parse(err.to_string())
        }
    }
}

pub(crate) fn check_shape(what: &str, got: (usize, usize), want: (usize, usize)) -> Result<()> {
    if got != want {
        return Err(NmfError::Shape(format!(
            "{what}: expected {}x{}, got {}x{}",
            want.0, want.1, got.0, got.1
        )));
    }
    Ok(())
}
