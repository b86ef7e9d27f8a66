use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A forward or backward integration produced a non-finite value.
    #[error("non-finite {what} at step {step} (t = {t})")]
    NonFinite {
        what: &'static str,
        step: usize,
        t: f64,
    },

    /// A state component dropped below the admissible floor; usually the step is too coarse.
    #[error("negative {component} = {value:e} at step {step} (t = {t}); reduce the step size")]
    NegativeState {
        component: &'static str,
        value: f64,
        step: usize,
        t: f64,
    },

    #[error("sweep diverged at iteration {iteration}: {source}")]
    Diverged {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {value}")))
    }
}
