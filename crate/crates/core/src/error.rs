use thiserror::Error;

/// Failures raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Array lengths, dimensions or grids do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A parameter lies outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A special-function evaluation did not reach its tolerance.
    #[error("Mittag-Leffler evaluation failed at |z| = {modulus:e}, alpha = {alpha}: {reason}")]
    Evaluation {
        modulus: f64,
        alpha: f64,
        reason: String,
    },

    /// A field blew up or became non-finite during a Picard sweep.
    #[error("divergence at node {node} (t = {time}): {reason}")]
    Divergence {
        node: usize,
        time: f64,
        reason: String,
    },

    /// The Picard iteration failed to contract.
    #[error(
        "Picard iteration did not contract after {iterations} iterations \
         (last distance {distance:e}, ratio {ratio:.4})"
    )]
    NonContraction {
        iterations: usize,
        distance: f64,
        ratio: f64,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
