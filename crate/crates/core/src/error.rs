use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CapaError {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("aperture side {side} m exceeds array dimension {limit} m along {axis}")]
    ApertureTooLarge { axis: char, side: f64, limit: f64 },

    /// A distance in a channel formula vanished.
    #[error("singular geometry: {0}")]
    Singular(String),

    #[error("non-finite integrand sample at (x = {x}, z = {z})")]
    NonFinite { x: f64, z: f64 },

    /// Adaptive quadrature ran out of refinement depth before meeting its tolerance.
    #[error("quadrature did not converge: partial value {value}, estimated error {error:e}")]
    Convergence { value: Complex64, error: f64 },

    /// The statistical model produced an invalid object (e.g. an indefinite correlation matrix).
    #[error("model error: {0}")]
    Model(String),

    #[error("config error{}: {message}", if *line > 0 { format!(" at line {line}") } else { String::new() })]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CapaError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        CapaError::Domain(msg.into())
    }

    /// True for errors caused by user input rather than by numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            CapaError::Config { .. } | CapaError::Domain(_) | CapaError::ApertureTooLarge { .. } | CapaError::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, CapaError>;
