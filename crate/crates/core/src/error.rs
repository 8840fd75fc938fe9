use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element length {length} is not positive")]
    DegenerateElement { length: f64 },

    #[error("volume ratio {jacobian} at section point ({}, {}) is below the admissible minimum", point[0], point[1])]
    InvertedElement { jacobian: f64, point: [f64; 2] },

    #[error("volume ratio {jacobian} is not positive{}", point.map(|p| format!(" at section point ({}, {})", p[0], p[1])).unwrap_or_default())]
    NonpositiveJacobian { jacobian: f64, point: Option<[f64; 2]> },

    #[error("tangent matrix is singular at pivot {pivot}")]
    SingularTangent { pivot: usize },

    #[error("Newton iteration did not converge at step {step} after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable identifier of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateElement { .. } => "DegenerateElement",
            Error::InvertedElement { .. } => "InvertedElement",
            Error::NonpositiveJacobian { .. } => "NonpositiveJacobian",
            Error::SingularTangent { .. } => "SingularTangent",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::Config(_) => "ConfigError",
            Error::Io(_) => "Io",
        }
    }
}
