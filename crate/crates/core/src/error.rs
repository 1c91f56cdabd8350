use thiserror::Error;

pub type Result<T, E = CasimirError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CasimirError {
    /// A configuration value violates its constraint.
    #[error("invalid `{key}`: {constraint}")]
    Config { key: String, constraint: String },

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    Quadrature {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    /// Separation left the tabulated range of a force field.
    #[error("separation {x:e} m outside force field range [{min:e}, {max:e}] m")]
    FieldRange { x: f64, min: f64, max: f64 },

    #[error("surfaces came into contact at t = {time:e} s (gap {gap:e} m)")]
    Contact { time: f64, gap: f64 },

    /// Force gradient exceeds the spring constant.
    #[error("snap-in instability: (dF/dx)/k = {ratio}")]
    SnapIn { ratio: f64 },

    #[error("singular: {0}")]
    Singular(String),

    #[error("range error: {0}")]
    Range(String),
}

impl CasimirError {
    pub fn config(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Self::Config {
            key: key.into(),
            constraint: constraint.into(),
        }
    }

    /// True for errors caused by user-supplied configuration rather than by
    /// the physics or numerics of a run.
    pub fn is_config(&self) -> bool {
        matches!(self, Self::Config { .. } | Self::FieldRange { .. })
    }
}
