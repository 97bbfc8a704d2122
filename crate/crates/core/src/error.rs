use std::path::PathBuf;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, RifError>;

#[derive(Debug, Error)]
pub enum RifError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("frequency {omega} lies inside the guard band of the resonance at {resonance}")]
    ResonanceProximity { omega: f64, resonance: f64 },

    #[error("frequency {omega} lies in an anomalous band (n^2 = {epsilon} < 0)")]
    AnomalousBand { omega: f64, epsilon: f64 },

    #[error("frequency {omega} is not on a propagating branch")]
    NotPropagating { omega: f64 },

    #[error("dispersion polynomial has a vanishing leading coefficient")]
    DegenerateLeadingCoefficient,

    #[error("root finder returned {found} roots where {expected} were expected")]
    RootCount { expected: usize, found: usize },

    #[error("mode classification failed at omega' = {omega_prime}: {reason}")]
    Classification { omega_prime: f64, reason: String },

    #[error("mode normalization is singular (comoving group velocity {group_velocity})")]
    SingularNormalization { group_velocity: f64 },

    #[error("scalar product between modes at different comoving frequencies ({a} vs {b})")]
    MismatchedFrequency { a: f64, b: f64 },

    #[error("omega' = {omega_prime} lies on a subluminal-interval edge")]
    EdgeDegenerate { omega_prime: f64 },

    #[error("matching system at omega' = {omega_prime} is singular (condition number {condition:e})")]
    SingularSystem { omega_prime: f64, condition: f64 },

    #[error("matching system at omega' = {omega_prime} has {equations} equations but {unknowns} unknowns")]
    MatchingCount {
        omega_prime: f64,
        equations: usize,
        unknowns: usize,
    },

    #[error("scattering matrix at omega' = {omega_prime} violates pseudo-unitarity (residual {residual:e})")]
    PseudoUnitarity { omega_prime: f64, residual: f64 },

    #[error("unknown mode label `{0}`")]
    UnknownLabel(String),

    #[error("wavelength {wavelength_nm} nm is below the {cutoff_nm} nm cutoff")]
    BelowCutoff { wavelength_nm: f64, cutoff_nm: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl RifError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
