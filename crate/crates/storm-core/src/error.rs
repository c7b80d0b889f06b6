use thiserror::Error;

/// Errors produced by the spin-dynamics core.
#[derive(Debug, Error)]
pub enum StormError {
    #[error("spin index {index} out of range for a {count}-spin system")]
    SpinIndexOutOfRange { index: usize, count: usize },

    #[error("operation requires the canonical I2S system (two equivalent spin-1/2 plus one heteronuclear spin-1/2): {reason}")]
    NotI2S { reason: String },

    #[error("invalid spin species: {reason}")]
    InvalidSpecies { reason: String },

    #[error("invalid spin system: {reason}")]
    InvalidSystem { reason: String },

    #[error("invalid field protocol: {reason}")]
    InvalidProtocol { reason: String },

    #[error("matrix is not Hermitian (max |H - H^adj| element = {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("effective field vanishes for spin {spin}; polar angle is undefined")]
    DegenerateEffectiveField { spin: usize },

    #[error("time step {dt:.3e} s too coarse; need dt <= {max_dt:.3e} s for this protocol")]
    StepTooCoarse { dt: f64, max_dt: f64 },

    #[error("density matrix invalid: {reason}")]
    InvalidDensity { reason: String },

    #[error("empty index set")]
    EmptyIndexSet,
}

pub type Result<T> = std::result::Result<T, StormError>;
