use thiserror::Error;

/// Errors raised by the algebra, circuit, analysis and sampling layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("unknown stage `{0}`")]
    UnknownStage(String),

    #[error("stage `{to}` precedes stage `{from}`")]
    StageOrderViolation { from: String, to: String },

    #[error("state carries no stage tag")]
    UntaggedState,

    #[error("unknown rail `{rail}` at stage `{stage}`")]
    UnknownRail { stage: String, rail: String },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid beam splitter: {0}")]
    InvalidSplitter(String),

    #[error("basis `{name}` is not orthonormal (max deviation {deviation:.3e})")]
    NonOrthonormalBasis { name: String, deviation: f64 },

    #[error("anomalous post-selection: |<f|psi>| = {overlap:.3e} is at or below threshold {threshold:.1e}")]
    AnomalousPostselection { overlap: f64, threshold: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
