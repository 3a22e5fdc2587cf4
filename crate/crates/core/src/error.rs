use thiserror::Error;
use tsvis_analytics::AnalyticsError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate id: {0}")]
    DuplicateId(String),

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("unknown kind: {0}")]
    UnknownKind(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("unresolved reference: {0}")]
    UnresolvedReference(String),

    #[error("slot mismatch: {0}")]
    SlotMismatch(String),

    #[error("duplicate binding: already bound by page {0}")]
    DuplicateBinding(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("reference held: {0}")]
    ReferenceHeld(String),

    #[error("stale version: requested {requested}, current is {current}")]
    StaleVersion { requested: u64, current: u64 },

    #[error("fetch failure: {0}")]
    FetchFailure(String),

    #[error("parse failure at line {line}: {message}")]
    ParseFailure { line: usize, message: String },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("stale plan: {0}")]
    StalePlan(String),

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error(transparent)]
    Analytics(#[from] AnalyticsError),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}
