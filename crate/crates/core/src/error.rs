use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while parsing, loading or analyzing inputs.
#[derive(Debug, Error)]
pub enum Error {
    /// Syntax error in a litmus program, with 1-based position.
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    /// A pre-trace / execution / effect document violates its schema.
    #[error("schema violation: {0}")]
    Schema(String),

    /// A label is referenced (po edge, rf edge, mo entry, outcome, witness)
    /// but no event carries it.
    #[error("dangling label {0:?}")]
    DanglingLabel(String),

    /// Two events carry the same label.
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    /// Program order is cyclic after transitive closure.
    #[error("program order contains a cycle through {0:?}")]
    PoCycle(String),

    /// Two relations over different universes were combined.
    #[error("universe mismatch: {0}")]
    UniverseMismatch(String),

    /// A location was requested that no event references.
    #[error("unknown location {0:?}")]
    UnknownLocation(String),

    /// Enumeration was asked to run on a pre-trace above the event cap.
    #[error("pre-trace has {events} events, above the enumeration cap {cap}")]
    CapExceeded { events: usize, cap: usize },

    /// A pre-trace pair maps one label to incompatible events.
    #[error("label {label:?} differs across the pair: {detail}")]
    LabelMismatch { label: String, detail: String },

    /// An operation's stated precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A pre-trace shape is outside what an operation supports.
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    /// A property the implementation treats as a theorem failed to hold.
    /// Surfacing this as an error (rather than panicking) lets the search
    /// report it as a finding.
    #[error("property failure: {0}")]
    PropertyFailure(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
