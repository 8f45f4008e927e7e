use thiserror::Error;

/// Errors reported by constructors, runners, and parsers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid size: {what} requires m >= {min}, got {got}")]
    InvalidSize {
        what: &'static str,
        min: usize,
        got: usize,
    },
    #[error("node index {node} out of range for m = {m}")]
    NodeOutOfRange { node: usize, m: usize },
    #[error("self loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("topology is not connected")]
    Disconnected,
    #[error("topology has no hub node adjacent to all others")]
    NoHub,
    #[error("invalid selection matrix: {0}")]
    InvalidSelectionMatrix(String),
    #[error("selection matrix row {0} has zero mass; node cannot pick a neighbor")]
    ZeroRow(usize),
    #[error("matrix is not symmetric (max |a_ij - a_ji| = {0:e})")]
    NotSymmetric(f64),
    #[error("matrix must be square, got {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("normalized local distortion must lie in {range}, got {got}")]
    InvalidDistortion { range: &'static str, got: f64 },
    #[error("edge ({0}, {1}) is not in the topology")]
    EdgeNotInTopology(usize, usize),
    #[error("iteration budget must be positive")]
    EmptyBudget,
    #[error("trial count must be positive")]
    NoTrials,
    #[error("second moment of node {0} is zero; correlation undefined")]
    ZeroSecondMoment(usize),
    #[error("round count mismatch: config says {config} rounds, sequence has {sequence}")]
    RoundCountMismatch { config: usize, sequence: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
