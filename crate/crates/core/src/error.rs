use thiserror::Error;

/// Errors raised by the geometry, field, solver and configuration layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point at distance {distance:.3e} from the target exceeds the tube radius {radius:.3e}")]
    TubeExceeded { distance: f64, radius: f64 },

    #[error("(nabla_x J)V = {value:.3e} at grid point {index} where |u_x||V| vanishes")]
    DivisionDegenerate { index: usize, value: f64 },

    #[error("operation requires {expected}, got target `{found}`")]
    WrongTarget { expected: &'static str, found: String },

    #[error("blowup detected: H^1 proxy {value:.3e} exceeds ceiling {ceiling:.3e}")]
    BlowupDetected { value: f64, ceiling: f64 },

    #[error("Picard sweep {sweep} did not contract: distance {current:.3e} >= previous {previous:.3e}")]
    NoContraction {
        sweep: usize,
        previous: f64,
        current: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unknown target `{0}` (expected one of s2, t2-clifford, s6)")]
    UnknownTarget(String),

    #[error("state violates the manifold constraint by {violation:.3e} (limit {limit:.1e})")]
    OffManifold { violation: f64, limit: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parse error{}: {message}", location(.line, .key))]
    Parse {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("bad initial-data parameters: {0}")]
    BadParameters(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn location(line: &Option<usize>, key: &Option<String>) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!(" at line {l}, key `{k}`"),
        (Some(l), None) => format!(" at line {l}"),
        (None, Some(k)) => format!(" at key `{k}`"),
        (None, None) => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
