use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position} in '{expr}': {message}")]
    Syntax { expr: String, position: usize, message: String },
    #[error("unknown variable '{name}' at position {position} in '{expr}'")]
    UnknownVariable { expr: String, position: usize, name: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid manifold '{name}': {reason}")]
    InvalidSpec { name: String, reason: String },

    #[error("manifold '{manifold}' is not bracket generating at {point}: ranks stalled at {ranks:?}")]
    NotBracketGenerating { manifold: String, point: String, ranks: Vec<usize> },

    #[error("manifold '{manifold}' at {point}: flag did not reach full rank within {cap} steps")]
    StepCap { manifold: String, point: String, cap: usize },

    #[error("manifold '{manifold}' at {point}: {reason}")]
    NotAdapted { manifold: String, point: String, reason: String },

    #[error("frame mismatch: {0}")]
    FrameMismatch(String),

    #[error("map '{map}' is not contact at {point} (defect {defect:.3e})")]
    NotContact { map: String, point: String, defect: f64 },

    #[error("map '{map}' has a degenerate horizontal differential at {point}")]
    DegeneratePullback { map: String, point: String },

    #[error("map '{map}' has a singular Jacobian at {point}")]
    SingularJacobian { map: String, point: String },

    #[error("invalid map '{map}': {reason}")]
    InvalidMap { map: String, reason: String },

    #[error("refined step-2 bounds need a step-2 structure, got step {0}")]
    NotStep2(usize),

    #[error("manifold '{0}' is not a standard Heisenberg group")]
    NotHeisenberg(String),

    #[error("no reports to aggregate")]
    EmptyReports,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
