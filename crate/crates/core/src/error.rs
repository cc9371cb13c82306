use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShellError {
    #[error("parameter {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),
    #[error("invalid surface: {0}")]
    InvalidSurface(String),
    #[error("continuity C^{continuity} not possible for degree {degree}")]
    InvalidContinuity { continuity: usize, degree: usize },
    #[error("degenerate parametrization: |g1 x g2| = {area:e}")]
    DegenerateSurface { area: f64 },
    #[error("shell self-penetration: shifter g0 <= 0 at zeta = {zeta:e} (Kh = {kh})")]
    SelfPenetration { zeta: f64, kh: f64 },
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("constraint conflict: {0}")]
    ConstraintConflict(String),
    #[error("invalid load: {0}")]
    InvalidLoad(String),
    #[error("singular matrix: zero pivot at equation {equation}")]
    Singular { equation: usize },
    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy { kind: &'static str, name: String, available: String },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ShellError>;
