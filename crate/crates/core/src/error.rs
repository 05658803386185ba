use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("time step {dt} outside the stability range (0, {limit})")]
    UnstableStep { dt: f64, limit: f64 },

    #[error("system dimension {dim} exceeds the dense eigensolver limit {limit}; use the Verlet integrator")]
    TooLarge { dim: usize, limit: usize },

    #[error("wave number k*delta = {kd} is at or outside the band edge (0, pi)")]
    BandEdge { kd: f64 },

    #[error("pole of the continuum phase at k = -k1")]
    Pole,

    #[error("packet placement: {0}")]
    PacketPlacement(String),

    #[error("evolution time {t} exceeds the boundary-influence horizon {horizon}")]
    HorizonViolated { t: f64, horizon: f64 },

    #[error("carrier amplitude {amplitude:e} below noise floor {floor:e}")]
    NoiseFloor { amplitude: f64, floor: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature grid too coarse: {nodes} nodes, at least {required} required")]
    GridTooCoarse { nodes: usize, required: usize },

    #[error("cyclic ray differences do not sum to zero (residual {residual:e})")]
    InconsistentDifferences { residual: f64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
