use thiserror::Error;

/// Errors raised by the solvers, the extraction pipeline and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate bond: reference bond vector has zero length")]
    DegenerateBond,

    #[error("damage is undefined for node {node}: it has no bonds")]
    UndefinedDamage { node: usize },

    #[error("the peridynamic box does not intersect the beam")]
    EmptyDomain,

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("explicit integration diverged at step {step}: node {node} has a non-finite state")]
    Divergence { step: usize, node: usize },

    #[error("point ({x}, {y}) lies outside the beam")]
    OutOfDomain { x: f64, y: f64 },

    #[error("point ({x}, {y}) lies on the crack; a side hint is required")]
    OnCrack { x: f64, y: f64 },

    #[error("global system is singular (estimated null-space dimension {null_dim})")]
    SingularSystem { null_dim: usize },

    #[error("damage band is {width} m wide, more than 10 horizons; damage is not localized")]
    AmbiguousBand { width: f64 },

    #[error("crack extension starts {gap} m away from the current tip")]
    CrackGap { gap: f64 },

    #[error("invalid crack path: {0}")]
    InvalidPath(String),

    #[error("unknown case `{0}`")]
    UnknownCase(String),

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("coupled run failed at load step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
