use thiserror::Error;

/// Errors surfaced by the simulation layers.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("site {site} out of range for {l} qubits")]
    SiteOutOfRange { site: usize, l: usize },

    #[error("dimension mismatch: operator expects {expected} amplitudes, state has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{0}")]
    InvalidGeometry(String),

    #[error("dense representation limited to {max} qubits, requested {requested}")]
    TooManyQubits { requested: usize, max: usize },

    #[error("system has no cavity configured")]
    MissingCavity,

    #[error("geometry has no probe site")]
    MissingProbe,

    #[error("correlator spec is missing field `{0}`")]
    MissingField(&'static str),

    #[error("coupling {0} not found in system")]
    UnknownCoupling(String),

    #[error(
        "Krylov propagation failed to converge: residual {residual:.3e} > tol {tol:.3e} \
         at dimension {dim} with step {step:.3e} (minimum step {min_step:.3e})"
    )]
    KrylovNoConvergence {
        residual: f64,
        tol: f64,
        dim: usize,
        step: f64,
        min_step: f64,
    },

    #[error("stroboscopic propagator cannot reach time {t}: grid phases must be multiples of half a period")]
    NotStroboscopic { t: f64 },

    #[error("extrapolation needs at least 3 distinct N_psi values, got {0}")]
    TooFewPoints(usize),

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
