use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("index {index} out of range for {what} (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("gate on site {site} does not fit a {n_sites}-site chain")]
    GateOutOfBounds { site: usize, n_sites: usize },

    #[error("gates in step {step} overlap on site {site}")]
    OverlappingStep { step: usize, site: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} exceeds the configured maximum {1}")]
    DimensionOverflow(usize, usize),

    #[error("matrix is not unitary (max |UU^dag - I| = {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not Hermitian (max |H - H^dag| = {0:.3e})")]
    NotHermitian(f64),

    #[error("d-vector vanishes; the gap closes at this momentum")]
    SingularPoint,

    #[error("Chern number undefined on the phase boundary ({0})")]
    PhaseBoundary(String),

    #[error("spectral gap closed (gap = {0:.3e})")]
    GapClosed(f64),

    #[error("eigenphase {phase:.6} wraps past +-pi; evolution time {time} too long")]
    InvalidTime { phase: f64, time: f64 },

    #[error("projected matrix is near-singular (smallest modulus {0:.3e})")]
    NearSingular(f64),

    #[error("unsupported spatial dimension {0}")]
    UnsupportedDimension(usize),

    #[error("no nontrivial Lorentz-invariant dispersion for N={n}, gamma={gamma}; orbit sizes: {orbits:?}")]
    NoDispersion {
        n: usize,
        gamma: usize,
        orbits: Vec<usize>,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("eigendecomposition failed")]
    Eigen,

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
