use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("Hilbert space of {n_sites} sites exceeds the dense guard of {max_sites} sites")]
    DimensionTooLarge { n_sites: usize, max_sites: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver failed to converge: {0}")]
    NonConvergence(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(
        "spectrum is defective (condition {condition:.3e}, residual {residual:.3e}); \
         use the matrix-exponential propagator instead"
    )]
    Defective { condition: f64, residual: f64 },

    #[error("initial mode block is degenerate (|eps0| = {magnitude:.3e})")]
    DegenerateInitialBlock { magnitude: f64 },

    #[error("spectrum is in the broken phase (max |Im E| = {max_imag:.3e})")]
    BrokenPhase { max_imag: f64 },

    #[error("initial field h0 = {h0} is not above the exceptional point h_ep = {h_ep}")]
    PhasePrecondition { h0: f64, h_ep: f64 },

    #[error("mode phi = {phi}: {source}")]
    Mode {
        phi: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("time window [{start}, {end}] does not lie on the time grid [0, {t_max}] with step {dt}")]
    WindowOutsideGrid { start: f64, end: f64, t_max: f64, dt: f64 },

    #[error("matrix exponential overflow (norm {norm:.3e})")]
    Overflow { norm: f64 },

    #[error("detection needs at least {needed} grid points, got {got}")]
    InsufficientGrid { needed: usize, got: usize },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParams {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_mode(self, phi: f64) -> Self {
        Error::Mode {
            phi,
            source: Box::new(self),
        }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(err: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(err.to_string())
    }
}
