use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("under-resolved width: sigma_{axis} = {sigma} but at least {min_width} (2 cells) is required")]
    UnderResolved {
        axis: char,
        sigma: f64,
        min_width: f64,
    },

    #[error("point ({q}, {p}) lies outside the grid")]
    OutsideGrid { q: f64, p: f64 },

    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("non-finite Hamiltonian derivative at t = {time}")]
    NonFiniteFlow { time: f64 },

    #[error("implicit step did not converge at ({q}, {p})")]
    NoConvergence { q: f64, p: f64 },

    #[error("density value {value:e} below negativity tolerance -{tolerance:e}")]
    NegativeDensity { value: f64, tolerance: f64 },

    #[error("mass correction {correction:e} exceeds cap {cap:e}")]
    MassCorrection { correction: f64, cap: f64 },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {0} outside supported range 1..=16")]
    UnsupportedDimension(usize),

    #[error("amplitude vector is zero")]
    ZeroAmplitudes,

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NonHermitian(f64),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("stability bound violated ({constraint}): {value:.6e} > {limit:.6e}")]
    Stability {
        constraint: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("trace drift {drift:e} at t = {time} exceeds {limit:e}")]
    TraceDrift { time: f64, drift: f64, limit: f64 },

    #[error("boundary contamination at t = {time}: interior mass fraction {fraction:.8}")]
    BoundaryContamination { time: f64, fraction: f64 },

    #[error("point table is not symmetric at ({i}, {j})")]
    AsymmetricPoints { i: usize, j: usize },

    #[error("time {0} is not a sample of the trajectory")]
    NotOnTrajectory(f64),

    #[error("invalid sigma list: {0}")]
    InvalidSigmas(String),

    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
