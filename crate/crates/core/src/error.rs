use std::path::PathBuf;

use crate::config::ConfigErrors;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigErrors),

    #[error("malformed configuration document: {0}")]
    Parse(#[from] serde_json::Error),

    /// The destructive-interference ratio fell below the node floor; ratio
    /// quantities (velocity, Q, force) are not trustworthy there.
    #[error("node proximity at x={x}, t={t}: contrast ratio {ratio:e} below floor {floor:e}")]
    NodeProximity { x: f64, t: f64, ratio: f64, floor: f64 },

    #[error("z={z} outside the simulated region [0, {length}]")]
    OutOfRegion { z: f64, length: f64 },

    #[error("grid wave edge amplitude {edge:e} exceeds {limit:e} of peak; periodic wrap-around would corrupt propagation")]
    EdgeLeakage { edge: f64, limit: f64 },

    #[error("grid size {0} must be a power of two of at least {1}")]
    GridSize(usize, usize),

    #[error("target/proposal ratio {ratio} at x={x} exceeds envelope bound {bound}")]
    ProposalDeficit { x: f64, ratio: f64, bound: f64 },

    #[error("arrival x={x} outside detector [-{extent}, {extent}]")]
    ArrivalOutOfRange { x: f64, extent: f64 },

    #[error("analytic density at the detector has no interior minimum within the detector; no fringes to measure")]
    DegenerateFringes,

    #[error("insufficient data: {have} arrivals, need at least {need}")]
    InsufficientData { have: u64, need: u64 },

    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("ensemble results do not match: {0}")]
    ConfigMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("output directory {0} already holds a run manifest; pass --force to overwrite")]
    OutputExists(PathBuf),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
