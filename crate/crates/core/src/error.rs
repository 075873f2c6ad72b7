use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {n} is not a power of two")]
    NonPowerOfTwo { n: usize },
    #[error("grid size {n} is below the minimum of 8 points per axis")]
    GridTooSmall { n: usize },
    #[error("dimension {dim} is not supported (expected 1, 2 or 3)")]
    InvalidDimension { dim: usize },
    #[error("{what} requires a {expected}-dimensional grid, got {found}")]
    WrongDimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("alpha = {alpha} is outside the open interval (0, 1)")]
    AlphaOutOfRange { alpha: f64 },
    #[error("empty wavenumber band [{k_min}, {k_max}]")]
    EmptyBand { k_min: f64, k_max: f64 },
    #[error("wavenumber band [{k_min}, {k_max}] is not resolvable on n = {n} (need 1 <= k_min < k_max <= n/3)")]
    BandOutOfRange { k_min: f64, k_max: f64, n: usize },
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("mollifier radius {eps} is under-resolved (need eps >= {min})")]
    UnderResolved { eps: f64, min: f64 },
    #[error("mollifier radius {eps} is too wide (need eps <= {max})")]
    TooWide { eps: f64, max: f64 },
    #[error("inconsistent ensemble members: {0}")]
    InconsistentMembers(String),
    #[error("ensemble weight {index} is negative or not finite ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("ensemble weights sum to zero")]
    ZeroWeights,
    #[error("ensemble has no members")]
    EmptyEnsemble,
    #[error("point {0:?} is not a grid node")]
    OffGrid(Vec<f64>),
    #[error("time {t} is outside the sampled range [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },
    #[error("test function support ({start}, {end}) exceeds the data time range [{data_start}, {data_end}]")]
    SupportOutsideData {
        start: f64,
        end: f64,
        data_start: f64,
        data_end: f64,
    },
    #[error("ensemble members carry no pressure")]
    MissingPressure,
    #[error("structure-function exponent q = {0} is not supported (expected 1.5, 2 or 3)")]
    UnsupportedExponent(f64),
    #[error("curve has fewer than 3 positive values in the fit window")]
    DegenerateFit,
    #[error("ball of radius {eps} contains no nonzero grid offsets")]
    EmptyStencil { eps: f64 },
    #[error("full two-point quadrature on n = {n}, d = {dim} exceeds the cost guard")]
    CostGuard { n: usize, dim: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a container (bad magic)")]
    NotAContainer,
    #[error("corrupt container at byte offset {offset}: {reason}")]
    CorruptContainer { offset: u64, reason: String },
    #[error("container shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("container times are not strictly increasing")]
    InvalidTimes,
    #[error("unsupported container version {0}")]
    VersionMismatch(u64),
}
