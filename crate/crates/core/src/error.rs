use thiserror::Error;

/// Failure modes shared by every operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no lattice point lies in the annulus {lo} <= |n| <= {hi}")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error("spherical harmonic order {m} exceeds degree {l}")]
    OrderOutOfRange { l: i64, m: i64 },
    #[error("operation is not defined on this surface: {0}")]
    SurfaceMismatch(String),
    #[error("eigenvalue is zero; operation divides by lambda")]
    ZeroEigenvalue,
    #[error("local error estimate {estimate:e} per unit path length exceeds {limit:e}")]
    StepTooLarge { estimate: f64, limit: f64 },
    #[error("path point with |tau| = {tau} leaves the strip |tau| <= {tau_max}")]
    StripExit { tau: f64, tau_max: f64 },
    #[error("start state is not on the section (distance {distance:e})")]
    StartOffSection { distance: f64 },
    #[error("{samples} samples cannot resolve |n| <= {n_max} (need at least {required})")]
    Undersampled { samples: usize, n_max: usize, required: usize },
    #[error("Cauchy pole |p| = {p} does not clear the strip radius {tau_max}")]
    PoleTooClose { p: f64, tau_max: f64 },
    #[error("window half-length {half_length} leaves |G(T)| = {edge:e} above tolerance")]
    WindowTooShort { half_length: f64, edge: f64 },
    #[error("|tau| = {tau} exceeds the declared strip radius {tau_max}")]
    StripExceeded { tau: f64, tau_max: f64 },
    #[error("sigma grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("point has sqrt(rho) = {sqrt_rho}, expected {tau}")]
    OffShell { sqrt_rho: f64, tau: f64 },
    #[error("spectrum is identically zero")]
    DegenerateSpectrum,
    #[error("spectrum carries no mass")]
    EmptySpectrum,
    #[error("zero on the contour persisted after {attempts} dilations")]
    BoundaryZero { attempts: usize },
    #[error("restriction vanishes on the interval (norm {norm:e})")]
    VanishingRestriction { norm: f64 },
    #[error("symbol support [{lo}, {hi}] leaks outside the interval [{start}, {end}]")]
    SupportLeak { lo: f64, hi: f64, start: f64, end: f64 },
    #[error("shifted interval [{lo}, {hi}] leaves the continuation range [{start}, {end}]")]
    RangeExceeded { lo: f64, hi: f64, start: f64, end: f64 },
    #[error("symbol kind not supported here: {0}")]
    UnsupportedSymbol(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
