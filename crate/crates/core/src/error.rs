use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation requires the {expected} plane case")]
    CaseMismatch { expected: &'static str },

    #[error("no intersection at xi = {xi} (specular delay {xi_sr})")]
    NoIntersection { xi: f64, xi_sr: f64 },

    #[error("eta = {eta} off intersection [{eta1}, {eta2}] at xi = {xi}")]
    OffIntersection { xi: f64, eta: f64, eta1: f64, eta2: f64 },

    #[error("Doppler undefined at focus")]
    Focus,

    #[error("focus on scattering plane")]
    FocusOnPlane,

    #[error("derivative singular at band edge (xi = {xi}, eta = {eta})")]
    SingularDerivative { xi: f64, eta: f64 },

    #[error("zero Doppler spread; use delay_pdf")]
    ZeroDopplerSpread,

    #[error("degenerate spectral line (limiting frequency is zero)")]
    DegenerateSpectralLine,

    #[error("Doppler grid [{grid_min}, {grid_max}] Hz does not cover the support; required band [{required_min}, {required_max}] Hz")]
    DopplerGridTooNarrow { grid_min: f64, grid_max: f64, required_min: f64, required_max: f64 },

    #[error("xi grid too coarse for requested dftilde: |dftilde| max {requested}, Nyquist {nyquist}")]
    GridTooCoarse { requested: f64, nyquist: f64 },

    #[error("quadrature did not converge: estimate {value}, error estimate {error_estimate}")]
    QuadratureNotConverged { value: f64, error_estimate: f64 },

    #[error("normalizer vanishes at nodes {nodes:?}")]
    VanishingNormalizer { nodes: Vec<usize> },

    #[error("density not normalized: integral {integral}")]
    NotNormalized { integral: f64 },

    #[error("moment cross-check failed at xi = {xi}: direct {direct}, from characteristic function {derived}")]
    MomentCrossCheck { xi: f64, direct: f64, derived: f64 },

    #[error("grid range insufficient: no half crossing along {axis}")]
    NoCrossing { axis: String },

    #[error("degenerate region: rejection acceptance {acceptance}")]
    DegenerateRegion { acceptance: f64 },

    #[error("lag {lag} beyond record length {len}")]
    LagBeyondRecord { lag: usize, len: usize },

    #[error("non-uniform time step in snapshot stack")]
    NonUniformSteps,

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// Configuration and input problems, as opposed to numerical failures.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config { .. } | Error::Io { .. } | Error::Parse(_) => true,
            Error::Context { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
