use thiserror::Error;

/// Everything that can go wrong while building a model, running it, or
/// analysing its output.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("label {index} out of range 1..={n}")]
    InvalidLabel { index: usize, n: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid transfer kernel: P_{i}{j}^{k}{l}({v}, {w}) = {value}")]
    InvalidKernel {
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        v: f64,
        w: f64,
        value: f64,
    },

    #[error(
        "positivity guard violated for pair ({x}, {y}): zeta * bound = {lhs} exceeds 1 - omega = {rhs}"
    )]
    PositivityGuard { x: usize, y: usize, lhs: f64, rhs: f64 },

    #[error("inconsistent kernel: E - V^2 = {0} is negative")]
    InconsistentKernel(f64),

    #[error("time step {dt} exceeds 1 / max lambda = {limit}")]
    TimeStep { dt: f64, limit: f64 },

    #[error("degenerate rates: {0}")]
    DegenerateRates(String),

    #[error("mean of label {0} is undefined: vanishing mass")]
    UndefinedMean(usize),

    #[error("degenerate diffusion: zeta must be positive")]
    DegenerateDiffusion,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("mass mismatch ({left} vs {right}); normalize both measures first")]
    MassMismatch { left: f64, right: f64 },

    #[error("empty population")]
    EmptyPopulation,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("unknown preset `{name}`; valid presets: {valid}")]
    UnknownPreset { name: String, valid: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::TimeStep { .. } | Error::Io(_) => 3,
            _ => 2,
        }
    }
}

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

pub type Result<T> = std::result::Result<T, Error>;
