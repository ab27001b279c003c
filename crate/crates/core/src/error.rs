use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no classically allowed region for E = {energy}, p_phi = {p_phi}")]
    NoBoundRegion { energy: f64, p_phi: f64 },

    #[error("degenerate torus: r_plus - r_minus = {width:e}")]
    DegenerateTorus { width: f64 },

    #[error("no convergence after {iterations} iterations ({what})")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("degenerate denominator in {0}")]
    DegenerateDenominator(&'static str),

    #[error("small denominator k = ({k1}, {k2}): |<omega, k>| = {value:e} < {eps:e}")]
    SmallDenominator { k1: i64, k2: i64, value: f64, eps: f64 },

    #[error("eigenvalue multiplicity degeneracy: {0}")]
    MultiplicityDegeneracy(String),

    #[error("resonant harmonics present: {count} with |<omega, k>| < {eps:e}")]
    Resonance { count: usize, eps: f64 },

    #[error("invalid length {len}: {reason}")]
    Length { len: usize, reason: &'static str },

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Config { line, message: message.into() }
    }

    /// Process exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Verification(_) => 4,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
