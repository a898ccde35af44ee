use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Negative interaction strength: the Bogoliubov dispersion becomes imaginary.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// The operation does not apply to the given schedule kind.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The schedule derivative was requested exactly at a jump; use a sudden step instead.
    #[error("interaction jumps at t = {t}; use sudden_step across discontinuities")]
    AtDiscontinuity { t: f64 },

    #[error("integration failed at t = {last_good_t}: {reason}")]
    Integration { last_good_t: f64, reason: String },

    #[error("no resonance: {0}")]
    NoResonance(String),

    /// Second moments violating |m|^2 <= n(n+1).
    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
