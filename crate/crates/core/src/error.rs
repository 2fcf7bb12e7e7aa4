use core::fmt;

/// Errors raised by the library surface.
///
/// Budget exhaustion during tree simulation is *not* an error: it is recorded
/// on the affected nodes and summarized by the callers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the domain of a special function or density.
    Domain { what: &'static str, value: f64 },
    /// An interval with `hi <= lo`.
    InvalidInterval { lo: f64, hi: f64 },
    /// A zero wavenumber where a nonzero one is required.
    DegenerateWavenumber,
    /// Requested depth exceeds the branch-and-bound limit.
    DepthBudget { requested: u32, max: u32 },
    /// Fewer samples than a statistical test supports.
    UndersizedSample { len: usize, min: usize },
    /// The discrete kernel average does not integrate to one.
    QuadratureNormalization { deviation: f64 },
    /// Grid or solver configuration is unusable.
    InvalidGrid(&'static str),
    /// A parameter failed validation.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what}: argument {value} outside domain"),
            Error::InvalidInterval { lo, hi } => write!(f, "invalid interval [{lo}, {hi}]"),
            Error::DegenerateWavenumber => f.write_str("wavenumber must be nonzero"),
            Error::DepthBudget { requested, max } => {
                write!(
                    f,
                    "depth {requested} exceeds the branch-and-bound maximum {max}"
                )
            }
            Error::UndersizedSample { len, min } => {
                write!(f, "sample of size {len} is below the minimum {min}")
            }
            Error::QuadratureNormalization { deviation } => {
                write!(f, "kernel quadrature integrates to 1 + {deviation:e}")
            }
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
        }
    }
}

impl core::error::Error for Error {}
