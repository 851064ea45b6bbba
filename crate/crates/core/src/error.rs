use thiserror::Error;

/// Errors raised anywhere in the laboratory.
///
/// Variants fall into three families that the CLI maps onto distinct exit
/// codes: parameter errors, protocol-order errors and the enumeration cap.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("modulus must be at least {min}, got {got}")]
    ModulusTooSmall { got: u64, min: u64 },
    #[error("modulus {got} exceeds the supported maximum {max}")]
    ModulusTooLarge { got: u64, max: u64 },
    #[error("not prime: {0}")]
    NotPrime(u64),
    #[error("not a generator: {g} is not a primitive root mod {p}")]
    NotGenerator { g: u64, p: u64 },
    #[error("generator {g} out of range for modulus {p}")]
    GeneratorOutOfRange { g: u64, p: u64 },
    #[error("no inverse: {a} is not invertible mod {p}")]
    NoInverse { a: u64, p: u64 },
    #[error("invalid angle: {0}")]
    InvalidAngle(f64),
    #[error("arithmetic overflow computing {0}")]
    Overflow(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("protocol order: cannot {op} while {phase}")]
    ProtocolOrder {
        op: &'static str,
        phase: &'static str,
    },
    #[error("mode mismatch: session is {session}, requested {requested}")]
    ModeMismatch {
        session: &'static str,
        requested: &'static str,
    },
    #[error("transcript violation: {quantum} quantum and {classical} classical transmissions in one round")]
    TranscriptViolation { quantum: usize, classical: usize },
    #[error("enumeration cap: p = {p} exceeds {cap}; use a Monte Carlo experiment instead")]
    EnumerationCap { p: u64, cap: u64 },
    #[error("i/o: {0}")]
    Io(String),
}

/// Coarse error families, used for exit codes and diagnostic prefixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parameter,
    Protocol,
    EnumerationCap,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::ProtocolOrder { .. }
            | Error::ModeMismatch { .. }
            | Error::TranscriptViolation { .. } => ErrorKind::Protocol,
            Error::EnumerationCap { .. } => ErrorKind::EnumerationCap,
            _ => ErrorKind::Parameter,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
