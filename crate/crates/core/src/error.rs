use std::fmt;

/// Errors raised by the group arithmetic, the fuzzy extractor and the
/// protocol phases.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("curve is singular: 4c^3 + 27d^2 = 0 mod p")]
    SingularCurve,
    #[error("generator is not on the curve")]
    GeneratorOffCurve,
    #[error("bad group order: {0}")]
    BadOrder(&'static str),
    #[error("point is not on the curve")]
    PointOffCurve,
    #[error("expected {expected} octets, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("biometric template has {got} bits, expected {expected}")]
    BadTemplateLength { expected: usize, got: usize },
    #[error("invalid fuzzy extractor parameters: {0}")]
    BadFuzzyParams(String),
    #[error("timestamp outside the freshness window")]
    StaleTimestamp,
    #[error("user {0:?} is already registered")]
    DuplicateRegistration(String),
    #[error("unknown user")]
    UnknownUser,
    #[error("authentication failed")]
    AuthenticationFailure,
    #[error("invalid curve point in message")]
    InvalidPoint,
    #[error("local credential check failed")]
    LocalAuthFailure,
    #[error("unknown curve profile {0:?}")]
    UnknownProfile(String),
    #[error("unknown hash function {0:?}")]
    UnknownHash(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Field-free discriminant of [`Error`], used when comparing outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorKind {
    SingularCurve,
    GeneratorOffCurve,
    BadOrder,
    PointOffCurve,
    WidthMismatch,
    BadTemplateLength,
    BadFuzzyParams,
    StaleTimestamp,
    DuplicateRegistration,
    UnknownUser,
    AuthenticationFailure,
    InvalidPoint,
    LocalAuthFailure,
    UnknownProfile,
    UnknownHash,
    Malformed,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::SingularCurve => ErrorKind::SingularCurve,
            Error::GeneratorOffCurve => ErrorKind::GeneratorOffCurve,
            Error::BadOrder(_) => ErrorKind::BadOrder,
            Error::PointOffCurve => ErrorKind::PointOffCurve,
            Error::WidthMismatch { .. } => ErrorKind::WidthMismatch,
            Error::BadTemplateLength { .. } => ErrorKind::BadTemplateLength,
            Error::BadFuzzyParams(_) => ErrorKind::BadFuzzyParams,
            Error::StaleTimestamp => ErrorKind::StaleTimestamp,
            Error::DuplicateRegistration(_) => ErrorKind::DuplicateRegistration,
            Error::UnknownUser => ErrorKind::UnknownUser,
            Error::AuthenticationFailure => ErrorKind::AuthenticationFailure,
            Error::InvalidPoint => ErrorKind::InvalidPoint,
            Error::LocalAuthFailure => ErrorKind::LocalAuthFailure,
            Error::UnknownProfile(_) => ErrorKind::UnknownProfile,
            Error::UnknownHash(_) => ErrorKind::UnknownHash,
            Error::Malformed(_) => ErrorKind::Malformed,
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
