use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure categories. The command-line driver maps each variant to an exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Input data violates a structural invariant.
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A numeric procedure did not produce a usable result.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
