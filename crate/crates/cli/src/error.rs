use std::fmt;
use std::io;
use std::path::Path;

use ped_core::analytics::AnalyticsError;
use ped_core::distance::DistanceError;
use ped_core::emb1::{Emb1Error, MetadataError};
use ped_core::reward::RewardError;
use ped_core::screening::ScreenError;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// A failure with a stable code, reported on stderr as `error: CODE: message`.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub exit: i32,
}

impl CliError {
    pub fn usage(code: &'static str, message: impl Into<String>) -> Self {
        CliError { code, message: message.into(), exit: EXIT_USAGE }
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        CliError { code: "IO_ERROR", message: format!("{}: {err}", path.display()), exit: EXIT_IO }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches the offending path to library errors.
pub trait WithPath<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T> WithPath<T> for Result<T, Emb1Error> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| {
            let exit = if matches!(e, Emb1Error::Io(_)) { EXIT_IO } else { EXIT_USAGE };
            CliError { code: e.code(), message: format!("{}: {e}", path.display()), exit }
        })
    }
}

impl<T> WithPath<T> for Result<T, MetadataError> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| {
            let exit = if matches!(e, MetadataError::Io(_)) { EXIT_IO } else { EXIT_USAGE };
            CliError { code: e.code(), message: format!("{}: {e}", path.display()), exit }
        })
    }
}

impl<T> WithPath<T> for io::Result<T> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| CliError::io(path, e))
    }
}

macro_rules! validation_error {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::usage(e.code(), e.to_string())
            }
        }
    )*};
}

validation_error!(AnalyticsError, DistanceError, RewardError, ScreenError);
