use std::fmt;
use std::path::PathBuf;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ALL_DIVERGENT: i32 = 3;
pub const EXIT_CERTIFICATE_FAIL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(langevin_kit::Error),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(_) => EXIT_USAGE,
            CliError::Io(..) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
        }
    }
}

impl From<langevin_kit::Error> for CliError {
    fn from(e: langevin_kit::Error) -> Self {
        CliError::Core(e)
    }
}

/// Finished runs that still need a non-zero exit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    AllDivergent,
    CertificateFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => EXIT_OK,
            Outcome::AllDivergent => EXIT_ALL_DIVERGENT,
            Outcome::CertificateFailed => EXIT_CERTIFICATE_FAIL,
        }
    }
}

pub fn require<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}
