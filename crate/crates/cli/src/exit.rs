use std::fmt;

use qpuf_core::Error;

/// Failure classes mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// A check ran and did not hold (exit 1).
    Check(String),
    /// Bad arguments or configuration (exit 2).
    Usage(String),
    /// Reading or writing files failed (exit 3).
    Io(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(io) => Failure::Io(io.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

pub type CmdResult = Result<(), Failure>;

/// Attaches a path to IO failures.
pub fn io_at(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}
