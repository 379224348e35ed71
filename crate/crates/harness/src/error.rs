use std::fmt;

#[derive(Debug)]
pub enum HarnessError {
    /// The experiment description is malformed or references unknown names.
    InvalidSpec(String),
    /// Convergence data unusable for a slope fit.
    DegenerateData(String),
    /// A solver inside the run failed.
    Solver(variational::Error),
    Io(std::io::Error),
}

impl HarnessError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        HarnessError::InvalidSpec(msg.into())
    }

    /// Process exit code: 2 for solver trouble, 3 for an invalid spec.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::InvalidSpec(_) => 3,
            HarnessError::DegenerateData(_) => 2,
            HarnessError::Solver(e) => match e {
                variational::Error::UnknownRule { .. } | variational::Error::MissingHamiltonian => {
                    3
                }
                _ => 2,
            },
            HarnessError::Io(_) => 1,
        }
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::InvalidSpec(msg) => write!(f, "invalid spec: {msg}"),
            HarnessError::DegenerateData(msg) => write!(f, "degenerate data: {msg}"),
            HarnessError::Solver(e) => write!(f, "solver failure: {e}"),
            HarnessError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<variational::Error> for HarnessError {
    fn from(e: variational::Error) -> Self {
        HarnessError::Solver(e)
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
