use std::fmt;

/// Errors produced by the solvers and constructors in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix expected to be skew-symmetric was not, to tolerance.
    NotSkew { asymmetry: f64 },
    /// Rotation logarithm requested within the cut locus guard band at angle pi.
    NearPiAngle { angle: f64 },
    /// Quadrature rule name not in the catalog.
    UnknownRule { name: String },
    /// A rule with endpoint-derivative weights was integrated without derivative samples.
    MissingDerivatives,
    /// Newton iteration failed to reach the residual tolerance.
    NoConvergence { iterations: usize, residual: f64 },
    /// Newton linear solve hit a (numerically) singular Jacobian.
    SingularJacobian,
    /// A phase-space operation was requested on a system without Hamiltonian callables.
    MissingHamiltonian,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotSkew { asymmetry } => {
                write!(
                    f,
                    "matrix is not skew-symmetric (asymmetry {asymmetry:.3e})"
                )
            }
            Error::NearPiAngle { angle } => {
                write!(
                    f,
                    "rotation angle {angle:.12} is too close to pi for a stable logarithm"
                )
            }
            Error::UnknownRule { name } => write!(f, "unknown quadrature rule `{name}`"),
            Error::MissingDerivatives => {
                write!(f, "quadrature rule requires endpoint derivative samples")
            }
            Error::NoConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "Newton did not converge after {iterations} iterations (residual {residual:.3e})"
            ),
            Error::SingularJacobian => write!(f, "singular Jacobian in Newton solve"),
            Error::MissingHamiltonian => {
                write!(f, "system does not provide Hamiltonian callables")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
