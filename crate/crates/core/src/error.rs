use std::fmt;

use crate::grid::GridPoint;

pub type Result<T> = std::result::Result<T, Error>;

/// Which of the five prescribed faces of the space-time box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    /// `t = 0` for the state, `t = T` for adjoint-type fields.
    Time,
    Y0,
    YS,
    X0,
    XL,
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Face::Time => "time",
            Face::Y0 => "y=0",
            Face::YS => "y=S",
            Face::X0 => "x=0",
            Face::XL => "x=L",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid construction: {0}")]
    Grid(String),
    #[error("point {point} is outside the stencil range of {op}")]
    Index { op: &'static str, point: GridPoint },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unsupported: {0}")]
    Capability(String),
    #[error("ill-conditioned linear program: {0}")]
    Conditioning(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unbounded: {0}")]
    Unbounded(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("adjoint boundary zeros violated on faces {faces:?} (max {max_violation:e})")]
    Boundary { faces: Vec<Face>, max_violation: f64 },
    #[error("control infeasible at {point}: {reason}")]
    ControlInfeasible { point: GridPoint, reason: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Shape(_) | Error::Invalid(_) | Error::Io(_) | Error::Csv(_) => 2,
            Error::Grid(_) => 2,
            _ => 3,
        }
    }
}
