use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("shape mismatch for {what}: expected {expected}, found {found}")]
    Shape { what: String, expected: usize, found: usize },
    #[error("expression for {what} references undeclared variable `{name}`")]
    UndeclaredVariable { what: String, name: String },
    #[error("singular Hessian (condition {cond:e}){}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    SingularHessian { cond: f64, step: Option<usize> },
    #[error("Newton iteration did not converge: residual {residual:e} after {iterations} iterations")]
    NewtonDivergence { residual: f64, iterations: usize },
    #[error("implicit midpoint iteration did not converge at step {step}")]
    MidpointDivergence { step: usize },
    #[error("step count {steps} exceeds the limit of {limit}")]
    StepCount { steps: f64, limit: u64 },
    #[error("evaluation failed at sample {index} ({point:?}): {source}")]
    AtSample { index: usize, point: Vec<f64>, source: Box<Error> },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the numerical solvers rather than of the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SingularHessian { .. }
            | Error::NewtonDivergence { .. }
            | Error::MidpointDivergence { .. }
            | Error::Eval(EvalError::Domain { .. }) => true,
            Error::AtSample { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
