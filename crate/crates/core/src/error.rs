use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolytopeError {
    #[error("malformed polytope document: {0}")]
    Malformed(String),
    #[error("facet {facet}: normal {normal:?} is not primitive")]
    NonPrimitiveNormal { facet: usize, normal: Vec<i64> },
    #[error("facet {facet}: zero normal")]
    ZeroNormal { facet: usize },
    #[error("polytope region is unbounded")]
    Unbounded,
    #[error("polytope has empty interior")]
    EmptyInterior,
    #[error("facet {facet} is redundant")]
    RedundantFacet { facet: usize },
    #[error("vertex {point:?} lies on {active} facets (more than the dimension)")]
    DegenerateVertex { point: Vec<f64>, active: usize },
    #[error("polytope is not Fano: no point with equal positive facet values (residual {residual:.3e})")]
    NotFano { residual: f64 },
    #[error("polytope is not Delzant: vertex {vertex} has determinant {det}")]
    NotDelzant { vertex: usize, det: i64 },
    #[error("polytope is not algebraic (all offsets must equal 1)")]
    NotAlgebraic,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("root region of facet {facet} is unbounded")]
    UnboundedRootRegion { facet: usize },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("only dimension 2 is supported, got {0}")]
    UnsupportedDimension(usize),
    #[error("Newton iteration did not converge after {iterations} steps (relative gradient {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("weighted volume Hessian lost positive definiteness (smallest eigenvalue {0:.3e})")]
    IndefiniteHessian(f64),
    #[error("quadrature orders did not agree up to order {0}")]
    QuadratureNotConverged(usize),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("evaluation point {0:?} is not interior")]
    BoundaryEvaluation(Vec<f64>),
    #[error("perturbed potential is not convex at {0:?}")]
    LossOfConvexity(Vec<f64>),
    #[error("line-integration segment leaves the interior")]
    SegmentExitsInterior,
    #[error("singular Hessian at {0:?}")]
    SingularHessian(Vec<f64>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalabiError {
    #[error("invalid Calabi parameters: {0}")]
    InvalidParameters(String),
    #[error("no sign change of the soliton equation on [{0}, {1}]")]
    NoSignChange(f64, f64),
    #[error("argument {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("finite-difference step underflow at {0:?}")]
    StepUnderflow(Vec<f64>),
    #[error("eigenvalue fit residual {0:.3e} above tolerance")]
    FitResidual(f64),
    #[error("empty evaluation grid")]
    EmptyGrid,
}

/// Top-level error, classified for process exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Calabi(#[from] CalabiError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Solver,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Polytope(_) | Error::Root(_) => ErrorClass::Input,
            Error::Solver(SolverError::Polytope(_)) => ErrorClass::Input,
            Error::Solver(SolverError::UnsupportedDimension(_)) => ErrorClass::Input,
            Error::Calabi(CalabiError::InvalidParameters(_)) | Error::Calabi(CalabiError::Polytope(_)) => {
                ErrorClass::Input
            }
            _ => ErrorClass::Solver,
        }
    }
}
