use thiserror::Error;

use crate::measures::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid mass {mass} at {point:?}")]
    InvalidMass { point: Point, mass: f64 },
    #[error("duplicate atom at {0:?}")]
    DuplicateAtom(Point),
    #[error("masses sum to {0}, expected 1 within 1e-12")]
    NotNormalized(f64),
    #[error("signed lattice measure cannot carry an atom at the origin")]
    AtomAtOrigin,
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid size {0} is not a power of two >= 2")]
    GridSizeNotPowerOfTwo(usize),
    #[error("grid with {points} points exceeds the budget of {budget}")]
    GridTooLarge { points: u128, budget: usize },
    #[error("certificate does not match this grid or is not valid")]
    InvalidCertificate,
    #[error("phase step {step:.3} at grid index {index} is not below pi/2; refine the grid")]
    UnwrapAmbiguity { index: usize, step: f64 },
    #[error("winding along axis {axis} is inconsistent ({detail}); refine the grid")]
    WindingMismatch { axis: usize, detail: String },

    #[error("characteristic function vanishes (|phi| = {modulus:e}) at z = {z:?}")]
    ZeroFound { z: Vec<f64>, modulus: f64 },
    #[error("zero-freeness inconclusive up to grid size {grid_size}")]
    Inconclusive { grid_size: usize },
    #[error("no convergence before grid size {grid_size} hit the budget: {reason}")]
    NonConvergence { grid_size: usize, reason: String },
    #[error("imaginary residual {0:e} above tolerance")]
    ImaginaryResidual(f64),
    #[error("numerical fault: {0}")]
    NumericalFault(String),

    #[error("expected a one-dimensional pmf")]
    NotOneDimensional,
    #[error("support is not contained in the nonnegative orthant")]
    NotNonnegative,
    #[error("mass at the origin is {0:e}; recursion needs p(0) >= 1e-8")]
    IllConditioned(f64),
    #[error("degree box {0:?} does not cover the support")]
    BoxTooSmall(Vec<usize>),
    #[error("axis estimates of the log coefficients disagree by {0:e}")]
    AxisInconsistency(f64),
}
