use thiserror::Error;

/// Failures of the geometric routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point ({x}, {y}) lies outside the closed domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("point ({x}, {y}) is not on the boundary")]
    NotOnBoundary { x: f64, y: f64 },
    #[error("boundary point ({x}, {y}) is a corner; the normal is undefined")]
    Corner { x: f64, y: f64 },
    #[error("normal offset {r} leaves the tube of radius {tube}")]
    OutOfTube { r: f64, tube: f64 },
    #[error("chain of balls: {0}")]
    Chain(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("grid configuration: {0}")]
    Config(String),
    #[error("ball of radius {radius} around ({x}, {y}) is not contained in the computed region")]
    BallOutside { x: f64, y: f64, radius: f64 },
}

/// Failures of the discrete solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("no convergence after {iterations} outer steps, last residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("matrix is not positive definite at row {row}")]
    NotPositiveDefinite { row: usize },
    #[error("eigenvalue bracket failure: {0}")]
    Bracket(String),
    #[error("boundary ordering violated at node {node}: {upper} < {lower}")]
    Ordering { node: usize, upper: f64, lower: f64 },
}

/// Failures of the angular shooting.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExponentError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("no exponent in [{lo}, {hi}] puts the first zero at {theta0}")]
    Range { lo: f64, hi: f64, theta0: f64 },
    #[error("first-zero angle is not monotone in the exponent; crossings near {crossings:?}")]
    Ambiguous { crossings: Vec<f64> },
    #[error("integrator failure at theta = {theta}")]
    Integrator { theta: f64 },
}

/// Failures while constructing barriers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error("point at distance {distance} is outside the annulus [{inner}, {outer}]")]
    OutsideAnnulus {
        distance: f64,
        inner: f64,
        outer: f64,
    },
    #[error("no admissible b on the dyadic ladder down to {smallest}")]
    NoAdmissibleB { smallest: f64 },
    #[error("invalid input: {0}")]
    Input(String),
}

/// Failures of the Harnack measurements.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnackError {
    #[error("sampling: {0}")]
    Sampling(String),
    #[error("reference value u = {value:e} is degenerate")]
    Degenerate { value: f64 },
    #[error("fields are defined on incompatible grids")]
    Incompatible,
}

/// Failures of the truncation scheme and cone fits.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SingularError {
    #[error("ladder is not monotone: violation {violation:e} at level {level}")]
    NotMonotone { level: usize, violation: f64 },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("fit curvature {curvature:.3e} exceeds threshold; extend the outer radius")]
    ExtendDomain { curvature: f64 },
    #[error("annulus image [{lo}, {hi}] exits the grid")]
    ImageOutsideGrid { lo: f64, hi: f64 },
}

/// Crate-level error, one variant per module so callers can tell which stage failed.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("exponents: {0}")]
    Exponent(#[from] ExponentError),
    #[error("barriers: {0}")]
    Barrier(#[from] BarrierError),
    #[error("harnack: {0}")]
    Harnack(#[from] HarnackError),
    #[error("singular: {0}")]
    Singular(#[from] SingularError),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Short name of the module that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Geometry(_) => "geometry",
            Error::Solver(_) => "plaplace_solver",
            Error::Exponent(_) => "spherical_exponents",
            Error::Barrier(_) => "barriers",
            Error::Harnack(_) => "harnack_verifier",
            Error::Singular(_) => "singular_solutions",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
