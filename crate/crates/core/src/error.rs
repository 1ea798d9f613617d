use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval system: {0}")]
    InvalidSystem(String),
    #[error("endpoint list not strictly increasing at index {index}: {value} after {previous}")]
    NonMonotone {
        index: usize,
        value: f64,
        previous: f64,
    },
    #[error("endpoint list must have even length >= 2, got {0}")]
    OddEndpoints(usize),
    #[error("evaluation on a cut at x = {0} requires a side (+/-)")]
    SideRequired(f64),
    #[error("gap index {index} out of range (system has {gaps} gaps)")]
    GapIndex { index: usize, gaps: usize },
    #[error("non-finite integrand value at node x = {0}")]
    NonFiniteIntegrand(f64),
    #[error("integrand changed sign at x = {0} without a declared zero")]
    UndeclaredSignChange(f64),
    #[error("linear system ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("point {0} lies inside the convex hull of the support")]
    InsideHull(f64),
    #[error("polynomial has a zero on the support at x = {0}")]
    ZeroOnSupport(f64),
    #[error("density must be positive on band interiors, got {value} at x = {x}")]
    NonPositiveDensity { x: f64, value: f64 },
    #[error("no Riemann-constant candidate passed the vanishing test (quadrature or branch fault)")]
    RiemannConstants,
    #[error("Jacobi inversion failed to converge: residual {residual:.3e} after {iterations} iterations")]
    JacobiInversion { residual: f64, iterations: usize },
    #[error("fixed-point iteration for the critical point did not converge after {iterations} iterations (last displacement {displacement:.3e})")]
    CriticalPoint {
        iterations: usize,
        displacement: f64,
    },
    #[error("pole of the approximant within {dist:.3e} of the evaluation point {z}")]
    NearPole { z: String, dist: f64 },
    #[error("operation requires the support to lie inside (-1, 1)")]
    NotInUnitDisk,
    #[error("operation requires genus >= 1")]
    GenusZero,
    #[error("scenario validation: {0}")]
    Scenario(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
