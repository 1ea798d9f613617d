//! Rational approximation of Markov functions supported on several real
//! intervals.
//!
//! The crate constructs multipoint Pade approximants and critical points of
//! the squared `L^2` error on the unit circle, together with all the special
//! functions that enter the strong asymptotic formulas for the approximation
//! error: Szego functions on several intervals, the condenser map and its
//! Szego function, and Riemann theta quotients on the underlying
//! two-sheeted surface.
//!
//! Modules mirror the layers of the construction:
//!
//! * [`geometry`] — interval systems and the algebraic functions `w`, `w~`;
//! * [`quad`] — all quadrature rules (band, gap, circle, log-endpoint);
//! * [`basis`] — polynomial bases `l_i`, `ell_j`, `u` and the period matrix;
//! * [`scalarmaps`] — `psi_n`, the condenser map `phi`, Szego functions;
//! * [`theta`] — Abel map, theta series, Jacobi inversion, theta quotients;
//! * [`approx`] — orthogonal polynomials, Pade approximants, critical points;
//! * [`harness`] — scenario runner assembling the asymptotic right-hand sides.

pub mod approx;
pub mod basis;
pub mod contour;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod quad;
pub mod scalarmaps;
pub mod theta;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Sizes the global thread pool; a no-op without the `parallel` feature or
/// once any parallel work has already run.
pub fn configure_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

/// Runs the closure over the slice in parallel when the `parallel` feature is
/// enabled, sequentially otherwise. All call sites require `f` to be pure.
pub fn par_map<T: Sync, U: Send, F: Fn(&T) -> U + Sync + Send>(items: &[T], f: F) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
