//! Line integrals along polyline paths in the complex plane.
//!
//! All path integrals in the crate (exponent integrals of `psi_n`, the
//! condenser map, and the Abel map) reduce to integrals over straight
//! segments. Panels of 16-point Gauss-Legendre are used. A segment end that
//! touches a branch point carries an inverse-square-root singularity of the
//! integrand; those ends are handled by the substitution `s = end + dir u^2`,
//! which removes the singularity exactly, followed by geometrically graded
//! panels in `u`. Gauss-Legendre nodes are interior, so integrands are never
//! evaluated exactly at a cut point.

use num_complex::Complex64;
use std::sync::OnceLock;

const GL_ORDER: usize = 16;
/// Geometric halvings in the substituted variable; `2^-25 ~ 3e-8` keeps the
/// sampled point a safe distance (in floating point) from the singular end.
const GRADE_LEVELS: i32 = 25;

fn gl16() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        // Newton iteration on Legendre polynomials, standard construction.
        let n = GL_ORDER;
        let mut nodes = [0.0; GL_ORDER];
        let mut weights = [0.0; GL_ORDER];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integral of `f` over the straight segment `[a, b]` with `panels` equal
/// Gauss-Legendre panels.
pub fn segment<F: Fn(Complex64) -> Complex64>(
    f: &F,
    a: Complex64,
    b: Complex64,
    panels: usize,
) -> Complex64 {
    let (nodes, weights) = gl16();
    let dir = b - a;
    let mut total = Complex64::new(0.0, 0.0);
    let h = 1.0 / panels as f64;
    for p in 0..panels {
        let t0 = p as f64 * h;
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in nodes.iter().zip(weights) {
            let t = t0 + h * 0.5 * (x + 1.0);
            acc += *w * f(a + dir * t);
        }
        total += acc * (h * 0.5);
    }
    total * dir
}

/// Integral from the singular end `sing` to `other`, assuming at worst an
/// inverse-square-root blowup of `f` at `sing`.
fn graded_half<F: Fn(Complex64) -> Complex64>(f: &F, sing: Complex64, other: Complex64) -> Complex64 {
    let (nodes, weights) = gl16();
    let dir = other - sing;
    let g = |u: f64| f(sing + dir * (u * u)) * (2.0 * u);
    // stop grading before `sing + dir u^2` rounds onto the singular point:
    // keep the sampled offset above ~1e-13 relative to the endpoint
    let floor_u = (1e-13 * (1.0 + sing.norm()) / dir.norm().max(1e-300)).sqrt();
    let levels = if floor_u >= 0.25 {
        2
    } else {
        ((-floor_u.log2()).floor() as i32).clamp(2, GRADE_LEVELS)
    };
    let u_min = 0.5f64.powi(levels);
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..levels {
        let u1 = 0.5f64.powi(k);
        let u0 = 0.5 * u1;
        // three GL16 panels per dyadic level keep each panel short enough
        // for ~1e-14 accuracy on the outermost levels
        let h = (u1 - u0) / 3.0;
        for p in 0..3 {
            let lo = u0 + p as f64 * h;
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, w) in nodes.iter().zip(weights) {
                acc += *w * g(lo + h * 0.5 * (x + 1.0));
            }
            total += acc * (h * 0.5);
        }
    }
    // after the substitution the integrand is bounded at u = 0; a midpoint
    // rectangle over the truncated sliver is exact for the leading linear
    // behavior of the substituted integrand
    total += g(0.5 * u_min) * u_min;
    total * dir
}

/// Integral over `[a, b]` with square-root-singularity treatment at the
/// flagged ends.
pub fn segment_graded<F: Fn(Complex64) -> Complex64>(
    f: &F,
    a: Complex64,
    b: Complex64,
    grade_a: bool,
    grade_b: bool,
    body_panels: usize,
) -> Complex64 {
    match (grade_a, grade_b) {
        (false, false) => segment(f, a, b, body_panels),
        (true, false) => graded_half(f, a, b),
        (false, true) => -graded_half(f, b, a),
        (true, true) => {
            let m = 0.5 * (a + b);
            graded_half(f, a, m) - graded_half(f, b, m)
        }
    }
}

/// Integral of a real function over `[a, b]` with graded treatment of the
/// flagged singular ends.
pub fn real_graded<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    grade_a: bool,
    grade_b: bool,
    body_panels: usize,
) -> f64 {
    let g = |z: Complex64| Complex64::new(f(z.re), 0.0);
    segment_graded(
        &g,
        Complex64::new(a, 0.0),
        Complex64::new(b, 0.0),
        grade_a,
        grade_b,
        body_panels,
    )
    .re
}

/// A polyline path as a list of vertices.
#[derive(Debug, Clone)]
pub struct Path {
    pub vertices: Vec<Complex64>,
    /// treat the start of the first segment as a square-root singularity
    pub grade_start: bool,
    /// treat the end of the last segment likewise
    pub grade_end: bool,
}

impl Path {
    pub fn new(vertices: Vec<Complex64>) -> Self {
        Path {
            vertices,
            grade_start: false,
            grade_end: false,
        }
    }

    pub fn graded(mut self, start: bool, end: bool) -> Self {
        self.grade_start = start;
        self.grade_end = end;
        self
    }

    /// Integrates `f` along the polyline.
    pub fn integrate<F: Fn(Complex64) -> Complex64>(&self, f: &F) -> Complex64 {
        let n = self.vertices.len();
        let mut total = Complex64::new(0.0, 0.0);
        for (i, pair) in self.vertices.windows(2).enumerate() {
            let ga = self.grade_start && i == 0;
            let gb = self.grade_end && i == n - 2;
            let len = (pair[1] - pair[0]).norm();
            if len == 0.0 {
                continue;
            }
            let body = ((len * 8.0).ceil() as usize).clamp(12, 96);
            total += segment_graded(f, pair[0], pair[1], ga, gb, body);
        }
        total
    }
}
