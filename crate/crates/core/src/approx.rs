//! Markov functions and their rational approximants: varying-weight
//! orthogonal polynomials, multipoint Pade errors, the critical-point
//! fixed-point iteration, and the divisor-derived data feeding the
//! strong-asymptotics formulas.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{bisect_zero, GapBasis, Poly};
use crate::geometry::{IntervalSystem, Side};
use crate::quad::{self, EndpointOrder, DEFAULT_BAND_ORDER};
use crate::scalarmaps::{omega_n, szego_constants, DensityProfile, InterpolationScheme};
use crate::theta::{solve_jip, Divisor, Sheet, ThetaContext};
use crate::{Error, Result};

/// Tolerance under which a divisor projection counts as a branch point.
const ENDPOINT_HIT_TOL: f64 = 1e-9;

/// The smooth positive part of the spectral density, in one of the forms
/// the scenario grammar admits. All three have entire analytic
/// continuations used by Cauchy-type integrals near the support.
#[derive(Debug, Clone)]
pub enum MuSpec {
    One,
    /// `exp(p(x))` for a real polynomial `p`.
    ExpPoly(Poly),
    /// A real polynomial positive on the convex hull of the support.
    PosPoly(Poly),
}

impl MuSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            MuSpec::One => 1.0,
            MuSpec::ExpPoly(p) => p.eval(x).exp(),
            MuSpec::PosPoly(p) => p.eval(x),
        }
    }

    pub fn eval_c(&self, z: Complex64) -> Complex64 {
        match self {
            MuSpec::One => Complex64::new(1.0, 0.0),
            MuSpec::ExpPoly(p) => p.eval_c(z).exp(),
            MuSpec::PosPoly(p) => p.eval_c(z),
        }
    }

    /// The same density as a [`DensityProfile`] (for the Szego machinery).
    pub fn profile(&self) -> DensityProfile {
        match self.clone() {
            MuSpec::One => DensityProfile::constant(1.0),
            MuSpec::ExpPoly(p) => DensityProfile::exp_poly(p),
            MuSpec::PosPoly(p) => {
                let p2 = p.clone();
                DensityProfile {
                    reg: Box::new(move |x| p.eval(x)),
                    // principal log; p is positive on a hull neighborhood
                    log_reg_c: Box::new(move |z| p2.eval_c(z).ln()),
                    orders: Vec::new(),
                }
            }
        }
    }
}

/// A Markov function `f(z) = int dmu(x)/(z - x)` with
/// `dmu = -(1/pi i) mu(x) m(x) dx / w_+(x)`: `mu` smooth and positive on
/// the hull, `m` monic with exactly one zero in each gap, so that the
/// measure is positive on every band.
pub struct MarkovFunction {
    pub sys: IntervalSystem,
    pub mu: MuSpec,
    pub m: Poly,
    /// Zero of `m` in each gap, in gap order.
    pub m_zeros: Vec<f64>,
}

impl MarkovFunction {
    pub fn new(sys: &IntervalSystem, mu: MuSpec, m: Poly) -> Result<Self> {
        let g = sys.genus();
        if m.degree() != g {
            return Err(Error::Scenario(format!(
                "gap polynomial has degree {}, system genus is {}",
                m.degree(),
                g
            )));
        }
        if (m.c.last().copied().unwrap_or(0.0) - 1.0).abs() > 1e-12 {
            return Err(Error::Scenario("gap polynomial must be monic".into()));
        }
        let mut m_zeros = Vec::with_capacity(g);
        for i in 0..g {
            let (b, a) = sys.gap(i)?;
            let z = bisect_zero(|x| m.eval(x), b, a).ok_or_else(|| {
                Error::Scenario(format!("gap polynomial has no zero in gap ({b}, {a})"))
            })?;
            m_zeros.push(z);
        }
        let mf = MarkovFunction {
            sys: sys.clone(),
            mu,
            m,
            m_zeros,
        };
        // positivity of the measure at band midpoints
        for k in 0..sys.num_bands() {
            let (a, b) = sys.band(k);
            let x = 0.5 * (a + b);
            let v = mf.weight(x).unwrap_or(f64::NAN);
            if !(v > 0.0) {
                return Err(Error::NonPositiveDensity { x, value: v });
            }
        }
        Ok(mf)
    }

    /// `rho(x) = mu(x) m(x)`, the numerator of the spectral density.
    pub fn rho(&self, x: f64) -> f64 {
        self.mu.eval(x) * self.m.eval(x)
    }

    pub fn rho_c(&self, z: Complex64) -> Complex64 {
        self.mu.eval_c(z) * self.m.eval_c(z)
    }

    /// Density of `dmu` w.r.t. `dx` on the support:
    /// `sgn_k rho(x) / (pi |w(x)|)` on band `k`.
    pub fn weight(&self, x: f64) -> Option<f64> {
        let k = self.sys.band_of(x)?;
        Some(quad::band_sign(&self.sys, k) * self.rho(x) / (std::f64::consts::PI * self.sys.w_abs(x)))
    }

    /// `int h(x) dmu(x)` by the cosine rules.
    pub fn integral<F: Fn(f64) -> f64>(&self, h: F, order: usize) -> Result<f64> {
        // -(1/pi i) int rho h / w_+ dx = (i/pi) * band_integral(rho h)
        let v = quad::band_integral(
            &self.sys,
            |x| Complex64::new(self.rho(x) * h(x), 0.0),
            Side::Plus,
            order,
        )?;
        Ok((Complex64::new(0.0, 1.0 / std::f64::consts::PI) * v).re)
    }

    /// Total mass `mu(Delta)`.
    pub fn mass(&self) -> Result<f64> {
        self.integral(|_| 1.0, DEFAULT_BAND_ORDER)
    }

    /// `int x^k dmu(x)`.
    pub fn moment(&self, k: usize, order: usize) -> Result<f64> {
        self.integral(|x| x.powi(k as i32), order)
    }
}

/// `f(z) = int dmu(x)/(z - x)`; on the support a `side` picks the trace.
pub fn markov_eval(mf: &MarkovFunction, z: Complex64, side: Side) -> Result<Complex64> {
    // f(z) = (1/pi i) int rho(x)/((x - z) w_+(x)) dx
    let v = quad::cauchy_band(&mf.sys, |s| mf.rho_c(s), z, side, DEFAULT_BAND_ORDER)?;
    Ok(Complex64::new(0.0, -1.0 / std::f64::consts::PI) * v)
}

/// Monic polynomial with the given real zeros.
pub fn monic_from_zeros(zeros: &[f64], z: Complex64) -> Complex64 {
    zeros
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &x| acc * (z - x))
}

fn monic_from_zeros_real(zeros: &[f64], x: f64) -> f64 {
    zeros.iter().fold(1.0, |acc, &r| acc * (x - r))
}

/// A rational approximant `p_n/q_n` represented by the zeros of its
/// denominator; the numerator is never formed.
#[derive(Debug, Clone)]
pub struct RationalApproximant {
    pub n: usize,
    /// Real zeros of the monic denominator, ascending.
    pub q_zeros: Vec<f64>,
    pub scheme: InterpolationScheme,
    /// Monic normalizer of the reflected-square weight (1 for plain Pade).
    pub kappa_n: f64,
}

impl RationalApproximant {
    pub fn q(&self, z: Complex64) -> Complex64 {
        monic_from_zeros(&self.q_zeros, z)
    }

    /// Reflected polynomial `q~(z) = z^n q(1/z) = prod (1 - x_j z)`.
    pub fn q_tilde(&self, z: Complex64) -> Complex64 {
        self.q_zeros
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &x| acc * (1.0 - x * z))
    }

    /// Blaschke product `b_n = q_n / q~_n`, unimodular on the circle.
    pub fn b_n(&self, z: Complex64) -> Complex64 {
        self.q(z) / self.q_tilde(z)
    }
}

/// Monic degree-`n` polynomial orthogonal to lower degrees w.r.t.
/// `dmu / v`, returned as its sorted real zeros.
///
/// Recurrence coefficients come from the discretized Stieltjes procedure
/// on the cosine-rule nodes; zeros are the eigenvalues of the symmetric
/// Jacobi matrix, polished by Newton steps on the recurrence. This stays
/// well-conditioned far beyond where the monomial moment Gram matrix
/// degenerates.
pub fn ortho_q<V: Fn(f64) -> f64>(
    mf: &MarkovFunction,
    v: V,
    n: usize,
    order: usize,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    // discrete measure: nodes with plain-dx rule weights times the density
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for k in 0..mf.sys.num_bands() {
        let rule = quad::QuadratureRule::band(&mf.sys, k, order);
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let nu = mf.weight(x).unwrap_or(0.0) / v(x);
            if !nu.is_finite() {
                return Err(Error::NonFiniteIntegrand(x));
            }
            xs.push(x);
            ws.push(w * nu);
        }
    }
    // orthogonality is invariant under a global sign of the weight (odd
    // schemes make v_n sign-definite negative on the support); a genuine
    // sign change is an error
    let sign = ws[0].signum();
    for (&x, w) in xs.iter().zip(ws.iter_mut()) {
        *w *= sign;
        if *w <= 0.0 {
            return Err(Error::NonPositiveDensity { x, value: *w * sign });
        }
    }
    // Stieltjes: alpha_k = <x p_k, p_k>/<p_k, p_k>, beta_k = <p_k,p_k>/<p_{k-1},p_{k-1}>
    let m = xs.len();
    let mut p_prev = vec![0.0f64; m];
    let mut p_cur = vec![1.0f64; m];
    let mut norm_prev = 0.0f64;
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for k in 0..n {
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for i in 0..m {
            let pw = ws[i] * p_cur[i] * p_cur[i];
            s0 += pw;
            s1 += pw * xs[i];
        }
        if !(s0 > 0.0) || !s0.is_finite() {
            return Err(Error::IllConditioned(1.0 / s0.abs().max(f64::MIN_POSITIVE)));
        }
        alpha.push(s1 / s0);
        beta.push(if k == 0 { 0.0 } else { s0 / norm_prev });
        norm_prev = s0;
        if k + 1 < n {
            let a = alpha[k];
            let b = beta[k];
            for i in 0..m {
                let next = (xs[i] - a) * p_cur[i] - b * p_prev[i];
                p_prev[i] = p_cur[i];
                p_cur[i] = next;
            }
            // rescale to keep values bounded; ratios are scale-invariant
            let scale = p_cur.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if scale > 1e100 {
                for i in 0..m {
                    p_prev[i] /= scale;
                    p_cur[i] /= scale;
                }
                norm_prev /= scale * scale;
            }
        }
    }
    // symmetric Jacobi matrix; eigenvalues are the zeros
    let jac = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j || j + 1 == i {
            beta[i.max(j)].max(0.0).sqrt()
        } else {
            0.0
        }
    });
    for k in 1..n {
        if !(beta[k] > 0.0) {
            return Err(Error::IllConditioned(1.0 / beta[k].abs().max(f64::MIN_POSITIVE)));
        }
    }
    let mut zeros: Vec<f64> = jac.symmetric_eigen().eigenvalues.iter().copied().collect();
    zeros.sort_by(f64::total_cmp);
    // Newton polish on the recurrence evaluation of p_n
    let eval = |x: f64| -> (f64, f64) {
        let (mut p0, mut p1) = (0.0f64, 1.0f64);
        let (mut d0, mut d1) = (0.0f64, 0.0f64);
        for k in 0..n {
            let p2 = (x - alpha[k]) * p1 - beta[k] * p0;
            let d2 = p1 + (x - alpha[k]) * d1 - beta[k] * d0;
            p0 = p1;
            p1 = p2;
            d0 = d1;
            d1 = d2;
        }
        (p1, d1)
    };
    let (h0, h1) = mf.sys.hull();
    for z in zeros.iter_mut() {
        for _ in 0..4 {
            let (p, d) = eval(*z);
            if d == 0.0 {
                break;
            }
            let step = p / d;
            let next = *z - step;
            if !next.is_finite() || next < h0 - 1e-9 || next > h1 + 1e-9 {
                break;
            }
            *z = next;
            if step.abs() < 1e-15 * (1.0 + z.abs()) {
                break;
            }
        }
    }
    Ok(zeros)
}

/// The multipoint Pade approximant for an interpolation scheme: its
/// denominator is orthogonal w.r.t. `dmu / v_n`.
pub fn pade(mf: &MarkovFunction, scheme: &InterpolationScheme, order: usize) -> Result<RationalApproximant> {
    let zeros = ortho_q(mf, |x| scheme.v_n(Complex64::new(x, 0.0)).re, scheme.n, order)?;
    Ok(RationalApproximant {
        n: scheme.n,
        q_zeros: zeros,
        scheme: scheme.clone(),
        kappa_n: 1.0,
    })
}

/// `f - p_n/q_n` at `z`, evaluated without ever forming `p_n`:
/// `(v_n(z)/q_n^2(z)) int q_n^2(x)/v_n(x) dmu(x)/(z - x)`.
pub fn pade_error(
    mf: &MarkovFunction,
    r: &RationalApproximant,
    z: Complex64,
    side: Side,
    order: usize,
) -> Result<Complex64> {
    for &x in &r.q_zeros {
        let d = (z - x).norm();
        if d < 1e-12 {
            return Err(Error::NearPole {
                z: format!("{z}"),
                dist: d,
            });
        }
    }
    let qz = r.q(z);
    let int = quad::cauchy_band(
        &mf.sys,
        |s| {
            let q = monic_from_zeros(&r.q_zeros, s);
            q * q * mf.rho_c(s) / r.scheme.v_n(s)
        },
        z,
        side,
        order,
    )?;
    // dmu/(z - x) carries (1/pi i) * 1/(x - z) under cauchy_band
    Ok(r.scheme.v_n(z) / (qz * qz) * Complex64::new(0.0, -1.0 / std::f64::consts::PI) * int)
}

/// Critical point of the squared-error functional on the unit circle:
/// fixed point of `q -> ortho_q(dmu / kappa q~^2)` with damped updates.
pub fn critical_point(
    mf: &MarkovFunction,
    n: usize,
    init: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    order: usize,
) -> Result<RationalApproximant> {
    if !mf.sys.unit_disk() {
        return Err(Error::NotInUnitDisk);
    }
    let mut zeros = match init {
        Some(z) => {
            let mut v = z.to_vec();
            v.sort_by(f64::total_cmp);
            v
        }
        None => ortho_q(mf, |_| 1.0, n, order)?,
    };
    let mut alpha = 0.5f64;
    let mut prev_disp = f64::INFINITY;
    let mut disp = f64::INFINITY;
    for _ in 0..max_iter {
        let refl = scheme_reflections(&zeros);
        let mut next = ortho_q(mf, |x| monic_from_zeros_real(&refl, x).powi(2), n, order)?;
        next.sort_by(f64::total_cmp);
        disp = zeros
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if disp > prev_disp {
            alpha = (0.5 * alpha).max(0.05);
        } else {
            alpha = (1.5 * alpha).min(0.5);
        }
        for (z, nx) in zeros.iter_mut().zip(&next) {
            *z = (1.0 - alpha) * *z + alpha * nx;
        }
        if disp < tol {
            let scheme = reflected_scheme(&mf.sys, n, &zeros)?;
            let kappa_n = kappa_of(&zeros);
            return Ok(RationalApproximant {
                n,
                q_zeros: zeros,
                scheme,
                kappa_n,
            });
        }
        prev_disp = disp;
    }
    Err(Error::CriticalPoint {
        iterations: max_iter,
        displacement: disp,
    })
}

/// Reflections `1/x_j` of the non-zero denominator zeros.
fn scheme_reflections(zeros: &[f64]) -> Vec<f64> {
    zeros
        .iter()
        .filter(|x| x.abs() > 1e-14)
        .map(|x| 1.0 / x)
        .collect()
}

/// `kappa_n`: reciprocal of the squared product of non-zero zeros, making
/// `kappa_n q~_n^2` monic.
pub fn kappa_of(zeros: &[f64]) -> f64 {
    let p: f64 = zeros.iter().filter(|x| x.abs() > 1e-14).product();
    1.0 / (p * p)
}

/// The interpolation scheme `E_n = { 1/x_j, each doubled }` of a critical
/// point (zeros at the origin reflect to infinity).
pub fn reflected_scheme(sys: &IntervalSystem, n: usize, zeros: &[f64]) -> Result<InterpolationScheme> {
    let mut finite = Vec::new();
    for r in scheme_reflections(zeros) {
        finite.push(Complex64::new(r, 0.0));
        finite.push(Complex64::new(r, 0.0));
    }
    InterpolationScheme::new(sys, n, finite)
}

/// `||f - r||_{L^2(T)}` by the trapezoid rule on `nodes` circle points.
pub fn l2_error(
    mf: &MarkovFunction,
    r: &RationalApproximant,
    nodes: usize,
    order: usize,
) -> Result<f64> {
    if !mf.sys.unit_disk() {
        return Err(Error::NotInUnitDisk);
    }
    for &x in &r.q_zeros {
        let d = (1.0 - x.abs()).abs();
        if d < 1e-6 {
            return Err(Error::NearPole {
                z: format!("|tau| = 1, pole at {x}"),
                dist: d,
            });
        }
    }
    let mut acc = 0.0;
    for tau in quad::circle_nodes(nodes) {
        let e = pade_error(mf, r, tau, Side::None, order)?;
        acc += e.norm_sqr();
    }
    Ok((acc / nodes as f64).sqrt())
}

/// Divisor-derived data of a critical point: the gap-zero polynomial
/// `m_n`, the Blaschke product over top-sheet divisor points, the count
/// `d_n`, and the density `lambda_n = rho B_n^2 / m_n`.
pub struct DivisorData {
    pub divisor: Divisor,
    /// All `g` divisor projections, in gap order.
    pub projections: Vec<f64>,
    /// Projections of the divisor points on the open upper sheet.
    pub top_zeros: Vec<f64>,
    /// Projections landing on branch points (within tolerance).
    pub endpoint_hits: Vec<f64>,
    pub d_n: usize,
    /// Inversion data `c_mu + omega_n` the divisor solves.
    pub v_n: Vec<f64>,
}

impl DivisorData {
    pub fn m_n(&self, z: Complex64) -> Complex64 {
        monic_from_zeros(&self.projections, z)
    }

    /// `B_n(z) = prod (z - x_i)/(1 - x_i z)` over top-sheet points.
    pub fn blaschke(&self, z: Complex64) -> Complex64 {
        self.top_zeros
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &x| {
                acc * (z - x) / (1.0 - x * z)
            })
    }

    /// `lambda_n(x) = rho(x) B_n^2(x) / m_n(x)` as a density profile.
    ///
    /// Per-gap pairing of the zero of `m` with the divisor projection
    /// keeps both the regular factor and its log branch positive and
    /// single-valued near every band. A projection on a branch point
    /// becomes a declared order `-1` factor; its log branch is then only
    /// reliable for on-support values and the endpoint-log constants, not
    /// for Cauchy integrals (reported limitation).
    pub fn lambda(&self, mf: &MarkovFunction) -> Result<DensityProfile> {
        let mu = mf.mu.clone();
        let pairs: Vec<(f64, f64, bool, bool)> = (0..mf.sys.genus())
            .map(|i| {
                let x = self.projections[i];
                let top = self.top_zeros.iter().any(|&t| t == x);
                let hit = self.endpoint_hits.iter().any(|&e| e == x);
                (mf.m_zeros[i], x, top, hit)
            })
            .collect();
        let pairs2 = pairs.clone();
        let orders: Vec<EndpointOrder> = pairs
            .iter()
            .filter(|(_, _, _, hit)| *hit)
            .map(|&(_, x, _, _)| EndpointOrder {
                endpoint: x,
                order: -1.0,
            })
            .collect();
        let profile = DensityProfile {
            reg: Box::new(move |x| {
                let mut v = mu.eval(x);
                for &(y, p, top, hit) in &pairs {
                    if hit {
                        v *= (x - y).abs();
                    } else if top {
                        let b = (x - p) / (1.0 - p * x);
                        v *= b * b * (x - y) / (x - p);
                    } else {
                        v *= (x - y) / (x - p);
                    }
                }
                v
            }),
            log_reg_c: {
                let mu2 = mf.mu.clone();
                Box::new(move |z| {
                    let mut v = mu2.eval_c(z).ln();
                    for &(y, p, top, hit) in &pairs2 {
                        if hit {
                            v += (z - y).ln();
                        } else if top {
                            // joint log of (z-p)(z-y): same-signed real parts
                            // near the bands keep the principal branch real
                            v += ((z - p) * (z - y)).ln() - 2.0 * (1.0 - p * z).ln();
                        } else {
                            v += ((z - y) / (z - p)).ln();
                        }
                    }
                    v
                })
            },
            orders,
        };
        profile.validate(&mf.sys)?;
        Ok(profile)
    }
}

/// Solve the inversion problem for a critical point's scheme and classify
/// the divisor: `v_n = c_mu + omega_n` componentwise.
pub fn divisor_data(
    mf: &MarkovFunction,
    gb: &GapBasis,
    ctx: &ThetaContext,
    r: &RationalApproximant,
) -> Result<DivisorData> {
    let c = szego_constants(&mf.sys, gb, &mf.mu.profile())?;
    let omega = omega_n(&mf.sys, Some(gb), &r.scheme)?;
    let v_n: Vec<f64> = c.iter().zip(&omega).map(|(a, b)| a + b).collect();
    // The divisor solves the inversion problem relative to the context's
    // base divisor: its cycle parameters are the base ones shifted by v_n.
    let rhs: Vec<f64> = ctx.v_vec.iter().zip(&v_n).map(|(a, b)| a + b).collect();
    let divisor = solve_jip(ctx, &rhs)?;
    let mut projections = Vec::new();
    let mut top_zeros = Vec::new();
    let mut endpoint_hits = Vec::new();
    for p in &divisor.points {
        let mut x = p.z.re;
        // snap near-branch-point projections so the order declaration
        // lands exactly on an endpoint
        for &e in mf.sys.endpoints() {
            if (x - e).abs() < ENDPOINT_HIT_TOL {
                x = e;
            }
        }
        projections.push(x);
        match p.sheet {
            Sheet::Top => top_zeros.push(x),
            Sheet::Bottom => {}
            Sheet::Ramification => endpoint_hits.push(x),
        }
    }
    Ok(DivisorData {
        divisor,
        projections,
        top_zeros,
        endpoint_hits,
        d_n: 0,
        v_n,
    }
    .with_count())
}

impl DivisorData {
    fn with_count(mut self) -> Self {
        self.d_n = self.top_zeros.len();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::gap_basis;
    use approx::assert_relative_eq;

    fn cfg_a() -> MarkovFunction {
        let sys = IntervalSystem::new(&[-0.7, -0.3, 0.2, 0.6]).unwrap();
        MarkovFunction::new(&sys, MuSpec::One, Poly::new(vec![0.0, 1.0])).unwrap()
    }

    fn chebyshev() -> MarkovFunction {
        let sys = IntervalSystem::new(&[-1.0, 1.0]).unwrap();
        MarkovFunction::new(&sys, MuSpec::One, Poly::constant(1.0)).unwrap()
    }

    #[test]
    fn mass_and_leading_asymptotic() {
        let mf = cfg_a();
        let mass = mf.mass().unwrap();
        assert!(mass > 0.0);
        let z = Complex64::new(1e6, 0.0);
        let f = markov_eval(&mf, z, Side::None).unwrap();
        assert_relative_eq!((z * f).re, mass, max_relative = 1e-5);
    }

    #[test]
    fn chebyshev_closed_form() {
        let mf = chebyshev();
        assert_relative_eq!(mf.mass().unwrap(), 1.0, epsilon = 1e-12);
        let f = markov_eval(&mf, Complex64::new(2.0, 0.0), Side::None).unwrap();
        assert_relative_eq!(f.re, 1.0 / 3.0f64.sqrt(), epsilon = 1e-12);
        assert!(f.im.abs() < 1e-13);
    }

    /// Adaptive-free oracle: composite Simpson after the cosine substitution
    /// per band, entirely independent of the Cauchy-integral machinery.
    fn markov_oracle(mf: &MarkovFunction, z: f64) -> f64 {
        let sys = &mf.sys;
        let mut total = 0.0;
        for k in 0..sys.num_bands() {
            let (a, b) = sys.band(k);
            let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
            let s = quad::band_sign(sys, k);
            let rest = |x: f64| -> f64 {
                let mut p = 1.0;
                for &e in sys.endpoints() {
                    if e != a && e != b {
                        p *= (x - e).abs();
                    }
                }
                p.sqrt()
            };
            let g = |th: f64| -> f64 {
                let x = c + r * th.cos();
                s * mf.rho(x) / (std::f64::consts::PI * rest(x) * (z - x))
            };
            let n = 1 << 13;
            let h = std::f64::consts::PI / n as f64;
            let mut acc = g(0.0) + g(std::f64::consts::PI);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * g(i as f64 * h);
            }
            total += acc * h / 3.0;
        }
        total
    }

    #[test]
    fn cfg_a_matches_independent_oracle() {
        let mf = cfg_a();
        let f = markov_eval(&mf, Complex64::new(2.0, 0.0), Side::None).unwrap();
        assert_relative_eq!(f.re, markov_oracle(&mf, 2.0), epsilon = 1e-9);
    }

    #[test]
    fn ortho_degree_zero() {
        let mf = cfg_a();
        assert!(ortho_q(&mf, |_| 1.0, 0, 64).unwrap().is_empty());
    }

    #[test]
    fn chebyshev_ortho_cubic() {
        let mf = chebyshev();
        let z = ortho_q(&mf, |_| 1.0, 3, DEFAULT_BAND_ORDER).unwrap();
        let half = 3.0f64.sqrt() / 2.0;
        assert_relative_eq!(z[0], -half, epsilon = 1e-9);
        assert!(z[1].abs() < 1e-9);
        assert_relative_eq!(z[2], half, epsilon = 1e-9);
    }

    #[test]
    fn cfg_a_ortho_residuals() {
        let mf = cfg_a();
        let zeros = ortho_q(&mf, |_| 1.0, 4, DEFAULT_BAND_ORDER).unwrap();
        let (h0, h1) = mf.sys.hull();
        for &x in &zeros {
            assert!(x > h0 && x < h1);
        }
        // recheck at doubled quadrature order
        let scale = mf
            .integral(|x| monic_from_zeros_real(&zeros, x).powi(2), 2 * DEFAULT_BAND_ORDER)
            .unwrap()
            .sqrt();
        for m in 0..4 {
            let r = mf
                .integral(
                    |x| x.powi(m) * monic_from_zeros_real(&zeros, x),
                    2 * DEFAULT_BAND_ORDER,
                )
                .unwrap();
            assert!(r.abs() < 1e-9 * scale, "residual {r:.3e} at degree {m}");
        }
    }

    #[test]
    fn pade_zero_error_is_f() {
        let mf = cfg_a();
        let r = pade(&mf, &InterpolationScheme::all_infinity(0), DEFAULT_BAND_ORDER).unwrap();
        let z = Complex64::new(0.0, 2.0);
        let e = pade_error(&mf, &r, z, Side::None, DEFAULT_BAND_ORDER).unwrap();
        let f = markov_eval(&mf, z, Side::None).unwrap();
        assert_relative_eq!(e.re, f.re, epsilon = 1e-12);
        assert_relative_eq!(e.im, f.im, epsilon = 1e-12);
    }

    #[test]
    fn error_vanishes_at_simple_interpolation_point() {
        let mf = cfg_a();
        let scheme =
            InterpolationScheme::new(&mf.sys, 2, vec![Complex64::new(2.0, 0.0)]).unwrap();
        let r = pade(&mf, &scheme, DEFAULT_BAND_ORDER).unwrap();
        let e = |h: f64| {
            pade_error(&mf, &r, Complex64::new(2.0 + h, 0.0), Side::None, DEFAULT_BAND_ORDER)
                .unwrap()
                .norm()
        };
        let ratio = e(1e-4) / e(1e-2);
        assert!(
            ratio > 1e-2 / 3.0 && ratio < 1e-2 * 3.0,
            "slope ratio {ratio:.3e} not O(|z - e|)"
        );
    }

    #[test]
    fn error_identity_two_routes() {
        let mf = cfg_a();
        let scheme = InterpolationScheme::new(
            &mf.sys,
            4,
            vec![
                Complex64::new(2.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(-3.0, 0.0),
                Complex64::new(-3.0, 0.0),
            ],
        )
        .unwrap();
        let r = pade(&mf, &scheme, DEFAULT_BAND_ORDER).unwrap();
        // route B: recover p_n by fitting q f - v R at Chebyshev points
        let rn = |z: Complex64| -> Complex64 {
            let int = quad::cauchy_band(
                &mf.sys,
                |s| monic_from_zeros(&r.q_zeros, s) * mf.rho_c(s) / scheme.v_n(s),
                z,
                Side::None,
                DEFAULT_BAND_ORDER,
            )
            .unwrap();
            Complex64::new(0.0, -1.0 / std::f64::consts::PI) * int
        };
        let big_f = |z: Complex64| -> Complex64 {
            r.q(z) * markov_eval(&mf, z, Side::None).unwrap() - scheme.v_n(z) * rn(z)
        };
        // Chebyshev nodes on a segment through the comparison point keep
        // every fitted value O(1), so no cancellation enters the fit
        let nodes: Vec<Complex64> = (0..4)
            .map(|j| {
                Complex64::new(
                    (std::f64::consts::PI * (j as f64 + 0.5) / 4.0).cos(),
                    2.0,
                )
            })
            .collect();
        let vals: Vec<Complex64> = nodes.iter().map(|&z| big_f(z)).collect();
        let vand = DMatrix::from_fn(4, 4, |i, j| nodes[i].powu(j as u32));
        let coef = vand
            .lu()
            .solve(&nalgebra::DVector::from_vec(vals))
            .unwrap();
        let p = |z: Complex64| -> Complex64 {
            (0..4).map(|j| coef[j] * z.powu(j as u32)).sum()
        };
        // the fit really is the polynomial part: probe away from the nodes
        let probe = Complex64::new(-6.0, 0.0);
        assert!((big_f(probe) - p(probe)).norm() < 1e-8 * p(probe).norm());
        let z = Complex64::new(0.0, 2.0);
        let direct = markov_eval(&mf, z, Side::None).unwrap() - p(z) / r.q(z);
        let ident = pade_error(&mf, &r, z, Side::None, DEFAULT_BAND_ORDER).unwrap();
        assert!((direct - ident).norm() < 1e-8 * ident.norm());
    }

    #[test]
    fn critical_point_symmetric_system() {
        let sys = IntervalSystem::new(&[-0.6, -0.2, 0.2, 0.6]).unwrap();
        let mf = MarkovFunction::new(&sys, MuSpec::One, Poly::new(vec![0.0, 1.0])).unwrap();
        let r = critical_point(&mf, 2, None, 1e-11, 200, 192).unwrap();
        assert_relative_eq!(r.q_zeros[0], -r.q_zeros[1], epsilon = 1e-8);
    }

    #[test]
    fn critical_point_stationarity_and_optimality() {
        let mf = cfg_a();
        let r = critical_point(&mf, 3, None, 1e-11, 300, 192).unwrap();
        let base = l2_error(&mf, &r, 512, 192).unwrap();
        // Blaschke part of the weight is unimodular on the circle
        for tau in quad::circle_nodes(64) {
            assert!((r.b_n(tau).norm() - 1.0).abs() < 1e-12);
        }
        // first-order vanishing of the squared norm under a pole shift
        let mut pert = r.q_zeros.clone();
        pert[1] += 1e-4;
        let rp = RationalApproximant {
            n: r.n,
            q_zeros: pert.clone(),
            scheme: reflected_scheme(&mf.sys, r.n, &pert).unwrap(),
            kappa_n: kappa_of(&pert),
        };
        let moved = l2_error(&mf, &rp, 512, 192).unwrap();
        assert!(moved >= base, "critical point is not a local minimum along this line");
        let rel = (moved * moved - base * base) / (base * base);
        assert!(rel.abs() < 1e-6, "first variation {rel:.3e} too large");
    }

    #[test]
    fn critical_point_double_interpolation() {
        let mf = cfg_a();
        let r = critical_point(&mf, 2, None, 1e-11, 300, 192).unwrap();
        let e = 1.0 / r.q_zeros[1];
        let probe = |h: f64| {
            pade_error(&mf, &r, Complex64::new(e + h, 0.0), Side::None, DEFAULT_BAND_ORDER)
                .unwrap()
                .norm()
                / (h * h)
        };
        let (c2, c3) = (probe(1e-2), probe(1e-3));
        assert!(
            c3 < 5.0 * c2,
            "error/h^2 grows ({c2:.3e} -> {c3:.3e}); interpolation not double"
        );
    }

    #[test]
    fn l2_norm_matches_moment_series() {
        let mf = cfg_a();
        let r0 = pade(&mf, &InterpolationScheme::all_infinity(0), DEFAULT_BAND_ORDER).unwrap();
        let norm = l2_error(&mf, &r0, 512, DEFAULT_BAND_ORDER).unwrap();
        let mut series = 0.0;
        for k in 1..200 {
            let c = mf.moment(k - 1, DEFAULT_BAND_ORDER).unwrap();
            series += c * c;
            if c * c < 1e-18 * series {
                break;
            }
        }
        assert_relative_eq!(norm, series.sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn empty_blaschke_is_one() {
        let d = DivisorData {
            divisor: Divisor {
                points: Vec::new(),
                gap_angles: Vec::new(),
            },
            projections: vec![0.1],
            top_zeros: Vec::new(),
            endpoint_hits: Vec::new(),
            d_n: 0,
            v_n: vec![0.0],
        };
        assert_eq!(d.blaschke(Complex64::new(0.3, 0.7)), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn divisor_data_cfg_a() {
        let mf = cfg_a();
        let gb = gap_basis(&mf.sys).unwrap();
        let ctx = ThetaContext::new(&mf.sys, &gb, &[-0.04]).unwrap();
        let r = critical_point(&mf, 6, None, 1e-11, 300, 192).unwrap();
        let dd = divisor_data(&mf, &gb, &ctx, &r).unwrap();
        let (b0, a1) = mf.sys.gap(0).unwrap();
        assert!(dd.projections[0] >= b0 - 1e-9 && dd.projections[0] <= a1 + 1e-9);
        assert_eq!(dd.d_n, dd.top_zeros.len());
        // lambda_n positive across both bands
        let lambda = dd.lambda(&mf).unwrap();
        for k in 0..mf.sys.num_bands() {
            let (a, b) = mf.sys.band(k);
            for j in 1..25 {
                let x = a + (b - a) * j as f64 / 25.0;
                assert!(lambda.eval(x) > 0.0, "lambda_n({x}) not positive");
            }
        }
        // Blaschke unimodularity on the circle
        for tau in quad::circle_nodes(32) {
            assert!((dd.blaschke(tau).norm() - 1.0).abs() < 1e-12);
        }
    }
}
