//! Quadrature backbone.
//!
//! Band and gap integrals use the cosine substitution `x = c + r cos(th)`,
//! which absorbs the square-root endpoint behavior of `1/w` exactly; the
//! resulting rules are Gauss-Chebyshev rules with interior nodes only.
//! Cauchy transforms switch to pole subtraction near the support, the
//! subtracted kernel integral being known in closed form. Circle means are
//! trapezoid sums (spectrally accurate for smooth integrands). Logarithmic
//! endpoint singularities go through the theta-graded path built on
//! [`crate::contour`].

use num_complex::Complex64;

use crate::contour;
use crate::geometry::{IntervalSystem, Side};
use crate::{Error, Result};

/// Default number of Chebyshev nodes per band or gap.
pub const DEFAULT_BAND_ORDER: usize = 256;
/// Default number of uniform circle nodes.
pub const DEFAULT_CIRCLE_NODES: usize = 1024;

/// Multiple of the node spacing below which Cauchy transforms switch to pole
/// subtraction.
const NEAR_SINGULARITY_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    BandCos,
    GapCos,
    CircleTrapezoid,
    LogEndpoint,
}

/// An explicit node/weight rule over one interval.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    /// Chebyshev rule on `[a, b]` with the square-root weight absorbed:
    /// `int_a^b F(x) / sqrt((x-a)(b-x)) dx ~= sum w_i F(x_i)` becomes, after
    /// multiplying through, `int_a^b f(x) dx ~= sum w_i sqrt(..) f(x_i)`.
    /// Stored weights already contain the `sqrt((x-a)(b-x))` factor, so the
    /// rule integrates plain `f` while clustering nodes at the endpoints.
    fn cosine(a: f64, b: f64, order: usize, kind: RuleKind) -> Self {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let n = order;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let th = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            nodes.push(c + r * th.cos());
            weights.push(std::f64::consts::PI / n as f64 * r * th.sin());
        }
        QuadratureRule {
            kind,
            nodes,
            weights,
            order,
        }
    }

    pub fn band(sys: &IntervalSystem, k: usize, order: usize) -> Self {
        let (a, b) = sys.band(k);
        Self::cosine(a, b, order, RuleKind::BandCos)
    }

    pub fn gap(sys: &IntervalSystem, i: usize, order: usize) -> Result<Self> {
        let (b, a) = sys.gap(i)?;
        Ok(Self::cosine(b, a, order, RuleKind::GapCos))
    }

    /// Mean node spacing of the rule.
    pub fn spacing(&self) -> f64 {
        if self.nodes.len() < 2 {
            return 0.0;
        }
        let span = (self.nodes[0] - self.nodes[self.nodes.len() - 1]).abs();
        span / (self.nodes.len() - 1) as f64
    }
}

/// `sum_k int_{a_k}^{b_k} h(x) dx / w_side(x)`.
pub fn band_integral<F: Fn(f64) -> Complex64>(
    sys: &IntervalSystem,
    h: F,
    side: Side,
    order: usize,
) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..sys.num_bands() {
        total += band_integral_single(sys, k, &h, side, order)?;
    }
    Ok(total)
}

/// Same as [`band_integral`] restricted to band `k`.
pub fn band_integral_single<F: Fn(f64) -> Complex64>(
    sys: &IntervalSystem,
    k: usize,
    h: &F,
    side: Side,
    order: usize,
) -> Result<Complex64> {
    let rule = QuadratureRule::band(sys, k, order);
    let mut acc = Complex64::new(0.0, 0.0);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let hv = h(x);
        if !hv.is_finite() {
            return Err(Error::NonFiniteIntegrand(x));
        }
        acc += w * hv / sys.w_side(x, side)?;
    }
    Ok(acc)
}

/// `int_{b_i}^{a_{i+1}} h(x) dx / w(x)` over gap `i`; real output.
pub fn gap_integral<F: Fn(f64) -> f64>(
    sys: &IntervalSystem,
    i: usize,
    h: F,
    order: usize,
) -> Result<f64> {
    let rule = QuadratureRule::gap(sys, i, order)?;
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let hv = h(x);
        if !hv.is_finite() {
            return Err(Error::NonFiniteIntegrand(x));
        }
        acc += w * hv / sys.w_real(x);
    }
    Ok(acc)
}

/// Complex-valued variant of [`gap_integral`].
pub fn gap_integral_c<F: Fn(f64) -> Complex64>(
    sys: &IntervalSystem,
    i: usize,
    h: F,
    order: usize,
) -> Result<Complex64> {
    let rule = QuadratureRule::gap(sys, i, order)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let hv = h(x);
        if !hv.is_finite() {
            return Err(Error::NonFiniteIntegrand(x));
        }
        acc += w * hv / sys.w_real(x);
    }
    Ok(acc)
}

/// Closed form `int_Delta dx / ((x - z) w_+(x)) = pi i / w(z)`, the kernel
/// used by the pole-subtraction scheme.
pub fn cauchy_kernel_closed_form(sys: &IntervalSystem, z: Complex64) -> Complex64 {
    Complex64::new(0.0, std::f64::consts::PI) / sys.w(z)
}

/// `int_Delta h(x) / (x - z) dx / w_+(x)`.
///
/// `h` must be analytic in a neighborhood of the support: near the support
/// the pole is subtracted at the complex point, `(h(x) - h(z))/(x - z)`,
/// which removes the singularity entirely, and the leftover kernel integral
/// is known in closed form. For `z` on a band interior a `side` selects the
/// boundary value; elsewhere `side` is ignored.
pub fn cauchy_band<F: Fn(Complex64) -> Complex64>(
    sys: &IntervalSystem,
    h: F,
    z: Complex64,
    side: Side,
    order: usize,
) -> Result<Complex64> {
    let on_cut = z.im == 0.0 && sys.band_of(z.re).is_some();
    if on_cut && side == Side::None {
        return Err(Error::SideRequired(z.re));
    }
    let mut dist = f64::INFINITY;
    for k in 0..sys.num_bands() {
        let (a, b) = sys.band(k);
        dist = dist.min((z - z.re.clamp(a, b)).norm());
    }
    let spacing = QuadratureRule::band(sys, 0, order).spacing();
    if !on_cut && dist >= NEAR_SINGULARITY_FACTOR * spacing {
        return band_integral(sys, |x| h(Complex64::new(x, 0.0)) / (x - z), Side::Plus, order);
    }
    let hz = h(z);
    let diff = band_integral(
        sys,
        |x| {
            let dx = x - z;
            if dx.norm() < 1e-13 {
                // removable point: central difference for h'(z)
                let e = 1e-6;
                (h(z + e) - h(z - e)) / (2.0 * e)
            } else {
                (h(Complex64::new(x, 0.0)) - hz) / dx
            }
        },
        Side::Plus,
        order,
    )?;
    let w_at = if on_cut {
        sys.w_side(z.re, side)?
    } else {
        sys.w(z)
    };
    Ok(diff + hz * Complex64::new(0.0, std::f64::consts::PI) / w_at)
}

/// `(1/2pi) oint |f(tau)|^2 |dtau|` over the unit circle by the trapezoid
/// rule with `n` nodes.
pub fn circle_mean<F: Fn(Complex64) -> Complex64>(f: F, n: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..n {
        let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        acc += f(Complex64::from_polar(1.0, th)).norm_sqr();
    }
    acc / n as f64
}

/// Uniform circle nodes `exp(2 pi i j / n)`.
pub fn circle_nodes(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
        .collect()
}

/// Winding number of `f` along the unit circle by summed phase differences.
pub fn winding_number<F: Fn(Complex64) -> Complex64>(f: F, n: usize) -> i64 {
    let mut total = 0.0;
    let mut prev = f(Complex64::new(1.0, 0.0));
    for j in 1..=n {
        let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let cur = f(Complex64::from_polar(1.0, th));
        total += (cur / prev).arg();
        prev = cur;
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

/// `int_{a_k}^{b_k} f(x) dx` through the cosine substitution with graded
/// treatment of both theta ends; tolerates integrable logarithmic or
/// square-root singularities of `f` at the band endpoints.
pub fn band_theta_graded<F: Fn(f64) -> Complex64>(
    sys: &IntervalSystem,
    k: usize,
    f: &F,
) -> Complex64 {
    let (a, b) = sys.band(k);
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let g = |th: Complex64| {
        let t = th.re;
        f((c + r * t.cos()).clamp(a, b)) * (r * t.sin())
    };
    contour::segment_graded(
        &g,
        Complex64::new(0.0, 0.0),
        Complex64::new(std::f64::consts::PI, 0.0),
        true,
        true,
        24,
    )
}

/// Declared vanishing order of an integrand factor at a band endpoint.
#[derive(Debug, Clone, Copy)]
pub struct EndpointOrder {
    pub endpoint: f64,
    pub order: f64,
}

/// `int_Delta log(h(x)) s(x) / |w(x)| dx` where
/// `h(x) = h_reg(x) * prod_j |x - e_j|^{alpha_j}` with the `(e_j, alpha_j)`
/// pairs declared in `orders` (band endpoints only), `h_reg` smooth and
/// strictly positive on the support including endpoints, and `s` smooth.
///
/// All measures this library integrates logs against have a `1/|w|` density
/// factor; keeping it implicit lets the cosine substitution cancel the
/// endpoint blowup analytically, so the integrand never touches `0 * inf`
/// even when `h` vanishes at an endpoint.
pub fn log_endpoint_integral<H: Fn(f64) -> f64, S: Fn(f64) -> f64>(
    sys: &IntervalSystem,
    h_reg: H,
    orders: &[EndpointOrder],
    s: S,
) -> Result<f64> {
    for o in orders {
        if !sys.is_endpoint(o.endpoint) {
            return Err(Error::UndeclaredSignChange(o.endpoint));
        }
    }
    // positivity guard at a modest interior sample
    for k in 0..sys.num_bands() {
        let (a, b) = sys.band(k);
        for j in 1..32 {
            let x = a + (b - a) * j as f64 / 32.0;
            let mut v = h_reg(x);
            for o in orders {
                v *= (x - o.endpoint).abs().powf(o.order);
            }
            if !(v > 0.0) && v.is_finite() {
                return Err(Error::UndeclaredSignChange(x));
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand(x));
            }
        }
    }
    let mut total = 0.0;
    for k in 0..sys.num_bands() {
        let (a, b) = sys.band(k);
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        // |w(x)| = r sin(th) * sqrt(prod over other endpoints); the r sin(th)
        // Jacobian of x = c + r cos(th) cancels it exactly
        let other_root = |x: f64| -> f64 {
            let mut p = 1.0;
            for &e in sys.endpoints() {
                if e != a && e != b {
                    p *= (x - e).abs();
                }
            }
            p.sqrt()
        };
        let g = |th: Complex64| {
            let t = th.re;
            let x = (c + r * t.cos()).clamp(a, b);
            let mut logh = h_reg(x).ln();
            for o in orders {
                // distances to this band's own ends in theta form; exact
                // near the singular ends where x itself has rounded
                let d = if o.endpoint == b {
                    2.0 * r * (0.5 * t).sin().powi(2)
                } else if o.endpoint == a {
                    2.0 * r * (0.5 * t).cos().powi(2)
                } else {
                    (x - o.endpoint).abs()
                };
                logh += o.order * d.ln();
            }
            Complex64::new(logh * s(x) / other_root(x), 0.0)
        };
        total += contour::segment_graded(
            &g,
            Complex64::new(0.0, 0.0),
            Complex64::new(std::f64::consts::PI, 0.0),
            true,
            true,
            24,
        )
        .re;
    }
    Ok(total)
}

/// Sign of `-i w_+(x)/|w(x)|` on band `k` (0-based): `(-1)^{g-k}`.
pub fn band_sign(sys: &IntervalSystem, k: usize) -> f64 {
    if (sys.genus() + k) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `sum_bands int [sum_j alpha_j ln d_j(x) - shift] s(x) / |w(x)| dx` with the
/// endpoint distances `d_j` evaluated in trigonometric form. The smooth
/// numerator `s` may be complex (e.g. contain a Cauchy kernel with a pole a
/// safe distance from the bands).
pub fn band_log_integral_c<S: Fn(f64) -> Complex64>(
    sys: &IntervalSystem,
    orders: &[EndpointOrder],
    shift: f64,
    s: S,
) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..sys.num_bands() {
        let (a, b) = sys.band(k);
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let other_root = |x: f64| -> f64 {
            let mut p = 1.0;
            for &e in sys.endpoints() {
                if e != a && e != b {
                    p *= (x - e).abs();
                }
            }
            p.sqrt()
        };
        let g = |th: Complex64| {
            let t = th.re;
            let x = (c + r * t.cos()).clamp(a, b);
            let mut logpart = -shift;
            for o in orders {
                let d = if o.endpoint == b {
                    2.0 * r * (0.5 * t).sin().powi(2)
                } else if o.endpoint == a {
                    2.0 * r * (0.5 * t).cos().powi(2)
                } else {
                    (x - o.endpoint).abs()
                };
                logpart += o.order * d.ln();
            }
            s(x) * (logpart / other_root(x))
        };
        total += contour::segment_graded(
            &g,
            Complex64::new(0.0, 0.0),
            Complex64::new(std::f64::consts::PI, 0.0),
            true,
            true,
            24,
        );
    }
    total
}

/// `int_{gap_i} f(y) / ((y - z) w(y)) dy` with `f` real and smooth on the
/// closed gap. Near the gap the pole is subtracted against the exact segment
/// kernel `int dy/(y - z) = Log((a - z)/(b - z))`; `side` resolves real `z`
/// inside the gap.
pub fn gap_cauchy<F: Fn(f64) -> f64>(
    sys: &IntervalSystem,
    i: usize,
    f: F,
    z: Complex64,
    side: Side,
    order: usize,
) -> Result<Complex64> {
    let (b, a) = sys.gap(i)?;
    let in_gap = z.im == 0.0 && z.re > b && z.re < a;
    let dist = if in_gap {
        0.0
    } else {
        (z - z.re.clamp(b, a)).norm()
    };
    let spacing = (a - b) / order as f64;
    if dist >= NEAR_SINGULARITY_FACTOR * spacing {
        return gap_integral_c(sys, i, |y| Complex64::new(f(y), 0.0) / (y - z), order);
    }
    if in_gap && side == Side::None {
        return Err(Error::SideRequired(z.re));
    }
    let zr = z.re.clamp(b, a);
    let fz = f(zr);
    let wz = sys.w_real(zr);
    let diff = gap_integral_c(
        sys,
        i,
        |y| {
            let dy = y - z;
            if dy.norm() < 1e-13 {
                Complex64::new(0.0, 0.0)
            } else {
                (Complex64::new(f(y), 0.0) - fz * sys.w_real(y) / wz) / dy
            }
        },
        order,
    )?;
    let kernel = if in_gap {
        let s = if side == Side::Plus { 1.0 } else { -1.0 };
        Complex64::new(((a - zr) / (zr - b)).ln(), s * std::f64::consts::PI)
    } else {
        ((a - z) / (b - z)).ln()
    };
    Ok(diff + kernel * fz / wz)
}
