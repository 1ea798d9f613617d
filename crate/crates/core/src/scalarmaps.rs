//! Scalar special functions: the Blaschke-type products `psi_n` with their
//! gap constants `omega_{n,k}`, the condenser map `phi` with modulus `rho`
//! and equilibrium measure, the Szego function of a density with its gap
//! constants, and the condenser Szego function.

use num_complex::Complex64;

use crate::basis::{self, CondenserBasis, CPoly, GapBasis, Poly};
use crate::contour::Path;
use crate::geometry::{IntervalSystem, Side};
use crate::quad::{self, EndpointOrder, DEFAULT_BAND_ORDER};
use crate::{Error, Result};

/// Conjugate-symmetric multiset of `2n` interpolation points; points not
/// listed in `finite` sit at infinity.
#[derive(Debug, Clone)]
pub struct InterpolationScheme {
    pub n: usize,
    pub finite: Vec<Complex64>,
}

impl InterpolationScheme {
    pub fn all_infinity(n: usize) -> Self {
        InterpolationScheme {
            n,
            finite: Vec::new(),
        }
    }

    pub fn new(sys: &IntervalSystem, n: usize, finite: Vec<Complex64>) -> Result<Self> {
        if finite.len() > 2 * n {
            return Err(Error::Scenario(format!(
                "{} finite interpolation points exceed 2n = {}",
                finite.len(),
                2 * n
            )));
        }
        let (h0, h1) = sys.hull();
        for &e in &finite {
            if e.im == 0.0 && e.re >= h0 && e.re <= h1 {
                return Err(Error::InsideHull(e.re));
            }
        }
        // conjugate symmetry as a multiset
        let mut pool: Vec<Complex64> = finite.iter().filter(|e| e.im != 0.0).copied().collect();
        while let Some(e) = pool.pop() {
            let m = pool
                .iter()
                .position(|&f| (f - e.conj()).norm() < 1e-14 * (1.0 + e.norm()));
            match m {
                Some(i) => {
                    pool.swap_remove(i);
                }
                None => {
                    return Err(Error::Scenario(format!(
                        "interpolation set not conjugate-symmetric near {e}"
                    )))
                }
            }
        }
        Ok(InterpolationScheme { n, finite })
    }

    pub fn infinity_count(&self) -> usize {
        2 * self.n - self.finite.len()
    }

    /// `v_n(z) = prod (z - e)` over the finite points.
    pub fn v_n(&self, z: Complex64) -> Complex64 {
        self.finite
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &e| acc * (z - e))
    }
}

/// Distinct finite points with multiplicities.
fn grouped(points: &[Complex64]) -> Vec<(Complex64, usize)> {
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    for &e in points {
        match out
            .iter_mut()
            .find(|(f, _)| (*f - e).norm() < 1e-14 * (1.0 + e.norm()))
        {
            Some((_, m)) => *m += 1,
            None => out.push((e, 1)),
        }
    }
    out
}

/// Evaluator for `psi_n`: the simple poles of the exponent integrand at the
/// interpolation points are split off in closed form (`m_e(e) = w(e)` makes
/// the residue exactly 1), leaving an integrand holomorphic off the support.
pub struct Psi {
    sys: IntervalSystem,
    base: f64,
    finite: Vec<(Complex64, usize, CPoly)>,
    inf_mult: usize,
    m_inf: Poly,
}

impl Psi {
    pub fn new(
        sys: &IntervalSystem,
        gb: Option<&GapBasis>,
        scheme: &InterpolationScheme,
    ) -> Result<Self> {
        let mut finite = Vec::new();
        for (e, mult) in grouped(&scheme.finite) {
            finite.push((e, mult, basis::m_point(sys, gb, e)?));
        }
        Ok(Psi {
            sys: sys.clone(),
            base: sys.hull().1,
            finite,
            inf_mult: scheme.infinity_count(),
            m_inf: basis::m_infinity(sys, gb)?,
        })
    }

    fn exponent_integrand(&self, s: Complex64) -> Complex64 {
        let w = self.sys.w(s);
        let mut v = Complex64::new(self.inf_mult as f64, 0.0) * self.m_inf.eval_c(s) / w;
        for (e, mult, me) in &self.finite {
            // (m_e(s) - w(s)) / ((s - e) w(s)), holomorphic at s = e
            v += (me.eval(s) - w) * (*mult as f64) / ((s - e) * w);
        }
        v
    }

    /// Canonical path from the rightmost branch point to `z`, staying off
    /// the real axis except at its endpoints.
    fn path(&self, z: Complex64, side: Side) -> Result<Path> {
        let b = self.base;
        if z.im != 0.0 || z.re > b {
            let p = Path::new(vec![Complex64::new(b, 0.0), z]).graded(true, false);
            return Ok(p);
        }
        // z on the closed cut ray
        let interior_band = self.sys.band_of(z.re).is_some() && !self.sys.is_endpoint(z.re);
        if interior_band && side == Side::None {
            return Err(Error::SideRequired(z.re));
        }
        let s = if side == Side::Minus { -1.0 } else { 1.0 };
        let (h0, h1) = self.sys.hull();
        let h = 0.6 * (h1 - h0).max(0.2);
        let grade_end = self.sys.is_endpoint(z.re);
        Ok(Path::new(vec![
            Complex64::new(b, 0.0),
            Complex64::new(b, s * h),
            Complex64::new(z.re, s * h),
            z,
        ])
        .graded(true, grade_end))
    }

    pub fn eval(&self, z: Complex64, side: Side) -> Result<Complex64> {
        let b = Complex64::new(self.base, 0.0);
        if (z - b).norm() == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let mut pre = Complex64::new(1.0, 0.0);
        for (e, mult, _) in &self.finite {
            pre *= ((z - e) / (b - e)).powi(*mult as i32);
        }
        let path = self.path(z, side)?;
        let i = path.integrate(&|s| self.exponent_integrand(s));
        Ok(pre * i.exp())
    }
}

/// One-shot wrapper around [`Psi`].
pub fn psi_n(
    sys: &IntervalSystem,
    gb: Option<&GapBasis>,
    scheme: &InterpolationScheme,
    z: Complex64,
    side: Side,
) -> Result<Complex64> {
    Psi::new(sys, gb, scheme)?.eval(z, side)
}

/// `fr{x}`: fractional part in `[0, 1)` after clamping imaginary dust.
pub fn fr(v: Complex64) -> Result<f64> {
    if v.im.abs() > 1e-9 {
        return Err(Error::Scenario(format!(
            "non-real value {v} in a real reduction"
        )));
    }
    Ok(v.re - v.re.floor())
}

/// The gap constants `omega_{n,k}` of the scheme.
pub fn omega_n(
    sys: &IntervalSystem,
    gb: Option<&GapBasis>,
    scheme: &InterpolationScheme,
) -> Result<Vec<f64>> {
    let g = sys.genus();
    let m_inf = basis::m_infinity(sys, gb)?;
    let finite: Vec<(Complex64, usize, CPoly)> = grouped(&scheme.finite)
        .into_iter()
        .map(|(e, m)| basis::m_point(sys, gb, e).map(|p| (e, m, p)))
        .collect::<Result<_>>()?;
    let mut band_ints = Vec::with_capacity(g);
    for i in 0..g {
        let v = quad::band_integral_single(
            sys,
            i,
            &|x| {
                let xc = Complex64::new(x, 0.0);
                let mut v =
                    Complex64::new(scheme.infinity_count() as f64 * m_inf.eval(x), 0.0);
                for (e, mult, me) in &finite {
                    v += me.eval(xc) * (*mult as f64) / (xc - e);
                }
                v
            },
            Side::Plus,
            DEFAULT_BAND_ORDER,
        )?;
        band_ints.push(v);
    }
    let mut out = Vec::with_capacity(g);
    let mut acc = Complex64::new(0.0, 0.0);
    for v in band_ints {
        acc += v;
        out.push(fr(-acc / Complex64::new(0.0, 2.0 * std::f64::consts::PI))?);
    }
    Ok(out)
}

/// The condenser map `phi` with its modulus `rho`.
pub struct Phi {
    sys: IntervalSystem,
    cb: CondenserBasis,
}

impl Phi {
    pub fn new(sys: &IntervalSystem, cb: &CondenserBasis) -> Result<Self> {
        if !sys.unit_disk() {
            return Err(Error::NotInUnitDisk);
        }
        Ok(Phi {
            sys: sys.clone(),
            cb: cb.clone(),
        })
    }

    fn integrand(&self, s: Complex64) -> Complex64 {
        std::f64::consts::PI * self.cb.u.eval_c(s) / (self.sys.w(s) * self.sys.w_tilde(s))
    }

    pub fn eval(&self, z: Complex64, side: Side) -> Result<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        if (z - one).norm() == 0.0 {
            return Ok(one);
        }
        if z.norm() > 1.0 + 1e-12 {
            // phi(1/z) = 1/phi(z)
            return Ok(one / self.eval(one / z, side)?);
        }
        let (h0, h1) = self.sys.hull();
        let path = if z.im == 0.0 && z.re > h1 {
            Path::new(vec![one, z]).graded(false, self.sys.is_endpoint(z.re))
        } else if z.im == 0.0 {
            let interior_band = self.sys.band_of(z.re).is_some() && !self.sys.is_endpoint(z.re);
            if interior_band && side == Side::None {
                return Err(Error::SideRequired(z.re));
            }
            if z.re <= -1.0 {
                return Err(Error::NearPole {
                    z: format!("{z}"),
                    dist: 0.0,
                });
            }
            let s = if side == Side::Minus { -1.0 } else { 1.0 };
            let h = 0.6 * (h1 - h0).max(0.2);
            Path::new(vec![
                one,
                Complex64::new(1.0, s * h),
                Complex64::new(z.re, s * h),
                z,
            ])
            .graded(false, self.sys.is_endpoint(z.re))
        } else {
            let s = z.im.signum();
            let h = z.im.abs().max(0.6);
            Path::new(vec![
                one,
                Complex64::new(1.0, s * h),
                Complex64::new(z.re, s * h),
                z,
            ])
            .graded(false, false)
        };
        Ok(path.integrate(&|s| self.integrand(s)).exp())
    }

    /// `rho = phi(b_{g+1}) < 1`, the annulus modulus.
    pub fn rho(&self) -> Result<f64> {
        let b = self.sys.hull().1;
        let v = self.eval(Complex64::new(b, 0.0), Side::None)?;
        Ok(v.re)
    }
}

/// Per-band masses of the condenser equilibrium measure.
#[derive(Debug, Clone)]
pub struct CondenserMeasure {
    pub band_mass: Vec<f64>,
}

impl CondenserMeasure {
    /// `omega_k = sum_{i<=k} mass(band_i)` for 1-based `k`; `omega(0) = 0`.
    pub fn omega(&self, k: usize) -> f64 {
        self.band_mass.iter().take(k).sum()
    }

    pub fn total(&self) -> f64 {
        self.band_mass.iter().sum()
    }
}

pub fn condenser_measure(sys: &IntervalSystem, cb: &CondenserBasis) -> Result<CondenserMeasure> {
    let mut band_mass = Vec::with_capacity(sys.num_bands());
    for k in 0..sys.num_bands() {
        let v = quad::band_integral_single(
            sys,
            k,
            &|x| {
                Complex64::new(0.0, 1.0) * cb.u.eval(x)
                    / sys.w_tilde_real(x).unwrap_or(f64::NAN)
            },
            Side::Plus,
            DEFAULT_BAND_ORDER,
        )?;
        band_mass.push(v.re);
    }
    Ok(CondenserMeasure { band_mass })
}

/// Condenser equilibrium density `i u/(w_+ w~)` at a band-interior point.
pub fn condenser_density(sys: &IntervalSystem, cb: &CondenserBasis, x: f64) -> Result<f64> {
    let v = Complex64::new(0.0, 1.0) * cb.u.eval(x)
        / (sys.w_side(x, Side::Plus)? * sys.w_tilde_real(x).unwrap_or(f64::NAN));
    Ok(v.re)
}

/// A positive density on the support: `lambda(x) = reg(x) * prod |x - e|^a`
/// with declared endpoint factors. `log_reg_c` is the analytic continuation
/// of `log(reg)` to a neighborhood of the support (needed for Cauchy-type
/// integrals with pole subtraction).
pub struct DensityProfile {
    pub reg: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub log_reg_c: Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
    pub orders: Vec<EndpointOrder>,
}

impl DensityProfile {
    pub fn constant(c: f64) -> Self {
        DensityProfile {
            reg: Box::new(move |_| c),
            log_reg_c: Box::new(move |_| Complex64::new(c.ln(), 0.0)),
            orders: Vec::new(),
        }
    }

    /// `exp(p(x))` for a real polynomial `p`.
    pub fn exp_poly(p: Poly) -> Self {
        let p2 = p.clone();
        DensityProfile {
            reg: Box::new(move |x| p.eval(x).exp()),
            log_reg_c: Box::new(move |z| p2.eval_c(z)),
            orders: Vec::new(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v = (self.reg)(x);
        for o in &self.orders {
            v *= (x - o.endpoint).abs().powf(o.order);
        }
        v
    }

    /// Reject profiles that fail positivity on band interiors.
    pub fn validate(&self, sys: &IntervalSystem) -> Result<()> {
        for k in 0..sys.num_bands() {
            let (a, b) = sys.band(k);
            for j in 1..16 {
                let x = a + (b - a) * j as f64 / 16.0;
                let v = self.eval(x);
                if !(v > 0.0) {
                    return Err(Error::NonPositiveDensity { x, value: v });
                }
            }
        }
        Ok(())
    }
}

/// `c_{mu,i} = (1/2 pi i) int log(mu) l_i / w_+ dx`, all real.
pub fn szego_constants(
    sys: &IntervalSystem,
    gb: &GapBasis,
    mu: &DensityProfile,
) -> Result<Vec<f64>> {
    mu.validate(sys)?;
    let mut out = Vec::with_capacity(gb.genus());
    for i in 0..gb.genus() {
        let li = gb.l[i].clone();
        let t = quad::log_endpoint_integral(
            sys,
            |x| (mu.reg)(x),
            &mu.orders,
            |x| {
                let k = sys.band_of(x).unwrap_or(0);
                quad::band_sign(sys, k) * li.eval(x)
            },
        )?;
        // 1/w_+ = -i sgn_k / |w|; (1/2 pi i)(-i t) = -t/(2 pi)
        out.push(-t / (2.0 * std::f64::consts::PI));
    }
    Ok(out)
}

/// Szego function of a density, eq.-(szego) construction with the default
/// `p = 1` branch (an alternative monic `p` is accepted for cross-checks).
pub struct Szego {
    sys: IntervalSystem,
    p: Poly,
    c: Vec<f64>,
    gb: Option<GapBasis>,
    orders: Vec<EndpointOrder>,
    log_reg_c: Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
}

impl Szego {
    pub fn new(sys: &IntervalSystem, gb: Option<&GapBasis>, mu: DensityProfile) -> Result<Self> {
        Self::with_p(sys, gb, mu, Poly::constant(1.0))
    }

    pub fn with_p(
        sys: &IntervalSystem,
        gb: Option<&GapBasis>,
        mu: DensityProfile,
        p: Poly,
    ) -> Result<Self> {
        mu.validate(sys)?;
        for k in 0..sys.num_bands() {
            let (a, b) = sys.band(k);
            for j in 0..=24 {
                let x = a + (b - a) * j as f64 / 24.0;
                if p.eval(x).abs() < 1e-12 {
                    return Err(Error::ZeroOnSupport(x));
                }
            }
        }
        let c = match gb {
            Some(gb) => szego_constants(sys, gb, &mu)?,
            None => Vec::new(),
        };
        Ok(Szego {
            sys: sys.clone(),
            p,
            c,
            gb: gb.cloned(),
            orders: mu.orders,
            log_reg_c: mu.log_reg_c,
        })
    }

    pub fn constants(&self) -> &[f64] {
        &self.c
    }

    pub fn eval(&self, z: Complex64, side: Side) -> Result<Complex64> {
        let on_band = z.im == 0.0 && self.sys.band_of(z.re).is_some();
        // main band integral: analytic part + declared endpoint-log parts
        let p = self.p.clone();
        let logc = &self.log_reg_c;
        let mut i_band = quad::cauchy_band(
            &self.sys,
            |s| logc(s) * p.eval_c(s),
            z,
            side,
            DEFAULT_BAND_ORDER,
        )?;
        if !self.orders.is_empty() {
            // shift the log by its value at z so the integrand stays
            // bounded when z is close to the support
            let dist = (0..self.sys.num_bands())
                .map(|k| {
                    let (a, b) = self.sys.band(k);
                    (z - z.re.clamp(a, b)).norm()
                })
                .fold(f64::INFINITY, f64::min);
            let near = on_band || dist < 0.05;
            let shift = if near {
                self.orders
                    .iter()
                    .map(|o| o.order * (z - o.endpoint).norm().max(1e-300).ln())
                    .sum::<f64>()
            } else {
                0.0
            };
            let neg_i = Complex64::new(0.0, -1.0);
            i_band += quad::band_log_integral_c(&self.sys, &self.orders, shift, |x| {
                let k = self.sys.band_of(x).unwrap_or(0);
                neg_i * quad::band_sign(&self.sys, k) * p.eval(x) / (x - z)
            });
            if near {
                i_band += shift
                    * quad::cauchy_band(&self.sys, |s| p.eval_c(s), z, side, DEFAULT_BAND_ORDER)?;
            }
        }
        // gap corrections
        let mut corr = Complex64::new(0.0, 0.0);
        if let Some(gb) = &self.gb {
            for i in 0..gb.genus() {
                let j = quad::gap_cauchy(
                    &self.sys,
                    i,
                    |y| self.p.eval(y),
                    z,
                    side,
                    DEFAULT_BAND_ORDER,
                )?;
                corr += Complex64::new(0.0, 2.0 * std::f64::consts::PI) * self.c[i] * j;
            }
        }
        let w = if on_band {
            self.sys.w_side(z.re, side)?
        } else {
            self.sys.w(z)
        };
        let pref = w / (self.p.eval_c(z) * Complex64::new(0.0, 2.0 * std::f64::consts::PI));
        Ok((pref * (i_band - corr)).exp())
    }
}

/// Condenser Szego function of a density profile, with its constants
/// `G_lambda` and `kappa_{lambda,i}`.
pub struct CondenserSzego {
    sys: IntervalSystem,
    cb: CondenserBasis,
    pub g_lambda: f64,
    pub kappa: Vec<f64>,
    orders: Vec<EndpointOrder>,
    log_reg_c: Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
}

impl CondenserSzego {
    pub fn new(sys: &IntervalSystem, cb: &CondenserBasis, lambda: DensityProfile) -> Result<Self> {
        lambda.validate(sys)?;
        let wtilde = |x: f64| sys.w_tilde_real(x).unwrap_or(f64::NAN);
        // log G = int log(lambda) d omega_{Delta,T}
        let log_g = quad::log_endpoint_integral(
            sys,
            |x| (lambda.reg)(x),
            &lambda.orders,
            |x| {
                let k = sys.band_of(x).unwrap_or(0);
                quad::band_sign(sys, k) * cb.u.eval(x) / wtilde(x)
            },
        )?;
        let g_lambda = log_g.exp();
        let genus = sys.genus();
        let mut kappa = Vec::with_capacity(genus);
        for i in 0..genus {
            let elli = cb.ell[i].clone();
            let t = quad::log_endpoint_integral(
                sys,
                |x| (lambda.reg)(x) / g_lambda,
                &lambda.orders,
                |x| {
                    let k = sys.band_of(x).unwrap_or(0);
                    quad::band_sign(sys, k) * elli.eval(x) / wtilde(x)
                },
            )?;
            kappa.push(-t / (2.0 * std::f64::consts::PI));
        }
        Ok(CondenserSzego {
            sys: sys.clone(),
            cb: cb.clone(),
            g_lambda,
            kappa,
            orders: lambda.orders,
            log_reg_c: lambda.log_reg_c,
        })
    }

    pub fn eval(&self, z: Complex64, side: Side) -> Result<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        if z.norm() > 1.0 + 1e-12 {
            return Ok(one / self.eval(one / z, side)?);
        }
        let sys = &self.sys;
        let on_band = z.im == 0.0 && sys.band_of(z.re).is_some();
        let wtilde = |x: f64| sys.w_tilde_real(x).unwrap_or(f64::NAN);
        let log_g = self.g_lambda.ln();
        // analytic part of log(lambda/G) continued off the axis
        let a_c = |s: Complex64| {
            ((self.log_reg_c)(s) - log_g) * self.cb.u.eval_c(s) / sys.w_tilde(s)
        };
        // pole part of the kernel: 1/(x-z)
        let mut i_band =
            quad::cauchy_band(sys, a_c, z, side, DEFAULT_BAND_ORDER)?;
        // entire part of the kernel: x/(1-xz), no pole near the support
        i_band += quad::band_integral(
            sys,
            |x| a_c(Complex64::new(x, 0.0)) * x / (1.0 - x * z),
            Side::Plus,
            DEFAULT_BAND_ORDER,
        )?;
        if !self.orders.is_empty() {
            let dist = (0..sys.num_bands())
                .map(|k| {
                    let (a, b) = sys.band(k);
                    (z - z.re.clamp(a, b)).norm()
                })
                .fold(f64::INFINITY, f64::min);
            let near = on_band || dist < 0.05;
            let shift = if near {
                self.orders
                    .iter()
                    .map(|o| o.order * (z - o.endpoint).norm().max(1e-300).ln())
                    .sum::<f64>()
            } else {
                0.0
            };
            let neg_i = Complex64::new(0.0, -1.0);
            i_band += quad::band_log_integral_c(sys, &self.orders, shift, |x| {
                let k = sys.band_of(x).unwrap_or(0);
                let kern = one / (x - z) + x / (1.0 - x * z);
                neg_i * quad::band_sign(sys, k) * self.cb.u.eval(x) / wtilde(x) * kern
            });
            if near {
                let u_c = |s: Complex64| self.cb.u.eval_c(s) / sys.w_tilde(s);
                i_band += shift
                    * (quad::cauchy_band(sys, u_c, z, side, DEFAULT_BAND_ORDER)?
                        + quad::band_integral(
                            sys,
                            |x| u_c(Complex64::new(x, 0.0)) * x / (1.0 - x * z),
                            Side::Plus,
                            DEFAULT_BAND_ORDER,
                        )?);
            }
        }
        // gap corrections with both kernel parts
        let mut corr = Complex64::new(0.0, 0.0);
        for i in 0..sys.genus() {
            let pole = quad::gap_cauchy(
                sys,
                i,
                |y| self.cb.u.eval(y) / wtilde(y),
                z,
                side,
                DEFAULT_BAND_ORDER,
            )?;
            let entire = quad::gap_integral_c(
                sys,
                i,
                |y| {
                    Complex64::new(self.cb.u.eval(y) / wtilde(y), 0.0) * y / (1.0 - y * z)
                },
                DEFAULT_BAND_ORDER,
            )?;
            corr += Complex64::new(0.0, 2.0 * std::f64::consts::PI)
                * self.kappa[i]
                * (pole + entire);
        }
        let (w, wt) = if on_band {
            (sys.w_side(z.re, side)?, Complex64::new(wtilde(z.re), 0.0))
        } else {
            (sys.w(z), sys.w_tilde(z))
        };
        let pref =
            w * wt / (self.cb.u.eval_c(z) * Complex64::new(0.0, 2.0 * std::f64::consts::PI));
        Ok((pref * (i_band - corr)).exp())
    }
}
