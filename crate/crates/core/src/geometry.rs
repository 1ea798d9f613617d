//! Interval systems and branch-consistent evaluation of the algebraic
//! functions `w` and `w~`.
//!
//! `w(z) = sqrt(prod (z - a_i)(z - b_i))` is realized as the product of
//! principal square roots of the individual endpoint factors. Each pair of
//! factors belonging to one band is continuous across the real axis outside
//! that band, so the product is holomorphic exactly off the support and
//! carries the normalization `w(z)/z^{g+1} -> 1` at infinity for free.
//! Boundary traces use explicit `+0i`/`-0i` side logic; no small imaginary
//! offsets appear in the main path.

use num_complex::Complex64;

use crate::{Error, Result};

/// Which side of a cut a boundary evaluation approaches from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
    None,
}

/// Value of a branch of an algebraic function, tagged with cut information.
#[derive(Debug, Clone, Copy)]
pub struct BranchValue {
    pub value: Complex64,
    pub on_cut: bool,
    pub side: Side,
}

impl BranchValue {
    fn off_cut(value: Complex64) -> Self {
        BranchValue {
            value,
            on_cut: false,
            side: Side::None,
        }
    }
}

/// An ordered system of `g + 1` disjoint closed intervals
/// `[a_1, b_1], ..., [a_{g+1}, b_{g+1}]`.
#[derive(Debug, Clone)]
pub struct IntervalSystem {
    endpoints: Vec<f64>,
    genus: usize,
    unit_disk: bool,
}

impl IntervalSystem {
    /// Builds a system from the flat endpoint list `a_1, b_1, ..., b_{g+1}`.
    pub fn new(endpoints: &[f64]) -> Result<Self> {
        if endpoints.len() < 2 || endpoints.len() % 2 != 0 {
            return Err(Error::OddEndpoints(endpoints.len()));
        }
        for (i, pair) in endpoints.windows(2).enumerate() {
            if !(pair[0] < pair[1]) {
                return Err(Error::NonMonotone {
                    index: i + 1,
                    value: pair[1],
                    previous: pair[0],
                });
            }
        }
        let genus = endpoints.len() / 2 - 1;
        let unit_disk = endpoints[0] > -1.0 && endpoints[endpoints.len() - 1] < 1.0;
        Ok(IntervalSystem {
            endpoints: endpoints.to_vec(),
            genus,
            unit_disk,
        })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn num_bands(&self) -> usize {
        self.genus + 1
    }

    /// True iff the support is contained in `(-1, 1)`.
    pub fn unit_disk(&self) -> bool {
        self.unit_disk
    }

    pub fn endpoints(&self) -> &[f64] {
        &self.endpoints
    }

    /// The `k`-th band `[a_k, b_k]`, zero-indexed.
    pub fn band(&self, k: usize) -> (f64, f64) {
        (self.endpoints[2 * k], self.endpoints[2 * k + 1])
    }

    /// The `i`-th gap `(b_i, a_{i+1})`, zero-indexed; there are `g` gaps.
    pub fn gap(&self, i: usize) -> Result<(f64, f64)> {
        if i >= self.genus {
            return Err(Error::GapIndex {
                index: i,
                gaps: self.genus,
            });
        }
        Ok((self.endpoints[2 * i + 1], self.endpoints[2 * i + 2]))
    }

    /// Convex hull `[a_1, b_{g+1}]` of the support.
    pub fn hull(&self) -> (f64, f64) {
        (self.endpoints[0], self.endpoints[self.endpoints.len() - 1])
    }

    pub fn on_support(&self, x: f64) -> bool {
        (0..self.num_bands()).any(|k| {
            let (a, b) = self.band(k);
            a <= x && x <= b
        })
    }

    /// Band index containing `x`, if any.
    pub fn band_of(&self, x: f64) -> Option<usize> {
        (0..self.num_bands()).find(|&k| {
            let (a, b) = self.band(k);
            a <= x && x <= b
        })
    }

    pub fn gap_of(&self, x: f64) -> Option<usize> {
        (0..self.genus).find(|&i| {
            let (b, a) = self.gap(i).expect("index in range");
            b < x && x < a
        })
    }

    pub fn is_endpoint(&self, x: f64) -> bool {
        self.endpoints.iter().any(|&e| e == x)
    }

    /// `w(z)` on the branch holomorphic off the support with
    /// `w(z) = z^{g+1} + O(z^g)` at infinity.
    ///
    /// For real `z` on the open support the `+` side trace is returned; use
    /// [`IntervalSystem::w_side`] when the side matters.
    pub fn w(&self, z: Complex64) -> Complex64 {
        if z.im == 0.0 {
            return match self.band_of(z.re) {
                Some(_) => self.w_side_unchecked(z.re, Side::Plus),
                None => Complex64::new(self.w_real(z.re), 0.0),
            };
        }
        let mut prod = Complex64::new(1.0, 0.0);
        for &e in &self.endpoints {
            prod *= (z - e).sqrt();
        }
        prod
    }

    /// `w(x)` for real `x` off the support (real-valued).
    pub fn w_real(&self, x: f64) -> f64 {
        debug_assert!(!self.on_support(x) || self.is_endpoint(x));
        let mut mag = 1.0f64;
        let mut right = 0usize;
        for &e in &self.endpoints {
            mag *= (x - e).abs();
            if e > x {
                right += 1;
            }
        }
        // right is even off the support; each band to the right flips the sign
        let sign = if (right / 2) % 2 == 0 { 1.0 } else { -1.0 };
        sign * mag.sqrt()
    }

    /// `|w(x)|` anywhere on the real axis.
    pub fn w_abs(&self, x: f64) -> f64 {
        let mut mag = 1.0f64;
        for &e in &self.endpoints {
            mag *= (x - e).abs();
        }
        mag.sqrt()
    }

    /// Boundary trace `w_{+/-}(x)` for `x` on the support.
    pub fn w_side(&self, x: f64, side: Side) -> Result<Complex64> {
        if self.band_of(x).is_some() && !self.is_endpoint(x) && side == Side::None {
            return Err(Error::SideRequired(x));
        }
        Ok(self.w_side_unchecked(x, side))
    }

    fn w_side_unchecked(&self, x: f64, side: Side) -> Complex64 {
        let mut value = Complex64::new(1.0, 0.0);
        for &e in &self.endpoints {
            if x > e {
                value *= Complex64::new((x - e).sqrt(), 0.0);
            } else if x < e {
                let r = (e - x).sqrt();
                value *= match side {
                    Side::Minus => Complex64::new(0.0, -r),
                    _ => Complex64::new(0.0, r),
                };
            } else {
                return Complex64::new(0.0, 0.0);
            }
        }
        value
    }

    /// Full branch evaluation of `w` with cut bookkeeping.
    pub fn eval_w(&self, z: Complex64, side: Side) -> Result<BranchValue> {
        if z.im == 0.0 {
            let x = z.re;
            if self.is_endpoint(x) {
                return Ok(BranchValue {
                    value: Complex64::new(0.0, 0.0),
                    on_cut: true,
                    side,
                });
            }
            if self.band_of(x).is_some() {
                let value = self.w_side(x, side)?;
                return Ok(BranchValue {
                    value,
                    on_cut: true,
                    side,
                });
            }
            return Ok(BranchValue::off_cut(Complex64::new(self.w_real(x), 0.0)));
        }
        Ok(BranchValue::off_cut(self.w(z)))
    }

    /// `w~(z) = z^{g+1} w(1/z)`, holomorphic off the reflected support and
    /// normalized by `w~(0) = 1`. Positive on `(-1, 1)` when the support lies
    /// in the unit interval.
    pub fn w_tilde(&self, z: Complex64) -> Complex64 {
        if z.im == 0.0 {
            return Complex64::new(self.w_tilde_real_or_nan(z.re), 0.0);
        }
        let mut prod = Complex64::new(1.0, 0.0);
        for &e in &self.endpoints {
            prod *= (Complex64::new(1.0, 0.0) - e * z).sqrt();
        }
        prod
    }

    /// `w~` at real `x` off the reflected support.
    pub fn w_tilde_real(&self, x: f64) -> Result<f64> {
        let v = self.w_tilde_real_or_nan(x);
        if v.is_nan() {
            return Err(Error::SideRequired(x));
        }
        Ok(v)
    }

    fn w_tilde_real_or_nan(&self, x: f64) -> f64 {
        // 1 - e x < 0 iff x lies beyond the reflection of endpoint e; the
        // reflected support is where an odd sign pattern would appear.
        let mut mag = 1.0f64;
        let mut neg = 0usize;
        for &e in &self.endpoints {
            let f = 1.0 - e * x;
            mag *= f.abs();
            if f < 0.0 {
                neg += 1;
            }
        }
        if neg % 2 != 0 {
            return f64::NAN; // interior of the reflected support: side needed
        }
        let sign = if (neg / 2) % 2 == 0 { 1.0 } else { -1.0 };
        sign * mag.sqrt()
    }

    /// Full branch evaluation of `w~`; errors on the reflected support
    /// interior when no side is supplied.
    pub fn eval_w_tilde(&self, z: Complex64, side: Side) -> Result<BranchValue> {
        if z.im != 0.0 {
            return Ok(BranchValue::off_cut(self.w_tilde(z)));
        }
        let x = z.re;
        let plain = self.w_tilde_real_or_nan(x);
        if !plain.is_nan() {
            return Ok(BranchValue::off_cut(Complex64::new(plain, 0.0)));
        }
        if side == Side::None {
            return Err(Error::SideRequired(x));
        }
        let mut value = Complex64::new(1.0, 0.0);
        for &e in &self.endpoints {
            let f = 1.0 - e * x;
            if f > 0.0 {
                value *= Complex64::new(f.sqrt(), 0.0);
            } else if f < 0.0 {
                let r = (-f).sqrt();
                // approaching from above: 1 - e(x + i0) = f - i e 0, so the
                // sign of the imaginary part of the factor tracks -e
                let s = match side {
                    Side::Plus => -e.signum(),
                    _ => e.signum(),
                };
                value *= Complex64::new(0.0, s * r);
            } else {
                value = Complex64::new(0.0, 0.0);
                break;
            }
        }
        Ok(BranchValue {
            value,
            on_cut: true,
            side,
        })
    }

    /// Product `(w w~)(z)` off both cut systems.
    pub fn w_wtilde(&self, z: Complex64) -> Complex64 {
        self.w(z) * self.w_tilde(z)
    }
}

/// Result of a Moebius map evaluation; the preimage of infinity is flagged.
#[derive(Debug, Clone, Copy)]
pub enum MobiusValue {
    Finite(Complex64),
    Infinity,
}

/// Disk automorphism `t(z) = (z - x0)/(1 - z x0)` for `|x0| < 1`.
pub fn mobius(x0: f64, z: Complex64) -> MobiusValue {
    debug_assert!(x0.abs() < 1.0);
    let den = Complex64::new(1.0, 0.0) - z * x0;
    if den.norm() == 0.0 {
        return MobiusValue::Infinity;
    }
    MobiusValue::Finite((z - x0) / den)
}

/// Inverse of [`mobius`]: `t^{-1}(u) = (u + x0)/(1 + u x0)`.
pub fn mobius_inv(x0: f64, u: Complex64) -> MobiusValue {
    debug_assert!(x0.abs() < 1.0);
    let den = Complex64::new(1.0, 0.0) + u * x0;
    if den.norm() == 0.0 {
        return MobiusValue::Infinity;
    }
    MobiusValue::Finite((u + x0) / den)
}

/// Real-argument version of [`mobius`] for points of `(-1, 1)`.
pub fn mobius_real(x0: f64, x: f64) -> f64 {
    (x - x0) / (1.0 - x * x0)
}

pub fn mobius_inv_real(x0: f64, t: f64) -> f64 {
    (t + x0) / (1.0 + t * x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg_a() -> IntervalSystem {
        IntervalSystem::new(&[-0.7, -0.3, 0.2, 0.6]).unwrap()
    }

    #[test]
    fn make_system_examples() {
        let s = IntervalSystem::new(&[-1.0, 1.0]).unwrap();
        assert_eq!(s.genus(), 0);
        assert!(!s.unit_disk());

        let s = cfg_a();
        assert_eq!(s.genus(), 1);
        assert!(s.unit_disk());

        assert!(IntervalSystem::new(&[0.2, 0.1]).is_err());
        assert!(IntervalSystem::new(&[0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn w_single_interval() {
        let s = IntervalSystem::new(&[-1.0, 1.0]).unwrap();
        let v = s.w(Complex64::new(2.0, 0.0));
        assert_abs_diff_eq!(v.re, 3.0f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn w_band_trace_sign() {
        // eq-driven: -i w_+(x) = (-1)^{g+1-k} |w(x)| on band k (1-indexed)
        let s = cfg_a();
        let x = -0.5;
        let wp = s.w_side(x, Side::Plus).unwrap();
        let target = 0.0308f64.sqrt();
        assert_abs_diff_eq!(s.w_abs(x), target, epsilon = 1e-12);
        // band 1 of a g=1 system: (-1)^{2-1} = -1, so w_+ = -i * (-1)*|w| = i|w|
        let m_iwp = Complex64::new(0.0, -1.0) * wp;
        assert_abs_diff_eq!(m_iwp.re, -target, epsilon = 1e-12);
        assert_abs_diff_eq!(m_iwp.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn w_asymptotic_normalization() {
        for s in [IntervalSystem::new(&[-1.0, 1.0]).unwrap(), cfg_a()] {
            let z = Complex64::new(7.2e7, 6.9e7);
            let g1 = (s.genus() + 1) as i32;
            let ratio = s.w(z) / z.powi(g1);
            assert!((ratio - 1.0).norm() < 1e-6);
        }
    }

    #[test]
    fn w_branch_consistency() {
        let s = cfg_a();
        for k in 0..s.num_bands() {
            let (a, b) = s.band(k);
            for j in 1..50 {
                let x = a + (b - a) * j as f64 / 50.0;
                let wp = s.w_side(x, Side::Plus).unwrap();
                let wm = s.w_side(x, Side::Minus).unwrap();
                assert!((wp + wm).norm() < 1e-12);
                let sig = if (s.genus() + 1 - (k + 1)) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                let t = Complex64::new(0.0, -1.0) * wp;
                assert_abs_diff_eq!(t.re, sig * s.w_abs(x), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn w_conjugate_symmetry() {
        let s = cfg_a();
        for &(x, y) in &[(0.3, 0.8), (-1.2, 0.4), (2.0, -0.7), (0.05, 1.9)] {
            let z = Complex64::new(x, y);
            assert!((s.w(z.conj()) - s.w(z).conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn w_tilde_normalization_and_positivity() {
        let s = cfg_a();
        assert_abs_diff_eq!(
            s.w_tilde(Complex64::new(0.0, 0.0)).re,
            1.0,
            epsilon = 1e-15
        );
        for j in 0..40 {
            let x = -0.99 + 1.98 * j as f64 / 39.0;
            assert!(s.w_tilde_real(x).unwrap() > 0.0, "w~({x}) <= 0");
        }
        assert!(s.w_tilde_real(0.9).unwrap() > 0.0);
    }

    #[test]
    fn w_tilde_matches_reflection_identity() {
        let s = cfg_a();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rng = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let r = 1.1 + 1.9 * rng();
            let th = 2.0 * std::f64::consts::PI * rng();
            let z = Complex64::from_polar(r, th);
            let lhs = s.w_tilde(z);
            let rhs = z.powi((s.genus() + 1) as i32) * s.w(1.0 / z);
            assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn mobius_roundtrip() {
        let x0 = 0.37;
        let mut state = 0x243f6a8885a308d3u64;
        let mut rng = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let z = Complex64::from_polar(0.95 * rng(), 2.0 * std::f64::consts::PI * rng());
            let MobiusValue::Finite(t) = mobius(x0, z) else {
                panic!("finite input mapped to infinity")
            };
            let MobiusValue::Finite(back) = mobius_inv(x0, t) else {
                panic!("inverse blew up")
            };
            assert!((back - z).norm() < 1e-14);
        }
        // identity at x0 = 0 and t(x0) = 0
        let MobiusValue::Finite(v) = mobius(0.0, Complex64::new(0.3, 0.4)) else {
            panic!()
        };
        assert_abs_diff_eq!(v.re, 0.3, epsilon = 1e-15);
        let MobiusValue::Finite(v) = mobius(0.25, Complex64::new(0.25, 0.0)) else {
            panic!()
        };
        assert!(v.norm() < 1e-15);
        assert!(matches!(
            mobius(0.5, Complex64::new(2.0, 0.0)),
            MobiusValue::Infinity
        ));
    }
}
