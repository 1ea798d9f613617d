//! Assembly of the strong-asymptotics right-hand sides from the scalar
//! maps, theta quotients, and divisor data.

use num_complex::Complex64;

use crate::approx::{divisor_data, DivisorData, MarkovFunction, RationalApproximant};
use crate::basis::{condenser_basis, gap_basis, CondenserBasis, GapBasis};
use crate::geometry::{IntervalSystem, Side};
use crate::scalarmaps::{omega_n, CondenserSzego, InterpolationScheme, Phi, Psi, Szego};
use crate::theta::{t_n, Divisor, ThetaContext, ThetaN};
use crate::{Error, Result};

/// Everything Theorem-3 assembly needs that is independent of `n`.
pub struct Bases {
    pub mf: MarkovFunction,
    pub gb: Option<GapBasis>,
    pub szego: Szego,
    pub theta: Option<ThetaContext>,
}

impl Bases {
    pub fn new(mf: MarkovFunction) -> Result<Self> {
        let sys = mf.sys.clone();
        let gb = if sys.genus() > 0 {
            Some(gap_basis(&sys)?)
        } else {
            None
        };
        let szego = Szego::new(&sys, gb.as_ref(), mf.mu.profile())?;
        // The theta-quotient base divisor sits at the zeros of the gap
        // polynomial on the bottom sheet; this is the choice under which
        // the error-formula quotient reduces to 1 when its shift vanishes.
        let theta = match &gb {
            Some(gb) => Some(ThetaContext::new(&sys, gb, &mf.m_zeros)?),
            None => None,
        };
        Ok(Bases {
            mf,
            gb,
            szego,
            theta,
        })
    }

    pub fn sys(&self) -> &IntervalSystem {
        &self.mf.sys
    }
}

/// The condenser-side bases Theorem 4 needs (support inside the unit disk).
pub struct CondenserBases {
    pub cb: CondenserBasis,
    pub phi: Phi,
    pub rho: f64,
}

impl CondenserBases {
    pub fn new(sys: &IntervalSystem) -> Result<Self> {
        if !sys.unit_disk() {
            return Err(Error::NotInUnitDisk);
        }
        let cb = condenser_basis(sys)?;
        let phi = Phi::new(sys, &cb)?;
        let rho = phi.rho()?;
        Ok(CondenserBases { cb, phi, rho })
    }
}

fn require_off_hull(sys: &IntervalSystem, z: Complex64) -> Result<()> {
    let (h0, h1) = sys.hull();
    if z.im == 0.0 && z.re >= h0 && z.re <= h1 {
        return Err(Error::InsideHull(z.re));
    }
    Ok(())
}

/// Evaluator for the Theorem 3 right-hand side
/// `2 (T_n psi_n)(z) (m S^2)(z) / w(z)` at fixed scheme.
pub struct Thm3Eval<'a> {
    bases: &'a Bases,
    psi: Psi,
    tn: Option<ThetaN>,
    /// `c_mu + omega_n`, the inversion data (empty when g = 0).
    pub v_n: Vec<f64>,
}

impl<'a> Thm3Eval<'a> {
    pub fn new(bases: &'a Bases, scheme: &InterpolationScheme) -> Result<Self> {
        let sys = bases.sys();
        let psi = Psi::new(sys, bases.gb.as_ref(), scheme)?;
        let (tn, v_n) = match (&bases.gb, &bases.theta) {
            (Some(gb), Some(ctx)) => {
                let omega = omega_n(sys, Some(gb), scheme)?;
                let v: Vec<f64> = bases
                    .szego
                    .constants()
                    .iter()
                    .zip(&omega)
                    .map(|(c, o)| c + o)
                    .collect();
                (Some(ThetaN::new(ctx, &v)?), v)
            }
            _ => (None, Vec::new()),
        };
        Ok(Thm3Eval {
            bases,
            psi,
            tn,
            v_n,
        })
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let sys = self.bases.sys();
        require_off_hull(sys, z)?;
        let t = match (&self.tn, &self.bases.theta) {
            (Some(tn), Some(ctx)) => t_n(ctx, tn, z, Side::None)?,
            _ => Complex64::new(1.0, 0.0),
        };
        let psi = self.psi.eval(z, Side::None)?;
        let s = self.bases.szego.eval(z, Side::None)?;
        let m = self.bases.mf.m.eval_c(z);
        Ok(2.0 * t * psi * m * s * s / sys.w(z))
    }
}

/// Evaluator for the Theorem 4 right-hand side
/// `2 G_lambda (m_n(z)/B_n^2(z)) (D_lambda^2(z)/w(z)) (rho/phi(z))^{2(n-d_n)}`.
pub struct Thm4Eval<'a> {
    bases: &'a Bases,
    cond: &'a CondenserBases,
    pub dd: DivisorData,
    pub d: CondenserSzego,
    n: usize,
}

impl<'a> Thm4Eval<'a> {
    pub fn new(
        bases: &'a Bases,
        cond: &'a CondenserBases,
        r: &RationalApproximant,
    ) -> Result<Self> {
        let sys = bases.sys();
        let (dd, lambda) = match (&bases.gb, &bases.theta) {
            (Some(gb), Some(ctx)) => {
                let dd = divisor_data(&bases.mf, gb, ctx, r)?;
                let lambda = dd.lambda(&bases.mf)?;
                (dd, lambda)
            }
            _ => (
                DivisorData {
                    divisor: Divisor {
                        points: Vec::new(),
                        gap_angles: Vec::new(),
                    },
                    projections: Vec::new(),
                    top_zeros: Vec::new(),
                    endpoint_hits: Vec::new(),
                    d_n: 0,
                    v_n: Vec::new(),
                },
                bases.mf.mu.profile(),
            ),
        };
        let d = CondenserSzego::new(sys, &cond.cb, lambda)?;
        Ok(Thm4Eval {
            bases,
            cond,
            dd,
            d,
            n: r.n,
        })
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let sys = self.bases.sys();
        require_off_hull(sys, z)?;
        let dz = self.d.eval(z, Side::None)?;
        let phi = self.cond.phi.eval(z, Side::None)?;
        let ratio = (self.cond.rho / phi).powi(2 * (self.n as i32 - self.dd.d_n as i32));
        let m_n = self.dd.m_n(z);
        let b = self.dd.blaschke(z);
        Ok(2.0 * self.d.g_lambda * (m_n / (b * b)) * (dz * dz / sys.w(z)) * ratio)
    }
}
