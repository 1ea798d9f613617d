//! Scenario runner: parses scenario files, builds the approximants and the
//! theorem right-hand sides, and emits ratio reports as CSV.

mod assemble;
mod verify;

pub use assemble::{Bases, CondenserBases, Thm3Eval, Thm4Eval};
pub use verify::{verify, VerifyItem};

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::approx::{critical_point, l2_error, pade, MarkovFunction, MuSpec, RationalApproximant};
use crate::basis::Poly;
use crate::geometry::IntervalSystem;
use crate::quad::DEFAULT_BAND_ORDER;
use crate::scalarmaps::InterpolationScheme;
use crate::{approx, par_map, Error, Result};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Pade,
    Critical,
}

/// A parsed scenario file. Line-oriented `key = value` with `#` comments;
/// a `version` header is mandatory.
#[derive(Debug)]
pub struct Scenario {
    pub name: String,
    pub endpoints: Vec<f64>,
    pub mu: MuSpec,
    pub m_zeros: Vec<f64>,
    pub mode: Mode,
    /// Finite interpolation points (with multiplicity); the remaining
    /// `2n - len` points sit at infinity. Ignored in critical mode.
    pub scheme_points: Vec<Complex64>,
    pub n_list: Vec<usize>,
    pub grid: Vec<Complex64>,
    /// `|ratio - 1|` bound required at the largest n.
    pub ratio_tol: f64,
}

/// Parse a complex literal: `1.5`, `-2`, `2i`, `0.9i`, `0.05+0.9i`, `1-2i`.
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let t = s.trim();
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    if let Some(im_part) = t.strip_suffix('i') {
        // find the split between real and imaginary parts: a sign that is
        // not the leading character and not part of an exponent
        let bytes = im_part.as_bytes();
        let mut split = None;
        for j in (1..bytes.len()).rev() {
            let c = bytes[j] as char;
            if (c == '+' || c == '-') && !matches!(bytes[j - 1] as char, 'e' | 'E') {
                split = Some(j);
                break;
            }
        }
        let (re_s, im_s) = match split {
            Some(j) => (&im_part[..j], &im_part[j..]),
            None => ("0", im_part),
        };
        let im = match im_s {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => other.parse::<f64>().map_err(|e| format!("{s}: {e}"))?,
        };
        let re = if re_s.is_empty() {
            0.0
        } else {
            re_s.parse::<f64>().map_err(|e| format!("{s}: {e}"))?
        };
        Ok(Complex64::new(re, im))
    } else {
        t.parse::<f64>()
            .map(|re| Complex64::new(re, 0.0))
            .map_err(|e| format!("{s}: {e}"))
    }
}

fn parse_f64_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| format!("{t}: {e}")))
        .collect()
}

impl Scenario {
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut errors: Vec<String> = Vec::new();
        let mut version: Option<u32> = None;
        let mut endpoints: Vec<f64> = Vec::new();
        let mut mu = MuSpec::One;
        let mut m_zeros: Vec<f64> = Vec::new();
        let mut mode = None;
        let mut scheme_points: Vec<Complex64> = Vec::new();
        let mut n_list: Vec<usize> = Vec::new();
        let mut grid: Vec<Complex64> = Vec::new();
        let mut ratio_tol = 0.15;

        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {}: expected key = value", ln + 1));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let mut fail = |msg: String| errors.push(format!("{key}: {msg}"));
            match key {
                "version" => match value.parse::<u32>() {
                    Ok(v) => version = Some(v),
                    Err(e) => fail(e.to_string()),
                },
                "endpoints" => match parse_f64_list(value) {
                    Ok(v) => endpoints = v,
                    Err(e) => fail(e),
                },
                "mu" => {
                    let mut toks = value.split_whitespace();
                    match toks.next() {
                        Some("1") => mu = MuSpec::One,
                        Some(head @ ("exp" | "poly")) => {
                            match toks
                                .map(|t| t.parse::<f64>().map_err(|e| format!("{t}: {e}")))
                                .collect::<std::result::Result<Vec<f64>, _>>()
                            {
                                Ok(c) if !c.is_empty() => {
                                    let p = Poly::new(c);
                                    mu = if head == "exp" {
                                        MuSpec::ExpPoly(p)
                                    } else {
                                        MuSpec::PosPoly(p)
                                    };
                                }
                                Ok(_) => fail("needs coefficients".into()),
                                Err(e) => fail(e),
                            }
                        }
                        _ => fail(format!("unknown density form {value:?}")),
                    }
                }
                "m_zeros" => {
                    if value == "none" {
                        m_zeros = Vec::new();
                    } else {
                        match parse_f64_list(value) {
                            Ok(v) => m_zeros = v,
                            Err(e) => fail(e),
                        }
                    }
                }
                "mode" => match value {
                    "pade" => mode = Some(Mode::Pade),
                    "critical" => mode = Some(Mode::Critical),
                    other => fail(format!("unknown mode {other:?}")),
                },
                "scheme" => {
                    if value != "inf" {
                        for tok in value.split_whitespace() {
                            // `point*mult` repeats a point
                            let (lit, mult) = match tok.split_once('*') {
                                Some((l, m)) => match m.parse::<usize>() {
                                    Ok(m) => (l, m),
                                    Err(e) => {
                                        fail(format!("{tok}: {e}"));
                                        continue;
                                    }
                                },
                                None => (tok, 1),
                            };
                            match parse_complex(lit) {
                                Ok(z) => scheme_points.extend(std::iter::repeat(z).take(mult)),
                                Err(e) => fail(e),
                            }
                        }
                    }
                }
                "n_list" => {
                    match value
                        .split_whitespace()
                        .map(|t| t.parse::<usize>().map_err(|e| format!("{t}: {e}")))
                        .collect::<std::result::Result<Vec<usize>, _>>()
                    {
                        Ok(v) => n_list = v,
                        Err(e) => fail(e),
                    }
                }
                "grid" => {
                    for tok in value.split_whitespace() {
                        match parse_complex(tok) {
                            Ok(z) => grid.push(z),
                            Err(e) => fail(e),
                        }
                    }
                }
                "ratio_tol" => match value.parse::<f64>() {
                    Ok(v) => ratio_tol = v,
                    Err(e) => fail(e.to_string()),
                },
                other => errors.push(format!("unknown key {other:?}")),
            }
        }

        match version {
            None => errors.push("version: missing header".into()),
            Some(v) if v != SCENARIO_VERSION => {
                errors.push(format!("version: {v} unsupported (expected {SCENARIO_VERSION})"))
            }
            _ => {}
        }
        let mode = mode.unwrap_or_else(|| {
            errors.push("mode: missing".into());
            Mode::Pade
        });
        if n_list.is_empty() {
            errors.push("n_list: empty".into());
        }
        if grid.is_empty() {
            errors.push("grid: empty".into());
        }
        if !(ratio_tol > 0.0) {
            errors.push("ratio_tol: must be positive".into());
        }

        // fail-fast: run every module precondition before any computation
        let scenario = Scenario {
            name: name.to_string(),
            endpoints,
            mu,
            m_zeros,
            mode,
            scheme_points,
            n_list,
            grid,
            ratio_tol,
        };
        if errors.is_empty() {
            if let Err(e) = scenario.validate() {
                errors.push(e.to_string());
            }
        }
        if errors.is_empty() {
            Ok(scenario)
        } else {
            Err(Error::Scenario(errors.join("; ")))
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        Self::parse(&name, &text)
    }

    /// Check every module precondition without running anything heavy.
    fn validate(&self) -> Result<()> {
        let sys = IntervalSystem::new(&self.endpoints)?;
        let mf = self.markov(&sys)?;
        if self.mode == Mode::Critical && !sys.unit_disk() {
            return Err(Error::NotInUnitDisk);
        }
        for &n in &self.n_list {
            if self.mode == Mode::Pade {
                InterpolationScheme::new(&sys, n, self.scheme_points.clone())?;
            } else if n == 0 {
                return Err(Error::Scenario("critical mode needs n >= 1".into()));
            }
        }
        let (h0, h1) = sys.hull();
        for &z in &self.grid {
            if z.im == 0.0 && z.re >= h0 && z.re <= h1 {
                return Err(Error::InsideHull(z.re));
            }
            if self.mode == Mode::Critical && z.im == 0.0 && z.re != 0.0 {
                let inv = 1.0 / z.re;
                if inv >= h0 && inv <= h1 {
                    return Err(Error::Scenario(format!(
                        "grid point {} lies on the reflected cut system",
                        z.re
                    )));
                }
            }
        }
        drop(mf);
        Ok(())
    }

    pub fn markov(&self, sys: &IntervalSystem) -> Result<MarkovFunction> {
        let mut m = Poly::constant(1.0);
        for &z in &self.m_zeros {
            m = m.mul(&Poly::new(vec![-z, 1.0]));
        }
        MarkovFunction::new(sys, self.mu.clone(), m)
    }
}

/// One ratio measurement.
pub struct Row {
    pub n: usize,
    pub z: Complex64,
    pub err: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Per-n diagnostic constants (critical mode carries the divisor data).
pub struct NReport {
    pub n: usize,
    pub v_n: Vec<f64>,
    pub d_n: Option<usize>,
    pub g_lambda: Option<f64>,
    pub divisor: Vec<f64>,
    pub l2: Option<f64>,
}

pub struct RatioReport {
    pub scenario: String,
    pub mode: Mode,
    pub quad_order: usize,
    pub rows: Vec<Row>,
    pub per_n: Vec<NReport>,
    pub rho: Option<f64>,
    pub tol: f64,
}

impl RatioReport {
    /// Worst `|ratio - 1|` over the grid at degree `n`.
    pub fn worst_at(&self, n: usize) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.n == n)
            .map(|r| (r.ratio - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Scenario tolerance: met at the largest n, and no worse than at the
    /// smallest n.
    pub fn tolerances_met(&self, n_list: &[usize]) -> bool {
        let (Some(&lo), Some(&hi)) = (n_list.first(), n_list.last()) else {
            return false;
        };
        let w_hi = self.worst_at(hi);
        w_hi <= self.tol && (lo == hi || w_hi < self.worst_at(lo))
    }

    /// CSV body with a commented JSON metadata header.
    pub fn to_csv(&self) -> String {
        let mut meta = String::from("{");
        let _ = write!(
            meta,
            "\"scenario\":\"{}\",\"version\":{},\"mode\":\"{}\",\"quad_order\":{},\"ratio_tol\":{:e}",
            self.scenario,
            SCENARIO_VERSION,
            match self.mode {
                Mode::Pade => "pade",
                Mode::Critical => "critical",
            },
            self.quad_order,
            self.tol
        );
        if let Some(rho) = self.rho {
            let _ = write!(meta, ",\"rho\":{rho:.16e}");
        }
        meta.push_str(",\"per_n\":[");
        for (i, p) in self.per_n.iter().enumerate() {
            if i > 0 {
                meta.push(',');
            }
            let _ = write!(meta, "{{\"n\":{}", p.n);
            let join = |v: &[f64]| {
                v.iter()
                    .map(|x| format!("{x:.16e}"))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let _ = write!(meta, ",\"v_n\":[{}]", join(&p.v_n));
            if let Some(d) = p.d_n {
                let _ = write!(meta, ",\"d_n\":{d}");
            }
            if let Some(g) = p.g_lambda {
                let _ = write!(meta, ",\"g_lambda\":{g:.16e}");
            }
            if !p.divisor.is_empty() {
                let _ = write!(meta, ",\"divisor\":[{}]", join(&p.divisor));
            }
            if let Some(l2) = p.l2 {
                let _ = write!(meta, ",\"l2\":{l2:.16e}");
            }
            meta.push('}');
        }
        meta.push_str("]}");

        let critical = self.mode == Mode::Critical;
        let mut out = format!("# {meta}\n");
        out.push_str("n,z_re,z_im,abs_err,abs_rhs,ratio");
        if critical {
            out.push_str(",d_n,g_lambda,divisor");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.n, r.z.re, r.z.im, r.err, r.rhs, r.ratio
            );
            if critical {
                let p = self.per_n.iter().find(|p| p.n == r.n).unwrap();
                let _ = write!(
                    out,
                    ",{},{:.16e},{}",
                    p.d_n.unwrap_or(0),
                    p.g_lambda.unwrap_or(f64::NAN),
                    p.divisor
                        .iter()
                        .map(|x| format!("{x:.16e}"))
                        .collect::<Vec<_>>()
                        .join(";")
                );
            }
            out.push('\n');
        }
        out
    }
}

/// Runner knobs the CLI exposes.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub quad_order: usize,
    pub circle_nodes: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            quad_order: DEFAULT_BAND_ORDER,
            circle_nodes: 512,
        }
    }
}

/// Run a scenario: approximants and ratio rows for every `n`, grid points
/// evaluated in a parallel map per degree.
pub fn run_scenario(sc: &Scenario, opts: RunOptions) -> Result<RatioReport> {
    let sys = IntervalSystem::new(&sc.endpoints)?;
    let mf = sc.markov(&sys)?;
    let bases = Bases::new(mf)?;
    let cond = if sc.mode == Mode::Critical {
        Some(CondenserBases::new(&sys)?)
    } else {
        None
    };

    let mut rows = Vec::new();
    let mut per_n = Vec::new();
    for &n in &sc.n_list {
        let (r, eval): (RationalApproximant, Box<dyn Fn(Complex64) -> Result<Complex64> + Sync>) =
            match sc.mode {
                Mode::Pade => {
                    let scheme = InterpolationScheme::new(&sys, n, sc.scheme_points.clone())?;
                    let r = pade(&bases.mf, &scheme, opts.quad_order)?;
                    let ev = Thm3Eval::new(&bases, &scheme)?;
                    per_n.push(NReport {
                        n,
                        v_n: ev.v_n.clone(),
                        d_n: None,
                        g_lambda: None,
                        divisor: Vec::new(),
                        l2: None,
                    });
                    (r, Box::new(move |z| ev.eval(z)))
                }
                Mode::Critical => {
                    let r = critical_point(&bases.mf, n, None, 1e-11, 400, opts.quad_order)?;
                    let cond = cond.as_ref().unwrap();
                    let ev = Thm4Eval::new(&bases, cond, &r)?;
                    let l2 = l2_error(&bases.mf, &r, opts.circle_nodes, opts.quad_order)?;
                    per_n.push(NReport {
                        n,
                        v_n: ev.dd.v_n.clone(),
                        d_n: Some(ev.dd.d_n),
                        g_lambda: Some(ev.d.g_lambda),
                        divisor: ev.dd.projections.clone(),
                        l2: Some(l2),
                    });
                    (r, Box::new(move |z| ev.eval(z)))
                }
            };
        let results = par_map(&sc.grid, |&z| -> Result<Row> {
            let err = approx::pade_error(&bases.mf, &r, z, crate::geometry::Side::None, opts.quad_order)?;
            let rhs = eval(z)?;
            Ok(Row {
                n,
                z,
                err: err.norm(),
                rhs: rhs.norm(),
                ratio: err.norm() / rhs.norm(),
            })
        });
        for res in results {
            rows.push(res?);
        }
    }
    Ok(RatioReport {
        scenario: sc.name.clone(),
        mode: sc.mode,
        quad_order: opts.quad_order,
        rows,
        per_n,
        rho: cond.as_ref().map(|c| c.rho),
        tol: sc.ratio_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG_A_PADE: &str = "\
version = 1
endpoints = -0.7 -0.3 0.2 0.6
mu = 1
m_zeros = 0.0
mode = pade
scheme = inf
n_list = 3 6
grid = 2i 1.5
ratio_tol = 0.5
";

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1.5").unwrap(), Complex64::new(1.5, 0.0));
        assert_eq!(parse_complex("-2").unwrap(), Complex64::new(-2.0, 0.0));
        assert_eq!(parse_complex("2i").unwrap(), Complex64::new(0.0, 2.0));
        assert_eq!(parse_complex("0.9i").unwrap(), Complex64::new(0.0, 0.9));
        assert_eq!(
            parse_complex("0.05+0.9i").unwrap(),
            Complex64::new(0.05, 0.9)
        );
        assert_eq!(parse_complex("1-2i").unwrap(), Complex64::new(1.0, -2.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("1e-2i").unwrap(), Complex64::new(0.0, 1e-2));
        assert!(parse_complex("bogus").is_err());
    }

    #[test]
    fn scenario_round_trip() {
        let sc = Scenario::parse("cfg-a-pade", CFG_A_PADE).unwrap();
        assert_eq!(sc.mode, Mode::Pade);
        assert_eq!(sc.n_list, vec![3, 6]);
        assert_eq!(sc.grid.len(), 2);
        assert!(sc.scheme_points.is_empty());
    }

    #[test]
    fn scenario_validation_reports_fields() {
        let bad = "version = 1\nmode = pade\nn_list = 2\ngrid = 0.0\nendpoints = -0.7 -0.3 0.2 0.6\nm_zeros = 0.0\n";
        let err = Scenario::parse("bad", bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("hull") || msg.contains("0"), "got {msg}");
        let no_version = "mode = pade\nn_list = 2\ngrid = 2i\nendpoints = -1 1\nm_zeros = none\n";
        assert!(Scenario::parse("nv", no_version).is_err());
    }

    #[test]
    fn pade_run_is_deterministic_and_converging() {
        let sc = Scenario::parse("cfg-a-pade", CFG_A_PADE).unwrap();
        let a = run_scenario(&sc, RunOptions::default()).unwrap().to_csv();
        let b = run_scenario(&sc, RunOptions::default()).unwrap().to_csv();
        assert_eq!(a, b, "repeated runs must be byte-identical");
        let report = run_scenario(&sc, RunOptions::default()).unwrap();
        assert!(
            report.tolerances_met(&sc.n_list),
            "worst |ratio-1|: n=3 {:.3}, n=6 {:.3}",
            report.worst_at(3),
            report.worst_at(6)
        );
    }
}
