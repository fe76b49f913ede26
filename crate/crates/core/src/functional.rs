//! Capacity and log-Sobolev forms of a power-type profile bound, checked on
//! piecewise-linear test functions under a 1D density.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delta::ModulusSpec;
use crate::error::{Error, Result};
use crate::numeric::{integrate, roots, Tolerance};
use crate::oned::{verify_tail_condition, Density1D, TailBound};

/// Piecewise-linear `F: R -> [0, 1]` through `knots`, constant beyond the
/// first and last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct TestFunction1D {
    knots: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for TestFunction1D {
    type Error = Error;

    fn try_from(knots: Vec<(f64, f64)>) -> Result<Self> {
        TestFunction1D::new(knots)
    }
}

impl From<TestFunction1D> for Vec<(f64, f64)> {
    fn from(f: TestFunction1D) -> Self {
        f.knots
    }
}

impl TestFunction1D {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::invalid("a test function needs at least one knot"));
        }
        if knots.iter().any(|&(x, y)| !x.is_finite() || !(0.0..=1.0).contains(&y)) {
            return Err(Error::invalid("knots need finite x and values in [0, 1]"));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::invalid("knot abscissae must be strictly increasing"));
        }
        Ok(TestFunction1D { knots })
    }

    /// `0` up to `u`, `1` from `v` on.
    pub fn ramp(u: f64, v: f64) -> Result<Self> {
        Self::new(vec![(u, 0.0), (v, 1.0)])
    }

    /// `1` up to `u`, `0` from `v` on.
    pub fn falling_ramp(u: f64, v: f64) -> Result<Self> {
        Self::new(vec![(u, 1.0), (v, 0.0)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        let i = k.partition_point(|&(kx, _)| kx <= x);
        if i == 0 {
            return k[0].1;
        }
        if i == k.len() {
            return k[k.len() - 1].1;
        }
        let ((x0, y0), (x1, y1)) = (k[i - 1], k[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// `λ F`, for `λ` in `[0, 1]`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.knots.iter().map(|&(x, y)| (x, lambda * y)).collect())
    }

    fn segments(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        self.knots.windows(2).map(|w| (w[0], w[1]))
    }

    /// `μ{F >= s}` (or `μ{F > s}` when `strict`).
    fn level_mass(&self, d: &Density1D, s: f64, strict: bool) -> f64 {
        let above = |y: f64| if strict { y > s } else { y >= s };
        let first = self.knots[0];
        let last = self.knots[self.knots.len() - 1];
        let mut total = 0.0;
        if above(first.1) {
            total += d.cdf(first.0);
        }
        if above(last.1) {
            total += d.sf(last.0);
        }
        for ((x0, y0), (x1, y1)) in self.segments() {
            let (in0, in1) = (above(y0), above(y1));
            let interval = match (in0, in1) {
                (true, true) => Some((x0, x1)),
                (false, false) => None,
                _ => {
                    let cross = x0 + (s - y0) / (y1 - y0) * (x1 - x0);
                    if in0 {
                        Some((x0, cross))
                    } else {
                        Some((cross, x1))
                    }
                }
            };
            if let Some((a, b)) = interval {
                total += mass(d, a, b);
            }
        }
        total
    }

    /// `μ{F >= s}`
    pub fn superlevel_mass(&self, d: &Density1D, s: f64) -> f64 {
        self.level_mass(d, s, false)
    }

    /// `μ{F = 0}`
    pub fn zero_mass(&self, d: &Density1D) -> f64 {
        1.0 - self.level_mass(d, 0.0, true)
    }

    /// `μ{F = 1}`
    pub fn one_mass(&self, d: &Density1D) -> f64 {
        self.level_mass(d, 1.0, false)
    }
}

/// `μ([a, b])`, taken from whichever tail keeps the difference accurate.
fn mass(d: &Density1D, a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        (d.sf(a) - d.sf(b)).max(0.0)
    } else {
        (d.cdf(b) - d.cdf(a)).max(0.0)
    }
}

/// `∫ |F'|^q dμ`; `F'` is constant on each segment.
pub fn gradient_integral(f: &TestFunction1D, d: &Density1D, q: f64) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::invalid(format!("q must be at least 1, got {q}")));
    }
    Ok(f.segments()
        .map(|((x0, y0), (x1, y1))| ((y1 - y0) / (x1 - x0)).abs().powf(q) * mass(d, x0, x1))
        .sum())
}

fn segment_integral<G: Fn(f64) -> f64>(f: &TestFunction1D, d: &Density1D, q: f64, phi: G) -> Result<f64> {
    let first = f.knots[0];
    let last = f.knots[f.knots.len() - 1];
    let mut total = phi(first.1.powf(q)) * d.cdf(first.0) + phi(last.1.powf(q)) * d.sf(last.0);
    let tol = Tolerance::relative(1e-12);
    for ((x0, _), (x1, _)) in f.segments() {
        total += integrate(|x| phi(f.eval(x).powf(q)) * d.density(x), x0, x1, tol)?.value;
    }
    Ok(total)
}

/// `∫ F^q log(F^q / ∫ F^q dμ) dμ`.
pub fn entropy_q(f: &TestFunction1D, d: &Density1D, q: f64) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::invalid(format!("q must be at least 1, got {q}")));
    }
    let m = segment_integral(f, d, q, |v| v)?;
    if !(m > 0.0) {
        return Err(Error::invalid("F vanishes almost everywhere"));
    }
    let s = segment_integral(f, d, q, |v| if v > 0.0 { v * v.ln() } else { 0.0 })?;
    Ok((s - m * m.ln()).max(0.0))
}

/// Levels `0 = u_1 < ... < u_k = 1` with `μ{F >= u_i} = 2^{-i}`, for `F`
/// with `μ{F = 0} = 1/2` and `μ{F = 1} = 2^{-k}`.
#[derive(Debug, Clone, Serialize)]
pub struct DyadicLevels {
    pub levels: Vec<f64>,
    /// `μ{u_i < F < u_{i+1}}`
    pub band_masses: Vec<f64>,
}

pub fn dyadic_levels(f: &TestFunction1D, d: &Density1D, k: usize) -> Result<DyadicLevels> {
    if k < 2 {
        return Err(Error::invalid("need at least two levels"));
    }
    let zero = f.zero_mass(d);
    let one = f.one_mass(d);
    let target = 0.5_f64.powi(k as i32);
    if (zero - 0.5).abs() > 1e-9 || ((one - target) / target).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "need μ{{F = 0}} = 1/2 and μ{{F = 1}} = {target:e}, got {zero} and {one:e}"
        )));
    }
    let mut levels = vec![0.0];
    for i in 2..k {
        let goal = 0.5_f64.powi(i as i32);
        let u = roots::bisect_predicate(|s| f.superlevel_mass(d, s) < goal, 0.0, 1.0, 1e-15, 1e-15);
        levels.push(u);
    }
    levels.push(1.0);
    let band_masses = levels
        .windows(2)
        .map(|w| f.level_mass(d, w[0], true) - f.superlevel_mass(d, w[1]))
        .collect();
    Ok(DyadicLevels { levels, band_masses })
}

/// A power-type profile bound `c0 ã log^{1/q}(1/ã)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifiedProfile {
    pub c0: f64,
    pub q: f64,
}

/// Reads `c0 = C_δ α^{1/p}` and `q = p/(p-1)` off a tail modulus of power
/// type (possibly truncated), whose tail bound is
/// `C_δ ã γ(log 1/ã)` with `γ(y) >= α^{1/p} y^{1 - 1/p}`.
pub fn certified_c0(tail: &ModulusSpec) -> Result<CertifiedProfile> {
    let (alpha, p) = match tail {
        ModulusSpec::Power { alpha, p } => (*alpha, *p),
        ModulusSpec::Truncated { base, .. } => match base.as_ref() {
            ModulusSpec::Power { alpha, p } => (*alpha, *p),
            _ => return Err(Error::invalid("certified c0 needs a power-type tail modulus")),
        },
        _ => return Err(Error::invalid("certified c0 needs a power-type tail modulus")),
    };
    let c_delta = TailBound::new(tail)?.c_delta();
    Ok(CertifiedProfile {
        c0: c_delta * alpha.powf(1.0 / p),
        q: p / (p - 1.0),
    })
}

/// Checks the tail condition of `d` on `grid` before handing out `c0`.
pub fn certify_density(d: &Density1D, tail: &ModulusSpec, grid: &[f64]) -> Result<CertifiedProfile> {
    let report = verify_tail_condition(d, tail, grid);
    if !report.holds {
        return Err(Error::Precondition(format!(
            "tail condition fails at x = {} (margin {:e})",
            report.worst_at.0, report.worst_margin
        )));
    }
    certified_c0(tail)
}

#[derive(Debug, Clone, Serialize)]
pub struct MemberRow {
    pub index: usize,
    /// `μ{F = 1}`
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityReport {
    pub c0: f64,
    pub q: f64,
    pub rows: Vec<MemberRow>,
    /// Members with `μ{F = 0} < 1/2`.
    pub skipped: Vec<usize>,
    pub holds: bool,
    pub min_ratio: f64,
}

fn admissible(f: &TestFunction1D, d: &Density1D) -> Option<f64> {
    let t = f.one_mass(d);
    (f.zero_mass(d) >= 0.5 - 1e-12 && t > 0.0).then_some(t)
}

fn min_ratio(rows: &[MemberRow]) -> f64 {
    rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min)
}

/// `∫ |F'| dμ >= c0 t log^{1/q}(1/t)` with `t = μ{F = 1}`, for every member
/// with `μ{F = 0} >= 1/2`.
pub fn check_capacity(d: &Density1D, cert: CertifiedProfile, family: &[TestFunction1D]) -> Result<CapacityReport> {
    let results: Vec<Result<Option<MemberRow>>> = family
        .par_iter()
        .enumerate()
        .map(|(index, f)| {
            let Some(t) = admissible(f, d) else { return Ok(None) };
            let lhs = gradient_integral(f, d, 1.0)?;
            let rhs = cert.c0 * t * (-t.ln()).max(0.0).powf(1.0 / cert.q);
            Ok(Some(MemberRow {
                index,
                t,
                lhs,
                rhs,
                ratio: lhs / rhs,
            }))
        })
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r? {
            Some(row) => rows.push(row),
            None => skipped.push(i),
        }
    }
    let holds = rows.iter().all(|r| r.lhs >= r.rhs * (1.0 - 1e-10));
    Ok(CapacityReport {
        c0: cert.c0,
        q: cert.q,
        min_ratio: min_ratio(&rows),
        rows,
        skipped,
        holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalConstants {
    pub c0: f64,
    pub q: f64,
    /// Rows for `∫ |F'|^q dμ / (c0^q t log 1/t)`.
    pub capacity: Vec<MemberRow>,
    /// Rows for `∫ |F'|^q dμ / (c0^q Ent_q(F))`; `t` is `μ{F = 1}`.
    pub log_sobolev: Vec<MemberRow>,
    pub capacity_constant: f64,
    pub log_sobolev_constant: f64,
    pub skipped: Vec<usize>,
}

/// Smallest ratios over the family; these are empirical values for the
/// universal constants of the `q`-capacity and `q`-log-Sobolev forms.
pub fn empirical_functional_constants(
    d: &Density1D,
    cert: CertifiedProfile,
    family: &[TestFunction1D],
) -> Result<FunctionalConstants> {
    let c0q = cert.c0.powf(cert.q);
    let results: Vec<Result<(Option<MemberRow>, MemberRow)>> = family
        .par_iter()
        .enumerate()
        .map(|(index, f)| {
            let lhs = gradient_integral(f, d, cert.q)?;
            let t = f.one_mass(d);
            let ent = entropy_q(f, d, cert.q)?;
            let ls = MemberRow {
                index,
                t,
                lhs,
                rhs: c0q * ent,
                ratio: lhs / (c0q * ent),
            };
            let cap = admissible(f, d).map(|t| {
                let rhs = c0q * t * (-t.ln());
                MemberRow {
                    index,
                    t,
                    lhs,
                    rhs,
                    ratio: lhs / rhs,
                }
            });
            Ok((cap, ls))
        })
        .collect();
    let mut capacity = Vec::new();
    let mut log_sobolev = Vec::new();
    let mut skipped = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let (cap, ls) = r?;
        match cap {
            Some(row) => capacity.push(row),
            None => skipped.push(i),
        }
        log_sobolev.push(ls);
    }
    Ok(FunctionalConstants {
        c0: cert.c0,
        q: cert.q,
        capacity_constant: min_ratio(&capacity),
        log_sobolev_constant: min_ratio(&log_sobolev),
        capacity,
        log_sobolev,
        skipped,
    })
}

/// 50 admissible test functions: for 25 values of `t = μ{F = 1}` on a log
/// grid in `[1e-4, 0.45]`, a rising ramp starting at or right of the median
/// and a falling ramp ending at or left of it. Ramp widths cycle through
/// three fractions of the distance to the median.
pub fn ramp_family(d: &Density1D) -> Result<Vec<TestFunction1D>> {
    let median = d.quantile(0.5)?;
    let mut out = Vec::with_capacity(50);
    for (i, t) in crate::profile::log_grid(1e-4, 0.45, 25).into_iter().enumerate() {
        let frac = [0.0, 0.5, 0.9][i % 3];
        let right = d.quantile_upper(t)?;
        let left = d.quantile(t)?;
        out.push(TestFunction1D::ramp(median + frac * (right - median), right)?);
        out.push(TestFunction1D::falling_ramp(left, median - frac * (median - left))?);
    }
    Ok(out)
}
