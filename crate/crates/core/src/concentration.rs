//! Concentration bounds derived from isoperimetric profiles, and a Monte
//! Carlo enlargement experiment for half-spaces.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delta::{ModulusSpec, NormSpec};
use crate::error::{Error, Result};
use crate::numeric::{integrate_pieces, Tolerance};
use crate::transport::{stream_count, stream_rng, RadialDensity, RadialProfile, RadialSampler, Sampler, CHUNK};

const LN2: f64 = std::f64::consts::LN_2;
const TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-12,
    max_intervals: 4000,
};

/// A rate function `γ` on `[log 2, ∞)` for profiles of the form
/// `ã γ(log 1/ã)`. Below `log 2` it is read as `γ(log 1/(1 - e^{-y}))`.
///
/// That reading omits the factor `e^y - 1` which the differential
/// inequality picks up when `1 - μ(B) > 1/2`, so [`bound_from_profile`] is only
/// guaranteed for `a <= 1/2` (see the two-sided exponential test).
#[derive(Clone)]
pub enum GammaProfile {
    Constant(f64),
    /// `c0 y^{1 - 1/p}`
    Power {
        c0: f64,
        p: f64,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for GammaProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaProfile::Constant(c) => write!(f, "Constant({c})"),
            GammaProfile::Power { c0, p } => write!(f, "Power {{ c0: {c0}, p: {p} }}"),
            GammaProfile::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl GammaProfile {
    fn raw(&self, y: f64) -> f64 {
        match self {
            GammaProfile::Constant(c) => *c,
            GammaProfile::Power { c0, p } => c0 * y.powf(1.0 - 1.0 / p),
            GammaProfile::Custom(g) => g(y),
        }
    }

    /// `γ(y)`, with the convention branch for `y < log 2`.
    pub fn eval(&self, y: f64) -> f64 {
        if y >= LN2 {
            self.raw(y)
        } else {
            self.raw(-(-(-y).exp()).ln_1p())
        }
    }
}

/// `h_a(x) = ∫_{log 1/a}^x dy / γ(y)`.
pub fn h_value(g: &GammaProfile, a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::invalid(format!("a must be in (0, 1), got {a}")));
    }
    let lo = -a.ln();
    if x < lo - 1e-15 * lo {
        return Err(Error::invalid(format!("x = {x} is below log 1/a = {lo}")));
    }
    if x <= lo {
        return Ok(0.0);
    }
    let mut breaks = vec![lo];
    if lo < LN2 && x > LN2 {
        breaks.push(LN2);
    }
    breaks.push(x);
    let r = integrate_pieces(|y| 1.0 / g.eval(y), &breaks, TOL)?;
    if !r.value.is_finite() {
        return Err(Error::NonIntegrable(format!("1/γ is not integrable up to {x}")));
    }
    Ok(r.value)
}

/// `h_a⁻¹(ε)`: bracket by doubling, then Newton steps (`h' = 1/γ`)
/// safeguarded by bisection.
pub fn h_inverse(g: &GammaProfile, a: f64, eps: f64) -> Result<f64> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("ε must be nonnegative, got {eps}")));
    }
    let lo0 = -a.ln();
    if eps == 0.0 {
        return Ok(lo0);
    }
    let mut lo = lo0;
    let mut hi = lo0 + eps * g.eval(lo0).max(1e-300);
    let mut width = hi - lo;
    while h_value(g, a, hi)? < eps {
        lo = hi;
        width *= 2.0;
        hi += width;
        if !hi.is_finite() || hi > 1e300 {
            return Err(Error::RootFinding(format!("h_a never reaches {eps}")));
        }
    }
    let mut x = hi;
    for _ in 0..200 {
        let r = h_value(g, a, x)? - eps;
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - r * g.eval(x);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-14 * x.abs() || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// `exp(-h_a⁻¹(ε))`: bound on `1 - μ(B_ε)` when `1 - μ(B) = a`.
pub fn bound_from_profile(g: &GammaProfile, a: f64, eps: f64) -> Result<f64> {
    Ok((-h_inverse(g, a, eps)?).exp())
}

/// `exp(-[(log 1/a)^{1/p} + c0 ε / p]^p)` for `a <= 1/2`.
pub fn bound_power_profile(c0: f64, p: f64, a: f64, eps: f64) -> Result<f64> {
    if !(a > 0.0 && a <= 0.5) {
        return Err(Error::invalid(format!("need 0 < a <= 1/2, got {a}")));
    }
    if !(p >= 2.0 && c0 > 0.0 && eps >= 0.0) {
        return Err(Error::invalid(format!(
            "need p >= 2, c0 > 0, ε >= 0 (p={p}, c0={c0}, ε={eps})"
        )));
    }
    let base = (-a.ln()).powf(1.0 / p) + c0 * eps / p;
    Ok((-base.powf(p)).exp())
}

fn check_lam(lam_b: f64) -> Result<()> {
    if !(lam_b > 0.0 && lam_b < 1.0) {
        return Err(Error::invalid(format!("λ(B) must be in (0, 1), got {lam_b}")));
    }
    Ok(())
}

/// `exp(-2nδ(ε)) / λ(B)`; may exceed 1.
pub fn bound_gromov_milman(delta: &ModulusSpec, n: usize, lam_b: f64, eps: f64) -> Result<f64> {
    check_lam(lam_b)?;
    Ok((-2.0 * n as f64 * delta.eval(eps)).exp() / lam_b)
}

/// Smallest `ε` at which the bound above drops below `1 - λ(B)`.
pub fn gromov_milman_threshold(delta: &ModulusSpec, n: usize, lam_b: f64) -> Result<f64> {
    check_lam(lam_b)?;
    Ok(delta.inverse((1.0 / (lam_b * (1.0 - lam_b))).ln() / (2.0 * n as f64)))
}

/// Largest `ε` for which [`bound_gm_improved`] applies:
/// `(e-1)/(e C') δ⁻¹(e log(1/a) / 2n)` with `a = 1 - λ(B)`.
pub fn gm_improved_range(delta: &ModulusSpec, n: usize, c_prime: f64, lam_b: f64) -> Result<f64> {
    check_lam(lam_b)?;
    let e = std::f64::consts::E;
    let a = 1.0 - lam_b;
    Ok((e - 1.0) / (e * c_prime) * delta.inverse(e * (1.0 / a).ln() / (2.0 * n as f64)))
}

/// `(1 - λ(B)) exp(-2nδ(C' ε))` on its validity range, `OutOfRange` beyond.
/// `delta` should be convex; pass it through
/// [`ModulusSpec::convex_minorant`] first if it is not.
pub fn bound_gm_improved(delta: &ModulusSpec, n: usize, c_prime: f64, lam_b: f64, eps: f64) -> Result<f64> {
    if !(c_prime > 0.0 && c_prime.is_finite()) {
        return Err(Error::invalid(format!("C' must be positive, got {c_prime}")));
    }
    let range = gm_improved_range(delta, n, c_prime, lam_b)?;
    if eps > range {
        return Err(Error::OutOfRange(format!(
            "ε = {eps} exceeds the validity limit {range}"
        )));
    }
    Ok((1.0 - lam_b) * (-2.0 * n as f64 * delta.eval(c_prime * eps)).exp())
}

/// Uniform measure on the unit ball of `norm`, half-space
/// `B = {x·θ <= t}` and its enlargements `B_ε = {x·θ < t + ε‖θ‖_*}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnlargementExperiment {
    pub norm: NormSpec,
    pub n: usize,
    pub theta: Vec<f64>,
    pub t: f64,
    pub eps: Vec<f64>,
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnlargementPoint {
    pub eps: f64,
    /// Fraction of samples outside `B_ε`.
    pub empirical: f64,
    pub sigma: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnlargementCurve {
    pub base_mass: f64,
    pub base_sigma: f64,
    pub dual_norm: f64,
    pub count: usize,
    pub seed: u64,
    pub streams: usize,
    pub points: Vec<EnlargementPoint>,
}

/// Estimates `1 - λ(B_ε)` from one shared batch of samples, so the curve is
/// exactly non-increasing in `ε`. Intervals are 95% normal intervals.
pub fn mc_enlargement(exp: &EnlargementExperiment) -> Result<EnlargementCurve> {
    let n = exp.norm.dim();
    if exp.n != n {
        return Err(Error::SamplerMismatch(format!(
            "experiment asks for R^{} but the norm lives on R^{n}",
            exp.n
        )));
    }
    if exp.theta.len() != n {
        return Err(Error::SamplerMismatch(format!(
            "direction has {} coordinates, the norm lives on R^{n}",
            exp.theta.len()
        )));
    }
    if exp.count == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    if exp.eps.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::invalid("enlargement radii must be nonnegative"));
    }
    let dual = exp.norm.dual(&exp.theta);
    if !(dual > 0.0) {
        return Err(Error::invalid("direction must be non-zero"));
    }
    let ball = RadialDensity::new(exp.norm.clone(), RadialProfile::Indicator)?;
    let sampler = RadialSampler::new(&ball)?;
    let streams = stream_count(exp.count);
    let mut proj: Vec<f64> = (0..streams)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = stream_rng(exp.seed, k as u64);
            let rows = CHUNK.min(exp.count - k * CHUNK);
            let mut x = vec![0.0; n];
            (0..rows)
                .map(|_| {
                    sampler.sample(&mut rng, &mut x);
                    x.iter().zip(&exp.theta).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    proj.sort_by(f64::total_cmp);
    let total = exp.count as f64;
    // fraction of projections >= level
    let above = |level: f64| (exp.count - proj.partition_point(|&v| v < level)) as f64 / total;
    let point = |eps: f64| {
        let p = above(exp.t + eps * dual);
        let sigma = (p * (1.0 - p) / total).sqrt();
        EnlargementPoint {
            eps,
            empirical: p,
            sigma,
            ci_lo: (p - 1.96 * sigma).max(0.0),
            ci_hi: (p + 1.96 * sigma).min(1.0),
        }
    };
    let base = 1.0 - above(exp.t);
    Ok(EnlargementCurve {
        base_mass: base,
        base_sigma: (base * (1.0 - base) / total).sqrt(),
        dual_norm: dual,
        count: exp.count,
        seed: exp.seed,
        streams,
        points: exp.eps.iter().map(|&e| point(e)).collect(),
    })
}

/// Bounds attached to an empirical enlargement curve.
#[derive(Debug, Clone)]
pub struct EnlargementBounds {
    /// `λ(B)`; the exact value when known, else the estimate.
    pub lam_b: f64,
    pub n: usize,
    pub delta: ModulusSpec,
    pub c_prime: f64,
    /// `(c0, p)` of a power profile `ã c0 log^{1-1/p}(1/ã)`.
    pub power_profile: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnlargementRow {
    pub eps: f64,
    pub empirical: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub gm: f64,
    pub gm_improved: Option<f64>,
    pub power_profile: Option<f64>,
    pub from_profile: Option<f64>,
}

pub fn enlargement_rows(curve: &EnlargementCurve, b: &EnlargementBounds) -> Result<Vec<EnlargementRow>> {
    let a = 1.0 - b.lam_b;
    let top = curve.points.iter().map(|p| p.eps).fold(1.0, f64::max) * b.c_prime.max(1.0) * 4.0;
    let mut grid = crate::profile::log_grid(1e-4 * top, top, 400);
    grid.extend(b.delta.kinks());
    let convex = b.delta.convex_minorant(&grid)?;
    curve
        .points
        .iter()
        .map(|pt| {
            let gm_improved = match bound_gm_improved(&convex, b.n, b.c_prime, b.lam_b, pt.eps) {
                Ok(v) => Some(v),
                Err(Error::OutOfRange(_)) => None,
                Err(e) => return Err(e),
            };
            let (power_profile, from_profile) = match b.power_profile {
                Some((c0, p)) => {
                    let g = GammaProfile::Power { c0, p };
                    let cor = if a <= 0.5 {
                        Some(bound_power_profile(c0, p, a, pt.eps)?)
                    } else {
                        None
                    };
                    (cor, Some(bound_from_profile(&g, a, pt.eps)?))
                }
                None => (None, None),
            };
            Ok(EnlargementRow {
                eps: pt.eps,
                empirical: pt.empirical,
                ci_lo: pt.ci_lo,
                ci_hi: pt.ci_hi,
                gm: bound_gromov_milman(&b.delta, b.n, b.lam_b, pt.eps)?,
                gm_improved,
                power_profile,
                from_profile,
            })
        })
        .collect()
}

/// CSV with header `eps,empirical,ci_lo,ci_hi,gm,gm_improved,power_profile,from_profile`;
/// bounds that do not apply are left empty.
pub fn enlargement_csv(rows: &[EnlargementRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    let mut out = String::from("eps,empirical,ci_lo,ci_hi,gm,gm_improved,power_profile,from_profile\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{},{},{}\n",
            r.eps,
            r.empirical,
            r.ci_lo,
            r.ci_hi,
            r.gm,
            opt(r.gm_improved),
            opt(r.power_profile),
            opt(r.from_profile)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_gamma() {
        let g = GammaProfile::Constant(2.0);
        let a: f64 = 0.2;
        assert!((h_value(&g, a, 5.0).unwrap() - (5.0 + a.ln()) / 2.0).abs() < 1e-13);
        assert!((bound_from_profile(&g, a, 0.7).unwrap() - a * (-1.4f64).exp()).abs() < 1e-13);
        assert_eq!(bound_from_profile(&g, a, 0.0).unwrap(), a);
    }

    #[test]
    fn convention_branch_below_log2() {
        let g = GammaProfile::Power { c0: 1.0, p: 2.0 };
        let y = 0.3_f64;
        let mapped = -(1.0 - (-y).exp()).ln();
        assert!((g.eval(y) - mapped.sqrt()).abs() < 1e-14);
        // a > 1/2 puts the lower limit below log 2
        let h = h_value(&g, 0.8, 2.0).unwrap();
        let x = h_inverse(&g, 0.8, h).unwrap();
        assert!((x - 2.0).abs() < 1e-10);
    }

    #[test]
    fn power_gamma_matches_closed_form() {
        let (c0, p) = (1.3, 3.0);
        let g = GammaProfile::Power { c0, p };
        let a: f64 = 0.01;
        let l = -a.ln();
        let x = 9.0_f64;
        let exact = p / c0 * (x.powf(1.0 / p) - l.powf(1.0 / p));
        assert!(((h_value(&g, a, x).unwrap() - exact) / exact).abs() < 1e-10);
        let eps = 2.0;
        let ratio = bound_from_profile(&g, a, eps).unwrap() / bound_power_profile(c0, p, a, eps).unwrap();
        assert!((ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn power_profile_example() {
        let v = bound_power_profile(1.0, 2.0, 0.5, 2.0).unwrap();
        let expected = (-(2f64.ln().sqrt() + 1.0).powi(2)).exp();
        assert!((v - expected).abs() < 1e-15);
        assert!((expected.ln() + 3.358256).abs() < 1e-6);
        let g = GammaProfile::Power { c0: 1.0, p: 2.0 };
        assert!((bound_from_profile(&g, 0.5, 2.0).unwrap() / v - 1.0).abs() < 1e-9);
        assert!(bound_power_profile(1.0, 2.0, 0.6, 1.0).is_err());
    }

    #[test]
    fn gromov_milman_forms() {
        let d = ModulusSpec::power(0.125, 2.0).unwrap();
        let lam = 0.5;
        assert_eq!(bound_gromov_milman(&d, 16, lam, 0.0).unwrap(), 2.0);
        let eps0 = gromov_milman_threshold(&d, 16, lam).unwrap();
        let at = bound_gromov_milman(&d, 16, lam, eps0).unwrap();
        assert!((at - (1.0 - lam)).abs() < 1e-12);
        assert_eq!(bound_gm_improved(&d, 16, 1.0, lam, 0.0).unwrap(), 0.5);
        let range = gm_improved_range(&d, 16, 1.0, lam).unwrap();
        let inside = bound_gm_improved(&d, 16, 1.0, lam, range).unwrap();
        let near = bound_gm_improved(&d, 16, 1.0, lam, range * (1.0 - 1e-9)).unwrap();
        assert!((inside - near).abs() < 1e-9);
        assert!(matches!(
            bound_gm_improved(&d, 16, 1.0, lam, range * 1.01),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn enlargement_curve_is_monotone() {
        let exp = EnlargementExperiment {
            norm: NormSpec::euclidean(4).unwrap(),
            n: 4,
            theta: vec![1.0, 0.0, 0.0, 0.0],
            t: 0.0,
            eps: vec![0.0, 0.1, 0.2, 0.4],
            count: 20_000,
            seed: 3,
        };
        let c = mc_enlargement(&exp).unwrap();
        assert!((c.points[0].empirical - 0.5).abs() < 4.0 * c.points[0].sigma);
        assert!(c.points.windows(2).all(|w| w[1].empirical <= w[0].empirical));
        let bounds = EnlargementBounds {
            lam_b: 0.5,
            n: 4,
            delta: ModulusSpec::power(0.125, 2.0).unwrap(),
            c_prime: 1.0,
            power_profile: Some((0.5, 2.0)),
        };
        let rows = enlargement_rows(&c, &bounds).unwrap();
        let csv = enlargement_csv(&rows);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("eps,empirical,ci_lo,ci_hi,gm,gm_improved,power_profile,from_profile\n"));
        assert!((rows[0].power_profile.unwrap() - 0.5).abs() < 1e-15);
        let again = mc_enlargement(&exp).unwrap();
        assert_eq!(c.points[2].empirical, again.points[2].empirical);
    }

    #[test]
    fn two_sided_exponential_half_lines() {
        use crate::oned::{cheeger_bound, Density1D, Potential};
        let d = Density1D::new(Potential::laplace()).unwrap();
        // the Cheeger bound f(0) ã certifies γ ≡ f(0)
        let rate = cheeger_bound(&d, 0.25).unwrap().value / 0.25;
        assert!((rate - 0.5).abs() < 1e-12);
        let g = GammaProfile::Constant(rate);
        let exact_rate = GammaProfile::Constant(1.0);
        for &b in &[0.0, 0.7, 3.0] {
            let a = d.sf(b);
            for &eps in &[0.0, 0.1, 1.0, 4.0, 12.0] {
                let actual = d.sf(b + eps);
                assert!(actual <= bound_from_profile(&g, a, eps).unwrap() * (1.0 + 1e-10));
                let sharp = bound_from_profile(&exact_rate, a, eps).unwrap();
                assert!(actual <= sharp * (1.0 + 1e-10));
                if b >= 0.0 {
                    assert!((actual / sharp - 1.0).abs() < 1e-9, "b={b} eps={eps}");
                }
            }
        }
    }

    #[test]
    fn literal_convention_fails_above_one_half() {
        use crate::oned::{Density1D, Potential};
        let d = Density1D::new(Potential::laplace()).unwrap();
        let a = d.sf(-2.0);
        let g = GammaProfile::Constant(0.5);
        // near s = 1 the true decay rate of -log s is (1 - s)/s, far below γ
        assert!(d.sf(-2.0 + 1.0) > bound_from_profile(&g, a, 1.0).unwrap());
    }
}
