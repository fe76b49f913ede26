//! Normalized one-dimensional log-concave densities `f = exp(-g)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{integrate, roots, Tolerance};

/// Default cut level for the tail envelope, relative to a lower bound on the
/// normalizing constant.
pub const DEFAULT_TAIL_TOL: f64 = 1e-14;

const PANELS_PER_SIDE: usize = 64;
const PANEL_TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-14,
    max_intervals: 2000,
};

/// A convex potential. The density built from it is proportional to
/// `exp(-g)`; additive constants are irrelevant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    /// `kappa * x^2`.
    Quadratic { kappa: f64 },
    /// `alpha * |x|^p`, `p >= 1`.
    Power { alpha: f64, p: f64 },
    /// `kappa * x^2` on `[-radius, radius]`, `+∞` outside.
    TruncatedQuadratic { kappa: f64, radius: f64 },
    /// Linear interpolation of `(x, g(x))` knots, continued with the end
    /// slopes.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl Potential {
    pub fn gaussian() -> Self {
        Potential::Quadratic { kappa: 0.5 }
    }

    /// `|x|`, the two-sided exponential.
    pub fn laplace() -> Self {
        Potential::PiecewiseLinear {
            knots: vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)],
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be positive and finite, got {v}")))
            }
        };
        match self {
            Potential::Quadratic { kappa } => positive(*kappa, "kappa"),
            Potential::Power { alpha, p } => {
                positive(*alpha, "alpha")?;
                if !(*p >= 1.0 && p.is_finite()) {
                    return Err(Error::invalid(format!("power potential needs p >= 1, got {p}")));
                }
                Ok(())
            }
            Potential::TruncatedQuadratic { kappa, radius } => {
                if !(*kappa >= 0.0 && kappa.is_finite()) {
                    return Err(Error::invalid(format!("kappa must be nonnegative, got {kappa}")));
                }
                positive(*radius, "radius")
            }
            Potential::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return Err(Error::invalid("piecewise linear potential needs at least two knots"));
                }
                if knots.iter().any(|(x, g)| !(x.is_finite() && g.is_finite())) {
                    return Err(Error::invalid("piecewise linear knots must be finite"));
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::invalid("piecewise linear knots must have increasing x"));
                }
                let slopes = pl_slopes(knots);
                if slopes
                    .windows(2)
                    .any(|w| w[1] < w[0] - 1e-12 * (w[0].abs() + w[1].abs()))
                {
                    return Err(Error::invalid("piecewise linear potential is not convex"));
                }
                Ok(())
            }
        }
    }
}

fn pl_slopes(knots: &[(f64, f64)]) -> Vec<f64> {
    knots
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect()
}

/// Potential shifted so that its minimum is attained at 0 with value 0.
#[derive(Debug, Clone)]
enum Shifted {
    Quadratic(f64),
    Power(f64, f64),
    Truncated(f64, f64),
    Linear { knots: Vec<(f64, f64)>, slopes: Vec<f64> },
}

impl Shifted {
    fn new(p: &Potential) -> (Shifted, f64) {
        match p {
            Potential::Quadratic { kappa } => (Shifted::Quadratic(*kappa), 0.0),
            Potential::Power { alpha, p } => (Shifted::Power(*alpha, *p), 0.0),
            Potential::TruncatedQuadratic { kappa, radius } => (Shifted::Truncated(*kappa, *radius), 0.0),
            Potential::PiecewiseLinear { knots } => {
                let (x_min, g_min) = knots
                    .iter()
                    .copied()
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("validated non-empty");
                let shifted: Vec<(f64, f64)> = knots.iter().map(|&(x, g)| (x - x_min, g - g_min)).collect();
                let slopes = pl_slopes(&shifted);
                (Shifted::Linear { knots: shifted, slopes }, x_min)
            }
        }
    }

    fn eval(&self, x: f64) -> f64 {
        match self {
            Shifted::Quadratic(k) => k * x * x,
            Shifted::Power(a, p) => a * x.abs().powf(*p),
            Shifted::Truncated(k, r) => {
                if x.abs() <= *r {
                    k * x * x
                } else {
                    f64::INFINITY
                }
            }
            Shifted::Linear { knots, slopes } => {
                let idx = knots.partition_point(|&(kx, _)| kx <= x);
                if idx == 0 {
                    knots[0].1 + slopes[0] * (x - knots[0].0)
                } else {
                    let seg = (idx - 1).min(slopes.len() - 1);
                    knots[seg].1 + slopes[seg] * (x - knots[seg].0)
                }
            }
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match self {
            Shifted::Truncated(_, r) => vec![-r, *r],
            Shifted::Linear { knots, .. } => knots.iter().map(|k| k.0).collect(),
            _ => Vec::new(),
        }
    }

    /// End of the support on the given side, if bounded.
    fn support_end(&self, side: f64) -> Option<f64> {
        match self {
            Shifted::Truncated(_, r) => Some(side * r),
            _ => None,
        }
    }
}

/// A log-concave probability density, normalized on construction.
#[derive(Debug, Clone)]
pub struct Density1D {
    potential: Potential,
    g: Shifted,
    /// Location of the minimum of the original potential.
    offset: f64,
    ln_z: f64,
    nodes: Vec<f64>,
    /// Mass left of each node (normalized).
    left: Vec<f64>,
    /// Mass right of each node (normalized).
    right: Vec<f64>,
    tail_tol: f64,
}

impl Density1D {
    pub fn new(potential: Potential) -> Result<Self> {
        Self::with_tail_tol(potential, DEFAULT_TAIL_TOL)
    }

    /// Normalizes `exp(-g)`. Infinite tails are cut where the convexity
    /// envelope `x/(g(x)-g(0)) exp(-g(x))` of the remaining mass falls below
    /// `tail_tol` times a lower bound on the total mass; the cut-off mass is
    /// then integrated separately so tail probabilities keep relative
    /// accuracy.
    pub fn with_tail_tol(potential: Potential, tail_tol: f64) -> Result<Self> {
        potential.validate()?;
        if !(tail_tol > 0.0 && tail_tol < 1e-3) {
            return Err(Error::invalid(format!(
                "tail tolerance must be in (0, 1e-3), got {tail_tol}"
            )));
        }
        let (g, offset) = Shifted::new(&potential);
        let mut d = Density1D {
            potential,
            g,
            offset,
            ln_z: 0.0,
            nodes: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            tail_tol,
        };
        d.build()?;
        Ok(d)
    }

    fn build(&mut self) -> Result<()> {
        let w_plus = self.level_point(1.0, 1.0)?;
        let w_minus = self.level_point(-1.0, 1.0)?;
        let z_lower = (w_plus + w_minus.abs()) / std::f64::consts::E;
        let hi = self.tail_cut(1.0, w_plus, z_lower)?;
        let lo = self.tail_cut(-1.0, w_minus, z_lower)?;

        let mut nodes: Vec<f64> = (0..=PANELS_PER_SIDE)
            .map(|i| lo * (1.0 - i as f64 / PANELS_PER_SIDE as f64))
            .chain((1..=PANELS_PER_SIDE).map(|i| hi * i as f64 / PANELS_PER_SIDE as f64))
            .collect();
        nodes.extend(self.g.kinks().into_iter().filter(|&k| k > lo && k < hi));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();

        // ln_z = 0 while building, so these are unnormalized masses.
        let panels: Vec<f64> = nodes
            .windows(2)
            .map(|w| integrate(|x| self.density(x), w[0], w[1], PANEL_TOL).map(|r| r.value))
            .collect::<Result<_>>()?;
        let left_outer = self.outer_mass(lo, -1.0)?;
        let right_outer = self.outer_mass(hi, 1.0)?;

        let mut left = Vec::with_capacity(nodes.len());
        let mut acc = left_outer;
        left.push(acc);
        for p in &panels {
            acc += p;
            left.push(acc);
        }
        let mut right = vec![0.0; nodes.len()];
        let mut acc = right_outer;
        *right.last_mut().expect("nodes non-empty") = acc;
        for (i, p) in panels.iter().enumerate().rev() {
            acc += p;
            right[i] = acc;
        }
        let z = left[left.len() - 1] + right_outer;
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::NonIntegrable(format!("normalizing constant evaluated to {z}")));
        }
        left.iter_mut().for_each(|v| *v /= z);
        right.iter_mut().for_each(|v| *v /= z);
        self.ln_z = z.ln();
        self.nodes = nodes;
        self.left = left;
        self.right = right;
        Ok(())
    }

    /// Point on the `side` half-line where the shifted potential reaches
    /// `level` (or the support end if it never does).
    fn level_point(&self, side: f64, level: f64) -> Result<f64> {
        if let Some(end) = self.g.support_end(side) {
            if self.g.eval(end) < level {
                return Ok(end);
            }
            let x = roots::bisect_predicate(|t| self.g.eval(side * t) >= level, 0.0, end.abs(), 0.0, 1e-15);
            return Ok(side * x);
        }
        let (lo, hi) = roots::expand_upper(|t| self.g.eval(side * t) >= level, 1.0, 1e15).map_err(|_| {
            Error::NonIntegrable(format!(
                "potential stays below {level} on the {} half-line",
                if side > 0.0 { "right" } else { "left" }
            ))
        })?;
        Ok(side * roots::bisect_predicate(|t| self.g.eval(side * t) >= level, lo, hi, 0.0, 1e-15))
    }

    fn envelope(&self, x: f64) -> f64 {
        let gx = self.g.eval(x);
        x.abs() / gx * (-gx).exp()
    }

    fn tail_cut(&self, side: f64, w: f64, z_lower: f64) -> Result<f64> {
        if let Some(end) = self.g.support_end(side) {
            return Ok(end);
        }
        let target = self.tail_tol * z_lower;
        let small = |t: f64| self.envelope(side * t) < target;
        let (lo, hi) = roots::expand_upper(small, w.abs(), 1e15).map_err(|_| {
            Error::NonIntegrable(format!(
                "tail envelope does not fall below {target:e} on the {} side",
                if side > 0.0 { "right" } else { "left" }
            ))
        })?;
        Ok(side * roots::bisect_predicate(small, lo.max(w.abs()), hi, 0.0, 1e-3))
    }

    /// Mass beyond `x` in direction `side`, integrated until the envelope
    /// bound on the remainder is negligible relative to what was collected.
    fn outer_mass(&self, x: f64, side: f64) -> Result<f64> {
        if self.g.support_end(side).is_some_and(|end| side * x >= side * end) {
            return Ok(0.0);
        }
        let mut total = 0.0;
        let mut a = x;
        let mut width = x.abs().max(1.0) * 0.25;
        for _ in 0..200 {
            let b = a + side * width;
            let r = integrate(|t| self.density(t), a.min(b), a.max(b), PANEL_TOL)?;
            total += r.value;
            let rest = self.envelope(b) * (-self.ln_z).exp();
            if rest <= 1e-17 * total || rest == 0.0 || (total == 0.0 && rest < f64::MIN_POSITIVE) {
                return Ok(total);
            }
            a = b;
            width *= 2.0;
        }
        Err(Error::NonIntegrable(format!("tail beyond {x} did not converge")))
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// Shifted potential `g(x) - g(0)` in centred coordinates (minimum at 0).
    pub fn g(&self, x: f64) -> f64 {
        self.g.eval(x)
    }

    /// Where the original potential attains its minimum; densities are
    /// reported in coordinates centred there.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn ln_z(&self) -> f64 {
        self.ln_z
    }

    /// Normalizing constant of `exp(-(g - min g))`.
    pub fn z(&self) -> f64 {
        self.ln_z.exp()
    }

    pub fn log_density(&self, x: f64) -> f64 {
        -self.g.eval(x) - self.ln_z
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// `f(0) = exp(-g(0))`, the maximum of the density.
    pub fn max_density(&self) -> f64 {
        (-self.ln_z).exp()
    }

    /// `[lo, hi]` covered by the cached panels.
    pub fn core_range(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    /// Kinks and support ends of the potential.
    pub fn kinks(&self) -> Vec<f64> {
        self.g.kinks()
    }

    fn piece(&self, a: f64, b: f64) -> f64 {
        if a >= b {
            return 0.0;
        }
        integrate(|t| self.density(t), a, b, PANEL_TOL)
            .map(|r| r.value)
            .unwrap_or(f64::NAN)
    }

    fn panel_index(&self, x: f64) -> usize {
        (self.nodes.partition_point(|&n| n <= x) - 1).min(self.nodes.len() - 2)
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.core_range();
        if x <= lo {
            return self.outer_mass(x, -1.0).unwrap_or(f64::NAN);
        }
        if x >= hi {
            return 1.0 - self.sf(x);
        }
        if x > 0.0 {
            return 1.0 - self.sf(x);
        }
        let i = self.panel_index(x);
        self.left[i] + self.piece(self.nodes[i], x)
    }

    /// `P(X > x)`, accurate in relative terms in the right tail.
    pub fn sf(&self, x: f64) -> f64 {
        let (lo, hi) = self.core_range();
        if x >= hi {
            return self.outer_mass(x, 1.0).unwrap_or(f64::NAN);
        }
        if x <= lo || x <= 0.0 {
            return 1.0 - self.cdf(x);
        }
        let i = self.panel_index(x);
        self.right[i + 1] + self.piece(x, self.nodes[i + 1])
    }

    /// Lower quantile: `x` with `P(X <= x) = a`.
    pub fn quantile(&self, a: f64) -> Result<f64> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::invalid(format!("quantile level must be in (0, 1), got {a}")));
        }
        if a > 0.5 {
            return self.quantile_upper(1.0 - a);
        }
        self.invert(a, false)
    }

    /// Upper quantile: `x` with `P(X > x) = b`.
    pub fn quantile_upper(&self, b: f64) -> Result<f64> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::invalid(format!("tail mass must be in (0, 1), got {b}")));
        }
        if b > 0.5 {
            return self.quantile(1.0 - b);
        }
        self.invert(b, true)
    }

    // Solves cdf(x) = m (or sf(x) = m when `upper`) by safeguarded Newton.
    fn invert(&self, m: f64, upper: bool) -> Result<f64> {
        let (lo_core, hi_core) = self.core_range();
        let (mut lo, mut hi) = if upper {
            match self.right.iter().rposition(|&r| r >= m) {
                Some(i) if i + 1 < self.nodes.len() => (self.nodes[i], self.nodes[i + 1]),
                Some(_) => self.outer_bracket(hi_core, 1.0, m, upper)?,
                None => self.outer_bracket(lo_core, -1.0, m, upper)?,
            }
        } else {
            match self.left.iter().position(|&l| l >= m) {
                Some(0) => self.outer_bracket(lo_core, -1.0, m, upper)?,
                Some(i) => (self.nodes[i - 1], self.nodes[i]),
                None => self.outer_bracket(hi_core, 1.0, m, upper)?,
            }
        };
        // residual increasing in x
        let residual = |x: f64| if upper { m - self.sf(x) } else { self.cdf(x) - m };
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = residual(x);
            if r == 0.0 {
                return Ok(x);
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let dens = self.density(x);
            let mut next = if dens > 0.0 { x - r / dens } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) || hi - lo <= 1e-15 * hi.abs().max(lo.abs()) {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    fn outer_bracket(&self, start: f64, side: f64, m: f64, upper: bool) -> Result<(f64, f64)> {
        let tail = |x: f64| if side > 0.0 { self.sf(x) } else { self.cdf(x) };
        // The requested mass lies beyond the core range on this side.
        let target_is_tail = (side > 0.0) == upper;
        if !target_is_tail {
            return Err(Error::RootFinding(format!("mass {m} not bracketed")));
        }
        let mut inner = start;
        let mut width = start.abs().max(1.0);
        for _ in 0..200 {
            let outer = inner + side * width;
            if tail(outer) <= m {
                return Ok(if side > 0.0 { (inner, outer) } else { (outer, inner) });
            }
            inner = outer;
            width *= 2.0;
        }
        Err(Error::RootFinding(format!("mass {m} not bracketed")))
    }
}

impl Serialize for Density1D {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.potential.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Density1D {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let p = Potential::deserialize(deserializer)?;
        Density1D::new(p).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::special::{normal_cdf, normal_sf};
    use std::f64::consts::PI;

    #[test]
    fn gaussian_normalization() {
        let d = Density1D::new(Potential::gaussian()).unwrap();
        assert!((d.z() - (2.0 * PI).sqrt()).abs() < 1e-12);
        let total: f64 = d.nodes.windows(2).map(|w| d.piece(w[0], w[1])).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn laplace_normalization_and_median() {
        let d = Density1D::new(Potential::laplace()).unwrap();
        assert!((d.z() - 2.0).abs() < 1e-12);
        assert!((d.cdf(0.0) - 0.5).abs() < 1e-14);
        // Exact cdf: 1 - e^{-x}/2 for x > 0.
        for &x in &[0.3_f64, 2.0, 10.0, 30.0, 40.0] {
            let sf = 0.5 * (-x).exp();
            assert!(((d.sf(x) - sf) / sf).abs() < 1e-11, "x={x}");
        }
    }

    #[test]
    fn uniform_limit_of_truncated() {
        let d = Density1D::new(Potential::TruncatedQuadratic {
            kappa: 1e-14,
            radius: 1.5,
        })
        .unwrap();
        assert!((d.z() - 3.0).abs() < 1e-12);
        assert_eq!(d.cdf(2.0), 1.0);
        assert_eq!(d.cdf(-2.0), 0.0);
    }

    #[test]
    fn gaussian_cdf_and_quantile() {
        let d = Density1D::new(Potential::gaussian()).unwrap();
        for &x in &[-9.0, -5.0, -1.0, 0.0, 0.7, 3.0, 8.0, 12.0] {
            let c = d.cdf(x);
            let exact = normal_cdf(x);
            assert!(((c - exact) / exact).abs() < 1e-11, "x={x} cdf={c} exact={exact}");
            let s = d.sf(x);
            assert!(((s - normal_sf(x)) / normal_sf(x)).abs() < 1e-11, "x={x}");
        }
        let a = 0.5 + normal_cdf(1.0) - normal_cdf(0.0);
        assert!((d.quantile(a).unwrap() - 1.0).abs() < 1e-11);
        for &a in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.9, 1.0 - 1e-9] {
            let x = d.quantile(a).unwrap();
            assert!((d.cdf(x) - a).abs() < 1e-9 * a.min(1.0 - a).max(1e-3), "a={a}");
        }
        for &b in &[1e-15, 1e-8, 0.2] {
            let x = d.quantile_upper(b).unwrap();
            assert!(((d.sf(x) - b) / b).abs() < 1e-10, "b={b}");
        }
        assert!(d.quantile(0.0).is_err());
        assert!(d.quantile(1.0).is_err());
    }

    #[test]
    fn shifted_piecewise_linear() {
        // Minimum at x = 2; asymmetric slopes 1 (left) and 3 (right).
        let d = Density1D::new(Potential::PiecewiseLinear {
            knots: vec![(0.0, 7.0), (2.0, 5.0), (3.0, 8.0)],
        })
        .unwrap();
        assert_eq!(d.offset(), 2.0);
        assert_eq!(d.g(0.0), 0.0);
        let z = 1.0 + 1.0 / 3.0;
        assert!((d.z() - z).abs() < 1e-12);
        assert!((d.cdf(0.0) - 0.75).abs() < 1e-13);
    }

    #[test]
    fn non_integrable_is_rejected() {
        let flat = Potential::PiecewiseLinear {
            knots: vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 0.0)],
        };
        assert!(matches!(Density1D::new(flat), Err(Error::NonIntegrable(_))));
        let concave = Potential::PiecewiseLinear {
            knots: vec![(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)],
        };
        assert!(Density1D::new(concave).is_err());
    }

    #[test]
    fn json_shape() {
        let p: Potential = serde_json::from_str(r#"{"kind":"quadratic","kappa":0.5}"#).unwrap();
        assert_eq!(p, Potential::gaussian());
        let d: Density1D = serde_json::from_str(r#"{"kind":"power","alpha":1,"p":3}"#).unwrap();
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"kind":"power","alpha":1.0,"p":3.0}"#
        );
        assert!(serde_json::from_str::<Potential>(r#"{"kind":"quadratic","kappa":-1}"#).is_ok());
        assert!(serde_json::from_str::<Density1D>(r#"{"kind":"quadratic","kappa":-1}"#).is_err());
    }
}
