//! Moduli of convexity and uniform log-concavity.
//!
//! A modulus is a function `δ: [0, ∞) → [0, ∞]` with `δ(0) = 0` and
//! `δ(t)/t` non-decreasing. Every lower bound in this crate is a functional
//! of such a modulus, usually through its generalized inverse.

mod estimate;
mod laplace;
mod norm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::roots;

pub use estimate::{
    estimate_norm_modulus, figiel_pisier_constant, uniform_convexity_gap, EstimatePoint, FigielPisierReport,
    ModulusEstimate, ModulusEstimator,
};
pub use laplace::{exp_integral, ln_laplace_integral};
pub use norm::{NormKind, NormSpec};

/// Relative slack allowed when validating `δ(t)/t` monotonicity of tables.
const RATIO_SLACK: f64 = 1e-12;

/// A modulus function. Construct through [`ModulusSpec::power`],
/// [`ModulusSpec::table`], [`ModulusSpec::truncated`] or JSON; those paths
/// validate the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "repr::Modulus", into = "repr::Modulus")]
pub enum ModulusSpec {
    /// `δ ≡ 0`: plain (log-)concavity.
    Zero,
    /// `δ(t) = alpha * t^p` with `p >= 2`.
    Power { alpha: f64, p: f64 },
    /// Piecewise linear through `(0, 0)` and the knots.
    Table(ModulusTable),
    /// `base` on `[0, cutoff]`, `+∞` beyond.
    Truncated { base: Box<ModulusSpec>, cutoff: f64 },
}

/// What a [`ModulusTable`] does right of its last knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableExtension {
    /// `δ(t)/t` continues linearly with the slope of the last two knots.
    #[default]
    LinearRatio,
    /// `δ = +∞` past the last knot.
    Cutoff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusTable {
    knots: Vec<(f64, f64)>,
    extension: TableExtension,
}

impl ModulusTable {
    pub fn new(knots: Vec<(f64, f64)>, extension: TableExtension) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::invalid("modulus table needs at least one knot"));
        }
        let mut prev_t = 0.0;
        let mut prev_ratio = 0.0_f64;
        for &(t, d) in &knots {
            if !(t.is_finite() && d.is_finite()) || t <= prev_t || d < 0.0 {
                return Err(Error::invalid(format!(
                    "modulus knots must have increasing positive t and finite nonnegative values, got ({t}, {d})"
                )));
            }
            let ratio = d / t;
            if ratio < prev_ratio - RATIO_SLACK * prev_ratio.max(1.0) {
                return Err(Error::invalid(format!(
                    "δ(t)/t must be non-decreasing; drops from {prev_ratio} to {ratio} at t = {t}"
                )));
            }
            prev_t = t;
            prev_ratio = ratio.max(prev_ratio);
        }
        Ok(ModulusTable { knots, extension })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn extension(&self) -> TableExtension {
        self.extension
    }

    fn last(&self) -> (f64, f64) {
        *self.knots.last().expect("validated non-empty")
    }

    /// Slope of `δ(t)/t` used past the last knot.
    fn ratio_slope(&self) -> f64 {
        match self.knots.len() {
            1 => 0.0,
            k => {
                let (t0, d0) = self.knots[k - 2];
                let (t1, d1) = self.knots[k - 1];
                ((d1 / t1 - d0 / t0) / (t1 - t0)).max(0.0)
            }
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let (t_last, d_last) = self.last();
        if t > t_last {
            return match self.extension {
                TableExtension::Cutoff => f64::INFINITY,
                TableExtension::LinearRatio => t * (d_last / t_last + self.ratio_slope() * (t - t_last)),
            };
        }
        let idx = self.knots.partition_point(|&(tk, _)| tk < t);
        let (t0, d0) = if idx == 0 { (0.0, 0.0) } else { self.knots[idx - 1] };
        let (t1, d1) = self.knots[idx];
        if t1 == t0 {
            return d1;
        }
        d0 + (d1 - d0) * (t - t0) / (t1 - t0)
    }

    fn inverse(&self, s: f64) -> f64 {
        let mut t0 = 0.0;
        let mut d0 = 0.0;
        for &(t1, d1) in &self.knots {
            if d1 >= s {
                if d1 == d0 {
                    return t0;
                }
                return t0 + (s - d0) / (d1 - d0) * (t1 - t0);
            }
            t0 = t1;
            d0 = d1;
        }
        match self.extension {
            TableExtension::Cutoff => t0,
            TableExtension::LinearRatio => {
                // Solve m t^2 + (r - m t0) t - s = 0 for the positive root.
                let r = d0 / t0;
                let m = self.ratio_slope();
                if m == 0.0 {
                    if r > 0.0 {
                        s / r
                    } else {
                        f64::INFINITY
                    }
                } else {
                    let b = r - m * t0;
                    let disc = b * b + 4.0 * m * s;
                    // Stable form of (-b + sqrt(disc)) / (2m).
                    if b >= 0.0 {
                        2.0 * s / (b + disc.sqrt())
                    } else {
                        (-b + disc.sqrt()) / (2.0 * m)
                    }
                }
            }
        }
    }

    fn scaled(&self, k: f64) -> ModulusTable {
        ModulusTable {
            knots: self.knots.iter().map(|&(t, d)| (t, k * d)).collect(),
            extension: self.extension,
        }
    }
}

impl ModulusSpec {
    pub fn power(alpha: f64, p: f64) -> Result<Self> {
        let spec = ModulusSpec::Power { alpha, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn table(knots: Vec<(f64, f64)>, extension: TableExtension) -> Result<Self> {
        Ok(ModulusSpec::Table(ModulusTable::new(knots, extension)?))
    }

    pub fn truncated(base: ModulusSpec, cutoff: f64) -> Result<Self> {
        let spec = ModulusSpec::Truncated {
            base: Box::new(base),
            cutoff,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks parameter ranges; tables are checked at construction.
    pub fn validate(&self) -> Result<()> {
        match self {
            ModulusSpec::Zero | ModulusSpec::Table(_) => Ok(()),
            ModulusSpec::Power { alpha, p } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::invalid(format!("power modulus needs alpha > 0, got {alpha}")));
                }
                if !(p.is_finite() && *p >= 2.0) {
                    return Err(Error::invalid(format!("power modulus needs finite p >= 2, got {p}")));
                }
                Ok(())
            }
            ModulusSpec::Truncated { base, cutoff } => {
                if !(cutoff.is_finite() && *cutoff > 0.0) {
                    return Err(Error::invalid(format!(
                        "truncation cutoff must be positive, got {cutoff}"
                    )));
                }
                base.validate()
            }
        }
    }

    /// `δ(t)`; negative arguments are treated as 0.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            ModulusSpec::Zero => 0.0,
            ModulusSpec::Power { alpha, p } => alpha * t.powf(*p),
            ModulusSpec::Table(table) => table.eval(t),
            ModulusSpec::Truncated { base, cutoff } => {
                if t > *cutoff {
                    f64::INFINITY
                } else {
                    base.eval(t)
                }
            }
        }
    }

    /// Generalized inverse `inf{t >= 0 : δ(t) >= s}`, `+∞` if never reached.
    pub fn inverse(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            ModulusSpec::Zero => f64::INFINITY,
            ModulusSpec::Power { alpha, p } => (s / alpha).powf(1.0 / p),
            ModulusSpec::Table(table) => table.inverse(s),
            ModulusSpec::Truncated { base, cutoff } => base.inverse(s).min(*cutoff),
        }
    }

    /// The modulus `k δ`, used for the doubled (`2δ`) and dimension-scaled
    /// (`nδ`) forms.
    pub fn scaled(&self, k: f64) -> ModulusSpec {
        assert!(k > 0.0 && k.is_finite(), "scale factor must be positive");
        match self {
            ModulusSpec::Zero => ModulusSpec::Zero,
            ModulusSpec::Power { alpha, p } => ModulusSpec::Power {
                alpha: k * alpha,
                p: *p,
            },
            ModulusSpec::Table(table) => ModulusSpec::Table(table.scaled(k)),
            ModulusSpec::Truncated { base, cutoff } => ModulusSpec::Truncated {
                base: Box::new(base.scaled(k)),
                cutoff: *cutoff,
            },
        }
    }

    /// Largest `t` at which `δ` is finite.
    pub fn finite_limit(&self) -> f64 {
        match self {
            ModulusSpec::Zero | ModulusSpec::Power { .. } => f64::INFINITY,
            ModulusSpec::Table(table) => match table.extension {
                TableExtension::LinearRatio => f64::INFINITY,
                TableExtension::Cutoff => table.last().0,
            },
            ModulusSpec::Truncated { base, cutoff } => base.finite_limit().min(*cutoff),
        }
    }

    /// Points where `δ` is not smooth: table knots and the truncation point.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            ModulusSpec::Zero | ModulusSpec::Power { .. } => Vec::new(),
            ModulusSpec::Table(table) => table.knots.iter().map(|k| k.0).collect(),
            ModulusSpec::Truncated { base, cutoff } => {
                let mut k: Vec<f64> = base.kinks().into_iter().filter(|t| t < cutoff).collect();
                k.push(*cutoff);
                k
            }
        }
    }

    /// Lower bound for `δ(t)/t` for all `t >= t0`, valid because that ratio
    /// is non-decreasing. Used for tail estimates of `∫ exp(-kδ)`.
    pub fn ratio_at(&self, t0: f64) -> f64 {
        if t0 <= 0.0 {
            return 0.0;
        }
        self.eval(t0) / t0
    }

    /// Greatest convex minorant on `grid` (clipped to where `δ` is finite).
    /// Power and Zero moduli are already convex and are returned unchanged.
    pub fn convex_minorant(&self, grid: &[f64]) -> Result<ModulusSpec> {
        match self {
            ModulusSpec::Zero | ModulusSpec::Power { .. } => Ok(self.clone()),
            ModulusSpec::Table(table) => {
                let mut ts: Vec<f64> = grid.iter().copied().filter(|&t| t > 0.0 && t.is_finite()).collect();
                let limit = self.finite_limit();
                ts.retain(|&t| t <= limit);
                ts.extend(table.knots.iter().map(|&(t, _)| t).filter(|&t| t <= grid_end(grid)));
                if limit.is_finite() {
                    ts.push(limit);
                }
                hull_table(self, ts, table.extension)
            }
            ModulusSpec::Truncated { base, cutoff } => {
                let limit = self.finite_limit();
                let mut ts: Vec<f64> = grid.iter().copied().filter(|&t| t > 0.0 && t <= limit).collect();
                if let ModulusSpec::Table(table) = base.as_ref() {
                    ts.extend(table.knots.iter().map(|&(t, _)| t).filter(|&t| t <= limit));
                }
                ts.push(limit);
                let hull = match base.as_ref() {
                    ModulusSpec::Zero | ModulusSpec::Power { .. } => (**base).clone(),
                    _ => hull_table(self, ts, TableExtension::LinearRatio)?,
                };
                ModulusSpec::truncated(hull, *cutoff)
            }
        }
    }
}

fn grid_end(grid: &[f64]) -> f64 {
    grid.iter().copied().fold(0.0, f64::max)
}

fn hull_table(delta: &ModulusSpec, mut ts: Vec<f64>, extension: TableExtension) -> Result<ModulusSpec> {
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if ts.is_empty() {
        return Err(Error::invalid("convex minorant needs at least one positive grid point"));
    }
    let mut points = vec![(0.0, 0.0)];
    points.extend(ts.iter().map(|&t| (t, delta.eval(t))));
    let hull = lower_convex_hull(&points);
    ModulusSpec::table(hull.into_iter().skip(1).collect(), extension)
}

/// Lower convex hull (Andrew's monotone chain) of points sorted by `x`.
/// Returns the hull vertices left to right.
pub fn lower_convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Drop b unless it lies strictly below the chord a -> p.
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Constants `(p, α)` such that the `l_q` norm satisfies the `p`-uniform
/// convexity inequality with coefficient `α`. The branch `q >= 2` includes
/// `q = 2`, where both formulas give `1/4`.
pub fn lq_constants(q: f64) -> Result<(f64, f64)> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::invalid(format!(
            "l_q is uniformly convex only for 1 < q < ∞, got q = {q}"
        )));
    }
    if q < 2.0 {
        Ok((2.0, (q - 1.0) / 4.0))
    } else {
        Ok((q, 2f64.powf(-q)))
    }
}

/// Generalized inverse by bisection on [`ModulusSpec::eval`]; a slow
/// reference used to cross-check the closed forms.
pub fn inverse_by_bisection(delta: &ModulusSpec, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    match roots::expand_upper(|t| delta.eval(t) >= s, 1.0, 1e300) {
        Ok((lo, hi)) => roots::bisect_predicate(|t| delta.eval(t) >= s, lo, hi, 0.0, 1e-15),
        Err(_) => f64::INFINITY,
    }
}

mod repr {
    use serde::{Deserialize, Serialize};

    use super::{ModulusSpec, ModulusTable, TableExtension};
    use crate::error::Error;

    #[derive(Serialize, Deserialize)]
    #[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
    pub enum Modulus {
        // Braces make serde reject stray fields on this variant too.
        Zero {},
        Power {
            alpha: f64,
            p: f64,
        },
        Table {
            knots: Vec<(f64, f64)>,
            #[serde(default)]
            extension: TableExtension,
        },
        Truncated {
            base: Box<ModulusSpec>,
            cutoff: f64,
        },
    }

    impl TryFrom<Modulus> for ModulusSpec {
        type Error = Error;

        fn try_from(m: Modulus) -> Result<Self, Error> {
            match m {
                Modulus::Zero {} => Ok(ModulusSpec::Zero),
                Modulus::Power { alpha, p } => ModulusSpec::power(alpha, p),
                Modulus::Table { knots, extension } => Ok(ModulusSpec::Table(ModulusTable::new(knots, extension)?)),
                Modulus::Truncated { base, cutoff } => ModulusSpec::truncated(*base, cutoff),
            }
        }
    }

    impl From<ModulusSpec> for Modulus {
        fn from(m: ModulusSpec) -> Self {
            match m {
                ModulusSpec::Zero => Modulus::Zero {},
                ModulusSpec::Power { alpha, p } => Modulus::Power { alpha, p },
                ModulusSpec::Table(t) => Modulus::Table {
                    knots: t.knots,
                    extension: t.extension,
                },
                ModulusSpec::Truncated { base, cutoff } => Modulus::Truncated { base, cutoff },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truncated_unit_quadratic() -> ModulusSpec {
        ModulusSpec::truncated(ModulusSpec::power(1.0, 2.0).unwrap(), 0.25).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(ModulusSpec::power(0.125, 2.0).unwrap().eval(2.0), 0.5);
        assert_eq!(ModulusSpec::Zero.eval(7.0), 0.0);
        assert_eq!(truncated_unit_quadratic().eval(0.3), f64::INFINITY);
        assert_eq!(truncated_unit_quadratic().eval(0.25), 0.0625);
    }

    #[test]
    fn inverse_examples() {
        let p = ModulusSpec::power(0.125, 2.0).unwrap();
        assert!((p.inverse(0.5) - 2.0).abs() < 1e-15);
        assert!((inverse_by_bisection(&p, 0.5) - 2.0).abs() < 1e-13);
        assert_eq!(ModulusSpec::Zero.inverse(0.1), f64::INFINITY);
        assert_eq!(truncated_unit_quadratic().inverse(1.0), 0.25);
    }

    #[test]
    fn truncated_inverse_lands_on_jump_by_grid_scan() {
        let d = truncated_unit_quadratic();
        let first = (0..=100_000)
            .map(|i| i as f64 * 1e-5)
            .find(|&t| d.eval(t) >= 1.0)
            .unwrap();
        assert!((first - 0.25).abs() <= 1e-5 + 1e-12);
        assert!((inverse_by_bisection(&d, 1.0) - 0.25).abs() < 1e-13);
    }

    #[test]
    fn power_constructor_validates() {
        assert!(ModulusSpec::power(1.0, 1.5).is_err());
        assert!(ModulusSpec::power(0.0, 2.0).is_err());
        assert!(ModulusSpec::truncated(ModulusSpec::Zero, -1.0).is_err());
    }

    #[test]
    fn table_rejects_decreasing_ratio() {
        let err = ModulusSpec::table(vec![(1.0, 1.0), (2.0, 1.5)], TableExtension::LinearRatio);
        assert!(err.is_err());
        assert!(ModulusSpec::table(vec![(1.0, 1.0), (0.5, 2.0)], TableExtension::LinearRatio).is_err());
    }

    #[test]
    fn table_interpolation_and_extension() {
        let t = ModulusSpec::table(vec![(1.0, 0.5), (2.0, 2.0)], TableExtension::LinearRatio).unwrap();
        assert_eq!(t.eval(0.5), 0.25);
        assert_eq!(t.eval(1.5), 1.25);
        // ratio 0.5 at t=1, 1.0 at t=2: slope 0.5, so ratio at 3 is 1.5.
        assert!((t.eval(3.0) - 4.5).abs() < 1e-14);
        for &s in &[0.1, 0.5, 1.0, 2.0, 4.5, 100.0] {
            let inv = t.inverse(s);
            assert!((t.eval(inv) - s).abs() < 1e-10 * s.max(1.0), "s={s}");
            assert!((inv - inverse_by_bisection(&t, s)).abs() < 1e-10 * inv.max(1.0));
        }
        let c = ModulusSpec::table(vec![(1.0, 0.5)], TableExtension::Cutoff).unwrap();
        assert_eq!(c.eval(1.5), f64::INFINITY);
        assert_eq!(c.inverse(3.0), 1.0);
    }

    #[test]
    fn flat_zero_table_never_reaches_positive_levels() {
        let t = ModulusSpec::table(vec![(1.0, 0.0)], TableExtension::LinearRatio).unwrap();
        assert_eq!(t.inverse(0.1), f64::INFINITY);
    }

    #[test]
    fn lq_constant_table() {
        assert_eq!(lq_constants(3.0).unwrap(), (3.0, 0.125));
        assert_eq!(lq_constants(1.5).unwrap(), (2.0, 0.125));
        assert_eq!(lq_constants(2.0).unwrap(), (2.0, 0.25));
        assert!(lq_constants(1.0).is_err());
        assert!(lq_constants(0.5).is_err());
    }

    #[test]
    fn lq_branches_agree_at_two() {
        let below = (2.0 - 1.0) / 4.0;
        assert_eq!(below, 2f64.powf(-2.0));
    }

    #[test]
    fn minorant_of_power_is_identity() {
        let p = ModulusSpec::power(0.3, 3.0).unwrap();
        assert_eq!(p.convex_minorant(&[0.5, 1.0]).unwrap(), p);
    }

    fn brute_force_lower_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
        // A point is a hull vertex iff no chord between two other points
        // passes on or below it.
        points
            .iter()
            .enumerate()
            .filter(|&(k, &(x, y))| {
                !points.iter().enumerate().any(|(i, &(xi, yi))| {
                    points.iter().enumerate().any(|(j, &(xj, yj))| {
                        i != k && j != k && xi < x && x < xj && {
                            let chord = yi + (yj - yi) * (x - xi) / (xj - xi);
                            chord <= y
                        }
                    })
                })
            })
            .map(|(_, &p)| p)
            .collect()
    }

    #[test]
    fn minorant_of_concave_then_convex_table() {
        let knots = vec![(0.25, 0.2), (0.5, 0.4), (1.0, 0.8), (1.25, 1.5), (1.5, 2.5), (2.0, 4.0)];
        let table = ModulusSpec::table(knots.clone(), TableExtension::LinearRatio).unwrap();
        let grid: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let minorant = table.convex_minorant(&grid).unwrap();
        let mut pts = vec![(0.0, 0.0)];
        pts.extend(knots);
        let oracle = brute_force_lower_hull(&pts);
        match &minorant {
            ModulusSpec::Table(t) => assert_eq!(t.knots(), &oracle[1..]),
            other => panic!("expected table, got {other:?}"),
        }
        for &t in &grid {
            assert!(minorant.eval(t) <= table.eval(t) + 1e-15);
            assert!(table.eval(t / 2.0) <= minorant.eval(t) + 1e-15);
        }
    }

    #[test]
    fn minorant_of_truncated_table_keeps_cutoff() {
        let base = ModulusSpec::table(vec![(0.1, 0.05), (0.2, 0.1), (0.5, 0.6)], TableExtension::LinearRatio).unwrap();
        let d = ModulusSpec::truncated(base, 0.4).unwrap();
        let m = d.convex_minorant(&[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        assert_eq!(m.finite_limit(), 0.4);
        assert_eq!(m.eval(0.45), f64::INFINITY);
        for &t in &[0.1, 0.2, 0.3, 0.4] {
            assert!(m.eval(t) <= d.eval(t) + 1e-15);
        }
    }

    #[test]
    fn json_round_trip_and_field_names() {
        let d = ModulusSpec::truncated(
            ModulusSpec::table(vec![(0.5, 0.1), (1.0, 0.3)], TableExtension::LinearRatio).unwrap(),
            0.75,
        )
        .unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"truncated","base":{"kind":"table","knots":[[0.5,0.1],[1.0,0.3]],"extension":"linear_ratio"},"cutoff":0.75}"#
        );
        let back: ModulusSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        let p: ModulusSpec = serde_json::from_str(r#"{"kind":"power","alpha":0.125,"p":2}"#).unwrap();
        assert_eq!(p, ModulusSpec::Power { alpha: 0.125, p: 2.0 });
        assert!(serde_json::from_str::<ModulusSpec>(r#"{"kind":"power","alpha":1,"p":1}"#).is_err());
        assert!(serde_json::from_str::<ModulusSpec>(r#"{"kind":"zero","extra":1}"#).is_err());
        assert_eq!(serde_json::to_string(&ModulusSpec::Zero).unwrap(), r#"{"kind":"zero"}"#);
    }

    #[test]
    fn scaling() {
        let d = ModulusSpec::power(0.25, 2.0).unwrap().scaled(2.0);
        assert_eq!(d, ModulusSpec::Power { alpha: 0.5, p: 2.0 });
        let t = truncated_unit_quadratic().scaled(3.0);
        assert!((t.eval(0.2) - 0.12).abs() < 1e-15);
        assert_eq!(t.eval(0.3), f64::INFINITY);
    }
}
