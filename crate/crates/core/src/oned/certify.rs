//! Grid checks that a density satisfies the hypotheses of the 1D bounds.

use serde::Serialize;

use super::Density1D;
use crate::delta::ModulusSpec;

const SLACK: f64 = 1e-12;

/// Worst case of `lhs - rhs` over the checked points; the condition holds
/// when the margin is above `-1e-12 (1 + |lhs|)` everywhere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub holds: bool,
    pub points_checked: usize,
    pub worst_margin: f64,
    /// Where the worst margin occurs: `(x, x)` for the tail check,
    /// `(x, y)` for the midpoint check.
    pub worst_at: (f64, f64),
    pub violations: usize,
}

struct Tally {
    report: ConditionReport,
}

impl Tally {
    fn new() -> Self {
        Tally {
            report: ConditionReport {
                holds: true,
                points_checked: 0,
                worst_margin: f64::INFINITY,
                worst_at: (f64::NAN, f64::NAN),
                violations: 0,
            },
        }
    }

    fn add(&mut self, lhs: f64, rhs: f64, at: (f64, f64)) {
        let r = &mut self.report;
        r.points_checked += 1;
        // ∞ >= ∞ counts as satisfied
        let margin = if lhs == f64::INFINITY { f64::INFINITY } else { lhs - rhs };
        if margin < r.worst_margin || r.worst_at.0.is_nan() {
            r.worst_margin = margin;
            r.worst_at = at;
        }
        if margin < -SLACK * (1.0 + lhs.abs()) || margin.is_nan() {
            r.violations += 1;
            r.holds = false;
        }
    }
}

/// Checks `g(x) - g(0) >= δ(|x|)` at every grid point (centred coordinates).
pub fn verify_tail_condition(d: &Density1D, delta: &ModulusSpec, grid: &[f64]) -> ConditionReport {
    let mut t = Tally::new();
    for &x in grid {
        t.add(d.g(x), delta.eval(x.abs()), (x, x));
    }
    t.report
}

/// Checks `(g(x) + g(y))/2 - g((x+y)/2) >= δ(|x - y|)` on all grid pairs.
pub fn verify_midpoint_condition(d: &Density1D, delta: &ModulusSpec, grid: &[f64]) -> ConditionReport {
    let mut t = Tally::new();
    for (i, &x) in grid.iter().enumerate() {
        for &y in &grid[i + 1..] {
            let (gx, gy) = (d.g(x), d.g(y));
            let lhs = if gx.is_infinite() || gy.is_infinite() {
                f64::INFINITY
            } else {
                0.5 * (gx + gy) - d.g(0.5 * (x + y))
            };
            t.add(lhs, delta.eval((x - y).abs()), (x, y));
        }
    }
    t.report
}

/// Symmetric grid of `2n + 1` points on `[-r, r]`.
pub fn symmetric_grid(r: f64, n: usize) -> Vec<f64> {
    (0..=2 * n).map(|i| r * (i as f64 / n as f64 - 1.0)).collect()
}
