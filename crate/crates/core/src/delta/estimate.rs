//! Numerical estimation of the modulus of convexity of a norm.
//!
//! For `ε` fixed, every admissible pair is written through its midpoint and
//! half-difference, `x = s·u + (ε/2)·w` and `y = s·u − (ε/2)·w` with `u`, `w`
//! unit vectors, so `‖x − y‖ = ε` holds exactly. For given directions the set
//! of feasible `s >= 0` is an interval (the constraint is convex in `s` and
//! holds at `s = 0`), so its right end `s_max` is found by bisection and
//! `1 − s_max` is minimized over the directions. Each evaluated point is
//! feasible (up to rounding in the norm), hence every reported value bounds
//! `δ_V(ε)` from above.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{ModulusSpec, NormSpec, TableExtension};
use crate::error::{Error, Result};
use crate::numeric::optimize::NelderMead;

#[derive(Debug, Clone)]
pub struct ModulusEstimator {
    /// Random starting points per `ε`.
    pub starts: usize,
    pub optimizer: NelderMead,
    /// Multiplier in `(0, 1]` applied to the rectified table. The estimate
    /// is an upper bound for `δ_V`, so bounds built from it are only
    /// conservative after shrinking.
    pub safety_factor: f64,
}

impl Default for ModulusEstimator {
    fn default() -> Self {
        ModulusEstimator {
            starts: 12,
            optimizer: NelderMead {
                max_evals: 4000,
                ftol: 1e-14,
                initial_step: 0.3,
            },
            safety_factor: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatePoint {
    pub eps: f64,
    /// Best objective value found.
    pub raw: f64,
    /// Value after enforcing a non-decreasing `δ(t)/t` (and the safety factor).
    pub rectified: f64,
    pub converged: bool,
    pub evals: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModulusEstimate {
    pub modulus: ModulusSpec,
    pub points: Vec<EstimatePoint>,
    pub warnings: Vec<String>,
}

/// Upper estimate of `δ_V` on `eps_grid` (values in `(0, 2]`).
pub fn estimate_norm_modulus(
    norm: &NormSpec,
    eps_grid: &[f64],
    settings: &ModulusEstimator,
    seed: u64,
) -> Result<ModulusEstimate> {
    if eps_grid.is_empty() {
        return Err(Error::invalid("eps grid is empty"));
    }
    if let Some(&bad) = eps_grid.iter().find(|&&e| !(e > 0.0 && e <= 2.0)) {
        return Err(Error::invalid(format!("eps values must lie in (0, 2], got {bad}")));
    }
    if !(settings.safety_factor > 0.0 && settings.safety_factor <= 1.0) {
        return Err(Error::invalid("safety factor must lie in (0, 1]"));
    }
    if settings.starts == 0 {
        return Err(Error::invalid("need at least one optimizer start"));
    }
    let mut grid = eps_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut points: Vec<EstimatePoint> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            minimize_for_eps(norm, eps, settings, &mut rng)
        })
        .collect();

    // Running minimum of δ/ε from the right: still an upper estimate, since
    // the true ratio is non-decreasing.
    let mut ratio = f64::INFINITY;
    for p in points.iter_mut().rev() {
        ratio = ratio.min(p.raw / p.eps);
        p.rectified = ratio * p.eps * settings.safety_factor;
    }

    let mut warnings = Vec::new();
    if settings.safety_factor == 1.0 {
        warnings.push(
            "safety factor is 1: the table bounds the modulus of convexity from above, so bounds built from it are not guaranteed"
                .to_string(),
        );
    }
    for p in points.iter().filter(|p| !p.converged) {
        warnings.push(format!(
            "optimizer did not converge at eps = {}; best value {} reported",
            p.eps, p.raw
        ));
    }

    let knots = points.iter().map(|p| (p.eps, p.rectified)).collect();
    let modulus = ModulusSpec::table(knots, TableExtension::LinearRatio)?;
    Ok(ModulusEstimate {
        modulus,
        points,
        warnings,
    })
}

fn minimize_for_eps(norm: &NormSpec, eps: f64, settings: &ModulusEstimator, rng: &mut ChaCha8Rng) -> EstimatePoint {
    let n = norm.dim();
    let objective = |v: &[f64]| 1.0 - max_midpoint(norm, &v[..n], &v[n..], eps);
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut evals = 0;
    for _ in 0..settings.starts {
        let start: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = settings.optimizer.minimize(objective, &start);
        evals += m.evals;
        if best.as_ref().is_none_or(|b| m.value < b.1) {
            best = Some((m.x, m.value, m.converged));
        }
    }
    let (x, mut value, mut converged) = best.expect("at least one start");
    // Polish from the best point with a fresh simplex.
    let polish = NelderMead {
        initial_step: 0.05,
        ..settings.optimizer
    }
    .minimize(objective, &x);
    evals += polish.evals;
    if polish.value <= value {
        value = polish.value;
        converged = polish.converged;
    }
    EstimatePoint {
        eps,
        raw: value,
        rectified: value,
        converged,
        evals,
    }
}

/// Largest `s` with `‖s·u ± (ε/2)·w‖ <= 1` for the normalized directions;
/// returns `-1` for degenerate directions so they are never preferred.
fn max_midpoint(norm: &NormSpec, u: &[f64], w: &[f64], eps: f64) -> f64 {
    let nu = norm.norm(u);
    let nw = norm.norm(w);
    if !(nu > 1e-12 && nw > 1e-12) {
        return -1.0;
    }
    let h: Vec<f64> = w.iter().map(|v| 0.5 * eps * v / nw).collect();
    let mut buf = vec![0.0; u.len()];
    let mut feasible = |s: f64| {
        for sign in [1.0, -1.0] {
            for ((b, ui), hi) in buf.iter_mut().zip(u).zip(&h) {
                *b = s * ui / nu + sign * hi;
            }
            if norm.norm(&buf) > 1.0 {
                return false;
            }
        }
        true
    };
    if !feasible(0.0) {
        return -1.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0 + 0.5 * eps;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `(‖x‖² + ‖y‖²)/2 − ‖(x+y)/2‖²`.
pub fn uniform_convexity_gap(norm: &NormSpec, x: &[f64], y: &[f64]) -> f64 {
    let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
    let nx = norm.norm(x);
    let ny = norm.norm(y);
    let nm = norm.norm(&mid);
    0.5 * (nx * nx + ny * ny) - nm * nm
}

#[derive(Debug, Clone, Serialize)]
pub struct FigielPisierReport {
    /// Minimum of `gap / δ_V(‖x−y‖/4)` over the sampled pairs.
    pub min_ratio: f64,
    pub pairs_used: usize,
    /// Pairs skipped because `‖x − y‖ < 1e-3`.
    pub pairs_skipped: usize,
}

/// Samples pairs with `‖x‖² + ‖y‖² <= 2` and reports the smallest observed
/// ratio between the convexity gap and `modulus(‖x−y‖/4)`.
pub fn figiel_pisier_constant(norm: &NormSpec, modulus: &ModulusSpec, pairs: usize, seed: u64) -> FigielPisierReport {
    let n = norm.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    let mut used = 0;
    let mut skipped = 0;
    for k in 0..pairs {
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s2 = 0.5 * (norm.norm(&x).powi(2) + norm.norm(&y).powi(2));
        // Half the pairs sit on the boundary ‖x‖² + ‖y‖² = 2.
        let target: f64 = if k % 2 == 0 { 1.0 } else { rng.random_range(0.0..1.0) };
        let c = (target / s2).sqrt();
        x.iter_mut().for_each(|v| *v *= c);
        y.iter_mut().for_each(|v| *v *= c);
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let dist = norm.norm(&diff);
        if dist < 1e-3 {
            skipped += 1;
            continue;
        }
        let d = modulus.eval(dist / 4.0);
        if d > 0.0 {
            min_ratio = min_ratio.min(uniform_convexity_gap(norm, &x, &y) / d);
            used += 1;
        } else {
            skipped += 1;
        }
    }
    FigielPisierReport {
        min_ratio,
        pairs_used: used,
        pairs_skipped: skipped,
    }
}
