//! Monte Carlo checks of the radial map: pushforward uniformity and
//! empirical Lipschitz quotients.

use rayon::prelude::*;
use serde::Serialize;

use super::sample::{open01, stream_count, stream_rng, Sampler, CHUNK};
use super::{LogDensity, RadialDensity};
use crate::error::{Error, Result};

/// Kolmogorov–Smirnov distance between the sample and `U[0, 1]`. Sorts
/// `values` in place.
pub fn ks_uniform(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let v = v.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - v).max(v - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_critical_1pct(count: usize) -> f64 {
    1.63 / (count as f64).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct PushforwardReport {
    pub count: usize,
    pub seed: u64,
    pub streams: usize,
    /// KS distance of `‖T(x)‖_{K_f}^n` from `U[0, 1]`.
    pub ks: f64,
    pub critical_1pct: f64,
    pub passes: bool,
    /// Euclidean length of the mean of `x/|x|`; near 0 for balanced samples.
    pub mean_direction_norm: f64,
}

/// Pushes samples of `f` through its radial map and tests that
/// `‖T(x)‖_{K_f}^n` is uniform on `[0, 1]`.
pub fn pushforward_uniformity(
    f: &RadialDensity,
    sampler: &dyn Sampler,
    count: usize,
    seed: u64,
) -> Result<PushforwardReport> {
    let n = f.dim();
    if sampler.dim() != n {
        return Err(Error::SamplerMismatch(format!(
            "sampler draws from R^{} but the density lives on R^{n}",
            sampler.dim()
        )));
    }
    if count == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let streams = stream_count(count);
    let per_stream: Vec<(Vec<f64>, Vec<f64>)> = (0..streams)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let rows = CHUNK.min(count - k * CHUNK);
            let mut x = vec![0.0; n];
            let mut dir = vec![0.0; n];
            let mut values = Vec::with_capacity(rows);
            for _ in 0..rows {
                sampler.sample(&mut rng, &mut x);
                let t = f.transport(&x);
                values.push(f.gauge(&t).powi(n as i32));
                let len = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if len > 0.0 {
                    dir.iter_mut().zip(&x).for_each(|(d, v)| *d += v / len);
                }
            }
            (values, dir)
        })
        .collect();
    let mut values = Vec::with_capacity(count);
    let mut dir = vec![0.0; n];
    for (v, d) in per_stream {
        values.extend(v);
        dir.iter_mut().zip(d).for_each(|(a, b)| *a += b);
    }
    let ks = ks_uniform(&mut values);
    let critical = ks_critical_1pct(count);
    Ok(PushforwardReport {
        count,
        seed,
        streams,
        ks,
        critical_1pct: critical,
        passes: ks < critical,
        mean_direction_norm: dir.iter().map(|v| (v / count as f64).powi(2)).sum::<f64>().sqrt(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub pairs: usize,
    pub seed: u64,
    pub streams: usize,
    /// `sup |u(x) - u(y)| / ‖x - y‖_{K_f}`
    pub u_quotient: f64,
    /// `sup ‖T(x) - T(y)‖_{K_f} / ‖x - y‖_{K_f}`
    pub t_quotient: f64,
    pub f0_root: f64,
    pub u_normalized: f64,
    pub t_normalized: f64,
    /// `t_quotient <= 3 u_quotient`
    pub factor_three_holds: bool,
}

/// Largest difference quotients of `u` and `T` over sampled pairs, in the
/// norm of `K_f`. Half of the pairs are independent draws, half are a draw
/// and a nearby point (relative offsets between `1e-3` and `0.5`), so both
/// global and local behaviour are probed.
pub fn empirical_lipschitz(
    f: &RadialDensity,
    sampler: &dyn Sampler,
    pairs: usize,
    seed: u64,
) -> Result<LipschitzReport> {
    let n = f.dim();
    if sampler.dim() != n {
        return Err(Error::SamplerMismatch(format!(
            "sampler draws from R^{} but the density lives on R^{n}",
            sampler.dim()
        )));
    }
    let streams = stream_count(pairs);
    let (uq, tq) = (0..streams)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let rows = CHUNK.min(pairs - k * CHUNK);
            let (mut x, mut y, mut z) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            let (mut uq, mut tq) = (0.0_f64, 0.0_f64);
            for i in 0..rows {
                sampler.sample(&mut rng, &mut x);
                sampler.sample(&mut rng, &mut z);
                if i % 2 == 0 {
                    y.copy_from_slice(&z);
                } else {
                    let eta = 0.5 * 10f64.powf(-3.0 * open01(&mut rng));
                    y.iter_mut()
                        .zip(x.iter().zip(&z))
                        .for_each(|(yi, (xi, zi))| *yi = xi + eta * zi);
                }
                let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
                let d = f.gauge(&diff);
                if d == 0.0 {
                    continue;
                }
                let (tx, ty) = (f.transport(&x), f.transport(&y));
                let tdiff: Vec<f64> = tx.iter().zip(&ty).map(|(a, b)| a - b).collect();
                uq = uq.max((f.u(&x) - f.u(&y)).abs() / d);
                tq = tq.max(f.gauge(&tdiff) / d);
            }
            (uq, tq)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let f0_root = f.density_at_zero().powf(1.0 / n as f64);
    Ok(LipschitzReport {
        pairs,
        seed,
        streams,
        u_quotient: uq,
        t_quotient: tq,
        f0_root,
        u_normalized: uq / f0_root,
        t_normalized: tq / f0_root,
        factor_three_holds: tq <= 3.0 * uq * (1.0 + 1e-9),
    })
}
