//! Seeded samplers for radial densities and product measures
//! `exp(-‖x‖_p^p)`.
//!
//! Work is split into fixed-size chunks; chunk `k` draws from the ChaCha8
//! stream `k` of the seed, so results do not depend on the thread count.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{RadialDensity, RadialProfile};
use crate::delta::{NormKind, NormSpec};
use crate::error::{Error, Result};
use crate::numeric::special::inv_gamma_p;

/// Rows drawn per random stream.
pub const CHUNK: usize = 4096;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn stream_count(count: usize) -> usize {
    count.div_ceil(CHUNK)
}

/// Uniform on `(0, 1)`.
pub fn open01<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Draw from the density `∝ exp(-|t|^p)` on the line: `|t|^p ~ Gamma(1/p)`
/// by inverse CDF, with a random sign.
pub fn sample_exp_power_coordinate<R: Rng>(rng: &mut R, p: f64) -> f64 {
    let g = inv_gamma_p(1.0 / p, open01(rng));
    let t = g.powf(1.0 / p);
    if rng.random::<bool>() {
        t
    } else {
        -t
    }
}

/// Something that draws points of `R^n`.
pub trait Sampler: Sync {
    fn dim(&self) -> usize;
    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]);
}

/// Exact sampler for a [`RadialDensity`] over an `l_q` or Euclidean norm:
/// a direction from the cone measure of the unit sphere times a radius
/// drawn from the law `∝ h(r) r^{n-1}`.
#[derive(Debug, Clone)]
pub struct RadialSampler {
    norm: NormSpec,
    q: f64,
    profile: RadialProfile,
}

impl RadialSampler {
    pub fn new(density: &RadialDensity) -> Result<Self> {
        let q = match density.norm().kind() {
            NormKind::Lq(q) => *q,
            NormKind::Euclidean => 2.0,
            NormKind::Custom { .. } => {
                return Err(Error::invalid("no sampler for custom norms"));
            }
        };
        Ok(RadialSampler {
            norm: density.norm().clone(),
            q,
            profile: density.profile(),
        })
    }

    fn radius<R: Rng>(&self, rng: &mut R) -> f64 {
        let n = self.norm.dim() as f64;
        match self.profile {
            RadialProfile::ExpPower { p } => inv_gamma_p(n / p, open01(rng)).powf(1.0 / p),
            RadialProfile::Indicator => open01(rng).powf(1.0 / n),
            RadialProfile::TruncatedGaussian { beta, radius } => {
                if beta == 0.0 {
                    return radius.expect("validated") * open01(rng).powf(1.0 / n);
                }
                let cap = radius.map_or(1.0, |r| crate::numeric::special::gamma_p(n / 2.0, beta * r * r));
                (inv_gamma_p(n / 2.0, cap * open01(rng)) / beta).sqrt()
            }
        }
    }
}

impl Sampler for RadialSampler {
    fn dim(&self) -> usize {
        self.norm.dim()
    }

    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        loop {
            for v in out.iter_mut() {
                *v = sample_exp_power_coordinate(rng, self.q);
            }
            let len = self.norm.norm(out);
            if len > 0.0 {
                let r = self.radius(rng) / len;
                out.iter_mut().for_each(|v| *v *= r);
                return;
            }
        }
    }
}

/// I.i.d. coordinates with density `∝ exp(-|t|^p)`, i.e. the measure with
/// density `∝ exp(-‖x‖_p^p)`.
#[derive(Debug, Clone, Copy)]
pub struct ProductSampler {
    pub n: usize,
    pub p: f64,
}

impl Sampler for ProductSampler {
    fn dim(&self) -> usize {
        self.n
    }

    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = sample_exp_power_coordinate(rng, self.p);
        }
    }
}

/// Draws `count` rows (row-major) using one stream per chunk.
pub fn draw_rows(sampler: &dyn Sampler, count: usize, seed: u64) -> Vec<f64> {
    let n = sampler.dim();
    let mut data = vec![0.0; count * n];
    data.par_chunks_mut(CHUNK * n.max(1))
        .enumerate()
        .for_each(|(k, chunk)| {
            let mut rng = stream_rng(seed, k as u64);
            for row in chunk.chunks_mut(n) {
                sampler.sample(&mut rng, row);
            }
        });
    data
}

/// A batch of samples stored column-major: coordinate `j` of sample `i` is
/// `data[j * count + i]`.
#[derive(Debug, Clone, Serialize)]
pub struct SampleBatch {
    pub n: usize,
    pub p: f64,
    pub count: usize,
    pub seed: u64,
    pub streams: usize,
    #[serde(skip)]
    pub data: Vec<f64>,
}

impl SampleBatch {
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.data[j * self.count + i]).collect()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.count..(j + 1) * self.count]
    }

    /// One line of JSON header, then the column-major data as little-endian
    /// `f64`.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, self)?;
        w.write_all(b"\n")?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// `count` draws from the density `∝ exp(-‖x‖_p^p)` on `R^n`.
pub fn sample_mu_lp(n: usize, p: f64, count: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("p must be at least 1, got {p}")));
    }
    let rows = draw_rows(&ProductSampler { n, p }, count, seed);
    let mut data = vec![0.0; rows.len()];
    for (i, row) in rows.chunks(n).enumerate() {
        for (j, v) in row.iter().enumerate() {
            data[j * count + i] = *v;
        }
    }
    Ok(SampleBatch {
        n,
        p,
        count,
        seed,
        streams: stream_count(count),
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_thread_independent() {
        let a = sample_mu_lp(3, 2.0, 10_000, 7).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sample_mu_lp(3, 2.0, 10_000, 7).unwrap());
        assert_eq!(a.data, b.data);
        assert_eq!(a.streams, 3);
        let c = sample_mu_lp(3, 2.0, 10_000, 8).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn gaussian_coordinates_have_variance_half() {
        let s = sample_mu_lp(2, 2.0, 200_000, 1).unwrap();
        let col = s.column(0);
        let var = col.iter().map(|v| v * v).sum::<f64>() / col.len() as f64;
        // sd of the estimator is about sqrt(2 * 0.25 / N) = 0.0016
        assert!((var - 0.5).abs() < 0.008, "var = {var}");
        let signs: f64 = col.iter().map(|v| v.signum()).sum::<f64>() / col.len() as f64;
        assert!(signs.abs() < 0.01);
    }

    #[test]
    fn header_then_binary() {
        let s = sample_mu_lp(2, 3.0, 5, 3).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        let nl = buf.iter().position(|&b| b == b'\n').unwrap();
        let header: serde_json::Value = serde_json::from_slice(&buf[..nl]).unwrap();
        assert_eq!(header["count"], 5);
        assert_eq!(buf.len() - nl - 1, 10 * 8);
        let first = f64::from_le_bytes(buf[nl + 1..nl + 9].try_into().unwrap());
        assert_eq!(first, s.row(0)[0]);
    }
}
