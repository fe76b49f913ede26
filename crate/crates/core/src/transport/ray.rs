use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::{integrate_pieces, roots, Tolerance};

const TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-13,
    max_intervals: 4000,
};

/// Drop in the exponent below the peak past which the tail is ignored.
const TAIL_DROP: f64 = 60.0;

pub(crate) type LogFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `r ↦ exp(φ(r))` on `[0, ∞)` with `φ` concave (`-∞` off the support).
///
/// Integrals are carried in log space relative to the largest value of `φ`
/// on the integration range, so large powers `r^{n-1}` neither overflow nor
/// lose small masses.
#[derive(Clone)]
pub(crate) struct RayIntegrand {
    phi: LogFn,
    peak: f64,
    end: f64,
}

impl RayIntegrand {
    pub(crate) fn new(phi: LogFn) -> Result<Self> {
        let finite = |r: f64| phi(r) > f64::NEG_INFINITY;
        let mut s = 1.0;
        while !finite(s) {
            s *= 0.5;
            if s < 1e-300 {
                return Err(Error::NonIntegrable("ray integrand vanishes near the origin".into()));
            }
        }
        // Walk right until past the peak or off the support.
        let mut support_end = None;
        loop {
            let next = 2.0 * s;
            if !finite(next) {
                support_end = Some(roots::bisect_predicate(|r| !finite(r), s, next, 0.0, 1e-16));
                break;
            }
            if phi(next) <= phi(s) {
                break;
            }
            s = next;
            if s > 1e15 {
                return Err(Error::NonIntegrable("ray integrand keeps increasing".into()));
            }
        }
        let hi = support_end.unwrap_or(2.0 * s);
        let (mut peak, phi_peak) = roots::golden_max(&*phi, 0.0, hi, 1e-13 * hi);
        if let Some(e) = support_end {
            // The maximum may sit on the boundary of the support.
            if phi(e) >= phi_peak {
                peak = e;
            }
        }
        let end = match support_end {
            Some(e) => e,
            None => {
                let top = phi(peak);
                let mut w = peak.max(1.0);
                while phi(peak + w) > top - TAIL_DROP {
                    w *= 2.0;
                    if w > 1e15 {
                        return Err(Error::NonIntegrable("ray integrand has a heavy tail".into()));
                    }
                }
                peak + w
            }
        };
        Ok(RayIntegrand { phi, peak, end })
    }

    /// `ln ∫_a^b exp(φ)`, `-∞` for an empty range.
    pub(crate) fn ln_integral(&self, a: f64, b: f64) -> Result<f64> {
        let a = a.max(0.0);
        let b = b.min(self.end);
        if b <= a {
            return Ok(f64::NEG_INFINITY);
        }
        let phi = &*self.phi;
        let c = self.peak.clamp(a, b);
        let reference = [phi(c), phi(a), phi(b), phi(0.5 * (a + b))]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        if reference == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let mut breaks = vec![a, c, b];
        breaks.dedup();
        let s = integrate_pieces(|r| (phi(r) - reference).exp(), &breaks, TOL)?.value;
        Ok(reference + s.ln())
    }

    pub(crate) fn ln_total(&self) -> Result<f64> {
        self.ln_integral(0.0, self.end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::special::{gamma_p, ln_gamma};

    #[test]
    fn gamma_integrals() {
        // ∫_0^∞ r^{n-1} e^{-r^2} dr = Γ(n/2)/2
        for &n in &[1usize, 2, 16, 200] {
            let k = (n - 1) as f64;
            let ray = RayIntegrand::new(Arc::new(move |r: f64| -r * r + k * r.ln())).unwrap();
            let exact = ln_gamma(n as f64 / 2.0) - 2f64.ln();
            assert!(
                (ray.ln_total().unwrap() - exact).abs() < 1e-12 * exact.abs().max(1.0),
                "n={n}"
            );
            let part = ray.ln_integral(0.0, 1.3).unwrap() - ray.ln_total().unwrap();
            let p = gamma_p(n as f64 / 2.0, 1.69);
            assert!((part - p.ln()).abs() < 1e-11, "n={n}");
        }
    }

    #[test]
    fn bounded_support() {
        // r^{n-1} on [0, 2]
        let ray = RayIntegrand::new(Arc::new(
            |r: f64| if r <= 2.0 { 3.0 * r.ln() } else { f64::NEG_INFINITY },
        ))
        .unwrap();
        assert!((ray.ln_total().unwrap() - 4.0f64.ln()).abs() < 1e-13);
        assert!((ray.ln_integral(0.0, 1.0).unwrap() - 0.25f64.ln()).abs() < 1e-13);
    }
}
