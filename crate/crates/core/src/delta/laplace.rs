use super::ModulusSpec;
use crate::error::{Error, Result};
use crate::numeric::{integrate_pieces, roots, Tolerance};

const GRID: usize = 256;
const TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-13,
    max_intervals: 4000,
};

/// `ln ∫_0^∞ exp(t x - k δ(x)) dx`.
///
/// Evaluated relative to the peak of the exponent, so it stays finite when
/// the integral itself overflows. Beyond a point `X` where `k δ(X)/X > t`
/// the remainder is at most `exp(h(X)) / (k δ(X)/X - t)` because `δ(x)/x`
/// is non-decreasing; integration stops once that is negligible.
pub fn ln_laplace_integral(delta: &ModulusSpec, k: f64, t: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite() && t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("need k > 0 and t >= 0, got k = {k}, t = {t}")));
    }
    let h = |x: f64| t * x - k * delta.eval(x);
    let limit = delta.finite_limit();
    let rate = |x: f64| k * delta.ratio_at(x) - t;

    // Right end of the peak search: the support end, or where the tail
    // estimate starts to apply.
    let x0 = if limit.is_finite() {
        limit
    } else {
        let (_, hi) = roots::expand_upper(|x| rate(x) > 0.0, 1.0, 1e15).map_err(|_| {
            Error::NotUniformlyConvex(format!("∫ exp({t} x - {k} δ(x)) dx diverges or decays too slowly"))
        })?;
        hi
    };

    let step = x0 / GRID as f64;
    let (best_i, _) =
        (0..=GRID).map(|i| (i, h(i as f64 * step))).fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
        );
    let a = best_i.saturating_sub(1) as f64 * step;
    let b = ((best_i + 1).min(GRID)) as f64 * step;
    let (x_peak, h_peak) = roots::golden_max(h, a, b, 1e-12 * x0);
    let h_max = h_peak.max(h(best_i as f64 * step)).max(0.0);

    let scaled = |x: f64| (h(x) - h_max).exp();
    let mut breaks = vec![0.0, x_peak, x0];
    breaks.extend(delta.kinks().into_iter().filter(|&c| c > 0.0 && c < x0));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks.retain(|&x| x <= x0);
    let mut sum = integrate_pieces(scaled, &breaks, TOL)?.value;

    if limit.is_infinite() {
        let mut end = x0;
        loop {
            let r = rate(end);
            let remainder = if r > 0.0 {
                (h(end) - h_max).exp() / r
            } else {
                f64::INFINITY
            };
            if remainder <= 1e-17 * sum {
                break;
            }
            if end > 1e15 {
                return Err(Error::NotUniformlyConvex(
                    "tail of the exponential integral does not vanish".into(),
                ));
            }
            let next = 2.0 * end;
            let mut pieces = vec![end, next];
            pieces.extend(delta.kinks().into_iter().filter(|&c| c > end && c < next));
            pieces.sort_by(f64::total_cmp);
            sum += integrate_pieces(scaled, &pieces, TOL)?.value;
            end = next;
        }
    }
    Ok(h_max + sum.ln())
}

/// `M = ∫_0^∞ exp(-k δ(t)) dt`.
pub fn exp_integral(delta: &ModulusSpec, k: f64) -> Result<f64> {
    ln_laplace_integral(delta, k, 0.0).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delta::TableExtension;
    use crate::numeric::special::{gamma_fn, normal_cdf};
    use std::f64::consts::PI;

    #[test]
    fn power_closed_form() {
        for &(alpha, p) in &[(0.5, 2.0), (1.0, 3.0), (0.125, 2.0), (2.0, 8.0)] {
            let d = ModulusSpec::power(alpha, p).unwrap();
            let exact = gamma_fn(1.0 + 1.0 / p) * alpha.powf(-1.0 / p);
            let m = exp_integral(&d, 1.0).unwrap();
            assert!(((m - exact) / exact).abs() < 1e-12, "alpha={alpha} p={p}");
        }
    }

    #[test]
    fn gaussian_with_drift() {
        // ∫_0^∞ exp(t x - x²/2) dx = √(2π) e^{t²/2} Φ(t)
        let d = ModulusSpec::power(0.5, 2.0).unwrap();
        for &t in &[0.0, 0.5, 3.0, 30.0] {
            let exact = 0.5 * (2.0 * PI).ln() + 0.5 * t * t + normal_cdf(t).ln();
            let v = ln_laplace_integral(&d, 1.0, t).unwrap();
            assert!((v - exact).abs() < 1e-11 * exact.abs().max(1.0), "t={t}");
        }
    }

    #[test]
    fn truncated_and_table() {
        let d = ModulusSpec::truncated(ModulusSpec::power(1.0, 2.0).unwrap(), 0.5).unwrap();
        // ∫_0^0.5 exp(-x²) dx = √π/2 erf(0.5)
        let exact = PI.sqrt() * (normal_cdf(0.5 * 2f64.sqrt()) - 0.5);
        assert!((exp_integral(&d, 1.0).unwrap() - exact).abs() < 1e-13);

        // δ(t) = t on [0, ∞) via a table with constant ratio.
        let lin = ModulusSpec::table(vec![(1.0, 1.0), (2.0, 2.0)], TableExtension::LinearRatio).unwrap();
        assert!((exp_integral(&lin, 2.0).unwrap() - 0.5).abs() < 1e-13);
        assert!((ln_laplace_integral(&lin, 2.0, 1.0).unwrap() - 0.0).abs() < 1e-12);
        assert!(matches!(
            ln_laplace_integral(&lin, 2.0, 2.5),
            Err(Error::NotUniformlyConvex(_))
        ));
    }

    #[test]
    fn zero_modulus_diverges() {
        assert!(matches!(
            exp_integral(&ModulusSpec::Zero, 1.0),
            Err(Error::NotUniformlyConvex(_))
        ));
    }
}
