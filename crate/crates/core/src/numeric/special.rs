//! Normal and gamma special functions.
//!
//! `erfc` and the Gamma function come from `libm` (statrs' erf family is only
//! good to about 1e-10). The incomplete gamma function comes from `statrs`;
//! its inverse is solved here so both tails keep full relative precision.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::{erf::erfc_inv, gamma};

pub fn gamma_fn(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `1/sqrt(2 pi)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// `Phi^{-1}(p)`, accurate in relative terms for tiny `p`.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    // Polish in log-space against the accurate cdf; the starting point is
    // only good to about 1e-10.
    for _ in 0..3 {
        let (tail, target) = if x < 0.0 {
            (normal_cdf(x), p)
        } else {
            (normal_sf(x), 1.0 - p)
        };
        if !(tail > 0.0) {
            break;
        }
        let slope = normal_pdf(x) / tail;
        let step = (tail.ln() - target.ln()) / slope;
        x -= if x < 0.0 { step } else { -step };
        if step.abs() <= f64::EPSILON * x.abs() {
            break;
        }
    }
    x
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    gamma::gamma_lr(a, x)
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma::gamma_ur(a, x)
}

/// Solves `P(a, x) = p` for `x`.
pub fn inv_gamma_p(a: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p <= 0.5 {
        inv_gamma(a, p, false)
    } else {
        inv_gamma(a, 1.0 - p, true)
    }
}

/// Solves `Q(a, x) = q` for `x`.
pub fn inv_gamma_q(a: f64, q: f64) -> f64 {
    if q <= 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return 0.0;
    }
    if q <= 0.5 {
        inv_gamma(a, q, true)
    } else {
        inv_gamma(a, 1.0 - q, false)
    }
}

// Newton iteration on `ln T(x) = ln target`, where `T` is `Q` when `upper`
// and `P` otherwise. Working in log-space keeps the steps sane deep in either
// tail; a bracket guards against overshoot.
fn inv_gamma(a: f64, target: f64, upper: bool) -> f64 {
    let gln = ln_gamma(a);
    let ln_target = target.ln();
    let p_lower = if upper { 1.0 - target } else { target };

    let mut x = if a > 1.0 {
        let t = (-2.0 * ln_target).sqrt();
        let mut z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
        if !upper {
            z = -z;
        }
        (a * (1.0 - 1.0 / (9.0 * a) - z / (3.0 * a.sqrt())).powi(3)).max(1e-3)
    } else {
        let t = 1.0 - a * (0.253 + a * 0.12);
        if upper && target < 1.0 - t {
            1.0 - (target / (1.0 - t)).ln()
        } else if !upper && p_lower < t {
            (p_lower / t).powf(1.0 / a)
        } else {
            1.0 - ((1.0 - p_lower) / (1.0 - t)).ln()
        }
    };

    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    for _ in 0..200 {
        if !(x > lo && x < hi) {
            x = bracket_split(lo, hi);
        }
        let tail = if upper { gamma_q(a, x) } else { gamma_p(a, x) };
        if tail == target {
            return x;
        }
        // P grows with x and Q shrinks; orient the bracket accordingly.
        let root_below = (tail > target) != upper;
        if root_below {
            hi = x;
        } else {
            lo = x;
        }
        if tail <= 0.0 {
            continue;
        }
        let ln_dens = -x + (a - 1.0) * x.ln() - gln;
        // d/dx ln T = +-dens/T
        let slope = (ln_dens - tail.ln()).exp() * if upper { -1.0 } else { 1.0 };
        let step = (tail.ln() - ln_target) / slope;
        let next = x - step;
        if !(next > lo && next < hi) || !step.is_finite() {
            // Out of bracket; the loop head bisects.
            x = f64::NAN;
            continue;
        }
        if step.abs() <= 4.0 * f64::EPSILON * next {
            return next;
        }
        x = next;
        if hi.is_finite() && hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    if x.is_nan() {
        bracket_split(lo, hi)
    } else {
        x
    }
}

// Next trial point for a bracket that may span many orders of magnitude.
fn bracket_split(lo: f64, hi: f64) -> f64 {
    if !hi.is_finite() {
        2.0 * lo.max(1.0)
    } else if lo == 0.0 {
        hi * 1e-3
    } else if hi > 4.0 * lo {
        (lo * hi).sqrt()
    } else {
        0.5 * (lo + hi)
    }
}

/// `ln` of the volume of the unit `l_q` ball in dimension `n`.
pub fn ln_lq_ball_volume(n: usize, q: f64) -> f64 {
    let n = n as f64;
    n * (2.0 * gamma_fn(1.0 + 1.0 / q)).ln() - ln_gamma(1.0 + n / q)
}

/// `ln` of the volume of the Euclidean unit ball in dimension `n`.
pub fn ln_euclidean_ball_volume(n: usize) -> f64 {
    let n = n as f64;
    0.5 * n * PI.ln() - ln_gamma(0.5 * n + 1.0)
}

/// `ln(e^a + e^b)` without overflow.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_round_trip() {
        for &p in &[1e-300, 1e-30, 1e-10, 1e-3, 0.1, 0.5, 0.75, 0.999, 1.0 - 1e-12] {
            let x = normal_quantile(p);
            let back = if x < 0.0 { normal_cdf(x) } else { 1.0 - normal_sf(x) };
            assert!(((back - p) / p).abs() < 1e-12, "p={p} x={x} back={back}");
        }
        assert_eq!(normal_quantile(0.5), 0.0);
    }

    #[test]
    fn known_normal_values() {
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
    }

    #[test]
    fn inverse_gamma_round_trip() {
        for &a in &[0.125, 0.25, 1.0 / 3.0, 0.5, 1.0, 2.5, 8.0, 40.0] {
            for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-9] {
                let x = inv_gamma_p(a, p);
                let back = gamma_p(a, x);
                let rel = if p <= 0.5 {
                    (back - p) / p
                } else {
                    (gamma_q(a, x) - (1.0 - p)) / (1.0 - p)
                };
                assert!(rel.abs() < 1e-9, "a={a} p={p} x={x} rel={rel}");
            }
        }
    }

    #[test]
    fn inverse_gamma_q_tail() {
        let a = 0.25;
        let q = 1e-200;
        let x = inv_gamma_q(a, q);
        assert!(((gamma_q(a, x) - q) / q).abs() < 1e-8, "x={x}");
    }

    #[test]
    fn exponential_case_is_closed_form() {
        for &p in &[0.01, 0.5, 0.9] {
            let x = inv_gamma_p(1.0, p);
            assert!((x + (1.0 - p).ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn ball_volumes() {
        assert!((ln_lq_ball_volume(2, 2.0) - PI.ln()).abs() < 1e-14);
        assert!((ln_euclidean_ball_volume(3) - (4.0 * PI / 3.0).ln()).abs() < 1e-14);
        assert!((ln_lq_ball_volume(3, 1.0) - (8.0f64 / 6.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn log_add() {
        assert!((ln_add_exp(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(ln_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
    }
}
