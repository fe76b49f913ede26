//! Bracketing root finders and a unimodal maximizer.

use crate::error::{Error, Result};

/// Smallest `x` in `[lo, hi]` at which the monotone predicate flips to true,
/// to within `xtol` (absolute) or `rtol` (relative to `|x|`).
///
/// `pred(lo)` is assumed false and `pred(hi)` true; the returned point
/// satisfies the predicate.
pub fn bisect_predicate<P: FnMut(f64) -> bool>(mut pred: P, mut lo: f64, mut hi: f64, xtol: f64, rtol: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= xtol.max(rtol * mid.abs()) {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Root of an increasing function on a bracket with `f(lo) <= 0 <= f(hi)`.
pub fn bisect_increasing<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64, rtol: f64) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo.is_nan() || fhi.is_nan() || flo > 0.0 || fhi < 0.0 {
        return Err(Error::RootFinding(format!(
            "bracket [{lo}, {hi}] does not straddle a root (f = {flo}, {fhi})"
        )));
    }
    Ok(bisect_predicate(|x| f(x) >= 0.0, lo, hi, xtol, rtol))
}

/// Doubles `hi` from `start` until `pred(hi)` holds; returns `(lo, hi)` with
/// `pred(lo)` false. Fails once `hi` exceeds `limit`.
pub fn expand_upper<P: FnMut(f64) -> bool>(mut pred: P, start: f64, limit: f64) -> Result<(f64, f64)> {
    let mut lo = 0.0;
    let mut hi = start;
    while !pred(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > limit || !hi.is_finite() {
            return Err(Error::RootFinding(format!("no bracket found below {limit}")));
        }
    }
    Ok((lo, hi))
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= xtol.max(1e-15 * (a.abs() + b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect_increasing(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bad_bracket_is_an_error() {
        assert!(bisect_increasing(|x| x + 10.0, 0.0, 1.0, 1e-12, 0.0).is_err());
    }

    #[test]
    fn predicate_returns_satisfying_point() {
        let x = bisect_predicate(|x| x >= 0.25, 0.0, 1.0, 1e-14, 0.0);
        assert!(x >= 0.25 && x - 0.25 < 1e-13);
    }

    #[test]
    fn expansion_stops_at_limit() {
        assert!(expand_upper(|_| false, 1.0, 1e6).is_err());
        let (lo, hi) = expand_upper(|x| x > 100.0, 1.0, 1e6).unwrap();
        assert_eq!((lo, hi), (64.0, 128.0));
    }

    #[test]
    fn golden_section_quadratic() {
        let (x, fx) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 1.0, -2.0, 5.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-13);
    }
}
