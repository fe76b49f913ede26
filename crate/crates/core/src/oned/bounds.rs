//! Lower bounds for the isoperimetric profile of a log-concave density on
//! the line, and the exact profile they are compared against.

use serde::Serialize;

use super::Density1D;
use crate::delta::{ln_laplace_integral, ModulusSpec};
use crate::error::{Error, Result};
use crate::numeric::roots;

/// A point of a profile curve. `a_tilde = min(a, 1 - a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub a: f64,
    pub a_tilde: f64,
    pub value: f64,
}

pub(crate) fn fold(a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::invalid(format!("measure level must be in (0, 1), got {a}")));
    }
    Ok(a.min(1.0 - a))
}

/// `I(a) = min(f(F⁻¹(ã)), f(F⁻¹(1 - ã)))`: the least boundary measure of a
/// set of mass `a`, attained by half-lines.
pub fn exact_profile(d: &Density1D, a: f64) -> Result<ProfilePoint> {
    let at = fold(a)?;
    let left = d.density(d.quantile(at)?);
    let right = d.density(d.quantile_upper(at)?);
    Ok(ProfilePoint {
        a,
        a_tilde: at,
        value: left.min(right),
    })
}

/// `exp(-g(0)) ã`, valid for every log-concave density with its mode at 0.
pub fn cheeger_bound(d: &Density1D, a: f64) -> Result<ProfilePoint> {
    let at = fold(a)?;
    Ok(ProfilePoint {
        a,
        a_tilde: at,
        value: d.max_density() * at,
    })
}

/// Lower bound from a tail modulus: if `g(x) - g(0) >= δ(|x|)` then
/// `I(a) >= C_δ ã γ(ln(1/ã))` with `γ(t) = t / δ⁻¹(t)`,
/// `C_δ = (e - 1) / (2e max(δ(M_δ), 1))` and `M_δ = ∫_0^∞ exp(-δ)`.
#[derive(Debug, Clone)]
pub struct TailBound {
    delta: ModulusSpec,
    m_delta: f64,
    c_delta: f64,
}

impl TailBound {
    pub fn new(delta: &ModulusSpec) -> Result<Self> {
        delta.validate()?;
        if *delta == ModulusSpec::Zero {
            return Ok(TailBound {
                delta: delta.clone(),
                m_delta: f64::INFINITY,
                c_delta: 0.0,
            });
        }
        let m_delta = ln_laplace_integral(delta, 1.0, 0.0)?.exp();
        let e = std::f64::consts::E;
        let c_delta = (e - 1.0) / (2.0 * e * delta.eval(m_delta).max(1.0));
        Ok(TailBound {
            delta: delta.clone(),
            m_delta,
            c_delta,
        })
    }

    pub fn m_delta(&self) -> f64 {
        self.m_delta
    }

    pub fn c_delta(&self) -> f64 {
        self.c_delta
    }

    /// `γ(t) = t / δ⁻¹(t)`; zero when `δ` never reaches `t`.
    pub fn gamma(&self, t: f64) -> f64 {
        let inv = self.delta.inverse(t);
        if inv.is_infinite() {
            0.0
        } else {
            t / inv
        }
    }

    pub fn eval(&self, a: f64) -> Result<ProfilePoint> {
        let at = fold(a)?;
        let value = if self.c_delta == 0.0 {
            0.0
        } else {
            self.c_delta * at * self.gamma(-at.ln())
        };
        Ok(ProfilePoint { a, a_tilde: at, value })
    }
}

pub fn bound_tail(delta: &ModulusSpec, a: f64) -> Result<ProfilePoint> {
    TailBound::new(delta)?.eval(a)
}

/// Lower bound from a midpoint modulus: if
/// `(g(x) + g(y))/2 - g((x+y)/2) >= δ(|x - y|)` then
/// `I(a) >= ã ψ⁻¹(1/(2ã))` with `ψ(t) = t φ(t)` and
/// `φ(t) = ∫_0^∞ exp(t x - 2δ(x)) dx`.
#[derive(Debug, Clone)]
pub struct MidpointBound {
    doubled: ModulusSpec,
}

impl MidpointBound {
    /// `delta` is the midpoint modulus; fails for `δ ≡ 0`, where `φ` is
    /// infinite.
    pub fn new(delta: &ModulusSpec) -> Result<Self> {
        delta.validate()?;
        if *delta == ModulusSpec::Zero {
            return Err(Error::NotUniformlyConvex(
                "the midpoint bound needs a non-zero modulus".into(),
            ));
        }
        let bound = MidpointBound {
            doubled: delta.scaled(2.0),
        };
        bound.ln_phi(0.0)?;
        Ok(bound)
    }

    /// `ln φ(t)`; `+∞` where the integral diverges.
    pub fn ln_phi(&self, t: f64) -> Result<f64> {
        match ln_laplace_integral(&self.doubled, 1.0, t) {
            Err(Error::NotUniformlyConvex(_)) if t > 0.0 => Ok(f64::INFINITY),
            other => other,
        }
    }

    pub fn psi(&self, t: f64) -> Result<f64> {
        Ok(t * self.ln_phi(t)?.exp())
    }

    /// Solves `ψ(t) = s`. Bracketed by doubling or halving from `t = 1`,
    /// then bisected to relative precision well below `1e-10`.
    pub fn psi_inverse(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!("ψ⁻¹ needs a positive argument, got {s}")));
        }
        let ln_s = s.ln();
        // ψ is increasing, so compare in log space: ln t + ln φ(t) >= ln s.
        let mut failure = None;
        let mut reached = |t: f64| match self.ln_phi(t) {
            Ok(v) => t.ln() + v >= ln_s,
            Err(e) => {
                failure.get_or_insert(e);
                true
            }
        };
        let (mut lo, mut hi) = (1.0, 1.0);
        if reached(1.0) {
            while reached(lo) {
                hi = lo;
                lo *= 0.5;
                if lo < 1e-300 {
                    return Err(Error::RootFinding(format!("ψ⁻¹({s}) underflows")));
                }
            }
        } else {
            while !reached(hi) {
                lo = hi;
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(Error::RootFinding(format!("ψ⁻¹({s}) overflows")));
                }
            }
        }
        let t = roots::bisect_predicate(&mut reached, lo, hi, 0.0, 1e-14);
        match failure {
            Some(e) => Err(e),
            None => Ok(t),
        }
    }

    pub fn eval(&self, a: f64) -> Result<ProfilePoint> {
        let at = fold(a)?;
        Ok(ProfilePoint {
            a,
            a_tilde: at,
            value: at * self.psi_inverse(0.5 / at)?,
        })
    }
}

pub fn bound_midpoint(delta: &ModulusSpec, a: f64) -> Result<ProfilePoint> {
    MidpointBound::new(delta)?.eval(a)
}

/// One row of a bound comparison on a single density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub a: f64,
    pub a_tilde: f64,
    pub exact: f64,
    pub tail: f64,
    pub midpoint: Option<f64>,
    pub cheeger: f64,
}

/// Evaluates the exact profile and the available lower bounds on `grid`.
pub fn compare_bounds(
    d: &Density1D,
    tail: &ModulusSpec,
    midpoint: Option<&ModulusSpec>,
    grid: &[f64],
) -> Result<Vec<ComparisonRow>> {
    let tail_bound = TailBound::new(tail)?;
    let mid_bound = midpoint.map(MidpointBound::new).transpose()?;
    grid.iter()
        .map(|&a| {
            let exact = exact_profile(d, a)?;
            Ok(ComparisonRow {
                a,
                a_tilde: exact.a_tilde,
                exact: exact.value,
                tail: tail_bound.eval(a)?.value,
                midpoint: mid_bound.as_ref().map(|m| m.eval(a).map(|p| p.value)).transpose()?,
                cheeger: cheeger_bound(d, a)?.value,
            })
        })
        .collect()
}
