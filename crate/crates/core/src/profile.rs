//! Dimension-free lower bounds for isoperimetric profiles, packaged as
//! curves `ã ↦ value` on `(0, 1/2]`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::delta::{ln_laplace_integral, ModulusSpec};
use crate::error::{Error, Result};
use crate::numeric::special::{ln_gamma, normal_pdf, normal_quantile};
use crate::oned::TailBound;

type CurveFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `(e - 1) / (2e)`, the constant of the tail bound when `δ(M) <= 1`.
pub const BASE_CONSTANT: f64 = 0.316_060_279_414_278_8;

/// Default for the Lipschitz constant in the power-type n-dimensional bound.
/// The transport study finds normalized quotients of `u` and `T` at most 1
/// for the l_2 and l_4 cases with n <= 16; 3 is the factor relating the two
/// Lipschitz constants applied to that value.
pub const DEFAULT_LIPSCHITZ_CONSTANT: f64 = 3.0;

/// Default constant multiplying the general-modulus n-dimensional bound.
pub fn default_c_prime() -> f64 {
    let e = std::f64::consts::E;
    e / (4.0 * (e - 1.0))
}

/// A named lower-bound curve on `(0, 1/2]`.
#[derive(Clone)]
pub struct BoundCurve {
    name: String,
    formula: &'static str,
    params: Value,
    eval: CurveFn,
}

impl fmt::Debug for BoundCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundCurve")
            .field("name", &self.name)
            .field("formula", &self.formula)
            .field("params", &self.params)
            .finish()
    }
}

impl BoundCurve {
    fn new(name: impl Into<String>, formula: &'static str, params: Value, eval: CurveFn) -> Self {
        BoundCurve {
            name: name.into(),
            formula,
            params,
            eval,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn formula(&self) -> &'static str {
        self.formula
    }

    pub fn params(&self) -> &Value {
        &self.params
    }

    /// Renames the curve (e.g. to disambiguate columns in a sweep).
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn eval(&self, a_tilde: f64) -> Result<f64> {
        if !(a_tilde > 0.0 && a_tilde <= 0.5) {
            return Err(Error::invalid(format!("ã must be in (0, 1/2], got {a_tilde}")));
        }
        Ok((self.eval)(a_tilde))
    }
}

/// `C_δ ã γ(log 1/ã)` with `γ(t) = t/δ⁻¹(t/2)` and
/// `C_δ = (e-1)/(2e max(2δ(∫_0^∞ exp(-2δ)), 1))`, for measures whose
/// potential satisfies the midpoint condition with modulus `δ`.
///
/// Evaluated as the one-dimensional tail bound with modulus `2δ`.
pub fn bound_ulc(delta: &ModulusSpec) -> Result<BoundCurve> {
    delta.validate()?;
    let params = json!({ "delta": delta, "c_delta": null });
    if *delta == ModulusSpec::Zero {
        return Ok(BoundCurve::new("ulc", ULC_FORMULA, params, Arc::new(|_| 0.0)));
    }
    let tail = TailBound::new(&delta.scaled(2.0))?;
    let params = json!({ "delta": delta, "c_delta": tail.c_delta() });
    Ok(BoundCurve::new(
        "ulc",
        ULC_FORMULA,
        params,
        Arc::new(move |at| tail.eval(at).map(|p| p.value).unwrap_or(f64::NAN)),
    ))
}

const ULC_FORMULA: &str = "C_δ ã γ(log 1/ã), γ(t) = t/δ⁻¹(t/2)";

/// Closed form of [`bound_ulc`] for `δ(t) = α t^p`:
/// `c α^{1/p} ã log^{1-1/p}(1/ã)` with `c = (e-1)/(2e) 2^{1/p}`.
pub fn bound_power_modulus(alpha: f64, p: f64) -> Result<BoundCurve> {
    if p < 2.0 {
        return Err(Error::invalid(format!("power-type moduli need p >= 2, got {p}")));
    }
    ModulusSpec::power(alpha, p)?;
    let c = BASE_CONSTANT * 2f64.powf(1.0 / p);
    let k = c * alpha.powf(1.0 / p);
    Ok(BoundCurve::new(
        "power_modulus",
        "c α^{1/p} ã log^{1-1/p}(1/ã)",
        json!({ "alpha": alpha, "p": p, "c": c }),
        Arc::new(move |at| k * at * (-at.ln()).powf(1.0 - 1.0 / p)),
    ))
}

/// The Gaussian isoperimetric profile `φ(Φ⁻¹(ã))`.
pub fn bound_bakry_ledoux() -> BoundCurve {
    BoundCurve::new(
        "bakry_ledoux",
        "φ(Φ⁻¹(ã))",
        json!({}),
        Arc::new(|at| normal_pdf(normal_quantile(at))),
    )
}

/// Bound for any log-concave measure with `ball_mass = μ{‖x‖ <= r}`:
/// `(1/2r)[ã log 1/ã + (1-ã) log 1/(1-ã) + log ball_mass]`, clamped at 0.
pub fn bound_bobkov(r: f64, ball_mass: f64) -> Result<BoundCurve> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    if !(ball_mass > 0.0 && ball_mass <= 1.0) {
        return Err(Error::invalid(format!("ball mass must be in (0, 1], got {ball_mass}")));
    }
    let ln_mass = ball_mass.ln();
    Ok(BoundCurve::new(
        "bobkov",
        "(1/2r)[ã log 1/ã + (1-ã) log 1/(1-ã) + log μ(rB)]",
        json!({ "r": r, "ball_mass": ball_mass }),
        Arc::new(move |at| {
            let h = -at * at.ln() - (1.0 - at) * (-at).ln_1p();
            ((h + ln_mass) / (2.0 * r)).max(0.0)
        }),
    ))
}

/// `bound_ulc(Power(α, p)) · Γ(1+n/p)^{1/n} / C_L`: the power-type bound
/// transferred to `exp(-α‖x‖^p)` in dimension `n` through a map with
/// Lipschitz constant `C_L Γ(1+n/p)^{-1/n}`.
pub fn bound_power_measure(alpha: f64, p: f64, n: usize, lipschitz_constant: f64) -> Result<BoundCurve> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if !(lipschitz_constant > 0.0 && lipschitz_constant.is_finite()) {
        return Err(Error::invalid(format!(
            "Lipschitz constant must be positive, got {lipschitz_constant}"
        )));
    }
    let base = bound_ulc(&ModulusSpec::power(alpha, p)?)?;
    let factor = (ln_gamma(1.0 + n as f64 / p) / n as f64).exp() / lipschitz_constant;
    let eval = base.eval.clone();
    Ok(BoundCurve::new(
        "power_measure",
        "ulc(αt^p)(ã) Γ(1+n/p)^{1/n} / C_L",
        json!({ "alpha": alpha, "p": p, "n": n, "lipschitz_constant": lipschitz_constant, "factor": factor }),
        Arc::new(move |at| eval(at) * factor),
    ))
}

/// `C_{n,δ} = (e-1)/(2e max(n δ(∫_0^{1/4} exp(-2nδ)), 1))`.
pub fn c_n_delta(delta: &ModulusSpec, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if !delta.eval(0.25).is_finite() {
        return Err(Error::invalid("modulus must be finite on [0, 1/4]"));
    }
    let nf = n as f64;
    let m = if *delta == ModulusSpec::Zero {
        0.25
    } else {
        let clipped = ModulusSpec::truncated(delta.clone(), 0.25)?;
        ln_laplace_integral(&clipped, 2.0 * nf, 0.0)?.exp()
    };
    let e = std::f64::consts::E;
    Ok((e - 1.0) / (2.0 * e * (nf * delta.eval(m)).max(1.0)))
}

/// `c' C_{n,δ} ã log(1/ã) / δ⁻¹(log(1/ã)/(2n))`, with `δ⁻¹` clipped at
/// `1/4`. Below `ã = exp(-2nδ(1/4))` the clip makes this the small-set
/// (bounded support) form `4 c' C_{n,δ} ã log(1/ã)`.
pub fn bound_body_modulus(delta: &ModulusSpec, n: usize, c_prime: f64) -> Result<BoundCurve> {
    delta.validate()?;
    if !(c_prime > 0.0 && c_prime.is_finite()) {
        return Err(Error::invalid(format!("c' must be positive, got {c_prime}")));
    }
    let c = c_n_delta(delta, n)?;
    let k = c_prime * c;
    let nf = n as f64;
    let d = delta.clone();
    Ok(BoundCurve::new(
        "body_modulus",
        "c' C_{n,δ} ã log(1/ã) / δ⁻¹(log(1/ã)/2n)",
        json!({ "delta": delta, "n": n, "c_prime": c_prime, "c_n_delta": c }),
        Arc::new(move |at| {
            let l = -at.ln();
            k * at * l / d.inverse(l / (2.0 * nf)).min(0.25)
        }),
    ))
}

/// Curve values on a grid of `ã`, one column per curve.
#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub names: Vec<String>,
    pub grid: Vec<f64>,
    /// `rows[i][j]` is curve `j` at `grid[i]`.
    pub rows: Vec<Vec<f64>>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("a_tilde");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (a, row) in self.grid.iter().zip(&self.rows) {
            out.push_str(&format!("{a:e}"));
            for v in row {
                out.push_str(&format!(",{v:e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parameters and formulas of the curves, for a sidecar file.
    pub fn describe(curves: &[BoundCurve]) -> Value {
        Value::Array(
            curves
                .iter()
                .map(|c| json!({ "name": c.name, "formula": c.formula, "params": c.params }))
                .collect(),
        )
    }
}

pub fn sweep(curves: &[BoundCurve], grid: &[f64]) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::invalid("sweep grid is empty"));
    }
    if let Some(&bad) = grid.iter().find(|&&a| !(a > 0.0 && a <= 0.5)) {
        return Err(Error::invalid(format!("grid point {bad} outside (0, 1/2]")));
    }
    let rows = grid
        .par_iter()
        .map(|&a| curves.iter().map(|c| c.eval(a)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        names: curves.iter().map(|c| c.name.clone()).collect(),
        grid: grid.to_vec(),
        rows,
    })
}

/// `n` points spaced evenly in `log ã` from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}
