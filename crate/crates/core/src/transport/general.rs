//! Bodies and radial maps of general log-concave densities, computed by
//! integrating along rays.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::ray::RayIntegrand;
use super::LogDensity;
use crate::error::{Error, Result};
use crate::numeric::optimize::NelderMead;
use crate::numeric::{integrate, roots, Tolerance};

type LnDensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A log-concave density given by an evaluator of `ln f` (normalization is
/// not required unless stated).
#[derive(Clone)]
pub struct GeneralDensity {
    name: String,
    dim: usize,
    ln_f: LnDensityFn,
}

impl fmt::Debug for GeneralDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralDensity")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

impl GeneralDensity {
    pub fn new<F>(name: &str, dim: usize, ln_f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        Ok(GeneralDensity {
            name: name.to_string(),
            dim,
            ln_f: Arc::new(ln_f),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The density `x ↦ f(x + shift)`.
    pub fn shifted(&self, shift: &[f64]) -> GeneralDensity {
        let inner = self.ln_f.clone();
        let shift = shift.to_vec();
        GeneralDensity {
            name: self.name.clone(),
            dim: self.dim,
            ln_f: Arc::new(move |x: &[f64]| {
                let y: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a + b).collect();
                inner(&y)
            }),
        }
    }
}

impl LogDensity for GeneralDensity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn ln_density(&self, x: &[f64]) -> f64 {
        (self.ln_f)(x)
    }
}

fn ray_of<D: LogDensity + Clone + Send + Sync + 'static>(f: &D, x: &[f64]) -> Result<RayIntegrand> {
    let f = f.clone();
    let x = x.to_vec();
    let k = (f.dim() - 1) as f64;
    RayIntegrand::new(Arc::new(move |r: f64| {
        let y: Vec<f64> = x.iter().map(|v| r * v).collect();
        let lf = f.ln_density(&y);
        if k == 0.0 {
            lf
        } else {
            lf + k * r.ln()
        }
    }))
}

/// `‖x‖_{K_f} = (n ∫_0^∞ f(rx) r^{n-1} dr)^{-1/n}` for a probability density.
pub fn kf_gauge<D: LogDensity + Clone + Send + Sync + 'static>(f: &D, x: &[f64]) -> Result<f64> {
    if x.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let n = f.dim() as f64;
    let ln_i = ray_of(f, x)?.ln_total()?;
    Ok((-(n.ln() + ln_i) / n).exp())
}

/// Gauge of `K_f ∩ -K_f`, the symmetrization used for non-even densities.
pub fn kf_hat_gauge<D: LogDensity + Clone + Send + Sync + 'static>(f: &D, x: &[f64]) -> Result<f64> {
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    Ok(kf_gauge(f, x)?.max(kf_gauge(f, &neg)?))
}

/// `u(x) = (∫_0^1 f(rx) r^{n-1} dr / ∫_0^∞ f(rx) r^{n-1} dr)^{1/n}`.
pub fn u_factor<D: LogDensity + Clone + Send + Sync + 'static>(f: &D, x: &[f64]) -> Result<f64> {
    if x.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let ray = ray_of(f, x)?;
    let ln_ratio = ray.ln_integral(0.0, 1.0)? - ray.ln_total()?;
    Ok((ln_ratio / f.dim() as f64).exp())
}

/// `T_f(x) = u(x) x / ‖x‖_{K_f}`.
pub fn transport_map<D: LogDensity + Clone + Send + Sync + 'static>(f: &D, x: &[f64]) -> Result<Vec<f64>> {
    if x.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; x.len()]);
    }
    let n = f.dim() as f64;
    let ray = ray_of(f, x)?;
    let ln_total = ray.ln_total()?;
    let u = ((ray.ln_integral(0.0, 1.0)? - ln_total) / n).exp();
    let gauge = (-(n.ln() + ln_total) / n).exp();
    Ok(x.iter().map(|v| u * v / gauge).collect())
}

/// Radius of `{f >= f(0) e^{-n}}` in direction `theta` (`+∞` if unbounded).
pub fn kf0_radius<D: LogDensity>(f: &D, theta: &[f64]) -> Result<f64> {
    let n = f.dim() as f64;
    let origin = vec![0.0; theta.len()];
    let ln_f0 = f.ln_density(&origin);
    if !ln_f0.is_finite() {
        return Err(Error::Precondition("density must be positive at the origin".into()));
    }
    if theta.iter().all(|&v| v == 0.0) {
        return Err(Error::invalid("direction must be non-zero"));
    }
    let outside = |s: f64| {
        let y: Vec<f64> = theta.iter().map(|v| s * v).collect();
        ln_f0 - f.ln_density(&y) >= n
    };
    match roots::expand_upper(outside, 1.0, 1e15) {
        Ok((lo, hi)) => Ok(roots::bisect_predicate(outside, lo, hi, 0.0, 1e-15)),
        Err(_) => Ok(f64::INFINITY),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionRadii {
    pub direction: Vec<f64>,
    pub r_kf: f64,
    pub r_kf0: f64,
    /// `r_{K_f} / ((sup f)^{1/n} r_{K_f^0})`, at most `C_n`.
    pub outer_ratio: f64,
    /// `f(0)^{1/n} r_{K_f^0} / r_{K_f}`, at most `D_n`.
    pub inner_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub c_slack: f64,
    pub d_slack: f64,
    pub rows: Vec<DirectionRadii>,
    pub outer_holds: bool,
    pub inner_holds: bool,
}

/// Default slack for `K_f ⊂ C (sup f)^{1/n} K_f^0`.
pub const DEFAULT_C_SLACK: f64 = std::f64::consts::E * 1.01;
/// Default slack for `f(0)^{1/n} K_f^0 ⊂ D K_f`.
pub const DEFAULT_D_SLACK: f64 = 2.5;

/// Compares `K_f` and the level body `K_f^0` along the given directions.
/// `f` must be a probability density with its maximum at the origin.
pub fn klartag_milman_check<D: LogDensity + Clone + Send + Sync + 'static>(
    f: &D,
    directions: &[Vec<f64>],
    c_slack: f64,
    d_slack: f64,
) -> Result<InclusionReport> {
    let n = f.dim() as f64;
    let f0_root = (f.ln_density(&vec![0.0; f.dim()]) / n).exp();
    let rows = directions
        .iter()
        .map(|theta| {
            let r_kf = 1.0 / kf_gauge(f, theta)?;
            let r_kf0 = kf0_radius(f, theta)?;
            Ok(DirectionRadii {
                direction: theta.clone(),
                r_kf,
                r_kf0,
                outer_ratio: r_kf / (f0_root * r_kf0),
                inner_ratio: f0_root * r_kf0 / r_kf,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InclusionReport {
        c_slack,
        d_slack,
        outer_holds: rows.iter().all(|r| r.outer_ratio <= c_slack),
        inner_holds: rows.iter().all(|r| r.inner_ratio <= d_slack),
        rows,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentsReport {
    pub n: usize,
    pub ratio: f64,
    /// `n! / ((n-1)!)^{(n+1)/n}`
    pub upper: f64,
    /// `n^{(n+1)/n} / (e (n+1))`
    pub lower: f64,
    /// Whether `sup h <= e^n` held, which the lower bound needs.
    pub sup_condition: bool,
}

/// `∫_0^∞ h r^n dr / (∫_0^∞ h r^{n-1} dr)^{(n+1)/n}` for a log-concave `h`
/// with `h(0) = 1`, given through `ln h`.
pub fn moments_ratio<H>(ln_h: H, n: usize) -> Result<MomentsReport>
where
    H: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
{
    use crate::numeric::special::ln_gamma;
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if ln_h(0.0).abs() > 1e-12 {
        return Err(Error::Precondition("profile must satisfy h(0) = 1".into()));
    }
    let moment = |k: f64| {
        let h = ln_h.clone();
        RayIntegrand::new(Arc::new(move |r: f64| if k == 0.0 { h(r) } else { h(r) + k * r.ln() }))?.ln_total()
    };
    let nf = n as f64;
    let ln_ratio = moment(nf)? - (nf + 1.0) / nf * moment(nf - 1.0)?;
    // sup of a log-concave h on a scan; h(0) = 1 so this only matters for
    // profiles increasing away from 0
    let sup_ln = (0..=2000).map(|i| ln_h(i as f64 * 0.01)).fold(0.0_f64, f64::max);
    Ok(MomentsReport {
        n,
        ratio: ln_ratio.exp(),
        upper: (ln_gamma(nf + 1.0) - (nf + 1.0) / nf * ln_gamma(nf)).exp(),
        lower: ((nf + 1.0) / nf * nf.ln() - 1.0 - (nf + 1.0).ln()).exp(),
        sup_condition: sup_ln <= nf,
    })
}

/// Nested adaptive quadrature of `f` over a box (meant for `dim <= 3`).
pub fn integrate_box<F: Fn(&[f64]) -> f64>(f: &F, lo: &[f64], hi: &[f64], tol: Tolerance) -> Result<f64> {
    fn rec<F: Fn(&[f64]) -> f64>(f: &F, lo: &[f64], hi: &[f64], tol: Tolerance, prefix: &[f64]) -> Result<f64> {
        let d = prefix.len();
        if d == lo.len() {
            return Ok(f(prefix));
        }
        let failure = std::cell::RefCell::new(None);
        let r = integrate(
            |t| {
                let mut p = prefix.to_vec();
                p.push(t);
                rec(f, lo, hi, tol, &p).unwrap_or_else(|e| {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                })
            },
            lo[d],
            hi[d],
            tol,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(r?.value)
    }
    if lo.len() != hi.len() || lo.is_empty() {
        return Err(Error::invalid("box bounds must have equal, positive length"));
    }
    rec(f, lo, hi, tol, &[])
}

#[derive(Debug, Clone, Serialize)]
pub struct FradeliziReport {
    pub barycenter: Vec<f64>,
    /// `f(barycenter) / sup f`
    pub ratio: f64,
    /// `e^{-n}`
    pub bound: f64,
    pub holds: bool,
}

/// Barycenter of `f` restricted to the box `[lo, hi]`.
pub fn barycenter(f: &GeneralDensity, lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    let tol = Tolerance {
        abs: 1e-14,
        rel: 1e-10,
        max_intervals: 400,
    };
    let dens = |x: &[f64]| f.ln_density(x).exp();
    let mass = integrate_box(&dens, lo, hi, tol)?;
    (0..f.dim())
        .map(|i| Ok(integrate_box(&|x: &[f64]| x[i] * dens(x), lo, hi, tol)? / mass))
        .collect()
}

/// Checks `f(x_0) >= e^{-n} sup f` at the barycenter `x_0`, which must be
/// the origin to within `tol`. The box must carry essentially all the mass.
pub fn fradelizi_check(f: &GeneralDensity, lo: &[f64], hi: &[f64], tol: f64) -> Result<FradeliziReport> {
    let b = barycenter(f, lo, hi)?;
    if b.iter().any(|v| v.abs() > tol) {
        return Err(Error::Precondition(format!("barycenter {b:?} is not at the origin")));
    }
    let origin = vec![0.0; f.dim()];
    let nm = NelderMead {
        max_evals: 20_000,
        ftol: 1e-15,
        initial_step: 0.5,
    };
    let min = nm.minimize(|x| -f.ln_density(x), &origin);
    let polished = nm.minimize(|x| -f.ln_density(x), &min.x);
    let ln_sup = (-polished.value).max(f.ln_density(&origin));
    let ratio = (f.ln_density(&origin) - ln_sup).exp();
    let bound = (-(f.dim() as f64)).exp();
    Ok(FradeliziReport {
        barycenter: b,
        ratio,
        bound,
        holds: ratio >= bound * (1.0 - 1e-9),
    })
}
