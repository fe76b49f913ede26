use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ray::RayIntegrand;
use super::LogDensity;
use crate::delta::NormSpec;
use crate::error::{Error, Result};

/// Radial profile `h` of a density `f(x) = h(‖x‖)/Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialProfile {
    /// `exp(-r^p)`, `p >= 1`.
    ExpPower { p: f64 },
    /// `exp(-beta r^2)` on `[0, radius]` (no cut when `radius` is absent).
    TruncatedGaussian {
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
    },
    /// `1[r <= 1]`.
    Indicator,
}

impl RadialProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RadialProfile::ExpPower { p } if !(p >= 1.0 && p.is_finite()) => {
                Err(Error::invalid(format!("exponential profile needs p >= 1, got {p}")))
            }
            RadialProfile::TruncatedGaussian { beta, radius } => {
                if !(beta >= 0.0 && beta.is_finite()) {
                    return Err(Error::invalid(format!("beta must be nonnegative, got {beta}")));
                }
                match radius {
                    Some(r) if !(r > 0.0) => Err(Error::invalid(format!("radius must be positive, got {r}"))),
                    None if beta == 0.0 => Err(Error::NonIntegrable("flat profile without a cut".into())),
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    pub fn ln_h(&self, r: f64) -> f64 {
        match *self {
            RadialProfile::ExpPower { p } => -r.powf(p),
            RadialProfile::TruncatedGaussian { beta, radius } => {
                if radius.is_some_and(|cut| r > cut) {
                    f64::NEG_INFINITY
                } else {
                    -beta * r * r
                }
            }
            RadialProfile::Indicator => {
                if r <= 1.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Right end of the support of `h`, if bounded.
    pub fn support_end(&self) -> Option<f64> {
        match *self {
            RadialProfile::ExpPower { .. } => None,
            RadialProfile::TruncatedGaussian { radius, .. } => radius,
            RadialProfile::Indicator => Some(1.0),
        }
    }

    /// `r ↦ ln h(r) + (n-1) ln r`.
    pub(crate) fn ray(&self, n: usize) -> Result<RayIntegrand> {
        let profile = *self;
        let k = (n - 1) as f64;
        RayIntegrand::new(Arc::new(move |r: f64| {
            let lh = profile.ln_h(r);
            if k == 0.0 {
                lh
            } else {
                lh + k * r.ln()
            }
        }))
    }
}

/// Probability density `f(x) = h(‖x‖)/Z` on `R^n`.
#[derive(Clone)]
pub struct RadialDensity {
    norm: NormSpec,
    profile: RadialProfile,
    ln_vol: f64,
    ln_z: f64,
    ln_j_total: f64,
    ray: RayIntegrand,
}

impl fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialDensity")
            .field("norm", &self.norm)
            .field("profile", &self.profile)
            .field("ln_z", &self.ln_z)
            .finish()
    }
}

impl RadialDensity {
    /// `Z = n mes{‖x‖ <= 1} ∫_0^∞ h(r) r^{n-1} dr`.
    pub fn new(norm: NormSpec, profile: RadialProfile) -> Result<Self> {
        profile.validate()?;
        let n = norm.dim();
        let ln_vol = norm
            .ln_unit_ball_volume()
            .ok_or_else(|| Error::invalid("radial densities need a norm with known unit-ball volume"))?;
        let ray = profile.ray(n)?;
        let ln_j_total = ray.ln_total()?;
        let ln_z = (n as f64).ln() + ln_vol + ln_j_total;
        Ok(RadialDensity {
            norm,
            profile,
            ln_vol,
            ln_z,
            ln_j_total,
            ray,
        })
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn profile(&self) -> RadialProfile {
        self.profile
    }

    pub fn ln_z(&self) -> f64 {
        self.ln_z
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.ln_density(x).exp()
    }

    pub fn density_at_zero(&self) -> f64 {
        (self.profile.ln_h(0.0) - self.ln_z).exp()
    }

    /// `P(‖X‖ <= s)`.
    pub fn radial_cdf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self.ray.ln_integral(0.0, s) {
            Ok(v) => (v - self.ln_j_total).exp().min(1.0),
            Err(_) => f64::NAN,
        }
    }

    /// Gauge of the body of the density: every `K_f` of a radial density is
    /// the unit ball of the norm rescaled to unit volume, so
    /// `‖x‖_{K_f} = mes{‖y‖ <= 1}^{1/n} ‖x‖`.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        self.norm.norm(x) * (self.ln_vol / self.norm.dim() as f64).exp()
    }

    /// `u(x) = P(‖X‖ <= ‖x‖)^{1/n}`, the `K_f`-gauge of the transported point.
    pub fn u(&self, x: &[f64]) -> f64 {
        self.radial_cdf(self.norm.norm(x)).powf(1.0 / self.norm.dim() as f64)
    }

    /// The radial map pushing this density to Lebesgue measure on `K_f`.
    pub fn transport(&self, x: &[f64]) -> Vec<f64> {
        let g = self.gauge(x);
        if g == 0.0 {
            return vec![0.0; x.len()];
        }
        let k = self.u(x) / g;
        x.iter().map(|v| v * k).collect()
    }
}

impl LogDensity for RadialDensity {
    fn dim(&self) -> usize {
        self.norm.dim()
    }

    fn ln_density(&self, x: &[f64]) -> f64 {
        self.profile.ln_h(self.norm.norm(x)) - self.ln_z
    }
}
