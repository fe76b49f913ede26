use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::special::{ln_euclidean_ball_volume, ln_lq_ball_volume};

type VecFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A symmetric norm on `R^n`, optionally multiplied by a positive `scale`.
#[derive(Clone)]
pub struct NormSpec {
    dim: usize,
    kind: NormKind,
    scale: f64,
}

#[derive(Clone)]
pub enum NormKind {
    Lq(f64),
    Euclidean,
    /// A user-supplied norm. `dual` must evaluate the dual norm of a linear
    /// functional given by its coefficient vector.
    Custom {
        name: String,
        norm: VecFn,
        dual: VecFn,
        ln_unit_ball_volume: Option<f64>,
    },
}

impl fmt::Debug for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormSpec")
            .field("dim", &self.dim)
            .field("kind", &self.kind_name())
            .field("scale", &self.scale)
            .finish()
    }
}

impl NormSpec {
    pub fn lq(dim: usize, q: f64) -> Result<Self> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::invalid(format!("l_q norm needs 1 < q < ∞, got {q}")));
        }
        Self::with_kind(dim, NormKind::Lq(q))
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::with_kind(dim, NormKind::Euclidean)
    }

    pub fn custom<N, D>(dim: usize, name: &str, norm: N, dual: D, ln_unit_ball_volume: Option<f64>) -> Result<Self>
    where
        N: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        D: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::with_kind(
            dim,
            NormKind::Custom {
                name: name.to_string(),
                norm: Arc::new(norm),
                dual: Arc::new(dual),
                ln_unit_ball_volume,
            },
        )
    }

    fn with_kind(dim: usize, kind: NormKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("norm dimension must be positive"));
        }
        Ok(NormSpec { dim, kind, scale: 1.0 })
    }

    /// The norm `x ↦ c ‖x‖`.
    pub fn scaled(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("norm scale must be positive, got {c}")));
        }
        self.scale *= c;
        Ok(self)
    }

    /// Rescaled so that the unit ball has volume one.
    pub fn unit_volume(self) -> Result<Self> {
        let ln_vol = self
            .ln_unit_ball_volume()
            .ok_or_else(|| Error::invalid("unit ball volume unknown for this norm"))?;
        let c = (ln_vol / self.dim as f64).exp();
        self.scaled(c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn kind_name(&self) -> String {
        match &self.kind {
            NormKind::Lq(q) => format!("l_{q}"),
            NormKind::Euclidean => "euclidean".to_string(),
            NormKind::Custom { name, .. } => name.clone(),
        }
    }

    /// The exponent `q` when the norm is an `l_q` norm (Euclidean is `q = 2`).
    pub fn q(&self) -> Option<f64> {
        match self.kind {
            NormKind::Lq(q) => Some(q),
            NormKind::Euclidean => Some(2.0),
            NormKind::Custom { .. } => None,
        }
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.scale
            * match &self.kind {
                NormKind::Lq(q) => lq_norm(x, *q),
                NormKind::Euclidean => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
                NormKind::Custom { norm, .. } => norm(x),
            }
    }

    /// Dual norm of the functional `x ↦ θ·x`.
    pub fn dual(&self, theta: &[f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.dim);
        let base = match &self.kind {
            NormKind::Lq(q) => lq_norm(theta, *q / (*q - 1.0)),
            NormKind::Euclidean => theta.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormKind::Custom { dual, .. } => dual(theta),
        };
        base / self.scale
    }

    /// `ln mes_n{‖x‖ <= 1}` when known in closed form.
    pub fn ln_unit_ball_volume(&self) -> Option<f64> {
        let base = match &self.kind {
            NormKind::Lq(q) => ln_lq_ball_volume(self.dim, *q),
            NormKind::Euclidean => ln_euclidean_ball_volume(self.dim),
            NormKind::Custom {
                ln_unit_ball_volume, ..
            } => (*ln_unit_ball_volume)?,
        };
        Some(base - self.dim as f64 * self.scale.ln())
    }
}

fn lq_norm(x: &[f64], q: f64) -> f64 {
    let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    // Scale by the largest entry so high powers do not overflow.
    m * x.iter().map(|v| (v.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum NormRepr {
    Lq {
        q: f64,
        n: usize,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
    },
    Euclidean {
        n: usize,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

impl Serialize for NormSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self.kind {
            NormKind::Lq(q) => NormRepr::Lq {
                q,
                n: self.dim,
                scale: self.scale,
            },
            NormKind::Euclidean => NormRepr::Euclidean {
                n: self.dim,
                scale: self.scale,
            },
            NormKind::Custom { .. } => {
                return Err(serde::ser::Error::custom("custom norms cannot be serialized"));
            }
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for NormSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let built = match NormRepr::deserialize(deserializer)? {
            NormRepr::Lq { q, n, scale } => NormSpec::lq(n, q).and_then(|s| s.scaled(scale)),
            NormRepr::Euclidean { n, scale } => NormSpec::euclidean(n).and_then(|s| s.scaled(scale)),
        };
        built.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lq_values_and_duality() {
        let n = NormSpec::lq(2, 3.0).unwrap();
        assert!((n.norm(&[1.0, -1.0]) - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);
        assert!((n.dual(&[1.0, 1.0]) - 2f64.powf(2.0 / 3.0)).abs() < 1e-15);
        assert!(NormSpec::lq(2, 1.0).is_err());
        assert!(NormSpec::euclidean(0).is_err());
    }

    #[test]
    fn large_q_does_not_overflow() {
        let n = NormSpec::lq(3, 400.0).unwrap();
        let v = n.norm(&[1e200, 3e200, 2e200]);
        assert!((v / 3e200 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn homogeneity_symmetry_triangle() {
        let norms = [
            NormSpec::lq(3, 1.5).unwrap(),
            NormSpec::lq(3, 4.0).unwrap(),
            NormSpec::euclidean(3).unwrap(),
        ];
        let pts = [[0.3, -1.2, 2.0], [1.0, 0.5, -0.25], [-2.0, 0.1, 0.7]];
        for n in &norms {
            for x in &pts {
                let neg: Vec<f64> = x.iter().map(|v| -2.5 * v).collect();
                assert!((n.norm(&neg) - 2.5 * n.norm(x)).abs() < 1e-12);
                for y in &pts {
                    let s: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                    assert!(n.norm(&s) <= n.norm(x) + n.norm(y) + 1e-12);
                }
            }
            assert_eq!(n.norm(&[0.0, 0.0, 0.0]), 0.0);
        }
    }

    #[test]
    fn unit_volume_scaling() {
        let n = NormSpec::euclidean(3).unwrap().unit_volume().unwrap();
        assert!(n.ln_unit_ball_volume().unwrap().abs() < 1e-14);
        let e = NormSpec::euclidean(3).unwrap();
        let x = [0.1, 0.2, 0.3];
        assert!((n.dual(&x) * n.norm(&x) - e.dual(&x) * e.norm(&x)).abs() < 1e-14);
    }

    #[test]
    fn json_forms() {
        let n: NormSpec = serde_json::from_str(r#"{"kind":"lq","q":4,"n":2}"#).unwrap();
        assert_eq!(n.dim(), 2);
        assert_eq!(n.q(), Some(4.0));
        assert_eq!(serde_json::to_string(&n).unwrap(), r#"{"kind":"lq","q":4.0,"n":2}"#);
        let e: NormSpec = serde_json::from_str(r#"{"kind":"euclidean","n":5}"#).unwrap();
        assert_eq!(e.kind_name(), "euclidean");
        assert!(serde_json::from_str::<NormSpec>(r#"{"kind":"lq","q":0.5,"n":2}"#).is_err());
        let c = NormSpec::custom(
            2,
            "sup",
            |x| x[0].abs().max(x[1].abs()),
            |t| t[0].abs() + t[1].abs(),
            None,
        )
        .unwrap();
        assert!(serde_json::to_string(&c).is_err());
    }
}
