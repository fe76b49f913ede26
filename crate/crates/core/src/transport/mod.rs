//! Ball's body `K_f` of a log-concave density, the radial map pushing the
//! density to Lebesgue measure on `K_f`, and related comparisons. The
//! samplers here double as uniform samplers on `l_q` balls.

mod general;
mod radial;
mod ray;
mod sample;
mod study;

pub use general::{
    barycenter, fradelizi_check, integrate_box, kf0_radius, kf_gauge, kf_hat_gauge, klartag_milman_check,
    moments_ratio, transport_map, u_factor, DirectionRadii, FradeliziReport, GeneralDensity, InclusionReport,
    MomentsReport, DEFAULT_C_SLACK, DEFAULT_D_SLACK,
};
pub use radial::{RadialDensity, RadialProfile};
pub use sample::{
    draw_rows, open01, sample_exp_power_coordinate, sample_mu_lp, stream_count, stream_rng, ProductSampler,
    RadialSampler, SampleBatch, Sampler, CHUNK,
};
pub use study::{
    empirical_lipschitz, ks_critical_1pct, ks_uniform, pushforward_uniformity, LipschitzReport, PushforwardReport,
};

/// Evaluator of `ln f` on `R^n`.
pub trait LogDensity {
    fn dim(&self) -> usize;
    fn ln_density(&self, x: &[f64]) -> f64;
}
