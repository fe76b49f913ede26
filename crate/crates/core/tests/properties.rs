use proptest::prelude::*;

use isoprofile::concentration::{bound_from_profile, bound_gromov_milman, h_inverse, h_value, GammaProfile};
use isoprofile::delta::{ModulusSpec, NormSpec};
use isoprofile::functional::{entropy_q, TestFunction1D};
use isoprofile::oned::{bound_tail, exact_profile, Density1D, Potential};
use isoprofile::transport::{RadialDensity, RadialProfile};

fn power_modulus() -> impl Strategy<Value = ModulusSpec> {
    (0.05f64..4.0, 2.0f64..8.0).prop_map(|(a, p)| ModulusSpec::power(a, p).unwrap())
}

fn modulus() -> impl Strategy<Value = ModulusSpec> {
    prop_oneof![
        power_modulus(),
        (power_modulus(), 0.2f64..3.0).prop_map(|(m, c)| ModulusSpec::truncated(m, c).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ratio_is_non_decreasing(d in modulus(), s in 0.01f64..2.0, k in 1.0f64..3.0) {
        let t = s * k;
        let (ds, dt) = (d.eval(s), d.eval(t));
        prop_assume!(dt.is_finite());
        prop_assert!(ds / s <= dt / t * (1.0 + 1e-12));
    }

    #[test]
    fn power_inverse_round_trip(d in power_modulus(), ln_s in -20.0f64..5.0) {
        let s = ln_s.exp();
        prop_assert!((d.eval(d.inverse(s)) - s).abs() < 1e-10 * s.max(1.0));
    }

    #[test]
    fn norm_triangle_and_homogeneity(
        q in 1.1f64..8.0,
        x in prop::collection::vec(-3.0f64..3.0, 3),
        y in prop::collection::vec(-3.0f64..3.0, 3),
        lambda in -4.0f64..4.0,
    ) {
        let norm = NormSpec::lq(3, q).unwrap();
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        prop_assert!(norm.norm(&sum) <= (norm.norm(&x) + norm.norm(&y)) * (1.0 + 1e-12));
        let scaled: Vec<f64> = x.iter().map(|v| lambda * v).collect();
        prop_assert!((norm.norm(&scaled) - lambda.abs() * norm.norm(&x)).abs() < 1e-12 * (1.0 + norm.norm(&scaled)));
    }

    #[test]
    fn quantile_inverts_cdf(alpha in 0.2f64..3.0, p in 1.0f64..5.0, a in 1e-6f64..0.999_999) {
        let d = Density1D::new(Potential::Power { alpha, p }).unwrap();
        let x = d.quantile(a).unwrap();
        prop_assert!((d.cdf(x) - a).abs() < 1e-9);
    }

    #[test]
    fn even_profiles_are_symmetric_and_dominate_the_tail_bound(
        alpha in 0.2f64..3.0,
        p in 2.0f64..5.0,
        ln_a in -12.0f64..(-0.7),
    ) {
        let d = Density1D::new(Potential::Power { alpha, p }).unwrap();
        let a = ln_a.exp();
        let left = exact_profile(&d, a).unwrap().value;
        let right = exact_profile(&d, 1.0 - a).unwrap().value;
        prop_assert!((left - right).abs() <= 1e-9 * left.max(1e-300));
        let tail = ModulusSpec::power(alpha, p).unwrap();
        prop_assert!(left >= bound_tail(&tail, a).unwrap().value - 1e-9);
    }

    #[test]
    fn transport_is_monotone_along_rays(
        p in 1.0f64..4.0,
        dir in prop::collection::vec(-1.0f64..1.0, 4),
        s in 0.05f64..3.0,
    ) {
        prop_assume!(dir.iter().any(|v| v.abs() > 1e-3));
        let f = RadialDensity::new(NormSpec::lq(4, p.max(1.1)).unwrap(), RadialProfile::ExpPower { p }).unwrap();
        let x: Vec<f64> = dir.iter().map(|v| s * v).collect();
        let y: Vec<f64> = dir.iter().map(|v| 1.3 * s * v).collect();
        prop_assert!(f.u(&x) <= f.u(&y));
        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        prop_assert!((f.gauge(&doubled) - 2.0 * f.gauge(&x)).abs() < 1e-12 * f.gauge(&doubled));
    }

    #[test]
    fn h_round_trip(c0 in 0.1f64..3.0, p in 2.0f64..6.0, ln_a in -15.0f64..(-0.7), eps in 1e-3f64..10.0) {
        let g = GammaProfile::Power { c0, p };
        let a = ln_a.exp();
        let x = h_inverse(&g, a, eps).unwrap();
        prop_assert!((h_value(&g, a, x).unwrap() / eps - 1.0).abs() < 1e-8);
    }

    #[test]
    fn concentration_bounds_decrease(
        d in power_modulus(),
        c in 0.1f64..2.0,
        lam in 0.5f64..0.99,
        e1 in 0.0f64..3.0,
        de in 0.0f64..3.0,
    ) {
        let g = GammaProfile::Constant(c);
        let a = 1.0 - lam;
        let e2 = e1 + de;
        prop_assert!(bound_from_profile(&g, a, e2).unwrap() <= bound_from_profile(&g, a, e1).unwrap() * (1.0 + 1e-12));
        prop_assert!(bound_from_profile(&g, a, e1).unwrap() <= a * (1.0 + 1e-12));
        prop_assert!(bound_gromov_milman(&d, 4, lam, e2).unwrap() <= bound_gromov_milman(&d, 4, lam, e1).unwrap());
    }

    #[test]
    fn entropy_is_nonnegative_and_homogeneous(
        ys in prop::collection::vec(0.0f64..1.0, 4),
        q in 1.0f64..4.0,
        lambda in 0.05f64..1.0,
    ) {
        prop_assume!(ys.iter().any(|&y| y > 0.05));
        let d = Density1D::new(Potential::gaussian()).unwrap();
        let f = TestFunction1D::new(ys.iter().enumerate().map(|(i, &y)| (i as f64 - 1.5, y)).collect()).unwrap();
        let e = entropy_q(&f, &d, q).unwrap();
        prop_assert!(e >= 0.0);
        let scaled = entropy_q(&f.scaled(lambda).unwrap(), &d, q).unwrap();
        prop_assert!((scaled - lambda.powf(q) * e).abs() < 1e-10);
    }
}
