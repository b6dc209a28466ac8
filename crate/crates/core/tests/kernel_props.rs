use proptest::prelude::*;

use niche_core::critical_speed::speed_functional;
use niche_core::kernel::{cutoff, Kernel, Orientation};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cutoff_is_a_monotone_bump(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!((0.0..=1.0).contains(&cutoff(lo)));
        prop_assert!(cutoff(hi) <= cutoff(lo));
        prop_assert_eq!(cutoff(lo), cutoff(-lo));
    }

    #[test]
    fn discrete_weights_have_unit_mass(radius in 0.3f64..3.0, h in 0.01f64..0.2) {
        for k in [Kernel::uniform(radius).unwrap(), Kernel::tent(radius).unwrap(), Kernel::truncated_cosine(radius).unwrap()] {
            let d = k.discretize(h).unwrap();
            prop_assert!((d.sum() - 1.0).abs() <= 1e-12, "{} sum {}", k.name(), d.sum());
            prop_assert!(d.weights.iter().all(|w| *w >= 0.0));
        }
    }

    #[test]
    fn symmetric_exponential_moment_is_even(sigma in 0.3f64..2.0, alpha in 0.01f64..10.0) {
        let k = Kernel::gaussian(sigma, 8.0 * sigma).unwrap();
        let p = k.exponential_moment(alpha, Orientation::Plus).unwrap();
        let m = k.exponential_moment(alpha, Orientation::Minus).unwrap();
        prop_assert!(p >= 1.0);
        prop_assert!((p - m).abs() <= 1e-12 * p);
    }

    #[test]
    fn closed_form_laplace_matches_quadrature(choice in 0u8..4, alpha in -12.0f64..12.0) {
        let k = match choice {
            0 => Kernel::uniform(1.3).unwrap(),
            1 => Kernel::tent(0.8).unwrap(),
            2 => Kernel::truncated_cosine(1.0).unwrap(),
            _ => Kernel::gaussian(0.7, 6.0).unwrap(),
        };
        let closed = k.exponential_moment(alpha.abs(), if alpha >= 0.0 { Orientation::Plus } else { Orientation::Minus }).unwrap();
        let quad = k.laplace_quadrature(alpha);
        prop_assert!((closed - quad).abs() <= 1e-8 * quad, "{} α={alpha}: {closed} vs {quad}", k.name());
    }

    #[test]
    fn speed_functional_is_positive_for_positive_sup_a(alpha in 0.01f64..20.0, sup_a in 0.01f64..3.0) {
        let k = Kernel::uniform(1.0).unwrap();
        prop_assert!(speed_functional(&k, sup_a, Orientation::Plus, alpha).unwrap() > 0.0);
    }
}

#[test]
fn gaussian_moment_stays_finite_far_out() {
    let k = Kernel::gaussian(0.7, 8.0).unwrap();
    for alpha in [20.0, 40.0, 60.0] {
        let v = k.exponential_moment(alpha, Orientation::Plus).unwrap();
        let q = k.laplace_quadrature(alpha);
        assert!(v.is_finite() && v > 0.0, "α = {alpha}: {v}");
        assert!((v - q).abs() <= 1e-6 * q, "α = {alpha}: {v} vs {q}");
    }
}
