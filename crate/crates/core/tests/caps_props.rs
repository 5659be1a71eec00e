use std::f64::consts::FRAC_PI_2;

use capflow::{
    cap_quermass, fit_cap, predicted_limit_radius, GridSpec, HalfSphereGrid, RadialField,
    SphericalCap,
};
use proptest::prelude::*;

proptest! {
    #[test]
    fn quermass_scales_with_the_radius(
        n in 2usize..=6,
        r in 0.1f64..10.0,
        lambda in 0.1f64..10.0,
        theta in 0.05f64..=FRAC_PI_2,
    ) {
        for m in 0..=n + 1 {
            let base = cap_quermass(&SphericalCap::new(r, theta).unwrap(), n, m).unwrap();
            let big = cap_quermass(&SphericalCap::new(lambda * r, theta).unwrap(), n, m).unwrap();
            let expected = lambda.powi((n + 1 - m.min(n + 1)) as i32) * base;
            prop_assert!((big - expected).abs() <= 1e-13 * expected, "m = {m}");
        }
    }

    #[test]
    fn predicted_radius_inverts_the_cap_family(
        n in 2usize..=6,
        r in 0.1f64..10.0,
        theta in 0.05f64..=FRAC_PI_2,
        k in 1usize..=6,
    ) {
        let k = k.min(n);
        let v = cap_quermass(&SphericalCap::new(r, theta).unwrap(), n, k).unwrap();
        let back = predicted_limit_radius(v, k, n, theta).unwrap();
        prop_assert!((back - r).abs() <= 1e-12 * r);
    }

    #[test]
    fn caps_fit_themselves(r in 0.1f64..10.0, theta in 0.05f64..=FRAC_PI_2, n_beta in 16usize..200) {
        let g = HalfSphereGrid::shared(GridSpec::axisym(2, n_beta)).unwrap();
        let fit = fit_cap(&RadialField::cap(g, r, theta).unwrap(), theta).unwrap();
        prop_assert!((fit.r_fit - r).abs() <= 1e-12 * r);
        prop_assert!(fit.sup_error <= 1e-12 * r);
    }
}
