use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

use capflow::geometry::evaluate;
use capflow::{cap_radial, GridSpec, HalfSphereGrid, QuermassReport, RadialField};
use proptest::prelude::*;

fn bumped(n: usize, n_beta: usize, r: f64, theta: f64, a: f64) -> RadialField {
    let g = HalfSphereGrid::shared(GridSpec::axisym(n, n_beta)).unwrap();
    RadialField::from_fn(g, |b, _| {
        cap_radial(r, theta, b).ln() + (1.0 + a * (2.0 * b).cos()).ln()
    })
    .unwrap()
}

fn quermass(f: &RadialField, theta: f64, pairs: &[(usize, usize)]) -> QuermassReport {
    QuermassReport::compute(&evaluate(f, theta).unwrap(), f, theta, 0.0, pairs).unwrap()
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..=n).flat_map(|k| (0..k).map(move |l| (k, l))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quermass_scales_with_the_field(
        n in 2usize..=4,
        lambda in 0.2f64..5.0,
        theta in 0.3f64..=FRAC_PI_2,
        a in -0.08f64..0.08,
    ) {
        let f = bumped(n, 64, 1.0, theta, a);
        let (v, w) = (quermass(&f, theta, &[]).v, quermass(&f.scaled(lambda), theta, &[]).v);
        for m in 0..=n + 1 {
            let expected = lambda.powi((n + 1 - m) as i32) * v[m];
            prop_assert!((w[m] - expected).abs() <= 1e-10 * expected.abs(), "m = {m}: {} vs {expected}", w[m]);
        }
    }

    #[test]
    fn convex_fields_have_nonnegative_gaps(
        n in 2usize..=3,
        r in 0.5f64..2.0,
        theta in FRAC_PI_4..=FRAC_PI_2,
        // caps have zero gap, so a sample needs a true gap above the O(Δβ²)
        // truncation error to be informative
        a in 0.02f64..0.05,
        sign in prop::bool::ANY,
    ) {
        let f = bumped(n, 400, r, theta, if sign { a } else { -a });
        prop_assume!(evaluate(&f, theta).unwrap().min_kappa().0 > 0.0);
        let rep = quermass(&f, theta, &all_pairs(n));
        for m in 0..=n {
            prop_assert!(rep.v[m] > 0.0);
        }
        for g in &rep.af_gaps {
            prop_assert!(g.gap >= -1e-8, "({}, {}): {:e}", g.k, g.l, g.gap);
        }
    }
}

#[test]
fn top_quermass_is_radius_free() {
    for n in 2..=4 {
        let v: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&r| quermass(&bumped(n, 400, r, FRAC_PI_3, 0.0), FRAC_PI_3, &[]).v[n + 1])
            .collect();
        let mean = v.iter().sum::<f64>() / 3.0;
        let spread = v.iter().fold(0.0_f64, |m, x| m.max((x - mean).abs())) / mean;
        assert!(spread <= 1e-5, "n = {n}: {v:?}");
    }
}

#[test]
fn minkowski_residual_is_second_order() {
    let theta = FRAC_PI_3;
    let res: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&nb| {
            quermass(&bumped(2, nb, 1.0, theta, 0.06), theta, &[]).minkowski_residual[0].abs()
        })
        .collect();
    for w in res.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.7..=2.3).contains(&order), "{res:?}");
    }
}
