use capflow::symfun::newton_maclaurin_gap;
use capflow::{CurvatureVector, QuotientFunction};
use proptest::prelude::*;

fn sigma_bruteforce(kappa: &[f64], j: usize) -> f64 {
    let n = kappa.len();
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == j)
        .map(|m| {
            (0..n)
                .filter(|i| m & (1 << i) != 0)
                .map(|i| kappa[i])
                .product::<f64>()
        })
        .sum()
}

/// Points of the positive cone, log-uniform per entry.
fn positive(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..1.0, 2..=max_n)
        .prop_map(|e| e.into_iter().map(|x| 10f64.powf(x)).collect())
}

fn with_index(max_n: usize) -> impl Strategy<Value = (Vec<f64>, usize)> {
    indexed(positive(max_n))
}

fn indexed(points: impl Strategy<Value = Vec<f64>>) -> impl Strategy<Value = (Vec<f64>, usize)> {
    points.prop_flat_map(|k| {
        let n = k.len();
        (Just(k), 1..=n)
    })
}

fn cv(k: &[f64]) -> CurvatureVector {
    CurvatureVector::new(k.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sigma_matches_subset_sums(k in positive(6)) {
        let v = cv(&k);
        for j in 0..=k.len() {
            let brute = sigma_bruteforce(&k, j);
            let s = v.sigma(j).unwrap();
            prop_assert!((s - brute).abs() <= 1e-12 * brute.abs(), "j = {j}: {s} vs {brute}");
        }
    }

    #[test]
    fn sigma_ignores_order(k in positive(8), rot in 0usize..8, flip in any::<bool>()) {
        let mut p = k.clone();
        p.rotate_left(rot % k.len());
        if flip {
            p.reverse();
        }
        let (a, b) = (cv(&k), cv(&p));
        for j in 0..=k.len() {
            prop_assert_eq!(a.sigma(j).unwrap().to_bits(), b.sigma(j).unwrap().to_bits());
            prop_assert_eq!(a.normalized_h(j).unwrap().to_bits(), b.normalized_h(j).unwrap().to_bits());
        }
    }

    #[test]
    fn newton_maclaurin_holds(k in positive(8)) {
        let v = cv(&k);
        let h = v.normalized_all();
        for kk in 2..=k.len() {
            for l in 1..kk {
                let gap = newton_maclaurin_gap(&v, kk, l).unwrap();
                prop_assert!(gap >= -1e-12 * h[l] * h[kk - 1], "k = {kk}, l = {l}: {gap:e}");
            }
        }
    }

    #[test]
    fn key_sandwich_holds((k, q) in with_index(8)) {
        let f = QuotientFunction::new(q, k.len()).unwrap();
        let t = f.key_inequality_terms(&cv(&k)).unwrap();
        prop_assert!(t.lower <= t.middle * (1.0 + 1e-12), "{t:?}");
        prop_assert!(t.middle <= t.upper * (1.0 + 1e-12), "{t:?}");
        prop_assert!((t.middle - t.middle_closed).abs() <= 1e-10 * t.middle, "{t:?}");
    }

    #[test]
    fn gradient_is_ordered_against_curvature((k, q) in with_index(8)) {
        let f = QuotientFunction::new(q, k.len()).unwrap();
        let g = f.gradient(&cv(&k)).unwrap();
        for i in 0..k.len() {
            for j in 0..i {
                let c = (g[i] - g[j]) * (k[i] - k[j]);
                prop_assert!(c <= 1e-12, "({i}, {j}): {c:e}");
            }
        }
        prop_assert!(g.iter().sum::<f64>() >= 1.0 - 1e-12);
    }

    #[test]
    fn euler_relation((k, q) in with_index(8)) {
        let v = cv(&k);
        let f = QuotientFunction::new(q, k.len()).unwrap();
        let value = f.value(&v).unwrap();
        let euler: f64 = f.gradient(&v).unwrap().iter().zip(&k).map(|(g, x)| g * x).sum();
        prop_assert!((euler - value).abs() <= 1e-10 * value.abs(), "{euler} vs {value}");
    }

    #[test]
    fn inverse_concavity_residual_is_nonnegative(
        // the residual scales like 1/κ, so an absolute floor needs a bounded range
        (k, q) in indexed(prop::collection::vec(-1.0f64..1.0, 2..=6)
            .prop_map(|e| e.into_iter().map(|x| 10f64.powf(x)).collect())),
        y in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let f = QuotientFunction::new(q, k.len()).unwrap();
        let r = f.inverse_concavity_residual(&cv(&k), &y[..k.len()]).unwrap();
        prop_assert!(r >= -1e-6, "{r:e}");
    }
}

#[test]
fn inverse_concavity_vanishes_along_the_point() {
    let k = [0.3, 1.2, 2.0, 4.5];
    for q in 1..=4 {
        let f = QuotientFunction::new(q, 4).unwrap();
        let r = f.inverse_concavity_residual(&cv(&k), &k).unwrap();
        assert!(r.abs() <= 1e-6, "k = {q}: {r:e}");
        assert_eq!(
            f.inverse_concavity_residual(&cv(&k), &[0.0; 4]).unwrap(),
            0.0
        );
    }
}
