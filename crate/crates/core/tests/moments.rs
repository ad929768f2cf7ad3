use ouq_core::{
    affine_rescale_moments, canonical_to_moments, moments_to_canonical, CanonicalVector,
    DiscreteMeasure,
};
use proptest::prelude::*;

/// Extremes of the third moment over two-point measures on [0, 1] with
/// given mean and second moment, by sweeping the left atom.
fn brute_force_third_moment_range(c1: f64, c2: f64) -> (f64, f64) {
    let var = c2 - c1 * c1;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let steps = 2_000_000;
    for i in 0..steps {
        let x1 = c1 * i as f64 / steps as f64;
        let x2 = c1 + var / (c1 - x1);
        if x2 > 1.0 {
            continue;
        }
        let w2 = (c1 - x1) / (x2 - x1);
        let c3 = (1.0 - w2) * x1.powi(3) + w2 * x2.powi(3);
        lo = lo.min(c3);
        hi = hi.max(c3);
    }
    (lo, hi)
}

#[test]
fn uniform_measure_third_canonical_moment() {
    let (lo, hi) = brute_force_third_moment_range(0.5, 1.0 / 3.0);
    let oracle = (0.25 - lo) / (hi - lo);
    assert!((oracle - 0.5).abs() < 1e-5, "oracle {oracle}");

    let p = moments_to_canonical(&[0.5, 1.0 / 3.0, 0.25]).unwrap();
    let expected = [0.5, 1.0 / 3.0, oracle];
    for (a, b) in p.values().iter().zip(expected) {
        assert!((a - b).abs() < 1e-5);
    }
    let back = canonical_to_moments(&CanonicalVector::new(vec![0.5, 1.0 / 3.0, 0.5]).unwrap());
    for (a, b) in back.iter().zip([0.5, 1.0 / 3.0, 0.25]) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn third_moment_oracle_for_skewed_sequence() {
    // Two-point brute force against the Hankel route away from symmetry.
    let m = DiscreteMeasure::new(vec![0.1, 0.3, 0.85], vec![0.2, 0.5, 0.3]).unwrap();
    let c = m.moments(3);
    let (lo, hi) = brute_force_third_moment_range(c[0], c[1]);
    let oracle = (c[2] - lo) / (hi - lo);
    let p = moments_to_canonical(&c).unwrap();
    assert!((p.values()[2] - oracle).abs() < 1e-5);
}

#[test]
fn rescaled_flow_rate_moments_match_change_of_variables() {
    let (l, u) = (160.0, 3580.0);
    let (m1, m2) = (1320.42, 2.1632e6);
    let rescaled = affine_rescale_moments(&[m1, m2], l, u).unwrap();

    // A two-point measure with the same raw mean and second moment.
    let var: f64 = m2 - m1 * m1;
    let x1 = 500.0;
    let x2 = m1 + var / (m1 - x1);
    let w2 = (m1 - x1) / (x2 - x1);
    let measure = DiscreteMeasure::new(vec![x1, x2], vec![1.0 - w2, w2]).unwrap();
    assert!((measure.moment(1) - m1).abs() < 1e-8 * m1);
    assert!((measure.moment(2) - m2).abs() < 1e-8 * m2);
    let mapped = DiscreteMeasure::new(
        measure.atoms().iter().map(|x| (x - l) / (u - l)).collect(),
        measure.weights().to_vec(),
    )
    .unwrap();
    let oracle = mapped.moments(2);
    for (a, b) in rescaled.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        assert!(*a > 0.0 && *a < 1.0);
    }
}

#[test]
fn dirac_degeneracy_index() {
    for &x in &[0.0, 0.2, 0.5, 0.77, 1.0] {
        let m = DiscreteMeasure::dirac(x);
        let p = moments_to_canonical(&m.moments(4)).unwrap();
        let endpoint = x == 0.0 || x == 1.0;
        assert_eq!(p.degeneracy_index() == Some(1), endpoint, "atom {x}");
        if endpoint {
            assert!(p.values()[0] == 0.0 || p.values()[0] == 1.0);
        } else {
            assert_eq!(p.degeneracy_index(), Some(2));
        }
    }
}

fn interior_canonical(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..0.95, 1..=max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn round_trip(p in interior_canonical(7)) {
        let moments = canonical_to_moments(&CanonicalVector::new(p.clone()).unwrap());
        let back = moments_to_canonical(&moments).unwrap();
        prop_assert_eq!(back.degeneracy_index(), None);
        for (a, b) in back.values().iter().zip(&p) {
            prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn closed_form_first_two(p1 in 0.01f64..0.99, p2 in 0.01f64..0.99) {
        let c1 = p1;
        let c2 = c1 * c1 + p2 * c1 * (1.0 - c1);
        let p = moments_to_canonical(&[c1, c2]).unwrap();
        prop_assert!((p.values()[0] - c1).abs() < 1e-12);
        prop_assert!((p.values()[1] - (c2 - c1 * c1) / (c1 * (1.0 - c1))).abs() < 1e-12);
    }

    #[test]
    fn affine_invariance(
        atoms in prop::collection::btree_set(0u32..1000, 3..6),
        raw_weights in prop::collection::vec(0.1f64..1.0, 6),
        shift in -5.0f64..5.0,
        scale in 0.5f64..5.0,
    ) {
        let atoms: Vec<f64> = atoms.into_iter().map(|a| a as f64 / 1000.0).collect();
        let w = &raw_weights[..atoms.len()];
        let total: f64 = w.iter().sum();
        let weights: Vec<f64> = w.iter().map(|v| v / total).collect();
        let (l, u) = (0.0, 1.0);
        let n = atoms.len() - 1;

        let base = DiscreteMeasure::new(atoms.clone(), weights.clone()).unwrap();
        let p_base = moments_to_canonical(&affine_rescale_moments(&base.moments(n), l, u).unwrap()).unwrap();

        let moved = DiscreteMeasure::new(atoms.iter().map(|x| shift + scale * x).collect(), weights).unwrap();
        let (l2, u2) = (shift + scale * l, shift + scale * u);
        let p_moved = moments_to_canonical(&affine_rescale_moments(&moved.moments(n), l2, u2).unwrap()).unwrap();
        for (a, b) in p_base.values().iter().zip(p_moved.values()) {
            prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
        }
    }

    #[test]
    // Atoms closer than ~1e-3 to an endpoint leave the determinant ratios
    // dominated by roundoff, so the sampled range stays clear of them.
    fn two_atom_measure_degenerates_by_order_four(x1 in 0.01f64..0.45, x2 in 0.55f64..0.99, w in 0.05f64..0.95) {
        let m = DiscreteMeasure::new(vec![x1, x2], vec![w, 1.0 - w]).unwrap();
        let p = moments_to_canonical(&m.moments(6)).unwrap();
        let n = p.degeneracy_index().expect("two atoms are determined");
        prop_assert!(n <= 4);
        prop_assert!(p.values()[n..].iter().all(|v| *v == 0.0));
    }
}
