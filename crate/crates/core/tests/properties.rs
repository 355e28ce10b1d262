//! Property-based invariants across the algebraic and numerical kernels.

use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::Arc;
use takai_core::algebra::{Action, CoefficientAlgebra};
use takai_core::crossed::{
    convolve, crossed_norm, dual_action, integrated_matrix, integrated_matrix_variant, ConvContext,
    CrossedElement, LayerKind,
};
use takai_core::group::{Character, FiniteAbelianGroup};
use takai_core::pnorm::{opnorm, opnorm_oracle, Budget, PExponent};
use takai_core::sample;

fn group_strategy() -> impl Strategy<Value = FiniteAbelianGroup> {
    prop_oneof![
        (2u32..=6).prop_map(FiniteAbelianGroup::cyclic),
        (2u32..=3, 2u32..=4).prop_map(|(a, b)| FiniteAbelianGroup::new(vec![a, b]).unwrap()),
    ]
}

fn small_ctx(group: &FiniteAbelianGroup, seed: u64) -> Arc<ConvContext> {
    // alternate between coefficient algebras to cover the recursion
    let (alg, action) = match seed % 3 {
        0 => (CoefficientAlgebra::Scalars, Action::trivial(group.clone())),
        1 => (
            CoefficientAlgebra::functions_over_scalars(group.order()),
            Action::left_translation(group.clone(), Action::trivial(group.clone())).unwrap(),
        ),
        _ => {
            if Action::shift_applicable(group, 2) {
                (
                    CoefficientAlgebra::full_matrix(2),
                    Action::monomial_shift(group.clone(), 2).unwrap(),
                )
            } else {
                (
                    CoefficientAlgebra::full_matrix(2),
                    Action::trivial(group.clone()),
                )
            }
        }
    };
    ConvContext::new(group.clone(), LayerKind::Discrete, alg, action).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pair_is_a_bicharacter(group in group_strategy(), i in 0usize..1000, j in 0usize..1000) {
        let n = group.order();
        let chi = Character::new(group.element(i % n));
        let s = group.element(j % n);
        let t = group.element((i * 7 + j) % n);
        let lhs = group.pair(&chi, &group.add(&s, &t)).unwrap();
        let rhs = group.pair(&chi, &s).unwrap() * group.pair(&chi, &t).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-14);
        prop_assert!((group.pair(&chi, &s).unwrap().norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn estimator_matches_oracle_on_exact_exponents(seed in 0u64..200, dim in 1usize..=4) {
        let mut r = sample::rng(seed);
        let m = sample::random_matrix(&mut r, dim, dim);
        for p in [PExponent::one(), PExponent::two()] {
            let exact = opnorm(&m, p, &Budget::default(), seed).unwrap();
            let oracle = opnorm_oracle(&m, p, 10, seed).unwrap();
            prop_assert!(
                (exact.value - oracle.value).abs() <= 1e-6 * exact.value.max(1e-9),
                "p={} exact={} oracle={}", p.value(), exact.value, oracle.value
            );
        }
    }

    #[test]
    fn opnorm_is_submultiplicative(seed in 0u64..500, dim in 1usize..=4) {
        let mut r = sample::rng(seed);
        let a = sample::random_matrix(&mut r, dim, dim);
        let b = sample::random_matrix(&mut r, dim, dim);
        for p in [1.0, 1.5, 2.0, 3.0] {
            let p = PExponent::new(p).unwrap();
            let ab = opnorm(&a.mul(&b), p, &Budget::default(), seed).unwrap().value;
            let na = opnorm(&a, p, &Budget::default(), seed).unwrap().value;
            let nb = opnorm(&b, p, &Budget::default(), seed).unwrap().value;
            prop_assert!(ab <= na * nb * (1.0 + 1e-9), "p={} {} > {}*{}", p.value(), ab, na, nb);
        }
    }

    #[test]
    fn monomial_matrices_have_unit_norm(seed in 0u64..200, dim in 1usize..=6) {
        let mut r = sample::rng(seed);
        let m = sample::random_monomial(&mut r, dim);
        for p in [1.0, 1.7, 2.0, 2.5] {
            let e = opnorm(&m, PExponent::new(p).unwrap(), &Budget::default(), seed).unwrap();
            prop_assert!((e.value - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn truncation_profile_is_nondecreasing(seed in 0u64..100, dim in 2usize..=5) {
        let mut r = sample::rng(seed);
        let m = sample::random_matrix(&mut r, dim, dim);
        for p in [1.0, 1.5, 2.0] {
            let prof = takai_core::pnorm::truncation_norm_profile(
                &m, PExponent::new(p).unwrap(), &Budget::default(), seed,
            ).unwrap();
            for w in prof.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12);
            }
        }
    }

    #[test]
    fn convolution_is_associative_and_integrates_multiplicatively(
        group in group_strategy(),
        seed in 0u64..100,
    ) {
        let ctx = small_ctx(&group, seed);
        let mut r = sample::rng(seed);
        let f = CrossedElement::random(&ctx, &mut r);
        let g = CrossedElement::random(&ctx, &mut r);
        let h = CrossedElement::random(&ctx, &mut r);
        let lhs = convolve(&convolve(&f, &g).unwrap(), &h).unwrap();
        let rhs = convolve(&f, &convolve(&g, &h).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-11);

        let prod = integrated_matrix(&convolve(&f, &g).unwrap()).unwrap();
        let direct = integrated_matrix(&f).unwrap().mul(&integrated_matrix(&g).unwrap());
        prop_assert!(prod.max_abs_diff(&direct) < 1e-11);
    }

    #[test]
    fn dual_action_is_isometric(group in group_strategy(), seed in 0u64..100) {
        let ctx = small_ctx(&group, seed);
        let mut r = sample::rng(seed);
        let f = CrossedElement::random(&ctx, &mut r);
        let gamma = Character::new(group.element(seed as usize % group.order()));
        let twisted = dual_action(&gamma, &f).unwrap();
        for p in [PExponent::one(), PExponent::two()] {
            let before = crossed_norm(&f, p, &Budget::default(), seed).unwrap().value;
            let after = crossed_norm(&twisted, p, &Budget::default(), seed).unwrap().value;
            prop_assert!((before - after).abs() <= 1e-10 * before.max(1.0));
        }
    }

    #[test]
    fn crossed_norm_is_representation_independent(seed in 0u64..40) {
        // A = Functions(2) over Z2 and Z3, multiplicities 1 vs 2
        for factors in [vec![2u32], vec![3u32]] {
            let group = FiniteAbelianGroup::new(factors).unwrap();
            let alg = CoefficientAlgebra::functions_over_scalars(2);
            let ctx = ConvContext::new(
                group.clone(),
                LayerKind::Discrete,
                alg,
                Action::trivial(group.clone()),
            ).unwrap();
            let mut r = sample::rng(seed);
            let f = CrossedElement::random(&ctx, &mut r);
            let m1 = integrated_matrix(&f).unwrap();
            let m2 = integrated_matrix_variant(&f, 2).unwrap();
            for p in [1.0, 2.0, 2.5] {
                let p = PExponent::new(p).unwrap();
                let n1 = opnorm(&m1, p, &Budget::default(), seed).unwrap().value;
                let n2 = opnorm(&m2, p, &Budget::default(), seed).unwrap().value;
                let tol = if p.is_exact() { 1e-9 } else { 1e-3 };
                prop_assert!((n1 - n2).abs() <= tol * n1.max(1.0),
                    "p={} {} vs {}", p.value(), n1, n2);
            }
        }
    }
}

#[test]
fn witness_certifies_the_reported_value() {
    // the reported value always equals ||M w||_p for the returned witness
    for seed in 0..20u64 {
        let mut r = sample::rng(seed);
        let m = sample::random_matrix(&mut r, 4, 4);
        for p in [1.0, 1.5, 2.0, 2.7] {
            let p = PExponent::new(p).unwrap();
            let e = opnorm(&m, p, &Budget::default(), seed).unwrap();
            let w = e.witness.expect("nonzero matrix has a witness");
            let val = takai_core::pnorm::vec_p_norm(&m.matvec(&w), p.value());
            assert!(
                (val - e.value).abs() <= 1e-12 * e.value.max(1e-300),
                "p={} reported {} recomputed {}",
                p.value(),
                e.value,
                val
            );
        }
    }
}

#[test]
fn estimator_tracks_oracle_on_estimated_exponents() {
    let mut failures = Vec::new();
    for seed in 0..50u64 {
        let mut r = sample::rng(seed);
        let dim = 2 + (seed as usize % 3);
        let m = sample::random_matrix(&mut r, dim, dim);
        for p in [1.5, 3.0] {
            let p = PExponent::new(p).unwrap();
            let est = opnorm(&m, p, &Budget::default(), seed).unwrap();
            let oracle = opnorm_oracle(&m, p, 12, seed).unwrap();
            let gap = (est.value - oracle.value).abs() / est.value.max(1e-9);
            if gap > 1e-3 {
                failures.push((seed, p.value(), est.value, oracle.value));
            }
        }
    }
    assert!(
        failures.is_empty(),
        "estimator/oracle disagreements: {failures:?}"
    );
}

#[test]
fn amplified_norms_are_invariant_across_rep_variants() {
    // matrix amplification over Functions(2) and M_2 at levels 1..3
    for (alg, seed) in [
        (CoefficientAlgebra::functions_over_scalars(2), 3u64),
        (CoefficientAlgebra::full_matrix(2), 4u64),
    ] {
        let mut r = sample::rng(seed);
        for level in 1usize..=3 {
            let elems: Vec<Vec<_>> = (0..level)
                .map(|_| (0..level).map(|_| alg.random_element(&mut r)).collect())
                .collect();
            for p in [1.0, 2.0, 2.5] {
                let p = PExponent::new(p).unwrap();
                let grid1: Vec<Vec<_>> = elems
                    .iter()
                    .map(|row| row.iter().map(|e| e.represent().unwrap()).collect())
                    .collect();
                let grid2: Vec<Vec<_>> = elems
                    .iter()
                    .map(|row| row.iter().map(|e| e.rep_variant(2).unwrap()).collect())
                    .collect();
                let n1 = takai_core::pnorm::amplified_norm(&grid1, p, &Budget::default(), seed)
                    .unwrap()
                    .value;
                let n2 = takai_core::pnorm::amplified_norm(&grid2, p, &Budget::default(), seed)
                    .unwrap()
                    .value;
                let tol = if p.is_exact() { 1e-9 } else { 1e-3 };
                assert!(
                    (n1 - n2).abs() <= tol * n1.max(1.0),
                    "level {level} p {} : {} vs {}",
                    p.value(),
                    n1,
                    n2
                );
            }
        }
    }
}

#[test]
fn action_isometry_on_represented_elements() {
    let group = FiniteAbelianGroup::new(vec![2, 4]).unwrap();
    let cases: Vec<(Action, CoefficientAlgebra)> = vec![
        (
            Action::left_translation(group.clone(), Action::trivial(group.clone())).unwrap(),
            CoefficientAlgebra::functions_over_scalars(group.order()),
        ),
        (
            Action::monomial_shift(group.clone(), 2).unwrap(),
            CoefficientAlgebra::full_matrix(2),
        ),
    ];
    for (action, alg) in cases {
        let mut r = sample::rng(9);
        let a = alg.random_element(&mut r);
        for s in group.enumerate() {
            let moved = action.act(&s, &a).unwrap();
            for p in [1.0, 1.5, 2.0] {
                let p = PExponent::new(p).unwrap();
                let before = opnorm(&a.represent().unwrap(), p, &Budget::default(), 0)
                    .unwrap()
                    .value;
                let after = opnorm(&moved.represent().unwrap(), p, &Budget::default(), 0)
                    .unwrap()
                    .value;
                let tol = if p.is_exact() { 1e-9 } else { 1e-3 };
                assert!((before - after).abs() <= tol * before.max(1.0));
            }
        }
    }
}

#[test]
fn crossed_element_json_matches_documented_schema() {
    let group = FiniteAbelianGroup::new(vec![2, 2]).unwrap();
    let ctx = ConvContext::new(
        group.clone(),
        LayerKind::Discrete,
        CoefficientAlgebra::Scalars,
        Action::trivial(group.clone()),
    )
    .unwrap();
    let f = CrossedElement::delta(
        &ctx,
        &group.element(2),
        takai_core::algebra::AlgebraElement::scalar(Complex64::new(0.0, 1.0)),
    );
    let v = f.to_json();
    assert_eq!(v["group"], "Z2xZ2");
    assert_eq!(v["layer"], "G");
    assert_eq!(v["coeffs"].as_array().unwrap().len(), 4);
    assert_eq!(v["coeffs"][2][1], 1.0);
    let back = CrossedElement::from_json(&ctx, &v).unwrap();
    assert!(back.max_abs_diff(&f) < 1e-15);
}
