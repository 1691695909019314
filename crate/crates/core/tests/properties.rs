use proptest::prelude::*;
use spectral_stieltjes::family::stone_compose;
use spectral_stieltjes::integration::{integrate, IntegrateOptions, IntegrationMode};
use spectral_stieltjes::models::checks::integral_instance;
use spectral_stieltjes::models::random::{random_matrix, random_stone_model, rng_from_seed};
use spectral_stieltjes::models::{minimal_enclosing_circle, StoneModelSpec};
use spectral_stieltjes::{NormSpec, Operator, C64};

fn norm_spec() -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        Just(NormSpec::ONE),
        Just(NormSpec::EUCLIDEAN),
        Just(NormSpec::INFINITY),
        Just(NormSpec::new(3.0).unwrap()),
    ]
}

fn mode() -> impl Strategy<Value = IntegrationMode> {
    prop_oneof![Just(IntegrationMode::Standard), Just(IntegrationMode::Right)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norms_are_subadditive_and_submultiplicative(seed in any::<u64>(), dim in 1usize..7, ns in norm_spec()) {
        let mut rng = rng_from_seed(seed);
        let a = random_matrix(&mut rng, dim, 1.0);
        let b = random_matrix(&mut rng, dim, 1.0);
        let slack = if ns.is_one() || ns.is_two() || ns.is_infinity() { 1e-12 } else { 1e-6 };
        let (na, nb) = (a.norm(ns), b.norm(ns));
        prop_assert!((&a + &b).norm(ns) <= (na + nb) * (1.0 + slack) + slack);
        prop_assert!((&a * &b).norm(ns) <= na * nb * (1.0 + slack) + slack);
        prop_assert!(a.max_abs() <= na * (1.0 + slack) + slack);
        prop_assert!((Operator::identity(dim).norm(ns) - 1.0).abs() <= slack);
    }

    #[test]
    fn inverse_and_eigenvalues(seed in any::<u64>(), dim in 1usize..7) {
        let mut rng = rng_from_seed(seed);
        let a = &Operator::identity(dim).scale_real(3.0) + &random_matrix(&mut rng, dim, 0.5);
        let inv = a.inverse().unwrap();
        prop_assert!((&a * &inv).distance(&Operator::identity(dim), NormSpec::EUCLIDEAN) < 1e-10);
        let trace: C64 = a.eigenvalues().iter().sum();
        prop_assert!((trace - a.trace()).norm() < 1e-10);
    }

    #[test]
    fn composed_family_order_law(seed in any::<u64>(), dim in 2usize..7, radius in 0i64..4, l in -6.0f64..6.0, m in -6.0f64..6.0) {
        let mut rng = rng_from_seed(seed);
        let spec = StoneModelSpec { mass_at_zero: seed % 2 == 0, ..StoneModelSpec::new(dim, radius) };
        let model = random_stone_model(&mut rng, spec).unwrap();
        let e = stone_compose(&model.p, &model.e1).unwrap();
        let (el, em) = (e.evaluate(l), e.evaluate(m));
        let min = e.evaluate(l.min(m));
        prop_assert!((&el * &em).distance(&min, NormSpec::EUCLIDEAN) < 1e-10);
        prop_assert!((&em * &el).distance(&min, NormSpec::EUCLIDEAN) < 1e-10);
        prop_assert!((&el * &el).distance(&el, NormSpec::EUCLIDEAN) < 1e-10);
    }

    #[test]
    fn integral_is_additive_and_homogeneous(seed in any::<u64>(), t in 0.0f64..1.0, alpha_re in -2.0f64..2.0, mode in mode()) {
        let mut rng = rng_from_seed(seed);
        let inst = integral_instance(&mut rng, 6).unwrap();
        let opts = IntegrateOptions::default().with_mode(mode);
        let c = inst.a + t * (inst.b - inst.a);
        let whole = integrate(&inst.phi, &inst.family, inst.a, inst.b, &opts).unwrap();
        let left = integrate(&inst.phi, &inst.family, inst.a, c, &opts).unwrap();
        let right = integrate(&inst.phi, &inst.family, c, inst.b, &opts).unwrap();
        prop_assert!((&left.value + &right.value).distance(&whole.value, NormSpec::EUCLIDEAN) < 1e-10);
        let alpha = C64::new(alpha_re, 0.5);
        let scaled = inst.phi.left_mul(&Operator::identity(inst.family.dim()).scale(alpha)).unwrap();
        let s = integrate(&scaled, &inst.family, inst.a, inst.b, &opts).unwrap();
        prop_assert!(s.value.distance(&whole.value.scale(alpha), NormSpec::EUCLIDEAN) < 1e-10);
    }

    #[test]
    fn enclosing_circle_is_minimal(points in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..9), cx in -3.0f64..3.0, cy in -3.0f64..3.0) {
        let pts: Vec<C64> = points.iter().map(|&(x, y)| C64::new(x, y)).collect();
        let (center, radius) = minimal_enclosing_circle(&pts);
        prop_assert!(pts.iter().all(|p| (p - center).norm() <= radius + 1e-9));
        let other = C64::new(cx, cy);
        let other_radius = pts.iter().map(|p| (p - other).norm()).fold(0.0, f64::max);
        prop_assert!(radius <= other_radius + 1e-9);
    }
}
