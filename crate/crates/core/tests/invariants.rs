use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use indexlab::eta::dist_z;
use indexlab::flow::{spectral_flow, FlowOptions, OperatorPath};
use indexlab::linalg;
use indexlab::maslov::{maslov_index, random_triple_relation, EndpointRule, LagrangianPath};
use indexlab::scenario::{preset, Overrides, Scenario};

fn away_from_zero() -> impl Strategy<Value = f64> {
    prop_oneof![-3.0..-0.1f64, 0.1..3.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dist_z_is_periodic_and_bounded(x in -50.0..50.0f64, n in -20i32..20) {
        let d = dist_z(x);
        prop_assert!((0.0..=0.5).contains(&d));
        prop_assert!((dist_z(x + n as f64) - d).abs() < 1e-9);
        prop_assert!((dist_z(-x) - d).abs() < 1e-12);
    }

    #[test]
    fn diagonal_flow_counts_sign_changes(
        ab in prop::collection::vec((away_from_zero(), away_from_zero()), 1..8),
    ) {
        let a: Vec<f64> = ab.iter().map(|p| p.0).collect();
        let b: Vec<f64> = ab.iter().map(|p| p.1 - p.0).collect();
        let expected = ab.iter().map(|&(x, y)| match (x < 0.0, y < 0.0) {
            (true, false) => 1,
            (false, true) => -1,
            _ => 0,
        }).sum::<i64>();
        let path = OperatorPath::affine("diag", linalg::diag_real(&a), linalg::diag_real(&b), 33);
        let fr = spectral_flow(&path, &FlowOptions::default()).unwrap();
        prop_assert_eq!(fr.value, expected);
        prop_assert_eq!(fr.tracked, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_reverses_and_concatenates(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h0 = linalg::random_hermitian(n, &mut rng);
        let h1 = linalg::scale_re(3.0, &linalg::random_hermitian(n, &mut rng));
        let h2 = linalg::scale_re(3.0, &linalg::random_hermitian(n, &mut rng));
        let p = OperatorPath::affine("p", h0.clone(), h1.clone(), 81);
        let q = OperatorPath::affine("q", &h0 + &h1, h2, 81);
        let opts = FlowOptions::default();
        let sf = |x: &OperatorPath| spectral_flow(x, &opts).unwrap();
        let (fp, fq) = (sf(&p), sf(&q));
        prop_assert_eq!(fp.tracked, fp.value);
        prop_assert_eq!(sf(&p.reversed()).value, -fp.value);
        prop_assert_eq!(sf(&p.concat(&q)).value, fp.value + fq.value);
        prop_assert_eq!(sf(&p.concat(&p.reversed())).value, 0);
    }

    #[test]
    fn triple_index_relation(seed in any::<u64>(), dim in 1usize..4) {
        let r = random_triple_relation(dim, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(r.holds(), "{:?}", r);
    }

    #[test]
    fn maslov_reverses_and_concatenates(seed in any::<u64>(), dim in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = || linalg::random_unitary(dim, &mut rng);
        let (a0, a1, a2, b0, b1, b2) = (u(), u(), u(), u(), u(), u());
        let geo = |x: &linalg::CMat, y: &linalg::CMat| LagrangianPath::geodesic(x, y, 400).unwrap();
        let (p1, p2, q1, q2) = (geo(&a0, &a1), geo(&a1, &a2), geo(&b0, &b1), geo(&b1, &b2));
        let mas = |p: &LagrangianPath, q: &LagrangianPath| maslov_index(p, q, EndpointRule::Strict).unwrap();
        let (m1, m2) = (mas(&p1, &q1), mas(&p2, &q2));
        prop_assert_eq!(mas(&p1.reversed(), &q1.reversed()), -m1);
        prop_assert_eq!(mas(&p1.concat(&p2), &q1.concat(&q2)), m1 + m2);
        prop_assert_eq!(mas(&q1, &p1), -m1);
    }

    #[test]
    fn scenario_round_trip(truncation in 20usize..80, grid in 10usize..200, seed in 0..=i64::MAX as u64) {
        let s = preset("interval-ramp-w1-aps").unwrap()
            .with_overrides(&Overrides { truncation: Some(truncation), grid: Some(grid), seed: Some(seed) })
            .unwrap();
        let back = Scenario::from_toml(&s.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back.hash(), s.hash());
        prop_assert_eq!(back, s);
    }

    #[test]
    fn seeds_beyond_toml_range_are_rejected(seed in (i64::MAX as u64 + 1)..=u64::MAX) {
        let s = preset("eta-lattice").unwrap();
        let o = Overrides { seed: Some(seed), ..Default::default() };
        prop_assert!(s.with_overrides(&o).is_err());
    }
}
