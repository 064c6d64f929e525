use proptest::prelude::*;

use bctk::bct::state::{deterministic_effect, pair};
use bctk::bct::tensor::{compose_par, decompose, identity, recompose, swap};
use bctk::classical::ClassicalMap;
use bctk::dsl::{parse, pretty, random_closed_circuit};
use bctk::lct::{falsify, jellyfish_matrix, random_candidate, LctInstance};
use bctk::ontic::{xi_state, xi_transformation};
use bctk::random::{self, trial_rng};
use bctk::systems::{flatten_label, q_decode, q_encode, unflatten_label, SystemShape};
use bctk::Rational;

fn xi(t: &bctk::bct::tensor::TransformationTensor) -> ClassicalMap {
    xi_transformation(t).unwrap().map
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pair_codec_is_a_bijection(n1 in 1usize..40, n2 in 1usize..40, raw in 0usize..10_000) {
        let q = raw % (2 * n1 * n2) + 1;
        let (i, j, s) = q_decode(n1, n2, q).unwrap();
        prop_assert_eq!(q_encode(n1, n2, i, j, s).unwrap(), q);
        prop_assert!(q_encode(n1, n2, n1 + 1, 1, 0).is_err());
    }

    #[test]
    fn flattening_round_trips(elems in prop::collection::vec(2usize..5, 1..5), raw in 0usize..1_000_000) {
        let shape = SystemShape::new(elems).unwrap();
        let q = raw % shape.bct_dim() + 1;
        let label = unflatten_label(&shape, q).unwrap();
        prop_assert_eq!(flatten_label(&shape, &label).unwrap(), q);
    }

    #[test]
    fn composition_is_associative_and_unital(seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let s: Vec<SystemShape> = (0..4).map(|_| random::shape(&mut rng, 3, 2, 64)).collect();
        let t1 = random::tensor(&mut rng, &s[0], &s[1], false);
        let t2 = random::tensor(&mut rng, &s[1], &s[2], false);
        let t3 = random::tensor(&mut rng, &s[2], &s[3], true);
        let left = t1.then(&t2).unwrap().then(&t3).unwrap();
        let right = t1.then(&t2.then(&t3).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(identity(&s[0]).unwrap().then(&t1).unwrap(), t1.clone());
        prop_assert_eq!(t1.then(&identity(&s[1]).unwrap()).unwrap(), t1);
    }

    #[test]
    fn embedding_is_functorial(seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 1);
        let a = random::shape(&mut rng, 3, 2, 16);
        let b = random::shape(&mut rng, 3, 2, 16);
        let c = random::shape(&mut rng, 3, 1, 4);
        let t1 = random::tensor(&mut rng, &a, &b, false);
        let t2 = random::tensor(&mut rng, &b, &a, true);
        let t3 = random::tensor(&mut rng, &c, &c, true);
        prop_assert_eq!(xi(&t1.then(&t2).unwrap()), xi(&t1).then(&xi(&t2)).unwrap());
        prop_assert_eq!(xi(&compose_par(&t1, &t3).unwrap()), xi(&t1).kron(&xi(&t3)));
    }

    #[test]
    fn channels_compose_to_channels(seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 2);
        let a = random::shape(&mut rng, 4, 2, 64);
        let b = random::shape(&mut rng, 4, 2, 64);
        let t = random::tensor(&mut rng, &a, &b, true);
        let u = random::tensor(&mut rng, &b, &a, true);
        let tu = t.then(&u).unwrap();
        prop_assert!(tu.is_channel(0.0));
        let rho = random::state(&mut rng, &a, true);
        let p = pair(&deterministic_effect(&a), &tu.apply(&rho).unwrap()).unwrap();
        prop_assert_eq!(p, Rational::from(1));
        prop_assert!(xi(&tu).is_stochastic(0.0));
    }

    #[test]
    fn swap_is_an_involution(seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 3);
        let a = random::shape(&mut rng, 3, 2, 64);
        let b = random::shape(&mut rng, 3, 2, 64);
        let there = swap::<Rational>(&a, &b).unwrap();
        let back = swap::<Rational>(&b, &a).unwrap();
        prop_assert_eq!(there.then(&back).unwrap(), identity(&a.compose(&b)).unwrap());
        prop_assert!(xi(&there).is_permutation());
    }

    #[test]
    fn coefficients_are_unique(seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 4);
        let a = random::shape(&mut rng, 4, 2, 64);
        let b = random::shape(&mut rng, 4, 2, 64);
        let t = random::tensor(&mut rng, &a, &b, false);
        prop_assert_eq!(recompose(&a, &b, &decompose(&t)).unwrap(), t);
    }

    #[test]
    fn float_images_track_rational_ones(seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 5);
        let a = random::shape(&mut rng, 3, 2, 64);
        let rho = random::state(&mut rng, &a, false);
        let exact = xi_state(&rho).unwrap().map;
        let float = xi_state(&rho.convert::<f64>()).unwrap().map;
        for (x, y) in exact.entries().iter().zip(float.entries()) {
            prop_assert!((bctk::Scalar::to_f64(x) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn jellyfish_trace_identity(seed in any::<u64>()) {
        let inst = LctInstance::default();
        let cand = random_candidate(&mut trial_rng(seed, 6), &inst);
        let m = jellyfish_matrix(&cand).unwrap();
        let s: Rational = cand.xi_b.iter().zip(&cand.xi_beta).map(|(x, y)| x * y).sum();
        prop_assert_eq!(m.choi_close().unwrap(), s);
        prop_assert!(!falsify(&cand, &inst).unwrap().is_empty());
    }

    #[test]
    fn printing_is_a_fixed_point(seed in any::<u64>()) {
        let text = random_closed_circuit(&mut trial_rng(seed, 7), 3);
        let ast = parse(&text).unwrap();
        let printed = pretty(&ast);
        prop_assert_eq!(&printed, &text);
        prop_assert_eq!(parse(&printed).unwrap(), ast);
    }
}
