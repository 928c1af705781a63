mod common;

use common::*;
use freeprod::word::HypothesisFailure;
use freeprod::{FiniteGroup, FreeProduct, Word};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// A reduced word of length ≤ 6 is p·r·p⁻¹ with |p| ≤ 3 and r cyclically
// reduced; rotations of r need conjugators shorter than |r|, so any two
// conjugate words of length ≤ 6 are related by a conjugator of length ≤ 11.
const CONJUGATOR_BOUND: usize = 11;

#[test]
fn conjugacy_matches_bounded_conjugator_search() {
    let fp = z2_z3();
    let words = all_reduced_words(&fp, 6);
    let conjugators = all_reduced_words(&fp, CONJUGATOR_BOUND);
    for x in &words {
        for y in &words {
            let expected = conjugator_search(&fp, x.syllables(), y.syllables(), &conjugators);
            assert_eq!(fp.are_conjugate(x, y), expected, "{x:?} ~ {y:?}");
            assert_eq!(rotation_conjugate(&fp, x.syllables(), y.syllables()), expected);
        }
    }
}

#[test]
fn shared_cyclic_subgroups_match_power_search() {
    let fp = z2_z3();
    let words = all_reduced_words(&fp, 6);
    for x in &words {
        for y in &words {
            let long = |w: &Word| naive_cyclic_reduce(&fp, w.syllables()).len() >= 2;
            let got = fp.share_conjugate_cyclic_subgroup(x, y);
            if !long(x) || !long(y) {
                assert!(got.is_err(), "{x:?}, {y:?}");
                continue;
            }
            // roots have exponent ≤ 6, so powers up to 6 suffice
            let expected = (1..=6i64).any(|p| {
                let xp = naive_pow(&fp, x.syllables(), p);
                (-6..=6i64).filter(|&q| q != 0).any(|q| rotation_conjugate(&fp, &xp, &naive_pow(&fp, y.syllables(), q)))
            });
            assert_eq!(got.unwrap(), expected, "{x:?}, {y:?}");
        }
    }
}

#[test]
fn reduce_is_idempotent_and_evaluation_invariant() {
    let fp = z2_z3();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let quotients: Vec<_> = [(6, true), (12, true), (7, false), (30, false)]
        .iter()
        .map(|&(n, free)| random_cyclic_graph(&fp, n, free, &mut rng))
        .collect();
    for _ in 0..200 {
        let raw = random_raw(&fp, &mut rng, 14);
        let r = fp.reduce(&raw).unwrap();
        assert_eq!(fp.reduce(r.syllables()).unwrap(), r);
        assert_eq!(r.syllables(), naive_reduce(&fp, &raw).as_slice());
        for g in &quotients {
            for v in 0..g.vertex_count() {
                assert_eq!(act(g, v, &raw), act(g, v, r.syllables()));
            }
        }
    }
}

#[test]
fn products_and_inverses_agree_with_naive_operations() {
    let fp = FreeProduct::new(FiniteGroup::cyclic(3), FiniteGroup::cyclic(4));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let x = fp.reduce(&random_raw(&fp, &mut rng, 8)).unwrap();
        let y = fp.reduce(&random_raw(&fp, &mut rng, 8)).unwrap();
        assert_eq!(fp.mul(&x, &y).syllables(), naive_mul(&fp, x.syllables(), y.syllables()).as_slice());
        assert!(fp.mul(&x, &fp.inverse(&x)).is_empty());
        let c = fp.cyclic_reduce(&x);
        assert_eq!(fp.conjugate(&c.representative, &c.conjugator), x);
        let naive = naive_cyclic_reduce(&fp, x.syllables());
        assert_eq!(c.representative.len(), naive.len());
        assert!(rotation_conjugate(&fp, c.representative.syllables(), &naive));
        // canonical representative: least rotation
        if naive.len() >= 2 {
            let least = (0..naive.len()).map(|k| [&naive[k..], &naive[..k]].concat()).min().unwrap();
            assert_eq!(c.representative.syllables(), least.as_slice());
        }
    }
}

#[test]
fn root_recovers_primitive_word_and_exponent() {
    let fp = z2_z3();
    for r in all_reduced_words(&fp, 6).into_iter().filter(|w| w.len() >= 2 && w.is_cyclically_reduced()) {
        // primitive: no proper period dividing the length
        let n = r.len();
        let s = r.syllables();
        let primitive = (1..n).filter(|d| n % d == 0).all(|d| (0..n).any(|i| s[i] != s[i % d]));
        let (root, t) = fp.root(&r).unwrap();
        if primitive {
            assert_eq!((root.clone(), t), (r.clone(), 1));
        }
        for e in 1..=4 {
            let p = Word::from_reduced(s.repeat(e)).unwrap();
            assert_eq!(fp.root(&p).unwrap(), (root.clone(), t * e));
        }
    }
}

#[test]
fn hypothesis_examples() {
    let fp = z2_z3();
    let ok = fp.check_hypotheses(&[w(&fp, "a b"), w(&fp, "a b a b2")]);
    assert!(ok.passes(), "{ok:?}");
    let bad = fp.check_hypotheses(&[w(&fp, "a b"), w(&fp, "a b2")]);
    assert_eq!(bad.failures, vec![HypothesisFailure::SharedCyclicSubgroup { first: 0, second: 1 }]);
    // a b2 = (b a)⁻¹ is a rotation of the inverse of a b
    assert!(rotation_conjugate(&fp, w(&fp, "a b2").syllables(), &naive_inverse(&fp, w(&fp, "a b").syllables())));
    let short = fp.check_hypotheses(&[w(&fp, "b a b2")]);
    assert!(matches!(short.failures[..], [HypothesisFailure::InFactorConjugate { index: 0, cyclic_length: 1 }]));
}

proptest! {
    #[test]
    fn conjugation_preserves_conjugacy_class(seed in any::<u64>()) {
        let fp = FreeProduct::new(FiniteGroup::cyclic(3), FiniteGroup::cyclic(3));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = fp.reduce(&random_raw(&fp, &mut rng, 7)).unwrap();
        let c = fp.reduce(&random_raw(&fp, &mut rng, 5)).unwrap();
        let y = fp.conjugate(&x, &c);
        prop_assert!(fp.are_conjugate(&x, &y));
        prop_assert!(rotation_conjugate(&fp, x.syllables(), y.syllables()));
        prop_assert_eq!(fp.cyclic_length(&x), fp.cyclic_length(&y));
    }

    #[test]
    fn rotations_of_cyclically_reduced_words_are_conjugate(seed in any::<u64>(), k in 0usize..8) {
        let fp = FreeProduct::new(FiniteGroup::cyclic(2), FiniteGroup::cyclic(4));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = fp.cyclic_reduce(&fp.reduce(&random_raw(&fp, &mut rng, 10)).unwrap()).representative;
        prop_assume!(x.len() >= 2);
        let y = x.rotate(k % x.len());
        prop_assert!(fp.are_conjugate(&x, &y));
        prop_assert!(fp.share_conjugate_cyclic_subgroup(&x, &fp.inverse(&y)).unwrap());
    }
}
