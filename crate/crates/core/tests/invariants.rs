use continuant_lab::cf::{
    cf_expand, even_normalize, matrix_to_fraction, spectral, word_to_matrix, Alphabet, CfWord, Fraction, Mat2,
};
use continuant_lab::dimension::{dimension, eigenvalue_at};
use continuant_lab::enumerate::{multiplicity_table, orbit_pairs, Counting};
use continuant_lab::products::{comparability_chains_hold, mult_defect};
use num_bigint::BigInt;
use proptest::prelude::*;

fn word(max_letter: u32, len: std::ops::Range<usize>) -> impl Strategy<Value = CfWord> {
    prop::collection::vec(1..=max_letter, len).prop_map(|q| CfWord::new(q).unwrap())
}

fn even_word(max_letter: u32, half: std::ops::Range<usize>) -> impl Strategy<Value = CfWord> {
    prop::collection::vec((1..=max_letter, 1..=max_letter), half)
        .prop_map(|v| CfWord::new(v.into_iter().flat_map(|(a, b)| [a, b]).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, rng_algorithm: prop::test_runner::RngAlgorithm::ChaCha, ..ProptestConfig::default() })]

    #[test]
    fn word_map_is_a_homomorphism(u in word(6, 1..30), v in word(6, 1..30)) {
        let lhs = word_to_matrix(&u.concat(&v));
        prop_assert_eq!(lhs, &word_to_matrix(&u) * &word_to_matrix(&v));
    }

    #[test]
    fn transpose_is_the_reversed_word(u in word(9, 1..40)) {
        let mut rev = u.quotients().to_vec();
        rev.reverse();
        prop_assert_eq!(word_to_matrix(&u).transpose(), word_to_matrix(&CfWord::new(rev).unwrap()));
    }

    #[test]
    fn determinant_sign_is_parity(u in word(9, 1..40)) {
        let expect = if u.len() % 2 == 0 { 1 } else { -1 };
        prop_assert_eq!(word_to_matrix(&u).det(), BigInt::from(expect));
    }

    #[test]
    fn even_words_satisfy_entry_order(u in even_word(9, 1..20)) {
        prop_assert!(word_to_matrix(&u).satisfies_entry_order());
    }

    #[test]
    fn norm_and_trace_chains(u in even_word(5, 1..12)) {
        let m = word_to_matrix(&u);
        if let Some(e) = m.entries_i64() {
            prop_assert!(comparability_chains_hold(&e.map(|x| x as u64)));
        }
    }

    #[test]
    fn expanding_eigenvector(u in even_word(5, 1..10)) {
        let m = word_to_matrix(&u);
        let s = spectral(&m).unwrap();
        let [a, b, c, d] = m.to_f64();
        let v = s.v_plus;
        let img = [a * v[0] + b * v[1], c * v[0] + d * v[1]];
        let scale = s.lambda_plus;
        prop_assert!((img[0] - scale * v[0]).abs() <= 1e-9 * scale);
        prop_assert!((img[1] - scale * v[1]).abs() <= 1e-9 * scale);
        prop_assert!((s.lambda_plus * s.lambda_minus - 1.0).abs() < 1e-12);
        prop_assert!(v[0] >= 0.0 && v[1] > 0.0);
        // the expanding direction is the periodic continued fraction of the word
        let point = s.point();
        let col = u.value().unwrap().to_f64();
        // |x - b/d| < 1/d^2 and |m| < 4d
        prop_assert!((point - col).abs() <= 16.0 / m.norm_frobenius().powi(2) + 1e-12);
    }

    #[test]
    fn power_is_multiplicative(u in even_word(4, 1..4), k in 1u32..6) {
        let g = word_to_matrix(&u);
        let (defect, _) = mult_defect(&g.pow(k), &g).unwrap();
        prop_assert!(defect < 1e-12);
    }

    #[test]
    fn expansion_round_trip(d in 2u64..1_000_000, b in 1u64..1_000_000) {
        let b = b % d;
        prop_assume!(b > 0 && num_integer::gcd(b, d) == 1);
        let f = Fraction::new(b, d).unwrap();
        let w = cf_expand(f).unwrap();
        prop_assert_eq!(w.value().unwrap(), f);
        prop_assert_eq!(matrix_to_fraction(&word_to_matrix(&w)).unwrap(), f);
        let e = even_normalize(&w).unwrap();
        prop_assert_eq!(e.len() % 2, 0);
        prop_assert_eq!(e.value().unwrap(), f);
    }

    #[test]
    fn matrices_outside_the_semigroup_are_rejected(a in 0i64..50, b in 0i64..50, c in 0i64..50, d in 0i64..50) {
        let m = Mat2::new(a, b, c, d);
        if let Ok(f) = matrix_to_fraction(&m) {
            let w = cf_expand(f).ok();
            let hit = w.iter().flat_map(|w| std::iter::once(w.clone()).chain(w.alternate()))
                .any(|w| word_to_matrix(&w) == m)
                || (f.numer() == 1 && f.denom() == 1 && m == Mat2::generator(1));
            prop_assert!(hit);
        }
    }
}

#[test]
fn enumeration_members_expand_into_the_alphabet() {
    let a = Alphabet::new(vec![1, 3, 4]).unwrap();
    for (b, d) in orbit_pairs(&a, 3000, Counting::Canonical) {
        let w = cf_expand(Fraction::new(b, d).unwrap()).unwrap();
        assert!(w.uses_only(&a), "{b}/{d} = {w:?}");
    }
    let t = multiplicity_table(&a, 3000, Counting::Canonical);
    assert_eq!(t.total(), orbit_pairs(&a, 3000, Counting::Canonical).len() as u64);
}

#[test]
fn dimension_root_is_consistent() {
    let a = Alphabet::new(vec![1, 2, 3]).unwrap();
    let r = dimension(&a, 1e-12, 64).unwrap();
    let l = eigenvalue_at(&a, r.delta, 64).unwrap();
    assert!((l - 1.0).abs() < 1e-10);
    assert!(eigenvalue_at(&a, r.delta - 1e-6, 64).unwrap() > 1.0);
    assert!(eigenvalue_at(&a, r.delta + 1e-6, 64).unwrap() < 1.0);
}
