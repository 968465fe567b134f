//! Randomized invariants across modules.

use std::collections::BTreeSet;

use proptest::prelude::*;

use monex::discretize::{self, ExportFormat, LayeredBipartiteGraph, PartialMonotoneMap};
use monex::interval::{Interval, IntervalSet};
use monex::rational::rat;
use monex::words::{self, Letter, Word};
use monex::{Mat2Q, Rational};

fn letter() -> impl Strategy<Value = Letter> {
    (0u16..3, any::<bool>()).prop_map(|(i, inv)| if inv { Letter::inv(i) } else { Letter::gen(i) })
}

/// Any letter sequence, freely reduced by concatenation.
fn word() -> impl Strategy<Value = Word> {
    prop::collection::vec(letter(), 0..12).prop_map(|ls| {
        ls.into_iter().fold(Word::empty(), |w, l| w.concat_reduce(&Word::new(vec![l]).unwrap()))
    })
}

fn unimodular() -> impl Strategy<Value = Mat2Q> {
    (-6i64..=6, -6i64..=6, 1i64..=5).prop_map(|(s, t, d)| {
        let u = Mat2Q::new(rat(1, 1), rat(s, d), rat(0, 1), rat(1, 1)).unwrap();
        let l = Mat2Q::new(rat(1, 1), rat(0, 1), rat(t, d), rat(1, 1)).unwrap();
        &u * &l
    })
}

fn interval_set() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec((0i64..=64, 0i64..=64), 0..6).prop_map(|v| {
        IntervalSet::from_intervals(
            v.into_iter().map(|(a, b)| Interval { lo: rat(a.min(b), 64), hi: rat(a.max(b), 64) }).collect(),
        )
    })
}

fn monotone_layer(n: usize) -> impl Strategy<Value = PartialMonotoneMap> {
    (prop::collection::btree_set(0..n, 0..=n), prop::collection::btree_set(0..n, 0..=n)).prop_map(
        move |(d, c)| {
            let mut t = vec![None; n];
            for (i, j) in d.into_iter().zip(c) {
                t[i] = Some(j);
            }
            PartialMonotoneMap::new(n, t).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn word_inverse_cancels(w in word(), v in word()) {
        prop_assert!(w.concat_reduce(&w.inverse()).is_empty());
        // (wv)⁻¹ = v⁻¹w⁻¹
        prop_assert_eq!(w.concat_reduce(&v).inverse(), v.inverse().concat_reduce(&w.inverse()));
        prop_assert_eq!(w.to_string().parse::<Word>().unwrap(), w);
    }

    #[test]
    fn evaluation_is_a_homomorphism(w in word(), v in word(), g in unimodular(), h in unimodular(), k in unimodular()) {
        let gens = [g, h, k];
        let lhs = words::word_eval(&w.concat_reduce(&v), &gens);
        let rhs = &words::word_eval(&w, &gens) * &words::word_eval(&v, &gens);
        prop_assert_eq!(lhs, rhs);
        prop_assert!(words::word_eval(&w.inverse(), &gens) == words::word_eval(&w, &gens).inv());
    }

    #[test]
    fn mobius_is_increasing_off_the_pole(g in unimodular(), a in -20i64..20, b in -20i64..20) {
        prop_assume!(a < b);
        let (x, y) = (rat(a, 7), rat(b, 7));
        if let (Some(p), Some(q)) = (g.mobius_at(&x), g.mobius_at(&y)) {
            let pole_between = g.pole().is_some_and(|p| x < p && p < y);
            prop_assert!(pole_between || p < q);
        }
    }

    #[test]
    fn interval_sets_normalize(a in interval_set(), b in interval_set()) {
        let u = a.union(&b);
        prop_assert!(u.parts().windows(2).all(|w| w[0].hi < w[1].lo));
        prop_assert!(u.parts().iter().all(|p| p.lo < p.hi));
        prop_assert!(a.is_subset_of(&u) && b.is_subset_of(&u));
        prop_assert!(u.measure() <= a.measure() + b.measure());
        prop_assert!(u.measure() >= a.measure().max(b.measure()));
    }

    #[test]
    fn decomposition_covers_the_relation(rel in prop::collection::btree_set((0usize..12, 0usize..12), 0..40)) {
        // Overlap relations are unions of monotone staircases; any relation
        // still decomposes, with non-crossing layers that partition it.
        let rel: Vec<(usize, usize)> = rel.into_iter().collect();
        if let Ok(layers) = discretize::monotone_decompose(&rel, 12) {
            let mut seen = BTreeSet::new();
            for l in &layers {
                prop_assert!(l.is_strictly_monotone());
                for e in l.edges() {
                    prop_assert!(seen.insert(e));
                }
            }
            prop_assert_eq!(seen, rel.iter().copied().collect::<BTreeSet<_>>());
        }
    }

    #[test]
    fn exports_round_trip(layers in prop::collection::vec(monotone_layer(9), 1..5)) {
        let g = LayeredBipartiteGraph::from_layers(9, layers).unwrap();
        for f in [ExportFormat::LayeredJson, ExportFormat::EdgeCsv] {
            let back = discretize::import(&discretize::export(&g, f), f).unwrap();
            prop_assert_eq!(back.edges(), g.edges());
            // An edge list only knows the vertices it mentions.
            if f == ExportFormat::LayeredJson {
                prop_assert_eq!(back.n, g.n);
            } else {
                prop_assert!(back.n <= g.n);
            }
        }
    }

    #[test]
    fn partial_permutation_matrices(l in monotone_layer(10)) {
        let m = discretize::ZeroOneMatrix::from_layer(&l);
        prop_assert!(m.is_partial_permutation());
        prop_assert_eq!(m.ones(), l.len());
    }
}

#[test]
fn reduced_word_counts() {
    for (rank, len) in [(2, 6), (3, 4)] {
        let all: Vec<Word> = words::enumerate_reduced(rank, len, 10_000_000).unwrap().collect();
        // includes the empty word
        assert_eq!(all.len() as u128, words::count_up_to(rank, len));
        assert_eq!(all.iter().filter(|w| w.is_empty()).count(), 1);
        // 2k(2k-1)^(m-1) words of each length m
        for m in 1..=len {
            let expected = (2 * rank) as u128 * ((2 * rank - 1) as u128).pow(m as u32 - 1);
            assert_eq!(all.iter().filter(|w| w.len() == m).count() as u128, expected);
        }
    }
}

#[test]
fn rationals_sum_exactly() {
    let xs: Vec<Rational> = (1..200).map(|k| rat(1, k)).collect();
    let seq = xs.iter().fold(rat(0, 1), |s, x| s + x);
    assert_eq!(monex::rational::sum(&xs), seq);
}
