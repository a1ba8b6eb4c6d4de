//! Property tests over randomly generated structures and sets.

use std::collections::BTreeSet;

use proptest::prelude::*;

use homog::canon::iso_hash;
use homog::files::{structure_from_json, structure_to_json};
use homog::partition::lex_less;
use homog::search::{verify_morphism, MorphKind};
use homog::structure::{FinStructure, Signature};

fn arb_graph(max_n: usize) -> impl Strategy<Value = FinStructure> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        proptest::collection::vec(any::<bool>(), pairs.len()).prop_map(move |mask| {
            let mut s = FinStructure::empty(Signature::graph(), n);
            for (on, &(i, j)) in mask.iter().zip(&pairs) {
                if *on {
                    s.insert(0, vec![i, j]).unwrap();
                }
            }
            s
        })
    })
}

proptest! {
    #[test]
    fn json_round_trip(s in arb_graph(7)) {
        let text = structure_to_json(&s);
        let back = structure_from_json(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(structure_to_json(&back), text);
    }

    #[test]
    fn induced_idempotent(s in arb_graph(7), mask in any::<u8>()) {
        let subset: BTreeSet<usize> = (0..s.size()).filter(|&e| mask & (1 << e) != 0).collect();
        let (first, _) = s.induced(&subset).unwrap();
        let full: BTreeSet<usize> = (0..first.size()).collect();
        let (second, _) = first.induced(&full).unwrap();
        prop_assert_eq!(second, first);
    }

    #[test]
    fn iso_hash_permutation_invariant(s in arb_graph(6), seed in any::<u64>()) {
        let n = s.size();
        let mut perm: Vec<usize> = (0..n).collect();
        // Cheap seeded shuffle.
        let mut state = seed | 1;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let j = (state >> 33) as usize % (i + 1);
            perm.swap(i, j);
        }
        let mut relabelled = FinStructure::empty(s.signature().clone(), n);
        for inst in s.instances() {
            let tuple: Vec<usize> = inst.tuple.iter().map(|&e| perm[e]).collect();
            relabelled.insert(inst.rel, tuple).unwrap();
        }
        prop_assert!(verify_morphism(&s, &relabelled, &perm, MorphKind::Iso));
        prop_assert_eq!(iso_hash(&s), iso_hash(&relabelled));
    }

    #[test]
    fn lex_less_total_and_antisymmetric(a in any::<u16>(), b in any::<u16>()) {
        let x: BTreeSet<usize> = (0..16).filter(|&e| a & (1 << e) != 0).collect();
        let y: BTreeSet<usize> = (0..16).filter(|&e| b & (1 << e) != 0).collect();
        if x == y {
            prop_assert!(!lex_less(&x, &y));
        } else {
            prop_assert_ne!(lex_less(&x, &y), lex_less(&y, &x));
        }
    }
}
