use pmr_core::structure::{canonicalize, expand, to_branch_tree, verdict};
use pmr_core::synth::{random_model, random_tree, ModelProfile, TreeProfile};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn expanded_trees_reduce_to_themselves(seed in any::<u64>()) {
        let t = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), &TreeProfile::FULL);
        let m = expand(&t);
        prop_assert!(m.is_well_formed(), "{:?}", m.validate());
        let back = to_branch_tree(&m);
        prop_assert!(back.is_ok(), "{:?}", back.err());
        prop_assert_eq!(canonicalize(&back.unwrap().tree), canonicalize(&t));
    }

    /// Any reduction of a graph expands back to the same graph, and the
    /// verdict agrees with the reduction.
    #[test]
    fn reductions_are_sound(seed in any::<u64>()) {
        let profile = ModelProfile { max_tasks: 7, ..ModelProfile::STANDARDIZED };
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), &profile);
        match to_branch_tree(&m) {
            Ok(conv) => {
                prop_assert!(verdict(&m).convertible);
                if conv.losses.is_empty() {
                    prop_assert!(expand(&conv.tree).canonical_equal(&m));
                }
            }
            Err(v) => {
                prop_assert!(!v.convertible && v.reason.is_some());
                prop_assert_eq!(verdict(&m), v);
            }
        }
    }
}
