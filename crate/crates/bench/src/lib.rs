//! Fixed inputs shared by the benchmarks.

use pmr_core::structure::expand;
use pmr_core::synth::{random_model, random_tree, ModelProfile, TreeProfile};
use pmr_core::ProcessModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `n` arbitrary flow graphs with every element type.
pub fn graph_corpus(n: u64) -> Vec<ProcessModel> {
    (0..n).map(|s| random_model(&mut ChaCha8Rng::seed_from_u64(s), &ModelProfile::FULL)).collect()
}

/// `n` block-structured models, convertible to every branch notation.
pub fn block_corpus(n: u64) -> Vec<ProcessModel> {
    let profile = TreeProfile { intermediate_events: false, event_labels: false, ..TreeProfile::FULL };
    (0..n).map(|s| expand(&random_tree(&mut ChaCha8Rng::seed_from_u64(s), &profile))).collect()
}
