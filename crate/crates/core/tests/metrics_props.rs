use std::collections::BTreeSet;

use pmr_core::codecs::pme::{to_pme, PmeTask};
use pmr_core::codecs::PmeBundle;
use pmr_core::metrics::{
    length_stats, lexical_similarity, pme_similarity, semantic_match, Backend, MatcherConfig, TokenizerSpec,
};
use pmr_core::synth::{random_model, ModelProfile};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 8] = ["approve", "approved", "order", "orders", "ship", "check", "invoice", "stock"];

fn label() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(&WORDS[..]), 1..4).prop_map(|w| w.join(" "))
}

fn tasks_bundle(labels: &[String]) -> PmeBundle {
    PmeBundle {
        tasks: labels
            .iter()
            .enumerate()
            .map(|(k, l)| PmeTask { id: format!("t{k}"), label: l.clone(), lane: None, pool: None })
            .collect(),
        ..Default::default()
    }
}

fn naive_counts(text: &str) -> (usize, usize, usize) {
    let mut lines = 0;
    let mut words = 0;
    let mut chars = 0;
    let mut in_word = false;
    let mut line_open = false;
    for c in text.chars() {
        chars += 1;
        if c == '\n' {
            lines += 1;
            line_open = false;
        } else {
            line_open = true;
        }
        if c.is_whitespace() {
            in_word = false;
        } else if !in_word {
            in_word = true;
            words += 1;
        }
    }
    if line_open {
        lines += 1;
    }
    (lines, words, chars)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dice_is_symmetric(a in prop::collection::vec(label(), 0..6), b in prop::collection::vec(label(), 0..6)) {
        for cfg in [MatcherConfig::exact(), MatcherConfig::default()] {
            let x = pme_similarity(&tasks_bundle(&a), &tasks_bundle(&b), &cfg).unwrap();
            let y = pme_similarity(&tasks_bundle(&b), &tasks_bundle(&a), &cfg).unwrap();
            prop_assert_eq!(x.scores(), y.scores());
        }
    }

    #[test]
    fn model_against_itself_scores_one(seed in any::<u64>()) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), &ModelProfile::FULL);
        let b = to_pme(&m);
        for cfg in [MatcherConfig::exact(), MatcherConfig::default()] {
            let r = pme_similarity(&b, &b, &cfg).unwrap();
            for (name, s) in r.scores() {
                prop_assert!(s == 1.0, "{} = {}", name, s);
            }
        }
    }

    #[test]
    fn exact_tasks_match_set_intersection(a in prop::collection::btree_set(label(), 0..6), b in prop::collection::btree_set(label(), 0..6)) {
        let (a, b): (Vec<String>, Vec<String>) = (a.into_iter().collect(), b.into_iter().collect());
        let r = pme_similarity(&tasks_bundle(&a), &tasks_bundle(&b), &MatcherConfig::exact()).unwrap();
        let common = a.iter().collect::<BTreeSet<_>>().intersection(&b.iter().collect()).count();
        let expected = if a.is_empty() && b.is_empty() { 1.0 } else { 2.0 * common as f64 / (a.len() + b.len()) as f64 };
        prop_assert!((r.tasks.score - expected).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&r.overall));
    }

    #[test]
    fn greedy_matching_is_one_to_one_and_maximal(a in prop::collection::vec(label(), 0..6), b in prop::collection::vec(label(), 0..6), theta in 0.0f64..=1.0) {
        let cfg = MatcherConfig::new(theta, Backend::Lexical).unwrap();
        let m = semantic_match(&a, &b, &cfg).unwrap();
        let is: BTreeSet<usize> = m.iter().map(|p| p.i).collect();
        let js: BTreeSet<usize> = m.iter().map(|p| p.j).collect();
        prop_assert_eq!(is.len(), m.len());
        prop_assert_eq!(js.len(), m.len());
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                if !is.contains(&i) && !js.contains(&j) {
                    prop_assert!(lexical_similarity(x, y) < theta);
                }
            }
        }
    }

    #[test]
    fn length_agrees_with_naive_scanner(text in "[a-c \\n\\t.é]{0,40}") {
        let s = length_stats(&text, &TokenizerSpec::Heuristic);
        prop_assert_eq!((s.lines, s.words, s.chars), naive_counts(&text));
    }
}
