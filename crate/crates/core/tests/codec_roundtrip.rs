use pmr_core::bpmn::{self, layout};
use pmr_core::codecs::{branch_tree_for, roundtrip_holds, PmrId};
use pmr_core::structure::expand;
use pmr_core::synth::{random_model, random_tree, ModelProfile, TreeProfile};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GRAPH_PMRS: [PmrId; 6] =
    [PmrId::Bpmn, PmrId::BpmnProcess, PmrId::Pme, PmrId::SimplifiedXml, PmrId::Graphviz, PmrId::Mermaid];
const BRANCH_PMRS: [PmrId; 3] = [PmrId::BpmnText, PmrId::JsonBranches, PmrId::PowlCode];

fn model(seed: u64) -> pmr_core::ProcessModel {
    random_model(&mut ChaCha8Rng::seed_from_u64(seed), &ModelProfile::FULL)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_notations_round_trip(seed in any::<u64>()) {
        let m = model(seed);
        for pmr in GRAPH_PMRS {
            prop_assert!(roundtrip_holds(&m, pmr).unwrap(), "{pmr} failed for seed {seed}");
        }
    }

    #[test]
    fn branch_notations_round_trip(seed in any::<u64>()) {
        let profile = TreeProfile { event_labels: false, intermediate_events: false, ..TreeProfile::FULL };
        let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), &profile);
        let m = expand(&tree);
        for pmr in BRANCH_PMRS {
            prop_assert!(roundtrip_holds(&m, pmr).unwrap(), "{pmr} failed for seed {seed}");
        }
    }

    #[test]
    fn convertible_graphs_round_trip_through_branches(seed in any::<u64>()) {
        let profile = ModelProfile { max_tasks: 6, ..ModelProfile::STANDARDIZED };
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), &profile);
        for pmr in BRANCH_PMRS {
            if branch_tree_for(&m, pmr).is_ok() {
                prop_assert!(roundtrip_holds(&m, pmr).unwrap(), "{pmr} failed for seed {seed}");
            }
        }
    }

    #[test]
    fn diagram_section_is_optional_and_larger(seed in any::<u64>()) {
        let m = model(seed);
        let with = bpmn::serialize_bpmn(&m, true);
        let without = bpmn::serialize_bpmn(&m, false);
        prop_assert!(with.has_diagram_section && !without.has_diagram_section);
        prop_assert!(without.xml_text.chars().count() < with.xml_text.chars().count());
        let a = bpmn::parse(&with.xml_text).unwrap().model;
        let b = bpmn::parse(&without.xml_text).unwrap().model;
        prop_assert!(a.canonical_equal(&b));
        prop_assert!(a.canonical_equal(&m));
    }

    #[test]
    fn layout_boxes_never_overlap(seed in any::<u64>()) {
        let m = model(seed);
        let plan = layout(&m);
        prop_assert_eq!(plan.nodes.len(), m.nodes.len());
        prop_assert_eq!(plan.edges.len(), m.sequence_flows.len() + m.message_flows.len());
        prop_assert!(plan.overlapping_nodes().is_empty());
        prop_assert_eq!(layout(&m), plan);
    }
}
