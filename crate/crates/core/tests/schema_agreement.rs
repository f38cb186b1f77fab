use pmr_core::codecs::{decode, encode, PmrId};
use pmr_core::structure::expand;
use pmr_core::synth::{random_model, random_tree, ModelProfile, TreeProfile};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

fn validator(file: &str) -> jsonschema::Validator {
    let path = format!("{}/schemas/{file}", env!("CARGO_MANIFEST_DIR"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, text: &str) -> Result<(), TestCaseError> {
    let doc: Value = serde_json::from_str(text).unwrap();
    let errors: Vec<String> = v.iter_errors(&doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    prop_assert!(errors.is_empty(), "{:?}\n{}", errors, text);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encoded_pme_satisfies_schema(seed in any::<u64>()) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), &ModelProfile::FULL);
        let doc = encode(&m, PmrId::Pme).unwrap();
        assert_valid(&validator("pme.schema.json"), &doc.text)?;
    }

    #[test]
    fn encoded_branches_satisfy_schema(seed in any::<u64>()) {
        let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), &TreeProfile::FULL);
        let doc = encode(&expand(&tree), PmrId::JsonBranches).unwrap();
        assert_valid(&validator("json_branches.schema.json"), &doc.text)?;
    }
}

/// Documents the schema rejects are rejected by the reader as well.
#[test]
fn schema_rejections_are_reader_rejections() {
    let branches = validator("json_branches.schema.json");
    let bad_branches = [
        json!({"type": "task", "name": "A"}),
        json!([{"type": "loop"}]),
        json!([{"type": "task"}]),
        json!([{"type": "exclusive", "branches": [{"steps": []}]}]),
        json!([{"type": "parallel", "branches": [{"steps": [{"type": "task", "name": "A"}]}]}]),
        json!([{"type": "exclusive", "looping": true, "branches": []}]),
        json!([{"type": "exclusive", "branches": [{"condition": 3, "steps": []}, {"steps": []}]}]),
        json!([{"type": "parallel", "branches": [{"condition": "x"}, {"steps": []}]}]),
    ];
    for doc in bad_branches {
        assert!(!branches.is_valid(&doc), "schema accepts {doc}");
        assert!(decode(&doc.to_string(), PmrId::JsonBranches).is_err(), "reader accepts {doc}");
    }

    let pme = validator("pme.schema.json");
    let bad_pme = [
        json!([]),
        json!({"tasks": [{"label": "A"}]}),
        json!({"events": [{"id": "e", "position": "middle"}]}),
        json!({"gateways": [{"id": "g", "type": "inclusive"}]}),
        json!({"sequence_flows": [{"source": "a"}]}),
        json!({"tasks": "A"}),
    ];
    for doc in bad_pme {
        assert!(!pme.is_valid(&doc), "schema accepts {doc}");
        assert!(decode(&doc.to_string(), PmrId::Pme).is_err(), "reader accepts {doc}");
    }
}
