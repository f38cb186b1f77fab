//! JSON branches: a list of steps with nested branch lists.
//!
//! The accepted shape is described by `schemas/json_branches.schema.json`;
//! [`validate`] checks it and reports the JSON path of the first violation.

use serde_json::{json, Map, Value};

use crate::error::{CodecError, Position};
use crate::model::normalize_opt;
use crate::structure::{Branch, BranchTree};

/// The shipped JSON Schema.
pub const SCHEMA: &str = include_str!("../../schemas/json_branches.schema.json");

pub fn to_value(tree: &BranchTree) -> Value {
    Value::Array(tree.steps().into_iter().filter_map(step_value).collect())
}

fn steps_value(body: &Option<Box<BranchTree>>) -> Value {
    match body {
        Some(b) => Value::Array(b.steps().into_iter().filter_map(step_value).collect()),
        None => Value::Array(Vec::new()),
    }
}

fn branch_value(b: &Branch) -> Value {
    let mut o = Map::new();
    if let Some(c) = &b.condition {
        o.insert("condition".into(), json!(c));
    }
    o.insert("steps".into(), steps_value(&b.body));
    Value::Object(o)
}

fn step_value(t: &BranchTree) -> Option<Value> {
    let v = match t {
        BranchTree::Sequence { .. } => unreachable!("steps() flattens sequences"),
        BranchTree::Activity { label } => {
            json!({"type": "task", "name": label.clone().unwrap_or_default()})
        }
        BranchTree::Event { .. } => return None,
        BranchTree::Exclusive { decision, branches, looping } => {
            let mut o = Map::new();
            o.insert("type".into(), json!("exclusive"));
            if let Some(d) = decision {
                o.insert("decision".into(), json!(d));
            }
            o.insert("looping".into(), json!(looping));
            o.insert("branches".into(), Value::Array(branches.iter().map(branch_value).collect()));
            Value::Object(o)
        }
        BranchTree::Parallel { decision, branches } => {
            let mut o = Map::new();
            o.insert("type".into(), json!("parallel"));
            if let Some(d) = decision {
                o.insert("decision".into(), json!(d));
            }
            o.insert("branches".into(), Value::Array(branches.iter().map(branch_value).collect()));
            Value::Object(o)
        }
    };
    Some(v)
}

pub(crate) fn write(tree: &BranchTree) -> String {
    let mut s = serde_json::to_string_pretty(&to_value(tree)).expect("value serializes");
    s.push('\n');
    s
}

fn schema_err(path: &str, message: impl Into<String>) -> CodecError {
    CodecError::Schema { path: path.to_string(), message: message.into() }
}

fn check_label(o: &Map<String, Value>, key: &str, path: &str) -> Result<(), CodecError> {
    match o.get(key) {
        None | Some(Value::Null) | Some(Value::String(_)) => Ok(()),
        Some(_) => Err(schema_err(&format!("{path}.{key}"), "expected a string or null")),
    }
}

/// Check a document against the schema.
pub fn validate(v: &Value) -> Result<(), CodecError> {
    validate_steps(v, "$")
}

fn validate_steps(v: &Value, path: &str) -> Result<(), CodecError> {
    let Value::Array(items) = v else {
        return Err(schema_err(path, "expected an array of steps"));
    };
    for (i, item) in items.iter().enumerate() {
        validate_step(item, &format!("{path}[{i}]"))?;
    }
    Ok(())
}

fn validate_step(v: &Value, path: &str) -> Result<(), CodecError> {
    let Value::Object(o) = v else {
        return Err(schema_err(path, "expected a step object"));
    };
    let kind = match o.get("type") {
        None => return Err(schema_err(&format!("{path}.type"), "missing required field `type`")),
        Some(Value::String(s)) => s.as_str(),
        Some(_) => return Err(schema_err(&format!("{path}.type"), "expected a string")),
    };
    match kind {
        "task" => match o.get("name") {
            Some(Value::String(_)) => Ok(()),
            None => Err(schema_err(&format!("{path}.name"), "missing required field `name`")),
            Some(_) => Err(schema_err(&format!("{path}.name"), "expected a string")),
        },
        "exclusive" | "parallel" => {
            check_label(o, "decision", path)?;
            let looping = match o.get("looping") {
                None => false,
                Some(Value::Bool(b)) if kind == "exclusive" => *b,
                Some(_) if kind == "exclusive" => {
                    return Err(schema_err(&format!("{path}.looping"), "expected a boolean"));
                }
                Some(_) => false,
            };
            let bpath = format!("{path}.branches");
            let Some(Value::Array(branches)) = o.get("branches") else {
                return Err(match o.get("branches") {
                    None => schema_err(&bpath, "missing required field `branches`"),
                    Some(_) => schema_err(&bpath, "expected an array"),
                });
            };
            let ok = if looping { (1..=2).contains(&branches.len()) } else { branches.len() >= 2 };
            if !ok {
                let want = if looping { "1 or 2" } else { "at least 2" };
                return Err(schema_err(&bpath, format!("{kind} step needs {want} branches, found {}", branches.len())));
            }
            for (i, b) in branches.iter().enumerate() {
                let p = format!("{bpath}[{i}]");
                let Value::Object(bo) = b else {
                    return Err(schema_err(&p, "expected a branch object"));
                };
                check_label(bo, "condition", &p)?;
                match bo.get("steps") {
                    None => return Err(schema_err(&format!("{p}.steps"), "missing required field `steps`")),
                    Some(s) => validate_steps(s, &format!("{p}.steps"))?,
                }
            }
            Ok(())
        }
        other => Err(schema_err(&format!("{path}.type"), format!("unknown step type `{other}`"))),
    }
}

fn label(o: &Map<String, Value>, key: &str) -> Option<String> {
    normalize_opt(o.get(key).and_then(Value::as_str))
}

fn tree_of_steps(v: &Value) -> Option<BranchTree> {
    let steps = v.as_array().map(|a| a.iter().filter_map(tree_of_step).collect()).unwrap_or_default();
    BranchTree::from_steps(steps)
}

fn tree_of_step(v: &Value) -> Option<BranchTree> {
    let o = v.as_object()?;
    let branches = || -> Vec<Branch> {
        o.get("branches")
            .and_then(Value::as_array)
            .map(|bs| {
                bs.iter()
                    .filter_map(Value::as_object)
                    .map(|b| Branch::new(label(b, "condition"), b.get("steps").and_then(tree_of_steps)))
                    .collect()
            })
            .unwrap_or_default()
    };
    match o.get("type")?.as_str()? {
        "task" => Some(BranchTree::Activity { label: label(o, "name") }),
        "exclusive" => {
            let looping = o.get("looping").and_then(Value::as_bool).unwrap_or(false);
            // An empty loop is a gateway cycle and stays.
            let branches = branches();
            Some(BranchTree::Exclusive { decision: label(o, "decision"), branches, looping })
        }
        "parallel" => Some(BranchTree::Parallel { decision: label(o, "decision"), branches: branches() }),
        _ => None,
    }
}

/// Parse and schema-check, accepting a single-key object wrapping the list.
pub(crate) fn read(text: &str) -> Result<BranchTree, CodecError> {
    let v: Value = serde_json::from_str(text.trim()).map_err(|e| CodecError::Syntax {
        position: Position { line: e.line(), column: e.column() },
        message: e.to_string(),
        expected: "a JSON array of steps".into(),
    })?;
    let v = match v {
        Value::Object(o) if o.len() == 1 && o.values().next().is_some_and(Value::is_array) => {
            o.into_iter().next().unwrap().1
        }
        v => v,
    };
    validate(&v)?;
    let children = tree_of_steps(&v).map(|t| t.steps().into_iter().cloned().collect()).unwrap_or_default();
    Ok(BranchTree::Sequence { children })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_type_names_the_path() {
        let text =
            r#"[{"type":"task","name":"A"},{"type":"exclusive","branches":[{"steps":[{"name":"B"}]},{"steps":[]}]}]"#;
        match read(text) {
            Err(CodecError::Schema { path, .. }) => {
                assert_eq!(path, "$[1].branches[0].steps[0].type")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn looping_exclusive_round_trips() {
        let text = r#"[{"type":"exclusive","decision":"Done?","looping":true,
            "branches":[{"condition":"yes","steps":[{"type":"task","name":"Work"}]},{"condition":"no","steps":[]}]}]"#;
        let t = read(text).unwrap();
        assert!(t.check().is_empty());
        assert_eq!(read(&write(&t)).unwrap(), t);
    }

    #[test]
    fn schema_file_is_valid_json() {
        let v: Value = serde_json::from_str(SCHEMA).unwrap();
        assert_eq!(v["type"], "array");
    }
}
