//! BPMN text: nested block XML.
//!
//! ```xml
//! <process>
//!   <task name="Receive order"/>
//!   <xor decision="In stock?">
//!     <branch condition="yes"><task name="Ship"/></branch>
//!     <branch condition="no"/>
//!   </xor>
//!   <and>
//!     <branch><task name="Bill"/></branch>
//!     <branch><task name="Pack"/></branch>
//!   </and>
//!   <loop decision="Complete?" condition="yes">
//!     <task name="Review"/>
//!     <redo condition="no"><task name="Fix"/></redo>
//!   </loop>
//! </process>
//! ```
//!
//! A loop's direct steps form its body; `condition` labels the exit and the
//! optional `redo` element holds the path back to the body.

use crate::codecs::xmlw::{xml_error, XmlWriter};
use crate::codecs::Warnings;
use crate::error::CodecError;
use crate::model::normalize_opt;
use crate::structure::{Branch, BranchTree};

pub(crate) fn write(tree: &BranchTree) -> String {
    let mut w = XmlWriter::new(false);
    w.open("process", &[]);
    for step in tree.steps() {
        write_step(&mut w, step);
    }
    w.finish()
}

fn opt_attr<'a>(attrs: &mut Vec<(&'static str, &'a str)>, key: &'static str, v: &'a Option<String>) {
    if let Some(v) = v.as_deref() {
        attrs.push((key, v));
    }
}

fn write_body(w: &mut XmlWriter, body: &Option<Box<BranchTree>>) {
    if let Some(b) = body {
        for step in b.steps() {
            write_step(w, step);
        }
    }
}

fn write_branch(w: &mut XmlWriter, tag: &str, b: &Branch) {
    let mut attrs = Vec::new();
    opt_attr(&mut attrs, "condition", &b.condition);
    if b.body.is_none() {
        w.empty(tag, &attrs);
    } else {
        w.open(tag, &attrs);
        write_body(w, &b.body);
        w.close();
    }
}

fn write_step(w: &mut XmlWriter, t: &BranchTree) {
    match t {
        BranchTree::Sequence { children } => {
            for c in children {
                write_step(w, c);
            }
        }
        BranchTree::Activity { label } => {
            let mut attrs = Vec::new();
            opt_attr(&mut attrs, "name", label);
            w.empty("task", &attrs);
        }
        // No event elements in this notation.
        BranchTree::Event { .. } => {}
        BranchTree::Exclusive { decision, branches, looping: false } => {
            let mut attrs = Vec::new();
            opt_attr(&mut attrs, "decision", decision);
            w.open("xor", &attrs);
            for b in branches {
                write_branch(w, "branch", b);
            }
            w.close();
        }
        BranchTree::Exclusive { decision, branches, looping: true } => {
            let mut attrs = Vec::new();
            opt_attr(&mut attrs, "decision", decision);
            opt_attr(&mut attrs, "condition", &branches[0].condition);
            let redo = branches.get(1);
            if branches[0].body.is_none() && redo.is_none() {
                w.empty("loop", &attrs);
                return;
            }
            w.open("loop", &attrs);
            write_body(w, &branches[0].body);
            if let Some(r) = redo {
                write_branch(w, "redo", r);
            }
            w.close();
        }
        BranchTree::Parallel { decision, branches } => {
            let mut attrs = Vec::new();
            opt_attr(&mut attrs, "decision", decision);
            w.open("and", &attrs);
            for b in branches {
                write_branch(w, "branch", b);
            }
            w.close();
        }
    }
}

pub(crate) fn read(text: &str, w: &mut Warnings) -> Result<BranchTree, CodecError> {
    let doc = roxmltree::Document::parse(text.trim()).map_err(xml_error)?;
    let root = doc.root_element();
    let process = if root.tag_name().name() == "process" {
        root
    } else {
        root.descendants()
            .find(|e| e.tag_name().name() == "process")
            .ok_or_else(|| CodecError::Schema { path: "/".into(), message: "no <process> element".into() })?
    };
    // An empty process is a plain start-to-end model.
    Ok(BranchTree::Sequence { children: read_steps(process, w)? })
}

fn attr(e: roxmltree::Node, key: &str) -> Option<String> {
    normalize_opt(e.attribute(key))
}

fn read_steps(parent: roxmltree::Node, w: &mut Warnings) -> Result<Vec<BranchTree>, CodecError> {
    let mut steps = Vec::new();
    for e in parent.children().filter(|c| c.is_element()) {
        if let Some(step) = read_step(e, w)? {
            steps.push(step);
        }
    }
    Ok(steps)
}

fn read_branches(e: roxmltree::Node, w: &mut Warnings) -> Result<Vec<Branch>, CodecError> {
    let mut out = Vec::new();
    for b in e.children().filter(|c| c.is_element()) {
        if b.tag_name().name() != "branch" {
            w.warn(format!("<{}> directly inside <{}> read as a branch", b.tag_name().name(), e.tag_name().name()))?;
            if let Some(step) = read_step(b, w)? {
                out.push(Branch::new(None, Some(step)));
            }
            continue;
        }
        out.push(Branch::new(attr(b, "condition"), BranchTree::from_steps(read_steps(b, w)?)));
    }
    Ok(out)
}

fn read_step(e: roxmltree::Node, w: &mut Warnings) -> Result<Option<BranchTree>, CodecError> {
    let tag = e.tag_name().name();
    let step = match tag {
        "task" | "activity" => {
            let label = attr(e, "name").or_else(|| normalize_opt(e.text()));
            BranchTree::Activity { label }
        }
        "xor" | "exclusive" => {
            let mut branches = read_branches(e, w)?;
            if branches.is_empty() {
                w.warn("empty <xor> ignored")?;
                return Ok(None);
            }
            if branches.len() == 1 {
                w.warn("single-branch <xor> completed with an empty branch")?;
                branches.push(Branch::new(None, None));
            }
            BranchTree::Exclusive { decision: attr(e, "decision"), branches, looping: false }
        }
        "and" | "parallel" => {
            let mut branches = read_branches(e, w)?;
            match branches.len() {
                0 => {
                    w.warn("empty <and> ignored")?;
                    return Ok(None);
                }
                1 => {
                    w.warn("single-branch <and> inlined")?;
                    return Ok(branches.pop().and_then(|b| b.body.map(|b| *b)));
                }
                _ => {}
            }
            BranchTree::Parallel { decision: attr(e, "decision"), branches }
        }
        "loop" => {
            let mut body = Vec::new();
            let mut redo = None;
            for c in e.children().filter(|c| c.is_element()) {
                if c.tag_name().name() == "redo" {
                    if redo.is_some() {
                        w.warn("second <redo> ignored")?;
                        continue;
                    }
                    redo = Some(Branch::new(attr(c, "condition"), BranchTree::from_steps(read_steps(c, w)?)));
                } else if let Some(step) = read_step(c, w)? {
                    body.push(step);
                }
            }
            let mut branches = vec![Branch::new(attr(e, "condition"), BranchTree::from_steps(body))];
            branches.extend(redo);
            BranchTree::Exclusive { decision: attr(e, "decision"), branches, looping: true }
        }
        other => {
            w.warn(format!("unknown element <{other}> ignored"))?;
            return Ok(None);
        }
    };
    Ok(Some(step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{canonicalize, expand, to_branch_tree};
    use crate::DecodeOptions;

    #[test]
    fn reads_documented_example() {
        let text = r#"<process>
  <task name="Receive order"/>
  <xor decision="In stock?">
    <branch condition="yes"><task name="Ship"/></branch>
    <branch condition="no"/>
  </xor>
  <and>
    <branch><task name="Bill"/></branch>
    <branch><task name="Pack"/></branch>
  </and>
  <loop decision="Complete?" condition="yes">
    <task name="Review"/>
    <redo condition="no"><task name="Fix"/></redo>
  </loop>
</process>"#;
        let t = read(text, &mut Warnings::default()).unwrap();
        assert!(t.check().is_empty());
        let again = read(&write(&t), &mut Warnings::default()).unwrap();
        assert_eq!(canonicalize(&again), canonicalize(&t));
        let m = expand(&t);
        assert!(m.is_well_formed());
        assert_eq!(canonicalize(&to_branch_tree(&m).unwrap().tree), canonicalize(&t));
    }

    #[test]
    fn role_annotations_are_tolerated() {
        let t = read(
            r#"<process><task name="Approve" role="Manager" object="invoice"/></process>"#,
            &mut Warnings::default(),
        )
        .unwrap();
        assert_eq!(t, BranchTree::seq(vec![BranchTree::activity("Approve")]));
    }

    #[test]
    fn empty_loop_is_kept() {
        let text = r#"<process><task name="A"/><loop decision="Again?"/></process>"#;
        let strict = DecodeOptions::STRICT;
        let t = read(text, &mut Warnings::new(&strict)).unwrap();
        assert_eq!(t.steps().len(), 2);
        let m = expand(&t);
        assert!(m.is_well_formed());
        assert_eq!(canonicalize(&to_branch_tree(&m).unwrap().tree), canonicalize(&t));
    }
}
