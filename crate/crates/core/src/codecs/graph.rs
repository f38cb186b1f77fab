//! Shared assembly of decoded flow graphs.

use std::collections::HashMap;

use crate::codecs::{IdAlloc, Warnings};
use crate::error::CodecError;
use crate::model::{normalize_opt, MessageFlow, Node, NodeKind, ProcessModel, SequenceFlow};

/// Collects node declarations and edges in any order; endpoints that are
/// never declared become unlabeled tasks.
#[derive(Debug, Default)]
pub(crate) struct GraphBuilder {
    pub(crate) model: ProcessModel,
    index: HashMap<String, usize>,
    edges: Vec<(String, String, Option<String>)>,
    messages: Vec<(String, String, Option<String>)>,
    flow_ids: IdAlloc,
}

impl GraphBuilder {
    pub(crate) fn new(id: &str) -> Self {
        GraphBuilder { model: ProcessModel::new(id), ..Default::default() }
    }

    pub(crate) fn has(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Declare a node. A repeated declaration fills in a missing label and
    /// otherwise keeps the first one.
    pub(crate) fn declare(&mut self, node: Node) {
        match self.index.get(&node.id) {
            Some(&i) => {
                let existing = &mut self.model.nodes[i];
                if existing.norm_label().is_none() {
                    existing.label = normalize_opt(node.label.as_deref());
                }
            }
            None => {
                self.index.insert(node.id.clone(), self.model.nodes.len());
                self.model.nodes.push(node);
            }
        }
    }

    pub(crate) fn edge(&mut self, source: &str, target: &str, condition: Option<String>) {
        self.edges.push((source.to_string(), target.to_string(), normalize_opt(condition.as_deref())));
    }

    pub(crate) fn message(&mut self, source: &str, target: &str, label: Option<String>) {
        self.messages.push((source.to_string(), target.to_string(), normalize_opt(label.as_deref())));
    }

    fn materialize(&mut self, id: &str, w: &mut Warnings) -> Result<(), CodecError> {
        if !self.has(id) {
            w.warn(format!("undeclared node `{id}` recovered as an unlabeled task"))?;
            self.declare(Node { id: id.to_string(), kind: NodeKind::Task, label: None });
        }
        Ok(())
    }

    /// Resolve edges. `pool_ids` are accepted as message-flow endpoints.
    pub(crate) fn finish(mut self, w: &mut Warnings) -> Result<ProcessModel, CodecError> {
        for f in &self.model.sequence_flows {
            self.flow_ids.reserve(&f.id);
        }
        let edges = std::mem::take(&mut self.edges);
        for (s, t, c) in edges {
            self.materialize(&s, w)?;
            self.materialize(&t, w)?;
            let id = self.flow_ids.fresh(&format!("Flow_{}", self.model.sequence_flows.len() + 1));
            self.model.sequence_flows.push(SequenceFlow { id, source: s, target: t, condition: c });
        }
        let pool_ids: Vec<String> = self.model.pools.iter().map(|p| p.id.clone()).collect();
        let messages = std::mem::take(&mut self.messages);
        for (s, t, label) in messages {
            for e in [&s, &t] {
                if !pool_ids.contains(e) {
                    self.materialize(e, w)?;
                }
            }
            let id = self.flow_ids.fresh(&format!("MessageFlow_{}", self.model.message_flows.len() + 1));
            self.model.message_flows.push(MessageFlow { id, source: s, target: t, label });
        }
        Ok(self.model)
    }
}
