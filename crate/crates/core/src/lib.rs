//! Process model representations: a canonical process-model graph, codecs
//! for nine textual notations, block-structure analysis, evaluation metrics,
//! an LLM generation gateway and the dataset harness that ties them together.

pub mod bpmn;
pub mod codecs;
pub mod error;
pub mod harness;
mod iso;
pub mod llm;
pub mod metrics;
pub mod model;
pub mod structure;
pub mod synth;

pub use codecs::{capabilities, decode, encode, DecodeOptions, PmeBundle, PmrCapabilities, PmrDocument, PmrId};
pub use error::CodecError;
pub use model::{
    ElementCounts, ElementType, EventPosition, GatewayType, Lane, Loss, MessageFlow, Node, NodeKind, Pool,
    ProcessModel, SequenceFlow, Violation,
};
pub use structure::{BranchTree, ConvertibilityVerdict, NonConvertibleReason};
