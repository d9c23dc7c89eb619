//! Typed, linkable knowledge objects over tabular data.
//!
//! The crate models an analysis session as a small graph of first-class
//! objects: datasets, declarative data transformations, trained relationship
//! models, domain and analytic knowledge nodes, insights, and tasks. Every
//! object serializes to a canonical JSON form so a whole workspace can be
//! written to disk, diffed, and re-executed later.

pub mod codec;
pub mod dataset;
pub mod demo;
pub mod dot;
pub mod expr;
pub mod insight;
pub mod knowledge;
pub mod relationship;
pub mod transform;
pub mod workspace;

pub use dataset::{Attribute, AttributeType, Dataset, DatasetError, Record, Value};
pub use expr::{CompareOp, EvalError, Expr};
pub use insight::{
    AnalyticPattern, AnalyticRef, InsightError, InsightNode, RelationshipPattern, SimpleTaskNode,
    Wildcardable,
};
pub use knowledge::{
    AnalyticKnowledgeNode, Concept, DomainKnowledgeNode, KnowledgeError, LinkKind, LinkSet,
    NodeFamily, NodeId,
};
pub use relationship::{Metric, ModelError, ModelKind, RelationshipModel, TrainedParameters};
pub use transform::{
    AggregateFn, DataTransformation, TransformError, TransformVerb, TransformViolation,
};
pub use workspace::{DatasetRef, Workspace, WorkspaceError};
