//! Knowledge nodes and the linking behavior they all share.
//!
//! Concepts form an acyclic is-a hierarchy; domain knowledge nodes record
//! real-world instances of concepts; analytic knowledge nodes record
//! evidence extracted from data (a transformation, a trained relationship,
//! or both). Every node family, insights and tasks included, carries a
//! [`LinkSet`] whose entries obey two invariants the workspace enforces on
//! every edit: duality (`b` in `sources(a)` iff `a` in `targets(b)`) and
//! symmetry of `related`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::dataset::{Attribute, Dataset, Record};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeFamily {
    Concept,
    Domain,
    Analytic,
    Insight,
    Task,
}

impl NodeFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeFamily::Concept => "concept",
            NodeFamily::Domain => "domain",
            NodeFamily::Analytic => "analytic",
            NodeFamily::Insight => "insight",
            NodeFamily::Task => "task",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "concept" => Some(NodeFamily::Concept),
            "domain" => Some(NodeFamily::Domain),
            "analytic" => Some(NodeFamily::Analytic),
            "insight" => Some(NodeFamily::Insight),
            "task" => Some(NodeFamily::Task),
            _ => None,
        }
    }
}

impl fmt::Display for NodeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Node address: names are unique per family, so (family, name) is global.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NodeId {
    pub family: NodeFamily,
    pub name: String,
}

impl NodeId {
    pub fn new(family: NodeFamily, name: impl Into<String>) -> Self {
        NodeId { family, name: name.into() }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} '{}'", self.family, self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Source,
    Target,
    Related,
}

impl LinkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkKind::Source => "source",
            LinkKind::Target => "target",
            LinkKind::Related => "related",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "source" => Some(LinkKind::Source),
            "target" => Some(LinkKind::Target),
            "related" => Some(LinkKind::Related),
            _ => None,
        }
    }
}

/// Per-node edge sets. Each entry may carry a free-text label ("causing");
/// the label lives on both mirror entries of an edge.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkSet {
    pub sources: BTreeMap<NodeId, Option<String>>,
    pub targets: BTreeMap<NodeId, Option<String>>,
    pub related: BTreeMap<NodeId, Option<String>>,
}

impl LinkSet {
    pub fn is_empty(&self) -> bool {
        self.sources.is_empty() && self.targets.is_empty() && self.related.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Concept {
    pub name: String,
    pub parents: Vec<String>,
    pub links: LinkSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainKnowledgeNode {
    pub name: String,
    pub core_concept: String,
    pub relevant_concepts: Vec<String>,
    /// Declared metadata attributes; `metadata_values` may only key into
    /// these.
    pub metadata_attributes: Vec<Attribute>,
    pub metadata_values: Record,
    pub links: LinkSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticKnowledgeNode {
    pub name: String,
    /// Caller-supplied epoch milliseconds, never auto-generated.
    pub timestamp: i64,
    pub transformation: Option<String>,
    pub relationship: Option<String>,
    /// Cached transformation output, filled on first materialization.
    pub results: Option<Dataset>,
    /// When set, the next materialization re-executes instead of returning
    /// the cache.
    pub recompute: bool,
    /// Whether `results` travel with the serialized workspace. Off by
    /// default: results are re-derivable from the transformation.
    pub embed_results: bool,
    pub description: Option<String>,
    pub links: LinkSet,
}

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("name '{0}' is already in use")]
    DuplicateName(String),
    #[error("concept '{0}' would become its own ancestor")]
    CycleWouldForm(String),
    #[error("unknown concept '{0}'")]
    UnknownConcept(String),
    #[error("metadata key '{0}' is not a declared attribute")]
    UndeclaredMetadataKey(String),
    #[error("metadata value for '{attribute}' does not fit its declared type")]
    MetadataType { attribute: String },
    #[error("analytic node '{0}' has neither a transformation nor a relationship")]
    NoEvidence(String),
    #[error("cannot link {0} to itself")]
    SelfLink(NodeId),
    #[error("unknown node: {0}")]
    UnknownNode(NodeId),
}

/// Check metadata values against declared attributes.
pub fn validate_metadata(attributes: &[Attribute], values: &Record) -> Result<(), KnowledgeError> {
    for (key, value) in values {
        let attr = attributes
            .iter()
            .find(|a| &a.name == key)
            .ok_or_else(|| KnowledgeError::UndeclaredMetadataKey(key.clone()))?;
        if !value.matches_type(attr.attribute_type) {
            return Err(KnowledgeError::MetadataType { attribute: key.clone() });
        }
    }
    Ok(())
}

/// Audit the whole graph's link invariants. Every returned string describes
/// one violation; an empty result means duality, symmetry, no-self-link, and
/// referential closure all hold.
pub fn audit_links<'a, I>(nodes: I) -> Vec<String>
where
    I: IntoIterator<Item = (NodeId, &'a LinkSet)>,
{
    let graph: BTreeMap<NodeId, &LinkSet> = nodes.into_iter().collect();
    let mut violations = Vec::new();
    let mut check = |a: &NodeId, entries: &BTreeMap<NodeId, Option<String>>, kind: &str| {
        for (b, label) in entries {
            if a == b {
                violations.push(format!("{a} lists itself under {kind}"));
                continue;
            }
            let Some(other) = graph.get(b) else {
                violations.push(format!("{a} links unregistered {b} under {kind}"));
                continue;
            };
            let mirror = match kind {
                "sources" => &other.targets,
                "targets" => &other.sources,
                _ => &other.related,
            };
            match mirror.get(a) {
                None => violations.push(format!("{b} does not mirror the {kind} entry of {a}")),
                Some(l) if l != label => violations.push(format!(
                    "edge label between {a} and {b} disagrees across mirrors"
                )),
                Some(_) => {}
            }
        }
    };
    for (a, links) in &graph {
        check(a, &links.sources, "sources");
        check(a, &links.targets, "targets");
        check(a, &links.related, "related");
    }
    violations
}

#[cfg(test)]
mod tests {
    use crate::dataset::Value;

    use super::*;

    #[test]
    fn metadata_keys_must_be_declared() {
        let attrs = vec![Attribute::nominal("link")];
        let mut values = Record::new();
        values.insert(
            "link".to_string(),
            Value::Nominal("https://en.wikipedia.org/wiki/2015_Baltimore_protests".to_string()),
        );
        assert!(validate_metadata(&attrs, &values).is_ok());

        values.insert("date".to_string(), Value::Nominal("2015-04-27".to_string()));
        assert!(matches!(
            validate_metadata(&attrs, &values),
            Err(KnowledgeError::UndeclaredMetadataKey(key)) if key == "date"
        ));
    }

    #[test]
    fn metadata_values_must_fit_their_declared_type() {
        let attrs = vec![Attribute::quantitative("severity")];
        let mut values = Record::new();
        values.insert("severity".to_string(), Value::Nominal("high".to_string()));
        assert!(matches!(
            validate_metadata(&attrs, &values),
            Err(KnowledgeError::MetadataType { attribute }) if attribute == "severity"
        ));
    }

    #[test]
    fn audit_reports_broken_mirrors_and_self_links() {
        let a = NodeId::new(NodeFamily::Domain, "a");
        let b = NodeId::new(NodeFamily::Domain, "b");
        let mut links_a = LinkSet::default();
        links_a.sources.insert(b.clone(), None);
        links_a.related.insert(a.clone(), None);
        let links_b = LinkSet::default();
        let violations = audit_links([(a.clone(), &links_a), (b.clone(), &links_b)]);
        assert_eq!(violations.len(), 2, "{violations:?}");
        assert!(violations.iter().any(|v| v.contains("mirror")));
        assert!(violations.iter().any(|v| v.contains("itself")));
    }

    #[test]
    fn audit_accepts_a_consistent_pair() {
        let a = NodeId::new(NodeFamily::Domain, "a");
        let b = NodeId::new(NodeFamily::Analytic, "b");
        let mut links_a = LinkSet::default();
        let mut links_b = LinkSet::default();
        links_a.sources.insert(b.clone(), Some("causing".to_string()));
        links_b.targets.insert(a.clone(), Some("causing".to_string()));
        links_a.related.insert(b.clone(), None);
        links_b.related.insert(a.clone(), None);
        assert!(audit_links([(a, &links_a), (b, &links_b)]).is_empty());
    }
}
