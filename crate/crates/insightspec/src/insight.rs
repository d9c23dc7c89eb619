//! Insights, objectives, tasks, and wildcard matching.
//!
//! An insight links domain knowledge with analytic knowledge. Any slot of
//! the specification may instead hold the wildcard token "*"; an insight
//! containing at least one wildcard is an *objective* (an open question),
//! one containing none is a *concrete insight* (a record of what was
//! found). [`match_objective`] decides whether a concrete insight answers an
//! objective by structural recursion: wildcards match anything, concrete
//! lists match as sets, and nested evidence patterns match field by field.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::knowledge::{AnalyticKnowledgeNode, LinkSet};
use crate::relationship::{ModelKind, RelationshipModel};

/// A slot that is either the wildcard "*" or a concrete payload.
#[derive(Debug, Clone, PartialEq)]
pub enum Wildcardable<T> {
    Wildcard,
    Concrete(T),
}

impl<T> Wildcardable<T> {
    pub fn is_wildcard(&self) -> bool {
        matches!(self, Wildcardable::Wildcard)
    }

    pub fn concrete(&self) -> Option<&T> {
        match self {
            Wildcardable::Wildcard => None,
            Wildcardable::Concrete(t) => Some(t),
        }
    }
}

/// One element of an insight's analytic knowledge list: a reference to a
/// registered node, or a pattern describing the shape of acceptable
/// evidence.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticRef {
    Node(String),
    Spec(AnalyticPattern),
}

/// Shape constraints on an analytic knowledge node. A `None` field is
/// unconstrained; a wildcard field requires presence with any value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalyticPattern {
    pub transformation: Option<Wildcardable<String>>,
    pub relationship: Option<Wildcardable<RelationshipPattern>>,
}

/// Shape constraints on a relationship model, mirroring its specification
/// fields. `None` fields are unconstrained. Listed hyperparameters must be
/// present and equal (or wildcarded); unlisted ones are allowed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelationshipPattern {
    pub name: Option<Wildcardable<String>>,
    pub kind: Option<Wildcardable<ModelKind>>,
    pub inputs: Option<Wildcardable<Vec<Wildcardable<String>>>>,
    pub output: Option<Wildcardable<String>>,
    pub hyper: Option<BTreeMap<String, Wildcardable<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsightNode {
    pub name: String,
    pub domain_knowledge: Wildcardable<Vec<Wildcardable<String>>>,
    pub analytic_knowledge: Wildcardable<Vec<Wildcardable<AnalyticRef>>>,
    pub description: Option<String>,
    pub links: LinkSet,
}

/// A pairing of one objective with the concrete insights produced while
/// pursuing it. Matching is not enforced at construction; audit with
/// `validate_task`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleTaskNode {
    pub name: String,
    pub objective: String,
    pub insights: Vec<String>,
    pub links: LinkSet,
}

#[derive(Debug, Error)]
pub enum InsightError {
    #[error("name '{0}' is already in use")]
    DuplicateName(String),
    #[error("reference '{0}' does not resolve")]
    UnresolvedReference(String),
    #[error("{0}")]
    KindMismatch(String),
    #[error("'{0}' contains no wildcard, so it cannot serve as an objective")]
    ObjectiveNotObjective(String),
    #[error("'{0}' is an objective, not a concrete insight")]
    InsightIsObjective(String),
}

/// Resolution hooks matching needs: patterns constrain registered nodes and
/// models, so the matcher must look them up.
pub trait SpecLookup {
    fn analytic_node(&self, name: &str) -> Option<&AnalyticKnowledgeNode>;
    fn relationship_model(&self, name: &str) -> Option<&RelationshipModel>;
}

/// True iff a full recursive scan of the insight finds a wildcard token.
pub fn is_objective(insight: &InsightNode) -> bool {
    let domain_wild = match &insight.domain_knowledge {
        Wildcardable::Wildcard => true,
        Wildcardable::Concrete(elems) => elems.iter().any(|e| e.is_wildcard()),
    };
    if domain_wild {
        return true;
    }
    match &insight.analytic_knowledge {
        Wildcardable::Wildcard => true,
        Wildcardable::Concrete(elems) => elems.iter().any(|e| match e {
            Wildcardable::Wildcard => true,
            Wildcardable::Concrete(AnalyticRef::Node(_)) => false,
            Wildcardable::Concrete(AnalyticRef::Spec(p)) => pattern_has_wildcard(p),
        }),
    }
}

fn pattern_has_wildcard(p: &AnalyticPattern) -> bool {
    if matches!(p.transformation, Some(Wildcardable::Wildcard)) {
        return true;
    }
    match &p.relationship {
        None => false,
        Some(Wildcardable::Wildcard) => true,
        Some(Wildcardable::Concrete(rp)) => {
            matches!(rp.name, Some(Wildcardable::Wildcard))
                || matches!(rp.kind, Some(Wildcardable::Wildcard))
                || matches!(rp.output, Some(Wildcardable::Wildcard))
                || match &rp.inputs {
                    None => false,
                    Some(Wildcardable::Wildcard) => true,
                    Some(Wildcardable::Concrete(elems)) => {
                        elems.iter().any(|e| e.is_wildcard())
                    }
                }
                || rp
                    .hyper
                    .as_ref()
                    .is_some_and(|h| h.values().any(|v| v.is_wildcard()))
        }
    }
}

/// Does the concrete insight `i` answer the objective `o`?
///
/// A wildcard list matches anything. A concrete list matches when every
/// non-wildcard objective element is satisfied by some insight element and,
/// unless the objective list contains a "*" element, every insight element
/// is accounted for in return (set equality, generalized to patterns).
pub fn match_objective(
    o: &InsightNode,
    i: &InsightNode,
    lookup: &dyn SpecLookup,
) -> Result<bool, InsightError> {
    if !is_objective(o) {
        return Err(InsightError::KindMismatch(format!(
            "'{}' contains no wildcard, so it cannot serve as an objective",
            o.name
        )));
    }
    if is_objective(i) {
        return Err(InsightError::KindMismatch(format!(
            "'{}' is an objective, not a concrete insight",
            i.name
        )));
    }
    let domain_ok = match (&o.domain_knowledge, &i.domain_knowledge) {
        (Wildcardable::Wildcard, _) => true,
        (Wildcardable::Concrete(oe), Wildcardable::Concrete(ie)) => {
            let insight_names: Vec<&str> = ie
                .iter()
                .filter_map(|e| e.concrete().map(String::as_str))
                .collect();
            match_name_list(oe, &insight_names)
        }
        // A concrete insight never holds a wildcard list.
        (Wildcardable::Concrete(_), Wildcardable::Wildcard) => false,
    };
    if !domain_ok {
        return Ok(false);
    }
    match (&o.analytic_knowledge, &i.analytic_knowledge) {
        (Wildcardable::Wildcard, _) => Ok(true),
        (Wildcardable::Concrete(oe), Wildcardable::Concrete(ie)) => {
            let targets: Vec<&AnalyticRef> =
                ie.iter().filter_map(Wildcardable::concrete).collect();
            let has_star = oe.iter().any(Wildcardable::is_wildcard);
            for pattern in oe.iter().filter_map(Wildcardable::concrete) {
                let mut hit = false;
                for t in &targets {
                    if analytic_element_matches(pattern, t, lookup)? {
                        hit = true;
                        break;
                    }
                }
                if !hit {
                    return Ok(false);
                }
            }
            if !has_star {
                for t in &targets {
                    let mut covered = false;
                    for pattern in oe.iter().filter_map(Wildcardable::concrete) {
                        if analytic_element_matches(pattern, t, lookup)? {
                            covered = true;
                            break;
                        }
                    }
                    if !covered {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        (Wildcardable::Concrete(_), Wildcardable::Wildcard) => Ok(false),
    }
}

/// Set-style matching for name lists: non-wildcard elements must all be
/// present; a "*" element waives the converse coverage check.
fn match_name_list(objective: &[Wildcardable<String>], insight: &[&str]) -> bool {
    let names: Vec<&str> = objective
        .iter()
        .filter_map(|e| e.concrete().map(String::as_str))
        .collect();
    let has_star = objective.iter().any(Wildcardable::is_wildcard);
    names.iter().all(|n| insight.contains(n))
        && (has_star || insight.iter().all(|n| names.contains(n)))
}

fn analytic_element_matches(
    pattern: &AnalyticRef,
    target: &AnalyticRef,
    lookup: &dyn SpecLookup,
) -> Result<bool, InsightError> {
    match (pattern, target) {
        (AnalyticRef::Node(a), AnalyticRef::Node(b)) => Ok(a == b),
        (AnalyticRef::Spec(p), AnalyticRef::Node(name)) => {
            let node = lookup
                .analytic_node(name)
                .ok_or_else(|| InsightError::UnresolvedReference(name.clone()))?;
            pattern_matches_node(p, node, lookup)
        }
        // A shape pattern on the concrete side is matched only by an equal
        // pattern (or a "*", handled by the caller).
        (AnalyticRef::Spec(p), AnalyticRef::Spec(q)) => Ok(p == q),
        (AnalyticRef::Node(_), AnalyticRef::Spec(_)) => Ok(false),
    }
}

fn pattern_matches_node(
    p: &AnalyticPattern,
    node: &AnalyticKnowledgeNode,
    lookup: &dyn SpecLookup,
) -> Result<bool, InsightError> {
    match &p.transformation {
        None => {}
        Some(Wildcardable::Wildcard) => {
            if node.transformation.is_none() {
                return Ok(false);
            }
        }
        Some(Wildcardable::Concrete(t)) => {
            if node.transformation.as_deref() != Some(t.as_str()) {
                return Ok(false);
            }
        }
    }
    match &p.relationship {
        None => Ok(true),
        Some(Wildcardable::Wildcard) => Ok(node.relationship.is_some()),
        Some(Wildcardable::Concrete(rp)) => {
            let Some(model_name) = &node.relationship else {
                return Ok(false);
            };
            let model = lookup
                .relationship_model(model_name)
                .ok_or_else(|| InsightError::UnresolvedReference(model_name.clone()))?;
            Ok(relationship_pattern_matches(rp, model))
        }
    }
}

fn relationship_pattern_matches(rp: &RelationshipPattern, model: &RelationshipModel) -> bool {
    if let Some(Wildcardable::Concrete(n)) = &rp.name {
        if n != &model.name {
            return false;
        }
    }
    if let Some(Wildcardable::Concrete(k)) = &rp.kind {
        if *k != model.kind {
            return false;
        }
    }
    match &rp.output {
        None => {}
        Some(Wildcardable::Wildcard) => {
            if model.output.is_none() {
                return false;
            }
        }
        Some(Wildcardable::Concrete(attr)) => {
            if model.output.as_ref().map(|o| o.name.as_str()) != Some(attr.as_str()) {
                return false;
            }
        }
    }
    if let Some(Wildcardable::Concrete(elems)) = &rp.inputs {
        let input_names: Vec<&str> = model.inputs.iter().map(|a| a.name.as_str()).collect();
        if !match_name_list(elems, &input_names) {
            return false;
        }
    }
    if let Some(hyper) = &rp.hyper {
        for (key, want) in hyper {
            match (model.hyper.get(key), want) {
                (None, _) => return false,
                (Some(_), Wildcardable::Wildcard) => {}
                (Some(have), Wildcardable::Concrete(v)) => {
                    if have != v {
                        return false;
                    }
                }
            }
        }
    }
    true
}
