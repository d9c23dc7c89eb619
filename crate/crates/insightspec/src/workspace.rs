//! The workspace: one container for datasets (by reference), concepts,
//! knowledge nodes, insights, tasks, transformations, and models.
//!
//! All mutation goes through the workspace so its invariants hold at every
//! step: names are unique per registry, concept parents stay acyclic, link
//! edges keep their mirror entries, and references resolve (or `validate`
//! reports where they do not).

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::dataset::{self, Attribute, Dataset, DatasetError, Record, Value, WILDCARD};
use crate::insight::{
    self, AnalyticRef, InsightError, InsightNode, SimpleTaskNode, SpecLookup, Wildcardable,
};
use crate::knowledge::{
    self, AnalyticKnowledgeNode, Concept, DomainKnowledgeNode, KnowledgeError, LinkKind, LinkSet,
    NodeFamily, NodeId,
};
use crate::relationship::{self, Metric, ModelError, RelationshipModel};
use crate::transform::{
    execute_data_transformation, validate_pipeline, DataTransformation, TransformError,
};

/// Where a dataset lives and what shape it has. Records are loaded from the
/// path on demand; only the reference is part of the workspace.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRef {
    pub path: String,
    pub schema: Vec<Attribute>,
}

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Insight(#[from] InsightError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("name '{0}' is already in use")]
    DuplicateName(String),
    #[error("unknown dataset '{0}'")]
    UnknownDataset(String),
    #[error("unknown transformation '{0}'")]
    UnknownTransformation(String),
    #[error("unknown model '{0}'")]
    UnknownModel(String),
    #[error("unknown insight '{0}'")]
    UnknownInsight(String),
    #[error("unknown task '{0}'")]
    UnknownTask(String),
    #[error("unknown analytic node '{0}'")]
    UnknownAnalyticNode(String),
    #[error("cannot read '{path}': {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Workspace {
    pub name: String,
    pub dataset_refs: BTreeMap<String, DatasetRef>,
    pub concepts: BTreeMap<String, Concept>,
    pub domain_nodes: BTreeMap<String, DomainKnowledgeNode>,
    pub analytic_nodes: BTreeMap<String, AnalyticKnowledgeNode>,
    pub insight_nodes: BTreeMap<String, InsightNode>,
    pub task_nodes: BTreeMap<String, SimpleTaskNode>,
    pub transformations: BTreeMap<String, DataTransformation>,
    pub models: BTreeMap<String, RelationshipModel>,
}

impl Workspace {
    pub fn new(name: impl Into<String>) -> Self {
        Workspace { name: name.into(), ..Workspace::default() }
    }

    // ----- registries ------------------------------------------------------

    pub fn register_dataset(
        &mut self,
        name: impl Into<String>,
        path: impl Into<String>,
        schema: Vec<Attribute>,
    ) -> Result<(), WorkspaceError> {
        let name = name.into();
        if self.dataset_refs.contains_key(&name) {
            return Err(WorkspaceError::DuplicateName(name));
        }
        self.dataset_refs.insert(name, DatasetRef { path: path.into(), schema });
        Ok(())
    }

    pub fn register_transformation(&mut self, t: DataTransformation) -> Result<(), WorkspaceError> {
        if self.transformations.contains_key(&t.name) {
            return Err(WorkspaceError::DuplicateName(t.name));
        }
        self.transformations.insert(t.name.clone(), t);
        Ok(())
    }

    pub fn register_model(&mut self, m: RelationshipModel) -> Result<(), WorkspaceError> {
        if self.models.contains_key(&m.name) {
            return Err(WorkspaceError::DuplicateName(m.name));
        }
        self.models.insert(m.name.clone(), m);
        Ok(())
    }

    // ----- concepts --------------------------------------------------------

    /// Register a concept under the given parents. The cycle check runs
    /// before the duplicate-name check: recreating an existing concept under
    /// one of its own descendants is a cycle first and foremost.
    pub fn create_concept(
        &mut self,
        name: impl Into<String>,
        parents: &[&str],
    ) -> Result<(), KnowledgeError> {
        let name = name.into();
        for p in parents {
            if !self.concepts.contains_key(*p) {
                return Err(KnowledgeError::UnknownConcept(p.to_string()));
            }
            if self.concept_reaches(p, &name) {
                return Err(KnowledgeError::CycleWouldForm(name));
            }
        }
        if self.concepts.contains_key(&name) {
            return Err(KnowledgeError::DuplicateName(name));
        }
        let mut deduped: Vec<String> = Vec::new();
        for p in parents {
            if !deduped.iter().any(|x| x == p) {
                deduped.push(p.to_string());
            }
        }
        self.concepts.insert(
            name.clone(),
            Concept { name, parents: deduped, links: LinkSet::default() },
        );
        Ok(())
    }

    /// True iff `ancestor` is reachable from `concept` via parent edges, or
    /// the two are equal.
    pub fn concept_is_a(&self, concept: &str, ancestor: &str) -> Result<bool, KnowledgeError> {
        if !self.concepts.contains_key(concept) {
            return Err(KnowledgeError::UnknownConcept(concept.to_string()));
        }
        if !self.concepts.contains_key(ancestor) {
            return Err(KnowledgeError::UnknownConcept(ancestor.to_string()));
        }
        Ok(self.concept_reaches(concept, ancestor))
    }

    fn concept_reaches(&self, from: &str, to: &str) -> bool {
        if from == to {
            return true;
        }
        let mut stack = vec![from];
        let mut seen = std::collections::BTreeSet::new();
        while let Some(c) = stack.pop() {
            if !seen.insert(c) {
                continue;
            }
            if let Some(concept) = self.concepts.get(c) {
                for p in &concept.parents {
                    if p == to {
                        return true;
                    }
                    stack.push(p);
                }
            }
        }
        false
    }

    // ----- knowledge nodes -------------------------------------------------

    pub fn create_domain_node(
        &mut self,
        name: impl Into<String>,
        core_concept: &str,
        relevant_concepts: &[&str],
        metadata_attributes: Vec<Attribute>,
        metadata_values: Record,
    ) -> Result<(), KnowledgeError> {
        let name = name.into();
        if self.domain_nodes.contains_key(&name) {
            return Err(KnowledgeError::DuplicateName(name));
        }
        for c in std::iter::once(&core_concept).chain(relevant_concepts.iter()) {
            if !self.concepts.contains_key(*c) {
                return Err(KnowledgeError::UnknownConcept(c.to_string()));
            }
        }
        knowledge::validate_metadata(&metadata_attributes, &metadata_values)?;
        self.domain_nodes.insert(
            name.clone(),
            DomainKnowledgeNode {
                name,
                core_concept: core_concept.to_string(),
                relevant_concepts: relevant_concepts.iter().map(|c| c.to_string()).collect(),
                metadata_attributes,
                metadata_values,
                links: LinkSet::default(),
            },
        );
        Ok(())
    }

    pub fn create_analytic_node(
        &mut self,
        name: impl Into<String>,
        timestamp: i64,
        transformation: Option<&str>,
        relationship: Option<&str>,
        description: Option<&str>,
    ) -> Result<(), WorkspaceError> {
        let name = name.into();
        if self.analytic_nodes.contains_key(&name) {
            return Err(KnowledgeError::DuplicateName(name).into());
        }
        if transformation.is_none() && relationship.is_none() {
            return Err(KnowledgeError::NoEvidence(name).into());
        }
        if let Some(t) = transformation {
            if !self.transformations.contains_key(t) {
                return Err(WorkspaceError::UnknownTransformation(t.to_string()));
            }
        }
        if let Some(r) = relationship {
            if !self.models.contains_key(r) {
                return Err(WorkspaceError::UnknownModel(r.to_string()));
            }
        }
        self.analytic_nodes.insert(
            name.clone(),
            AnalyticKnowledgeNode {
                name,
                timestamp,
                transformation: transformation.map(str::to_string),
                relationship: relationship.map(str::to_string),
                results: None,
                recompute: false,
                embed_results: false,
                description: description.map(str::to_string),
                links: LinkSet::default(),
            },
        );
        Ok(())
    }

    /// Return the node's results, executing its transformation on first call
    /// and memoizing. Nodes whose evidence is a relationship only have no
    /// results. `datasets` supplies the loaded source tables.
    pub fn materialize_results(
        &mut self,
        name: &str,
        datasets: &BTreeMap<String, Dataset>,
    ) -> Result<Option<Dataset>, WorkspaceError> {
        let node = self
            .analytic_nodes
            .get(name)
            .ok_or_else(|| WorkspaceError::UnknownAnalyticNode(name.to_string()))?;
        if let (Some(results), false) = (&node.results, node.recompute) {
            return Ok(Some(results.clone()));
        }
        let Some(t_name) = node.transformation.clone() else {
            return Ok(None);
        };
        let t = self
            .transformations
            .get(&t_name)
            .ok_or(WorkspaceError::UnknownTransformation(t_name))?;
        let result = execute_data_transformation(t, |s| datasets.get(s))?;
        let node = self.analytic_nodes.get_mut(name).expect("looked up above");
        node.results = Some(result.clone());
        node.recompute = false;
        Ok(Some(result))
    }

    // ----- linking ---------------------------------------------------------

    fn node_exists(&self, id: &NodeId) -> bool {
        match id.family {
            NodeFamily::Concept => self.concepts.contains_key(&id.name),
            NodeFamily::Domain => self.domain_nodes.contains_key(&id.name),
            NodeFamily::Analytic => self.analytic_nodes.contains_key(&id.name),
            NodeFamily::Insight => self.insight_nodes.contains_key(&id.name),
            NodeFamily::Task => self.task_nodes.contains_key(&id.name),
        }
    }

    fn links_mut(&mut self, id: &NodeId) -> &mut LinkSet {
        match id.family {
            NodeFamily::Concept => &mut self.concepts.get_mut(&id.name).expect("checked").links,
            NodeFamily::Domain => &mut self.domain_nodes.get_mut(&id.name).expect("checked").links,
            NodeFamily::Analytic => {
                &mut self.analytic_nodes.get_mut(&id.name).expect("checked").links
            }
            NodeFamily::Insight => {
                &mut self.insight_nodes.get_mut(&id.name).expect("checked").links
            }
            NodeFamily::Task => &mut self.task_nodes.get_mut(&id.name).expect("checked").links,
        }
    }

    /// Link two registered nodes. `Source` makes `b` a source of `a` (and
    /// `a` a target of `b`), `Target` the converse, `Related` is symmetric.
    /// Idempotent under set semantics; relinking an existing edge updates
    /// its label on both mirrors.
    pub fn link_nodes(
        &mut self,
        a: &NodeId,
        b: &NodeId,
        kind: LinkKind,
        label: Option<&str>,
    ) -> Result<(), KnowledgeError> {
        if a == b {
            return Err(KnowledgeError::SelfLink(a.clone()));
        }
        for id in [a, b] {
            if !self.node_exists(id) {
                return Err(KnowledgeError::UnknownNode(id.clone()));
            }
        }
        let label = label.map(str::to_string);
        match kind {
            LinkKind::Source => {
                self.links_mut(a).sources.insert(b.clone(), label.clone());
                self.links_mut(b).targets.insert(a.clone(), label);
            }
            LinkKind::Target => {
                self.links_mut(a).targets.insert(b.clone(), label.clone());
                self.links_mut(b).sources.insert(a.clone(), label);
            }
            LinkKind::Related => {
                self.links_mut(a).related.insert(b.clone(), label.clone());
                self.links_mut(b).related.insert(a.clone(), label);
            }
        }
        Ok(())
    }

    /// Every node that carries a LinkSet, for audits and export.
    pub fn all_linked_nodes(&self) -> impl Iterator<Item = (NodeId, &LinkSet)> {
        let concepts = self
            .concepts
            .values()
            .map(|c| (NodeId::new(NodeFamily::Concept, c.name.clone()), &c.links));
        let domain = self
            .domain_nodes
            .values()
            .map(|n| (NodeId::new(NodeFamily::Domain, n.name.clone()), &n.links));
        let analytic = self
            .analytic_nodes
            .values()
            .map(|n| (NodeId::new(NodeFamily::Analytic, n.name.clone()), &n.links));
        let insights = self
            .insight_nodes
            .values()
            .map(|n| (NodeId::new(NodeFamily::Insight, n.name.clone()), &n.links));
        let tasks = self
            .task_nodes
            .values()
            .map(|n| (NodeId::new(NodeFamily::Task, n.name.clone()), &n.links));
        concepts.chain(domain).chain(analytic).chain(insights).chain(tasks)
    }

    /// Full-graph audit of the link invariants; empty means consistent.
    pub fn audit_links(&self) -> Vec<String> {
        knowledge::audit_links(self.all_linked_nodes())
    }

    /// Directed source→target edges may legally form cycles; this reports
    /// one if present, for tools that want DAG discipline.
    pub fn find_link_cycle(&self) -> Option<Vec<NodeId>> {
        let adjacency: BTreeMap<NodeId, Vec<NodeId>> = self
            .all_linked_nodes()
            .map(|(id, links)| (id, links.targets.keys().cloned().collect()))
            .collect();
        let mut state: BTreeMap<&NodeId, u8> = BTreeMap::new(); // 1 = on stack, 2 = done
        let mut path: Vec<&NodeId> = Vec::new();

        fn visit<'a>(
            node: &'a NodeId,
            adjacency: &'a BTreeMap<NodeId, Vec<NodeId>>,
            state: &mut BTreeMap<&'a NodeId, u8>,
            path: &mut Vec<&'a NodeId>,
        ) -> Option<Vec<NodeId>> {
            match state.get(node) {
                Some(1) => {
                    let start = path.iter().position(|n| *n == node).expect("on stack");
                    let mut cycle: Vec<NodeId> =
                        path[start..].iter().map(|n| (*n).clone()).collect();
                    cycle.push(node.clone());
                    return Some(cycle);
                }
                Some(_) => return None,
                None => {}
            }
            state.insert(node, 1);
            path.push(node);
            if let Some(next) = adjacency.get(node) {
                for n in next {
                    if let Some(cycle) = visit(n, adjacency, state, path) {
                        return Some(cycle);
                    }
                }
            }
            path.pop();
            state.insert(node, 2);
            None
        }

        for node in adjacency.keys() {
            if let Some(cycle) = visit(node, &adjacency, &mut state, &mut path) {
                return Some(cycle);
            }
        }
        None
    }

    // ----- insights and tasks ----------------------------------------------

    pub fn create_insight_node(
        &mut self,
        name: impl Into<String>,
        domain_knowledge: Wildcardable<Vec<Wildcardable<String>>>,
        analytic_knowledge: Wildcardable<Vec<Wildcardable<AnalyticRef>>>,
        description: Option<&str>,
    ) -> Result<(), InsightError> {
        let name = name.into();
        if self.insight_nodes.contains_key(&name) {
            return Err(InsightError::DuplicateName(name));
        }
        if let Wildcardable::Concrete(elems) = &domain_knowledge {
            for n in elems.iter().filter_map(Wildcardable::concrete) {
                if !self.domain_nodes.contains_key(n) {
                    return Err(InsightError::UnresolvedReference(n.clone()));
                }
            }
        }
        if let Wildcardable::Concrete(elems) = &analytic_knowledge {
            for e in elems.iter().filter_map(Wildcardable::concrete) {
                match e {
                    AnalyticRef::Node(n) => {
                        if !self.analytic_nodes.contains_key(n) {
                            return Err(InsightError::UnresolvedReference(n.clone()));
                        }
                    }
                    AnalyticRef::Spec(p) => {
                        if let Some(Wildcardable::Concrete(t)) = &p.transformation {
                            if !self.transformations.contains_key(t) {
                                return Err(InsightError::UnresolvedReference(t.clone()));
                            }
                        }
                        if let Some(Wildcardable::Concrete(rp)) = &p.relationship {
                            if let Some(Wildcardable::Concrete(m)) = &rp.name {
                                if !self.models.contains_key(m) {
                                    return Err(InsightError::UnresolvedReference(m.clone()));
                                }
                            }
                        }
                    }
                }
            }
        }
        self.insight_nodes.insert(
            name.clone(),
            InsightNode {
                name,
                domain_knowledge,
                analytic_knowledge,
                description: description.map(str::to_string),
                links: LinkSet::default(),
            },
        );
        Ok(())
    }

    pub fn create_task(
        &mut self,
        name: impl Into<String>,
        objective: &str,
        insights: &[&str],
    ) -> Result<(), InsightError> {
        let name = name.into();
        if self.task_nodes.contains_key(&name) {
            return Err(InsightError::DuplicateName(name));
        }
        let o = self
            .insight_nodes
            .get(objective)
            .ok_or_else(|| InsightError::UnresolvedReference(objective.to_string()))?;
        if !insight::is_objective(o) {
            return Err(InsightError::ObjectiveNotObjective(objective.to_string()));
        }
        for i in insights {
            let node = self
                .insight_nodes
                .get(*i)
                .ok_or_else(|| InsightError::UnresolvedReference(i.to_string()))?;
            if insight::is_objective(node) {
                return Err(InsightError::InsightIsObjective(i.to_string()));
            }
        }
        self.task_nodes.insert(
            name.clone(),
            SimpleTaskNode {
                name,
                objective: objective.to_string(),
                insights: insights.iter().map(|i| i.to_string()).collect(),
                links: LinkSet::default(),
            },
        );
        Ok(())
    }

    /// Names of every concrete insight matching the named objective, in
    /// sorted order.
    pub fn match_objective_by_name(&self, objective: &str) -> Result<Vec<String>, WorkspaceError> {
        let o = self
            .insight_nodes
            .get(objective)
            .ok_or_else(|| WorkspaceError::UnknownInsight(objective.to_string()))?;
        let mut out = Vec::new();
        for (name, i) in &self.insight_nodes {
            if name == objective || insight::is_objective(i) {
                continue;
            }
            if insight::match_objective(o, i, self)? {
                out.push(name.clone());
            }
        }
        Ok(out)
    }

    /// Names of the task's insights that do NOT match its objective; empty
    /// means the task is fully consistent.
    pub fn validate_task(&self, task: &str) -> Result<Vec<String>, WorkspaceError> {
        let t = self
            .task_nodes
            .get(task)
            .ok_or_else(|| WorkspaceError::UnknownTask(task.to_string()))?;
        let o = self
            .insight_nodes
            .get(&t.objective)
            .ok_or_else(|| WorkspaceError::UnknownInsight(t.objective.clone()))?;
        let mut out = Vec::new();
        for name in &t.insights {
            let i = self
                .insight_nodes
                .get(name)
                .ok_or_else(|| WorkspaceError::UnknownInsight(name.clone()))?;
            if !insight::match_objective(o, i, self)? {
                out.push(name.clone());
            }
        }
        Ok(out)
    }

    // ----- datasets and models ---------------------------------------------

    /// Load a registered dataset from disk, relative paths resolving against
    /// `base` (normally the workspace file's directory).
    pub fn load_dataset(&self, name: &str, base: &Path) -> Result<Dataset, WorkspaceError> {
        let dref = self
            .dataset_refs
            .get(name)
            .ok_or_else(|| WorkspaceError::UnknownDataset(name.to_string()))?;
        let path = base.join(&dref.path);
        let bytes = std::fs::read(&path).map_err(|e| WorkspaceError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(dataset::load_table(name, &bytes, Some(&dref.schema))?)
    }

    /// Load every registered dataset; keys are dataset names.
    pub fn load_all_datasets(&self, base: &Path) -> Result<BTreeMap<String, Dataset>, WorkspaceError> {
        self.dataset_refs
            .keys()
            .map(|name| Ok((name.clone(), self.load_dataset(name, base)?)))
            .collect()
    }

    pub fn execute_transformation(
        &self,
        name: &str,
        datasets: &BTreeMap<String, Dataset>,
    ) -> Result<Dataset, WorkspaceError> {
        let t = self
            .transformations
            .get(name)
            .ok_or_else(|| WorkspaceError::UnknownTransformation(name.to_string()))?;
        Ok(execute_data_transformation(t, |s| datasets.get(s))?)
    }

    /// Train the named model in place. Only the trained section changes; the
    /// configured seed stays as specified even when `seed_override` threads
    /// a different one into training.
    pub fn train_registered_model(
        &mut self,
        name: &str,
        data: &Dataset,
        seed_override: Option<u64>,
    ) -> Result<(), WorkspaceError> {
        let m = self
            .models
            .get(name)
            .ok_or_else(|| WorkspaceError::UnknownModel(name.to_string()))?;
        let mut spec = m.clone();
        if let Some(seed) = seed_override {
            spec.seed = seed;
        }
        let trained = relationship::train_model(&spec, &data.records)?;
        self.models.get_mut(name).expect("looked up above").trained = trained.trained;
        Ok(())
    }

    pub fn predict_with_model(
        &self,
        name: &str,
        record: &Record,
        strict: bool,
    ) -> Result<Value, WorkspaceError> {
        let m = self
            .models
            .get(name)
            .ok_or_else(|| WorkspaceError::UnknownModel(name.to_string()))?;
        Ok(relationship::predict_record_with(m, record, strict)?)
    }

    pub fn evaluate_model(
        &self,
        name: &str,
        data: &Dataset,
        metric: Metric,
    ) -> Result<f64, WorkspaceError> {
        let m = self
            .models
            .get(name)
            .ok_or_else(|| WorkspaceError::UnknownModel(name.to_string()))?;
        Ok(relationship::evaluate_accuracy(m, &data.records, metric)?)
    }

    // ----- validation ------------------------------------------------------

    /// Referential-integrity audit over the whole workspace. Each string
    /// describes one violation; an empty result means the workspace is
    /// internally consistent.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, dref) in &self.dataset_refs {
            if dref.path.is_empty() {
                v.push(format!("dataset '{name}' has an empty path"));
            }
            let mut seen = std::collections::BTreeSet::new();
            for attr in &dref.schema {
                if attr.name.is_empty() || attr.name == WILDCARD {
                    v.push(format!("dataset '{name}' declares illegal attribute name '{}'", attr.name));
                }
                if !seen.insert(attr.name.as_str()) {
                    v.push(format!("dataset '{name}' declares attribute '{}' twice", attr.name));
                }
            }
        }
        for (name, concept) in &self.concepts {
            for p in &concept.parents {
                if !self.concepts.contains_key(p) {
                    v.push(format!("concept '{name}' has unknown parent '{p}'"));
                } else if self.concept_reaches(p, name) && p != name {
                    v.push(format!("concept '{name}' is its own ancestor via '{p}'"));
                }
                if p == name {
                    v.push(format!("concept '{name}' lists itself as a parent"));
                }
            }
        }
        for (name, node) in &self.domain_nodes {
            for c in std::iter::once(&node.core_concept).chain(node.relevant_concepts.iter()) {
                if !self.concepts.contains_key(c) {
                    v.push(format!("domain node '{name}' references unknown concept '{c}'"));
                }
            }
            if let Err(e) = knowledge::validate_metadata(&node.metadata_attributes, &node.metadata_values)
            {
                v.push(format!("domain node '{name}': {e}"));
            }
        }
        for (name, node) in &self.analytic_nodes {
            if node.transformation.is_none() && node.relationship.is_none() {
                v.push(format!("analytic node '{name}' has no evidence"));
            }
            if let Some(t) = &node.transformation {
                if !self.transformations.contains_key(t) {
                    v.push(format!("analytic node '{name}' references unknown transformation '{t}'"));
                }
            }
            if let Some(r) = &node.relationship {
                if !self.models.contains_key(r) {
                    v.push(format!("analytic node '{name}' references unknown model '{r}'"));
                }
            }
        }
        for (name, node) in &self.insight_nodes {
            self.validate_insight_refs(name, node, &mut v);
        }
        for (name, task) in &self.task_nodes {
            match self.insight_nodes.get(&task.objective) {
                None => v.push(format!("task '{name}' references unknown insight '{}'", task.objective)),
                Some(o) if !insight::is_objective(o) => {
                    v.push(format!("task '{name}' objective '{}' contains no wildcard", task.objective))
                }
                Some(_) => {}
            }
            for i in &task.insights {
                match self.insight_nodes.get(i) {
                    None => v.push(format!("task '{name}' references unknown insight '{i}'")),
                    Some(node) if insight::is_objective(node) => {
                        v.push(format!("task '{name}' lists objective '{i}' as an insight"))
                    }
                    Some(_) => {}
                }
            }
        }
        for (name, t) in &self.transformations {
            for s in &t.sources {
                if !self.dataset_refs.contains_key(s) {
                    v.push(format!("transformation '{name}' reads unknown dataset '{s}'"));
                }
            }
            let schema = t
                .sources
                .first()
                .and_then(|s| self.dataset_refs.get(s))
                .map(|d| d.schema.as_slice());
            for violation in validate_pipeline(&t.sources, &t.transforms, schema) {
                v.push(format!("transformation '{name}': {violation}"));
            }
        }
        for (name, m) in &self.models {
            if let Err(e) = m.validate() {
                v.push(format!("model '{name}': {e}"));
            }
        }
        v.extend(self.audit_links());
        v
    }

    fn validate_insight_refs(&self, name: &str, node: &InsightNode, v: &mut Vec<String>) {
        if let Wildcardable::Concrete(elems) = &node.domain_knowledge {
            for n in elems.iter().filter_map(Wildcardable::concrete) {
                if !self.domain_nodes.contains_key(n) {
                    v.push(format!("insight '{name}' references unknown domain node '{n}'"));
                }
            }
        }
        if let Wildcardable::Concrete(elems) = &node.analytic_knowledge {
            for e in elems.iter().filter_map(Wildcardable::concrete) {
                match e {
                    AnalyticRef::Node(n) => {
                        if !self.analytic_nodes.contains_key(n) {
                            v.push(format!("insight '{name}' references unknown analytic node '{n}'"));
                        }
                    }
                    AnalyticRef::Spec(p) => {
                        if let Some(Wildcardable::Concrete(t)) = &p.transformation {
                            if !self.transformations.contains_key(t) {
                                v.push(format!(
                                    "insight '{name}' references unknown transformation '{t}'"
                                ));
                            }
                        }
                        if let Some(Wildcardable::Concrete(rp)) = &p.relationship {
                            if let Some(Wildcardable::Concrete(m)) = &rp.name {
                                if !self.models.contains_key(m) {
                                    v.push(format!("insight '{name}' references unknown model '{m}'"));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

impl SpecLookup for Workspace {
    fn analytic_node(&self, name: &str) -> Option<&AnalyticKnowledgeNode> {
        self.analytic_nodes.get(name)
    }

    fn relationship_model(&self, name: &str) -> Option<&RelationshipModel> {
        self.models.get(name)
    }
}
