//! Graphviz export of a whole workspace.
//!
//! Every registered object becomes a node labeled `name\n[family]`. Directed
//! edges point from inputs to the things built on them: parent concepts into
//! child concepts, concepts into domain nodes, datasets into transformations,
//! transformations and models into analytic nodes, referenced knowledge into
//! insights, and objective plus insights into tasks. Knowledge-graph links
//! render from the source side (`source -> target`); `related` edges render
//! once per pair with `dir=none`. Output is deterministic: same workspace,
//! same bytes.

use std::collections::{BTreeMap, BTreeSet};

use crate::insight::{AnalyticRef, Wildcardable};
use crate::knowledge::NodeId;
use crate::workspace::Workspace;

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

fn escape_label(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Stable graph identifiers: family prefix plus sanitized name, with a
/// numeric suffix when sanitizing collides.
struct Ids {
    by_key: BTreeMap<(String, String), String>,
    used: BTreeSet<String>,
}

impl Ids {
    fn new() -> Self {
        Ids { by_key: BTreeMap::new(), used: BTreeSet::new() }
    }

    fn assign(&mut self, family: &str, name: &str) -> String {
        let base = format!("{family}_{}", sanitize(name));
        let mut id = base.clone();
        let mut n = 1;
        while !self.used.insert(id.clone()) {
            n += 1;
            id = format!("{base}_{n}");
        }
        self.by_key.insert((family.to_string(), name.to_string()), id.clone());
        id
    }

    fn get(&self, family: &str, name: &str) -> Option<&String> {
        self.by_key.get(&(family.to_string(), name.to_string()))
    }

    fn node(&self, id: &NodeId) -> Option<&String> {
        self.get(id.family.as_str(), &id.name)
    }
}

pub fn export_dot(w: &Workspace) -> String {
    let mut ids = Ids::new();
    let mut out = String::new();
    out.push_str(&format!("digraph \"{}\" {{\n", escape_label(&w.name)));
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=box];\n");

    let declare = |out: &mut String, ids: &mut Ids, family: &str, name: &str| {
        let id = ids.assign(family, name);
        out.push_str(&format!(
            "  {id} [label=\"{}\\n[{family}]\"];\n",
            escape_label(name)
        ));
    };
    for name in w.dataset_refs.keys() {
        declare(&mut out, &mut ids, "dataset", name);
    }
    for name in w.transformations.keys() {
        declare(&mut out, &mut ids, "transformation", name);
    }
    for name in w.models.keys() {
        declare(&mut out, &mut ids, "model", name);
    }
    for name in w.concepts.keys() {
        declare(&mut out, &mut ids, "concept", name);
    }
    for name in w.domain_nodes.keys() {
        declare(&mut out, &mut ids, "domain", name);
    }
    for name in w.analytic_nodes.keys() {
        declare(&mut out, &mut ids, "analytic", name);
    }
    for name in w.insight_nodes.keys() {
        declare(&mut out, &mut ids, "insight", name);
    }
    for name in w.task_nodes.keys() {
        declare(&mut out, &mut ids, "task", name);
    }

    // Input edges. A reference that does not resolve simply draws nothing;
    // validate() is the place that complains.
    let mut seen = BTreeSet::new();
    let mut edge = |out: &mut String, from: Option<&String>, to: Option<&String>| {
        if let (Some(from), Some(to)) = (from, to) {
            let line = format!("  {from} -> {to};\n");
            if seen.insert(line.clone()) {
                out.push_str(&line);
            }
        }
    };
    for (name, c) in &w.concepts {
        for p in &c.parents {
            edge(&mut out, ids.get("concept", p), ids.get("concept", name));
        }
    }
    for (name, n) in &w.domain_nodes {
        for c in std::iter::once(&n.core_concept).chain(n.relevant_concepts.iter()) {
            edge(&mut out, ids.get("concept", c), ids.get("domain", name));
        }
    }
    for (name, t) in &w.transformations {
        for s in &t.sources {
            edge(&mut out, ids.get("dataset", s), ids.get("transformation", name));
        }
    }
    for (name, n) in &w.analytic_nodes {
        if let Some(t) = &n.transformation {
            edge(&mut out, ids.get("transformation", t), ids.get("analytic", name));
        }
        if let Some(m) = &n.relationship {
            edge(&mut out, ids.get("model", m), ids.get("analytic", name));
        }
    }
    for (name, i) in &w.insight_nodes {
        if let Wildcardable::Concrete(elems) = &i.domain_knowledge {
            for d in elems.iter().filter_map(Wildcardable::concrete) {
                edge(&mut out, ids.get("domain", d), ids.get("insight", name));
            }
        }
        if let Wildcardable::Concrete(elems) = &i.analytic_knowledge {
            for e in elems.iter().filter_map(Wildcardable::concrete) {
                match e {
                    AnalyticRef::Node(a) => {
                        edge(&mut out, ids.get("analytic", a), ids.get("insight", name));
                    }
                    AnalyticRef::Spec(p) => {
                        if let Some(Wildcardable::Concrete(t)) = &p.transformation {
                            edge(&mut out, ids.get("transformation", t), ids.get("insight", name));
                        }
                        if let Some(Wildcardable::Concrete(rp)) = &p.relationship {
                            if let Some(Wildcardable::Concrete(m)) = &rp.name {
                                edge(&mut out, ids.get("model", m), ids.get("insight", name));
                            }
                        }
                    }
                }
            }
        }
    }
    for (name, t) in &w.task_nodes {
        edge(&mut out, ids.get("insight", &t.objective), ids.get("task", name));
        for i in &t.insights {
            edge(&mut out, ids.get("insight", i), ids.get("task", name));
        }
    }

    // Knowledge-graph links. Each directed edge lives in the owner's targets
    // and the mirror's sources, so rendering targets covers it exactly once.
    for (id, links) in w.all_linked_nodes() {
        for (target, label) in &links.targets {
            if let (Some(from), Some(to)) = (ids.node(&id), ids.node(target)) {
                match label {
                    Some(l) => out.push_str(&format!(
                        "  {from} -> {to} [label=\"{}\"];\n",
                        escape_label(l)
                    )),
                    None => out.push_str(&format!("  {from} -> {to};\n")),
                }
            }
        }
    }
    for (id, links) in w.all_linked_nodes() {
        for (other, label) in &links.related {
            if other < &id {
                continue; // rendered when visiting the smaller endpoint
            }
            if let (Some(from), Some(to)) = (ids.node(&id), ids.node(other)) {
                match label {
                    Some(l) => out.push_str(&format!(
                        "  {from} -> {to} [dir=none, label=\"{}\"];\n",
                        escape_label(l)
                    )),
                    None => out.push_str(&format!("  {from} -> {to} [dir=none];\n")),
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::dataset::{Attribute, Record, Value};
    use crate::knowledge::{LinkKind, NodeFamily};
    use crate::relationship::{ModelKind, RelationshipModel};
    use crate::transform::DataTransformation;

    fn fixture() -> Workspace {
        let mut w = Workspace::new("crime-analysis");
        w.register_dataset(
            "baltimoreCrime",
            "baltimore_crime.csv",
            vec![Attribute::nominal("Premise"), Attribute::nominal("Description")],
        )
        .unwrap();
        w.register_transformation(DataTransformation {
            name: "aggTransform".to_string(),
            sources: vec!["baltimoreCrime".to_string()],
            transforms: vec![],
        })
        .unwrap();
        w.register_model(
            RelationshipModel::new(
                "predictCrimeType",
                ModelKind::DecisionTreeClassification,
                vec![Attribute::nominal("Premise")],
                Some(Attribute::nominal("Description")),
                BTreeMap::new(),
                0,
            )
            .unwrap(),
        )
        .unwrap();
        w.create_concept("Protest", &[]).unwrap();
        w.create_concept("Funeral", &["Protest"]).unwrap();
        let mut meta = Record::new();
        meta.insert("link".to_string(), Value::Nominal("url".to_string()));
        w.create_domain_node(
            "2015BaltimoreProtests",
            "Protest",
            &[],
            vec![Attribute::nominal("link")],
            meta,
        )
        .unwrap();
        w.create_analytic_node("peakCrimes", 0, Some("aggTransform"), None, None).unwrap();
        w.create_analytic_node("crimeLocations", 0, None, Some("predictCrimeType"), None)
            .unwrap();
        w.create_insight_node(
            "johnsInsight",
            Wildcardable::Concrete(vec![Wildcardable::Concrete(
                "2015BaltimoreProtests".to_string(),
            )]),
            Wildcardable::Concrete(vec![
                Wildcardable::Concrete(AnalyticRef::Node("peakCrimes".to_string())),
                Wildcardable::Concrete(AnalyticRef::Node("crimeLocations".to_string())),
            ]),
            None,
        )
        .unwrap();
        w.create_insight_node(
            "protestsObjective",
            Wildcardable::Concrete(vec![Wildcardable::Concrete(
                "2015BaltimoreProtests".to_string(),
            )]),
            Wildcardable::Wildcard,
            None,
        )
        .unwrap();
        w.create_task("protestsTask", "protestsObjective", &["johnsInsight"]).unwrap();
        w
    }

    #[test]
    fn inputs_point_into_what_they_feed() {
        let dot = export_dot(&fixture());
        for line in [
            "concept_Protest -> concept_Funeral;",
            "concept_Protest -> domain_2015BaltimoreProtests;",
            "dataset_baltimoreCrime -> transformation_aggTransform;",
            "transformation_aggTransform -> analytic_peakCrimes;",
            "model_predictCrimeType -> analytic_crimeLocations;",
            "analytic_peakCrimes -> insight_johnsInsight;",
            "domain_2015BaltimoreProtests -> insight_johnsInsight;",
            "insight_protestsObjective -> task_protestsTask;",
            "insight_johnsInsight -> task_protestsTask;",
        ] {
            assert!(dot.contains(line), "missing edge {line:?} in:\n{dot}");
        }
        assert!(dot.contains("[label=\"2015BaltimoreProtests\\n[domain]\"]"));
        assert!(dot.contains("[label=\"aggTransform\\n[transformation]\"]"));
    }

    #[test]
    fn links_render_once_with_direction_and_labels() {
        let mut w = fixture();
        let protests = NodeId::new(NodeFamily::Domain, "2015BaltimoreProtests");
        let insight = NodeId::new(NodeFamily::Insight, "johnsInsight");
        let peaks = NodeId::new(NodeFamily::Analytic, "peakCrimes");
        w.link_nodes(&protests, &insight, LinkKind::Target, Some("evidence")).unwrap();
        w.link_nodes(&peaks, &insight, LinkKind::Related, None).unwrap();
        let dot = export_dot(&w);
        assert_eq!(
            dot.matches("domain_2015BaltimoreProtests -> insight_johnsInsight [label=\"evidence\"];")
                .count(),
            1
        );
        assert_eq!(
            dot.matches("analytic_peakCrimes -> insight_johnsInsight [dir=none];").count(),
            1
        );
    }

    #[test]
    fn output_is_deterministic_regardless_of_construction_order() {
        let a = export_dot(&fixture());
        let mut w = Workspace::new("crime-analysis");
        // Rebuild with registrations shuffled relative to fixture().
        w.create_concept("Protest", &[]).unwrap();
        w.create_concept("Funeral", &["Protest"]).unwrap();
        w.register_model(
            RelationshipModel::new(
                "predictCrimeType",
                ModelKind::DecisionTreeClassification,
                vec![Attribute::nominal("Premise")],
                Some(Attribute::nominal("Description")),
                BTreeMap::new(),
                0,
            )
            .unwrap(),
        )
        .unwrap();
        w.register_dataset(
            "baltimoreCrime",
            "baltimore_crime.csv",
            vec![Attribute::nominal("Premise"), Attribute::nominal("Description")],
        )
        .unwrap();
        w.register_transformation(DataTransformation {
            name: "aggTransform".to_string(),
            sources: vec!["baltimoreCrime".to_string()],
            transforms: vec![],
        })
        .unwrap();
        let mut meta = Record::new();
        meta.insert("link".to_string(), Value::Nominal("url".to_string()));
        w.create_domain_node(
            "2015BaltimoreProtests",
            "Protest",
            &[],
            vec![Attribute::nominal("link")],
            meta,
        )
        .unwrap();
        w.create_analytic_node("crimeLocations", 0, None, Some("predictCrimeType"), None)
            .unwrap();
        w.create_analytic_node("peakCrimes", 0, Some("aggTransform"), None, None).unwrap();
        w.create_insight_node(
            "protestsObjective",
            Wildcardable::Concrete(vec![Wildcardable::Concrete(
                "2015BaltimoreProtests".to_string(),
            )]),
            Wildcardable::Wildcard,
            None,
        )
        .unwrap();
        w.create_insight_node(
            "johnsInsight",
            Wildcardable::Concrete(vec![Wildcardable::Concrete(
                "2015BaltimoreProtests".to_string(),
            )]),
            Wildcardable::Concrete(vec![
                Wildcardable::Concrete(AnalyticRef::Node("peakCrimes".to_string())),
                Wildcardable::Concrete(AnalyticRef::Node("crimeLocations".to_string())),
            ]),
            None,
        )
        .unwrap();
        w.create_task("protestsTask", "protestsObjective", &["johnsInsight"]).unwrap();
        assert_eq!(a, export_dot(&w));
    }

    #[test]
    fn colliding_sanitized_names_stay_distinct() {
        let mut w = Workspace::new("x");
        w.create_concept("a-b", &[]).unwrap();
        w.create_concept("a_b", &[]).unwrap();
        let dot = export_dot(&w);
        assert!(dot.contains("concept_a_b [label=\"a-b\\n[concept]\"]"));
        assert!(dot.contains("concept_a_b_2 [label=\"a_b\\n[concept]\"]"));
    }

    #[test]
    fn labels_escape_quotes() {
        let mut w = Workspace::new("q");
        w.create_concept("say \"crime\"", &[]).unwrap();
        let dot = export_dot(&w);
        assert!(dot.contains("label=\"say \\\"crime\\\"\\n[concept]\""));
    }
}
