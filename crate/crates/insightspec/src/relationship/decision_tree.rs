//! Greedy decision tree over categorical attributes.
//!
//! Splits are multi-way (one child per observed category) chosen by minimum
//! weighted Gini impurity; ties go to the earlier input attribute, so
//! training is deterministic. An attribute is consumed once split on, every
//! child is a proper subset, and an impure node still splits when impurity
//! ties, which together guarantee a tree that reproduces any consistent
//! training table exactly (within the depth limit).

use std::collections::BTreeMap;

use crate::dataset::{Attribute, Record};

use super::{categorical, ModelError};

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        label: String,
    },
    Split {
        attribute: String,
        /// Fallback label for categories unseen at this split.
        majority: String,
        /// One child per training category, sorted by category.
        children: Vec<(String, TreeNode)>,
    },
}

pub(crate) fn fit(
    inputs: &[Attribute],
    output: &str,
    rows: &[Record],
    max_depth: usize,
) -> TreeNode {
    let data: Vec<(Vec<&str>, &str)> = rows
        .iter()
        .map(|r| {
            let features = inputs.iter().map(|a| categorical(r, &a.name)).collect();
            (features, categorical(r, output))
        })
        .collect();
    let all: Vec<usize> = (0..data.len()).collect();
    let attrs: Vec<usize> = (0..inputs.len()).collect();
    build(&data, &all, &attrs, inputs, 0, max_depth)
}

fn build(
    data: &[(Vec<&str>, &str)],
    idx: &[usize],
    attrs: &[usize],
    inputs: &[Attribute],
    depth: usize,
    max_depth: usize,
) -> TreeNode {
    let majority = majority_label(data, idx);
    if depth >= max_depth || idx.iter().all(|&i| data[i].1 == majority) {
        return TreeNode::Leaf { label: majority };
    }
    let mut best: Option<(usize, f64, BTreeMap<&str, Vec<usize>>)> = None;
    for &a in attrs {
        let mut parts: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for &i in idx {
            parts.entry(data[i].0[a]).or_default().push(i);
        }
        if parts.len() < 2 {
            continue;
        }
        let weighted: f64 = parts
            .values()
            .map(|p| p.len() as f64 / idx.len() as f64 * gini(data, p))
            .sum();
        if best.as_ref().map_or(true, |(_, w, _)| weighted < *w - 1e-12) {
            best = Some((a, weighted, parts));
        }
    }
    match best {
        // No attribute partitions these rows: identical inputs with mixed
        // labels, so the data is inconsistent here.
        None => TreeNode::Leaf { label: majority },
        Some((a, _, parts)) => {
            let remaining: Vec<usize> = attrs.iter().copied().filter(|&x| x != a).collect();
            let children = parts
                .into_iter()
                .map(|(category, part)| {
                    let child = build(data, &part, &remaining, inputs, depth + 1, max_depth);
                    (category.to_string(), child)
                })
                .collect();
            TreeNode::Split { attribute: inputs[a].name.clone(), majority, children }
        }
    }
}

fn gini(data: &[(Vec<&str>, &str)], idx: &[usize]) -> f64 {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for &i in idx {
        *counts.entry(data[i].1).or_default() += 1;
    }
    let n = idx.len() as f64;
    1.0 - counts.values().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Most frequent label; ties break to the lexicographically smallest.
fn majority_label(data: &[(Vec<&str>, &str)], idx: &[usize]) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for &i in idx {
        *counts.entry(data[i].1).or_default() += 1;
    }
    counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(label, _)| label.to_string())
        .expect("nodes are built from at least one row")
}

pub(crate) fn predict(node: &TreeNode, query: &Record, strict: bool) -> Result<String, ModelError> {
    match node {
        TreeNode::Leaf { label } => Ok(label.clone()),
        TreeNode::Split { attribute, majority, children } => {
            let category = categorical(query, attribute);
            match children.iter().find(|(c, _)| c == category) {
                Some((_, child)) => predict(child, query, strict),
                None if strict => Err(ModelError::UnseenCategory {
                    attribute: attribute.clone(),
                    category: category.to_string(),
                }),
                None => Ok(majority.clone()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::dataset::Value;
    use crate::relationship::{
        predict_record, predict_record_with, train_model, ModelKind, RelationshipModel,
        TrainedParameters,
    };

    use super::*;

    fn record(pairs: &[(&str, &str)]) -> Record {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), Value::Nominal(v.to_string())))
            .collect()
    }

    fn model(inputs: &[&str], hyper: &[(&str, f64)]) -> RelationshipModel {
        RelationshipModel::new(
            "tree",
            ModelKind::DecisionTreeClassification,
            inputs.iter().map(|n| Attribute::nominal(*n)).collect(),
            Some(Attribute::nominal("label")),
            hyper.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn one_informative_attribute_yields_a_single_split() {
        let rows = vec![
            record(&[("io", "I"), ("premise", "APARTMENT"), ("label", "indoorCrime")]),
            record(&[("io", "O"), ("premise", "STREET"), ("label", "outdoorCrime")]),
            record(&[("io", "I"), ("premise", "ROW/TOWNHOUSE"), ("label", "indoorCrime")]),
            record(&[("io", "O"), ("premise", "ALLEY"), ("label", "outdoorCrime")]),
        ];
        let trained = train_model(&model(&["io", "premise"], &[]), &rows).unwrap();
        let Some(TrainedParameters::DecisionTree { root }) = &trained.trained else {
            panic!("expected tree parameters");
        };
        let TreeNode::Split { attribute, children, .. } = root else {
            panic!("expected a split at the root, got {root:?}");
        };
        assert_eq!(attribute, "io");
        assert_eq!(
            children,
            &vec![
                ("I".to_string(), TreeNode::Leaf { label: "indoorCrime".to_string() }),
                ("O".to_string(), TreeNode::Leaf { label: "outdoorCrime".to_string() }),
            ]
        );
    }

    #[test]
    fn xor_labels_still_train_to_full_accuracy() {
        // Neither attribute reduces impurity alone; the tree must split
        // anyway to separate the classes.
        let rows = vec![
            record(&[("a", "0"), ("b", "0"), ("label", "even")]),
            record(&[("a", "0"), ("b", "1"), ("label", "odd")]),
            record(&[("a", "1"), ("b", "0"), ("label", "odd")]),
            record(&[("a", "1"), ("b", "1"), ("label", "even")]),
        ];
        let trained = train_model(&model(&["a", "b"], &[]), &rows).unwrap();
        for row in &rows {
            assert_eq!(predict_record(&trained, row).unwrap(), row["label"]);
        }
    }

    #[test]
    fn unseen_category_falls_back_to_majority_unless_strict() {
        let rows = vec![
            record(&[("io", "I"), ("label", "indoorCrime")]),
            record(&[("io", "I"), ("label", "indoorCrime")]),
            record(&[("io", "O"), ("label", "outdoorCrime")]),
        ];
        let trained = train_model(&model(&["io"], &[]), &rows).unwrap();
        let query = record(&[("io", "courtyard")]);
        assert_eq!(
            predict_record(&trained, &query).unwrap(),
            Value::Nominal("indoorCrime".to_string())
        );
        assert!(matches!(
            predict_record_with(&trained, &query, true),
            Err(ModelError::UnseenCategory { attribute, category })
                if attribute == "io" && category == "courtyard"
        ));
    }

    #[test]
    fn depth_limit_stops_splitting() {
        let rows = vec![
            record(&[("a", "0"), ("b", "0"), ("label", "even")]),
            record(&[("a", "0"), ("b", "1"), ("label", "odd")]),
            record(&[("a", "1"), ("b", "0"), ("label", "odd")]),
            record(&[("a", "1"), ("b", "1"), ("label", "even")]),
        ];
        let trained = train_model(&model(&["a", "b"], &[("max_depth", 1.0)]), &rows).unwrap();
        let Some(TrainedParameters::DecisionTree { root }) = &trained.trained else {
            panic!("expected tree parameters");
        };
        let TreeNode::Split { children, .. } = root else {
            panic!("root should still split once");
        };
        assert!(
            children.iter().all(|(_, c)| matches!(c, TreeNode::Leaf { .. })),
            "children must be leaves at depth 1"
        );
    }

    #[test]
    fn inconsistent_rows_resolve_to_the_majority_label() {
        let rows = vec![
            record(&[("io", "I"), ("label", "a")]),
            record(&[("io", "I"), ("label", "b")]),
            record(&[("io", "I"), ("label", "b")]),
        ];
        let trained = train_model(&model(&["io"], &[]), &rows).unwrap();
        assert_eq!(
            predict_record(&trained, &record(&[("io", "I")])).unwrap(),
            Value::Nominal("b".to_string())
        );
    }
}
