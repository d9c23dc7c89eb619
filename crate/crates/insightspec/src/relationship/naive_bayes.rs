//! Categorical naive Bayes with Laplace smoothing.
//!
//! Priors are raw class frequencies; per-attribute conditionals are smoothed
//! as (count + alpha) / (classCount + alpha * |categories|) over the category
//! universe observed in training. Smoothing keeps every conditional
//! positive, so posteriors are well defined even for category combinations
//! never seen together.

use std::collections::{BTreeMap, BTreeSet};

use crate::dataset::{Attribute, Record};

use super::categorical;

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesTable {
    pub alpha: f64,
    pub class_counts: BTreeMap<String, usize>,
    /// Category universe per input attribute.
    pub categories: BTreeMap<String, BTreeSet<String>>,
    /// attribute -> class -> category -> count.
    pub counts: BTreeMap<String, BTreeMap<String, BTreeMap<String, usize>>>,
}

pub(crate) fn fit(
    inputs: &[Attribute],
    output: &str,
    rows: &[Record],
    alpha: f64,
) -> NaiveBayesTable {
    let mut table = NaiveBayesTable {
        alpha,
        class_counts: BTreeMap::new(),
        categories: inputs.iter().map(|a| (a.name.clone(), BTreeSet::new())).collect(),
        counts: inputs.iter().map(|a| (a.name.clone(), BTreeMap::new())).collect(),
    };
    for row in rows {
        let class = categorical(row, output);
        *table.class_counts.entry(class.to_string()).or_default() += 1;
        for attr in inputs {
            let category = categorical(row, &attr.name);
            table
                .categories
                .get_mut(&attr.name)
                .expect("initialized above")
                .insert(category.to_string());
            *table
                .counts
                .get_mut(&attr.name)
                .expect("initialized above")
                .entry(class.to_string())
                .or_default()
                .entry(category.to_string())
                .or_default() += 1;
        }
    }
    table
}

/// Normalized class posteriors for a query, sorted by class name.
pub(crate) fn posteriors(table: &NaiveBayesTable, query: &Record) -> Vec<(String, f64)> {
    let total: usize = table.class_counts.values().sum();
    let mut weights: Vec<(String, f64)> = table
        .class_counts
        .iter()
        .map(|(class, n)| {
            let mut w = *n as f64 / total as f64;
            for (attr, cats) in &table.categories {
                let category = categorical(query, attr);
                let count = table.counts[attr]
                    .get(class)
                    .and_then(|by_cat| by_cat.get(category))
                    .copied()
                    .unwrap_or(0);
                w *= (count as f64 + table.alpha)
                    / (*n as f64 + table.alpha * cats.len() as f64);
            }
            (class.clone(), w)
        })
        .collect();
    let sum: f64 = weights.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut weights {
        *w /= sum;
    }
    weights
}

/// Highest-posterior class; ties break to the lexicographically smallest.
pub(crate) fn predict(table: &NaiveBayesTable, query: &Record) -> String {
    let posts = posteriors(table, query);
    let mut best = &posts[0];
    for p in &posts[1..] {
        if p.1 > best.1 {
            best = p;
        }
    }
    best.0.clone()
}

#[cfg(test)]
mod tests {
    use crate::dataset::Value;
    use crate::relationship::{
        posteriors as model_posteriors, predict_record, train_model, ModelKind, RelationshipModel,
    };

    use super::*;

    fn record(a: &str, b: &str, label: &str) -> Record {
        let mut r = Record::new();
        r.insert("a".to_string(), Value::Nominal(a.to_string()));
        r.insert("b".to_string(), Value::Nominal(b.to_string()));
        r.insert("label".to_string(), Value::Nominal(label.to_string()));
        r
    }

    fn six_row_model() -> (RelationshipModel, Vec<Record>) {
        let m = RelationshipModel::new(
            "bayes",
            ModelKind::NaiveBayesClassification,
            vec![Attribute::nominal("a"), Attribute::nominal("b")],
            Some(Attribute::nominal("label")),
            std::collections::BTreeMap::new(),
            0,
        )
        .unwrap();
        let rows = vec![
            record("x", "p", "c1"),
            record("x", "p", "c1"),
            record("x", "q", "c1"),
            record("y", "q", "c2"),
            record("y", "q", "c2"),
            record("y", "p", "c2"),
        ];
        (m, rows)
    }

    #[test]
    fn posteriors_match_the_hand_computed_table() {
        // Query (a=x, b=q). Priors are 3/6 each. With alpha = 1 and two
        // categories per attribute the conditional denominators are 3 + 2:
        //   c1: 1/2 * (3+1)/5 * (1+1)/5 = 0.16
        //   c2: 1/2 * (0+1)/5 * (2+1)/5 = 0.06
        // Normalized: 8/11 and 3/11.
        let (m, rows) = six_row_model();
        let trained = train_model(&m, &rows).unwrap();
        let posts = model_posteriors(&trained, &record("x", "q", "ignored")).unwrap();
        assert_eq!(posts.len(), 2);
        assert_eq!(posts[0].0, "c1");
        assert!((posts[0].1 - 8.0 / 11.0).abs() < 1e-12, "c1 = {}", posts[0].1);
        assert!((posts[1].1 - 3.0 / 11.0).abs() < 1e-12, "c2 = {}", posts[1].1);
        assert_eq!(
            predict_record(&trained, &record("x", "q", "ignored")).unwrap(),
            Value::Nominal("c1".to_string())
        );
    }

    #[test]
    fn posteriors_sum_to_one_for_any_query() {
        let (m, rows) = six_row_model();
        let trained = train_model(&m, &rows).unwrap();
        for (a, b) in [("x", "p"), ("x", "q"), ("y", "p"), ("y", "q"), ("z", "w")] {
            let posts = model_posteriors(&trained, &record(a, b, "ignored")).unwrap();
            let sum: f64 = posts.iter().map(|(_, w)| w).sum();
            assert!((sum - 1.0).abs() < 1e-12, "({a},{b}) sums to {sum}");
            assert!(posts.iter().all(|(_, w)| *w > 0.0), "smoothing keeps weights positive");
        }
    }

    #[test]
    fn unseen_categories_are_smoothed_not_fatal() {
        let (m, rows) = six_row_model();
        let trained = train_model(&m, &rows).unwrap();
        // "z" never occurs: both classes get the same smoothed factor for a,
        // so b decides. b=p favors c1 (2 vs 1).
        assert_eq!(
            predict_record(&trained, &record("z", "p", "ignored")).unwrap(),
            Value::Nominal("c1".to_string())
        );
    }

    #[test]
    fn posterior_tie_breaks_to_the_smaller_class_name() {
        let m = RelationshipModel::new(
            "bayes",
            ModelKind::NaiveBayesClassification,
            vec![Attribute::nominal("a")],
            Some(Attribute::nominal("label")),
            std::collections::BTreeMap::new(),
            0,
        )
        .unwrap();
        let rows = vec![
            {
                let mut r = Record::new();
                r.insert("a".to_string(), Value::Nominal("x".to_string()));
                r.insert("label".to_string(), Value::Nominal("c2".to_string()));
                r
            },
            {
                let mut r = Record::new();
                r.insert("a".to_string(), Value::Nominal("x".to_string()));
                r.insert("label".to_string(), Value::Nominal("c1".to_string()));
                r
            },
        ];
        let trained = train_model(&m, &rows).unwrap();
        let mut q = Record::new();
        q.insert("a".to_string(), Value::Nominal("x".to_string()));
        assert_eq!(predict_record(&trained, &q).unwrap(), Value::Nominal("c1".to_string()));
    }
}
