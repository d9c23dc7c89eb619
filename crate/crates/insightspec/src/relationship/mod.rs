//! Trainable data relationships: regression, classification, density
//! estimation, and outlier scoring over dataset records.
//!
//! A model is a pure specification (kind, attributes, hyperparameters, seed)
//! until trained; training returns a trained copy and never touches the
//! original. Prediction is a pure function of the trained state and the
//! queried record, so repeated calls agree exactly.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::dataset::{Attribute, AttributeType, Record, Value, WILDCARD};

mod decision_tree;
mod isolation_forest;
mod kde;
mod knn;
mod naive_bayes;
mod regression;

pub use decision_tree::TreeNode;
pub use isolation_forest::{ForestState, IsoNode};
pub use knn::{KnnState, NumericScale};
pub use naive_bayes::NaiveBayesTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    LinearRegression,
    DecisionTreeClassification,
    KnnClassification,
    NaiveBayesClassification,
    KernelDensity,
    IsolationForest,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::LinearRegression => "LinearRegression",
            ModelKind::DecisionTreeClassification => "DecisionTreeClassification",
            ModelKind::KnnClassification => "KNNClassification",
            ModelKind::NaiveBayesClassification => "NaiveBayesClassification",
            ModelKind::KernelDensity => "KernelDensity",
            ModelKind::IsolationForest => "IsolationForest",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "LinearRegression" => Some(ModelKind::LinearRegression),
            "DecisionTreeClassification" => Some(ModelKind::DecisionTreeClassification),
            "KNNClassification" => Some(ModelKind::KnnClassification),
            "NaiveBayesClassification" => Some(ModelKind::NaiveBayesClassification),
            "KernelDensity" => Some(ModelKind::KernelDensity),
            "IsolationForest" => Some(ModelKind::IsolationForest),
        _ => None,
        }
    }

    pub fn is_classification(self) -> bool {
        matches!(
            self,
            ModelKind::DecisionTreeClassification
                | ModelKind::KnnClassification
                | ModelKind::NaiveBayesClassification
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    Rmse,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Rmse => "rmse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "accuracy" => Some(Metric::Accuracy),
            "rmse" => Some(Metric::Rmse),
            _ => None,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Trained, serializable parameters, one shape per model kind.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedParameters {
    /// Coefficients ordered intercept first, then one weight per input.
    Regression { beta: Vec<f64> },
    DecisionTree { root: TreeNode },
    Knn(KnnState),
    NaiveBayes(NaiveBayesTable),
    Kde { samples: Vec<f64>, bandwidth: f64 },
    IsolationForest(ForestState),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{0}")]
    TypeConstraintViolation(String),
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("model '{0}' is not trained")]
    UntrainedModel(String),
    #[error("unseen category '{category}' for attribute '{attribute}'")]
    UnseenCategory { attribute: String, category: String },
    #[error("record is missing input attribute '{0}'")]
    MissingInput(String),
    #[error("metric {metric} does not apply to {kind}")]
    MetricKindMismatch { metric: Metric, kind: ModelKind },
    #[error("evaluation set is empty")]
    EmptyEvaluationSet,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
}

/// A specified (and possibly trained) relationship between dataset
/// attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationshipModel {
    pub name: String,
    pub kind: ModelKind,
    pub inputs: Vec<Attribute>,
    /// Absent for the kinds that score rather than map: density and outlier
    /// models.
    pub output: Option<Attribute>,
    pub hyper: BTreeMap<String, f64>,
    /// Feeds the RNG of kinds that randomize (isolation forest). Other kinds
    /// ignore it.
    pub seed: u64,
    pub trained: Option<TrainedParameters>,
}

impl RelationshipModel {
    pub fn new(
        name: impl Into<String>,
        kind: ModelKind,
        inputs: Vec<Attribute>,
        output: Option<Attribute>,
        hyper: BTreeMap<String, f64>,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let m = RelationshipModel { name: name.into(), kind, inputs, output, hyper, seed, trained: None };
        m.validate()?;
        Ok(m)
    }

    pub fn is_trained(&self) -> bool {
        self.trained.is_some()
    }

    /// Check the kind's type constraints and hyperparameter domain.
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m: String| Err(ModelError::TypeConstraintViolation(m));
        if self.inputs.is_empty() {
            return fail(format!("model '{}' needs at least one input attribute", self.name));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.inputs {
            if a.name.is_empty() || a.name == WILDCARD {
                return fail(format!("illegal input attribute name '{}'", a.name));
            }
            if !seen.insert(a.name.as_str()) {
                return fail(format!("input attribute '{}' listed twice", a.name));
            }
        }
        let categorical_inputs = || {
            self.inputs
                .iter()
                .find(|a| !a.attribute_type.is_categorical())
                .map(|a| format!("{} input '{}' must be nominal or ordinal", self.kind, a.name))
        };
        let quantitative_inputs = || {
            self.inputs
                .iter()
                .find(|a| a.attribute_type != AttributeType::Quantitative)
                .map(|a| format!("{} input '{}' must be quantitative", self.kind, a.name))
        };
        let output_required = self.kind.is_classification() || self.kind == ModelKind::LinearRegression;
        match (&self.output, output_required) {
            (None, true) => return fail(format!("{} requires an output attribute", self.kind)),
            (Some(o), false) => {
                return fail(format!("{} takes no output attribute, got '{}'", self.kind, o.name))
            }
            _ => {}
        }
        match self.kind {
            ModelKind::LinearRegression => {
                if let Some(m) = quantitative_inputs() {
                    return fail(m);
                }
                let o = self.output.as_ref().expect("checked above");
                if o.attribute_type != AttributeType::Quantitative {
                    return fail(format!("regression output '{}' must be quantitative", o.name));
                }
            }
            ModelKind::DecisionTreeClassification | ModelKind::NaiveBayesClassification => {
                if let Some(m) = categorical_inputs() {
                    return fail(m);
                }
                let o = self.output.as_ref().expect("checked above");
                if !o.attribute_type.is_categorical() {
                    return fail(format!(
                        "{} output '{}' must be nominal or ordinal",
                        self.kind, o.name
                    ));
                }
            }
            ModelKind::KnnClassification => {
                if let Some(a) = self
                    .inputs
                    .iter()
                    .find(|a| a.attribute_type == AttributeType::Temporal)
                {
                    return fail(format!(
                        "KNN input '{}' must be quantitative, nominal, or ordinal",
                        a.name
                    ));
                }
                let o = self.output.as_ref().expect("checked above");
                if !o.attribute_type.is_categorical() {
                    return fail(format!("KNN output '{}' must be nominal or ordinal", o.name));
                }
            }
            ModelKind::KernelDensity => {
                if self.inputs.len() != 1 {
                    return fail("kernel density takes exactly one input attribute".to_string());
                }
                if let Some(m) = quantitative_inputs() {
                    return fail(m);
                }
            }
            ModelKind::IsolationForest => {
                if let Some(m) = quantitative_inputs() {
                    return fail(m);
                }
            }
        }
        self.validate_hyper()
    }

    fn validate_hyper(&self) -> Result<(), ModelError> {
        let allowed: &[&str] = match self.kind {
            ModelKind::LinearRegression => &[],
            ModelKind::DecisionTreeClassification => &["max_depth"],
            ModelKind::KnnClassification => &["k"],
            ModelKind::NaiveBayesClassification => &["alpha"],
            ModelKind::KernelDensity => &["bandwidth"],
            ModelKind::IsolationForest => &["trees", "subsample"],
        };
        for (key, value) in &self.hyper {
            if !allowed.contains(&key.as_str()) {
                return Err(ModelError::InvalidHyperparameter(format!(
                    "'{key}' is not a {} hyperparameter",
                    self.kind
                )));
            }
            if !value.is_finite() {
                return Err(ModelError::InvalidHyperparameter(format!(
                    "'{key}' must be finite"
                )));
            }
            let bad = match key.as_str() {
                "max_depth" | "k" | "trees" => value.fract() != 0.0 || *value < 1.0,
                "subsample" => value.fract() != 0.0 || *value < 2.0,
                "alpha" | "bandwidth" => *value <= 0.0,
                _ => false,
            };
            if bad {
                return Err(ModelError::InvalidHyperparameter(format!(
                    "'{key}' = {value} is out of range"
                )));
            }
        }
        Ok(())
    }

    fn hyper_usize(&self, key: &str, default: usize) -> usize {
        self.hyper.get(key).map(|v| *v as usize).unwrap_or(default)
    }

    fn used_attributes(&self) -> Vec<&Attribute> {
        self.inputs.iter().chain(self.output.as_ref()).collect()
    }
}

/// Restrict records to the model's attributes, dropping any row with a
/// missing or Null cell. A non-Null cell of the wrong type is an error, not a
/// drop: it means the data and the model spec disagree.
fn clean_rows(m: &RelationshipModel, records: &[Record]) -> Result<Vec<Record>, ModelError> {
    let used = m.used_attributes();
    let mut out = Vec::with_capacity(records.len());
    'rows: for rec in records {
        let mut row = Record::new();
        for attr in &used {
            match rec.get(&attr.name) {
                None | Some(Value::Null) => continue 'rows,
                Some(v) => {
                    if !v.matches_type(attr.attribute_type) {
                        return Err(ModelError::TypeConstraintViolation(format!(
                            "value {} does not fit {} attribute '{}'",
                            v.render(),
                            attr.attribute_type,
                            attr.name
                        )));
                    }
                    row.insert(attr.name.clone(), v.clone());
                }
            }
        }
        out.push(row);
    }
    Ok(out)
}

/// Extract the model's inputs from a record to predict on. Unlike training,
/// a missing or Null input here is an error.
fn query_inputs(m: &RelationshipModel, record: &Record) -> Result<Record, ModelError> {
    let mut row = Record::new();
    for attr in &m.inputs {
        match record.get(&attr.name) {
            None | Some(Value::Null) => return Err(ModelError::MissingInput(attr.name.clone())),
            Some(v) => {
                if !v.matches_type(attr.attribute_type) {
                    return Err(ModelError::TypeConstraintViolation(format!(
                        "value {} does not fit {} attribute '{}'",
                        v.render(),
                        attr.attribute_type,
                        attr.name
                    )));
                }
                row.insert(attr.name.clone(), v.clone());
            }
        }
    }
    Ok(row)
}

pub(crate) fn categorical<'a>(rec: &'a Record, attr: &str) -> &'a str {
    match rec.get(attr) {
        Some(Value::Nominal(s)) => s,
        other => panic!("attribute '{attr}' is not categorical after cleaning: {other:?}"),
    }
}

pub(crate) fn numeric(rec: &Record, attr: &str) -> f64 {
    match rec.get(attr) {
        Some(Value::Quantitative(x)) => *x,
        other => panic!("attribute '{attr}' is not numeric after cleaning: {other:?}"),
    }
}

/// Train `m` on `records`, returning a trained copy. Deterministic given the
/// model's hyperparameters and seed.
pub fn train_model(m: &RelationshipModel, records: &[Record]) -> Result<RelationshipModel, ModelError> {
    m.validate()?;
    if records.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let rows = clean_rows(m, records)?;
    if rows.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let trained = match m.kind {
        ModelKind::LinearRegression => {
            let output = m.output.as_ref().expect("validated");
            TrainedParameters::Regression { beta: regression::fit(&m.inputs, &output.name, &rows)? }
        }
        ModelKind::DecisionTreeClassification => {
            let output = m.output.as_ref().expect("validated");
            let max_depth = m.hyper_usize("max_depth", 16);
            TrainedParameters::DecisionTree {
                root: decision_tree::fit(&m.inputs, &output.name, &rows, max_depth),
            }
        }
        ModelKind::KnnClassification => {
            TrainedParameters::Knn(knn::fit(&m.inputs, &rows, m.hyper_usize("k", 3)))
        }
        ModelKind::NaiveBayesClassification => {
            let output = m.output.as_ref().expect("validated");
            let alpha = m.hyper.get("alpha").copied().unwrap_or(1.0);
            TrainedParameters::NaiveBayes(naive_bayes::fit(&m.inputs, &output.name, &rows, alpha))
        }
        ModelKind::KernelDensity => {
            let attr = &m.inputs[0].name;
            let samples: Vec<f64> = rows.iter().map(|r| numeric(r, attr)).collect();
            let bandwidth = match m.hyper.get("bandwidth") {
                Some(h) => *h,
                None => kde::silverman_bandwidth(&samples).ok_or_else(|| {
                    ModelError::DegenerateData(
                        "bandwidth cannot be derived from fewer than two distinct samples"
                            .to_string(),
                    )
                })?,
            };
            TrainedParameters::Kde { samples, bandwidth }
        }
        ModelKind::IsolationForest => {
            let matrix: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| m.inputs.iter().map(|a| numeric(r, &a.name)).collect())
                .collect();
            let trees = m.hyper_usize("trees", 100);
            let cap = m.hyper_usize("subsample", 256);
            TrainedParameters::IsolationForest(isolation_forest::fit(
                &m.inputs, &matrix, trees, cap, m.seed,
            )?)
        }
    };
    let mut out = m.clone();
    out.trained = Some(trained);
    Ok(out)
}

/// Predict for one record: classifiers return a class label, regression a
/// number, kernel density the density at the point, isolation forest the
/// anomaly score in (0, 1). Unseen decision-tree categories fall back to the
/// split node's majority label.
pub fn predict_record(m: &RelationshipModel, record: &Record) -> Result<Value, ModelError> {
    predict_record_with(m, record, false)
}

/// As [`predict_record`], but `strict` turns the decision tree's
/// unseen-category fallback into an error.
pub fn predict_record_with(
    m: &RelationshipModel,
    record: &Record,
    strict: bool,
) -> Result<Value, ModelError> {
    let trained = m
        .trained
        .as_ref()
        .ok_or_else(|| ModelError::UntrainedModel(m.name.clone()))?;
    let query = query_inputs(m, record)?;
    match (m.kind, trained) {
        (ModelKind::LinearRegression, TrainedParameters::Regression { beta }) => {
            let xs: Vec<f64> = m.inputs.iter().map(|a| numeric(&query, &a.name)).collect();
            Ok(Value::Quantitative(regression::predict(beta, &xs)))
        }
        (ModelKind::DecisionTreeClassification, TrainedParameters::DecisionTree { root }) => {
            Ok(Value::Nominal(decision_tree::predict(root, &query, strict)?))
        }
        (ModelKind::KnnClassification, TrainedParameters::Knn(state)) => {
            let output = m.output.as_ref().expect("validated");
            Ok(Value::Nominal(knn::predict(state, &m.inputs, &output.name, &query)))
        }
        (ModelKind::NaiveBayesClassification, TrainedParameters::NaiveBayes(table)) => {
            Ok(Value::Nominal(naive_bayes::predict(table, &query)))
        }
        (ModelKind::KernelDensity, TrainedParameters::Kde { samples, bandwidth }) => {
            let x = numeric(&query, &m.inputs[0].name);
            Ok(Value::Quantitative(kde::density(samples, *bandwidth, x)))
        }
        (ModelKind::IsolationForest, TrainedParameters::IsolationForest(state)) => {
            let point: BTreeMap<&str, f64> =
                m.inputs.iter().map(|a| (a.name.as_str(), numeric(&query, &a.name))).collect();
            Ok(Value::Quantitative(isolation_forest::score(state, &point)))
        }
        _ => Err(ModelError::TypeConstraintViolation(
            "trained parameters do not match the model kind".to_string(),
        )),
    }
}

/// Class posteriors for a naive Bayes model, sorted by class name. They sum
/// to 1 for every query.
pub fn posteriors(
    m: &RelationshipModel,
    record: &Record,
) -> Result<Vec<(String, f64)>, ModelError> {
    let trained = m
        .trained
        .as_ref()
        .ok_or_else(|| ModelError::UntrainedModel(m.name.clone()))?;
    let query = query_inputs(m, record)?;
    match trained {
        TrainedParameters::NaiveBayes(table) => Ok(naive_bayes::posteriors(table, &query)),
        _ => Err(ModelError::TypeConstraintViolation(format!(
            "posteriors are only defined for {}, not {}",
            ModelKind::NaiveBayesClassification,
            m.kind
        ))),
    }
}

/// Score a trained model against labeled records. Accuracy applies to the
/// classification kinds, rmse to regression; rows with a Null in any used
/// attribute are dropped first.
pub fn evaluate_accuracy(
    m: &RelationshipModel,
    records: &[Record],
    metric: Metric,
) -> Result<f64, ModelError> {
    let applies = match metric {
        Metric::Accuracy => m.kind.is_classification(),
        Metric::Rmse => m.kind == ModelKind::LinearRegression,
    };
    if !applies {
        return Err(ModelError::MetricKindMismatch { metric, kind: m.kind });
    }
    if m.trained.is_none() {
        return Err(ModelError::UntrainedModel(m.name.clone()));
    }
    let rows = clean_rows(m, records)?;
    if rows.is_empty() {
        return Err(ModelError::EmptyEvaluationSet);
    }
    let output = &m.output.as_ref().expect("classification and regression have outputs").name;
    match metric {
        Metric::Accuracy => {
            let mut hits = 0usize;
            for row in &rows {
                if predict_record(m, row)? == row[output] {
                    hits += 1;
                }
            }
            Ok(hits as f64 / rows.len() as f64)
        }
        Metric::Rmse => {
            let mut sq = 0.0;
            for row in &rows {
                let predicted = match predict_record(m, row)? {
                    Value::Quantitative(x) => x,
                    other => panic!("regression predicted {other:?}"),
                };
                let residual = predicted - numeric(row, output);
                sq += residual * residual;
            }
            Ok((sq / rows.len() as f64).sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nominal_record(pairs: &[(&str, &str)]) -> Record {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), Value::Nominal(v.to_string())))
            .collect()
    }

    fn tree_model() -> RelationshipModel {
        RelationshipModel::new(
            "predictSide",
            ModelKind::DecisionTreeClassification,
            vec![Attribute::nominal("io")],
            Some(Attribute::nominal("label")),
            BTreeMap::new(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn kind_constraints_are_enforced() {
        let bad = RelationshipModel::new(
            "r",
            ModelKind::LinearRegression,
            vec![Attribute::nominal("a")],
            Some(Attribute::quantitative("y")),
            BTreeMap::new(),
            0,
        );
        assert!(matches!(bad, Err(ModelError::TypeConstraintViolation(_))));

        let bad = RelationshipModel::new(
            "d",
            ModelKind::KernelDensity,
            vec![Attribute::quantitative("a"), Attribute::quantitative("b")],
            None,
            BTreeMap::new(),
            0,
        );
        assert!(bad.is_err());

        let bad = RelationshipModel::new(
            "d",
            ModelKind::KernelDensity,
            vec![Attribute::quantitative("a")],
            Some(Attribute::quantitative("y")),
            BTreeMap::new(),
            0,
        );
        assert!(bad.is_err(), "density models take no output");

        let bad = RelationshipModel::new(
            "t",
            ModelKind::DecisionTreeClassification,
            vec![Attribute::quantitative("x")],
            Some(Attribute::nominal("label")),
            BTreeMap::new(),
            0,
        );
        assert!(bad.is_err(), "tree inputs must be categorical");
    }

    #[test]
    fn hyperparameters_are_validated() {
        let mut hyper = BTreeMap::new();
        hyper.insert("k".to_string(), 0.5);
        let bad = RelationshipModel::new(
            "k",
            ModelKind::KnnClassification,
            vec![Attribute::nominal("a")],
            Some(Attribute::nominal("label")),
            hyper,
            0,
        );
        assert!(matches!(bad, Err(ModelError::InvalidHyperparameter(_))));

        let mut hyper = BTreeMap::new();
        hyper.insert("bandwidth".to_string(), 1.0);
        let bad = RelationshipModel::new(
            "t",
            ModelKind::DecisionTreeClassification,
            vec![Attribute::nominal("a")],
            Some(Attribute::nominal("label")),
            hyper,
            0,
        );
        assert!(matches!(bad, Err(ModelError::InvalidHyperparameter(_))));
    }

    #[test]
    fn training_rejects_empty_and_all_null_sets() {
        let m = tree_model();
        assert!(matches!(train_model(&m, &[]), Err(ModelError::EmptyTrainingSet)));
        let mut null_row = Record::new();
        null_row.insert("io".to_string(), Value::Null);
        null_row.insert("label".to_string(), Value::Nominal("x".to_string()));
        assert!(matches!(
            train_model(&m, &[null_row]),
            Err(ModelError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn training_does_not_mutate_the_original() {
        let m = tree_model();
        let rows = vec![
            nominal_record(&[("io", "I"), ("label", "indoorCrime")]),
            nominal_record(&[("io", "O"), ("label", "outdoorCrime")]),
        ];
        let trained = train_model(&m, &rows).unwrap();
        assert!(!m.is_trained());
        assert!(trained.is_trained());
    }

    #[test]
    fn predict_requires_training_and_inputs() {
        let m = tree_model();
        let row = nominal_record(&[("io", "I")]);
        assert!(matches!(
            predict_record(&m, &row),
            Err(ModelError::UntrainedModel(name)) if name == "predictSide"
        ));
        let rows = vec![
            nominal_record(&[("io", "I"), ("label", "a")]),
            nominal_record(&[("io", "O"), ("label", "b")]),
        ];
        let trained = train_model(&m, &rows).unwrap();
        assert!(matches!(
            predict_record(&trained, &Record::new()),
            Err(ModelError::MissingInput(attr)) if attr == "io"
        ));
    }

    #[test]
    fn metric_must_match_kind() {
        let m = tree_model();
        let rows = vec![
            nominal_record(&[("io", "I"), ("label", "a")]),
            nominal_record(&[("io", "O"), ("label", "b")]),
        ];
        let trained = train_model(&m, &rows).unwrap();
        assert!(matches!(
            evaluate_accuracy(&trained, &rows, Metric::Rmse),
            Err(ModelError::MetricKindMismatch { .. })
        ));
        assert_eq!(evaluate_accuracy(&trained, &rows, Metric::Accuracy).unwrap(), 1.0);
    }

    #[test]
    fn constant_label_data_scores_perfect_accuracy() {
        let rows: Vec<Record> = (0..5)
            .map(|i| {
                nominal_record(&[("io", if i % 2 == 0 { "I" } else { "O" }), ("label", "same")])
            })
            .collect();
        for kind in [
            ModelKind::DecisionTreeClassification,
            ModelKind::KnnClassification,
            ModelKind::NaiveBayesClassification,
        ] {
            let m = RelationshipModel::new(
                "c",
                kind,
                vec![Attribute::nominal("io")],
                Some(Attribute::nominal("label")),
                BTreeMap::new(),
                0,
            )
            .unwrap();
            let trained = train_model(&m, &rows).unwrap();
            assert_eq!(
                evaluate_accuracy(&trained, &rows, Metric::Accuracy).unwrap(),
                1.0,
                "{kind}"
            );
        }
    }

    #[test]
    fn evaluation_set_must_survive_null_dropping() {
        let m = tree_model();
        let rows = vec![
            nominal_record(&[("io", "I"), ("label", "a")]),
            nominal_record(&[("io", "O"), ("label", "b")]),
        ];
        let trained = train_model(&m, &rows).unwrap();
        let mut null_row = Record::new();
        null_row.insert("io".to_string(), Value::Null);
        null_row.insert("label".to_string(), Value::Nominal("a".to_string()));
        assert!(matches!(
            evaluate_accuracy(&trained, &[null_row], Metric::Accuracy),
            Err(ModelError::EmptyEvaluationSet)
        ));
    }
}
