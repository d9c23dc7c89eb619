//! Wire format: canonical JSON for every serializable object.
//!
//! Encoding is deterministic — object keys sort, floats print as shortest
//! round-trip decimals, output is compact UTF-8 with a trailing newline.
//! Decoding is strict: unknown keys and unknown kind strings are rejected, so
//! the encoder's output is the only accepted spelling and round trips are
//! byte-identical.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::dataset::{self, Attribute, AttributeType, Dataset, Record, Value, WILDCARD};
use crate::expr::{ArithOp, CompareOp, Expr, LogicOp};
use crate::insight::{
    AnalyticPattern, AnalyticRef, InsightNode, RelationshipPattern, SimpleTaskNode, Wildcardable,
};
use crate::knowledge::{
    AnalyticKnowledgeNode, Concept, DomainKnowledgeNode, LinkSet, NodeFamily, NodeId,
};
use crate::relationship::{
    ForestState, IsoNode, KnnState, ModelKind, NaiveBayesTable, NumericScale, RelationshipModel,
    TrainedParameters, TreeNode,
};
use crate::transform::{Aggregate, AggregateFn, DataTransformation, OrderKey, TransformVerb};
use crate::workspace::{DatasetRef, Workspace};

/// Local shape problem found while decoding one object, before any file
/// position is known. The workspace decoder wraps these with JSON-pointer
/// locations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("unknown {what} '{kind}'")]
    UnknownKind { what: &'static str, kind: String },
    #[error("{0}")]
    Malformed(String),
}

fn msg(m: impl Into<String>) -> ShapeError {
    ShapeError::Malformed(m.into())
}

/// Reject unknown keys and require the mandatory ones.
fn check_keys(
    obj: &Map<String, Json>,
    required: &[&str],
    optional: &[&str],
) -> Result<(), ShapeError> {
    for r in required {
        if !obj.contains_key(*r) {
            return Err(msg(format!("missing key '{r}'")));
        }
    }
    for k in obj.keys() {
        if !required.contains(&k.as_str()) && !optional.contains(&k.as_str()) {
            return Err(msg(format!("unexpected key '{k}'")));
        }
    }
    Ok(())
}

fn as_object<'a>(j: &'a Json, what: &str) -> Result<&'a Map<String, Json>, ShapeError> {
    j.as_object().ok_or_else(|| msg(format!("{what} must be a JSON object")))
}

fn req_str<'a>(obj: &'a Map<String, Json>, key: &str) -> Result<&'a str, ShapeError> {
    obj.get(key)
        .and_then(Json::as_str)
        .ok_or_else(|| msg(format!("'{key}' must be a string")))
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Nominal(s) => json!({ "nominal": s }),
        Value::Quantitative(x) => json!({ "quantitative": x }),
        Value::Temporal(ms) => json!({ "temporal": ms }),
        Value::Null => Json::Null,
    }
}

pub fn value_from_json(j: &Json) -> Result<Value, ShapeError> {
    if j.is_null() {
        return Ok(Value::Null);
    }
    let obj = as_object(j, "value")?;
    if obj.len() != 1 {
        return Err(msg("value must be null or a single-key object"));
    }
    let (k, inner) = obj.iter().next().expect("len checked");
    match k.as_str() {
        "nominal" => inner
            .as_str()
            .map(|s| Value::Nominal(s.to_string()))
            .ok_or_else(|| msg("nominal payload must be a string")),
        "quantitative" => inner
            .as_f64()
            .filter(|x| x.is_finite())
            .map(Value::Quantitative)
            .ok_or_else(|| msg("quantitative payload must be a finite number")),
        "temporal" => inner
            .as_i64()
            .map(Value::Temporal)
            .ok_or_else(|| msg("temporal payload must be integer milliseconds")),
        other => Err(ShapeError::UnknownKind { what: "value kind", kind: other.to_string() }),
    }
}

pub fn attribute_to_json(a: &Attribute) -> Json {
    json!({ "name": a.name, "type": a.attribute_type.as_str() })
}

pub fn attribute_from_json(j: &Json) -> Result<Attribute, ShapeError> {
    let obj = as_object(j, "attribute")?;
    check_keys(obj, &["name", "type"], &[])?;
    let name = req_str(obj, "name")?;
    if name.is_empty() {
        return Err(msg("attribute name must be non-empty"));
    }
    let ty = req_str(obj, "type")?;
    let ty = AttributeType::parse(ty).ok_or_else(|| ShapeError::UnknownKind {
        what: "attribute type",
        kind: ty.to_string(),
    })?;
    Ok(Attribute::new(name, ty))
}

pub fn expr_to_json(e: &Expr) -> Json {
    match e {
        Expr::Literal(v) => json!({ "literal": value_to_json(v) }),
        Expr::Column(name) => json!({ "column": name }),
        Expr::Rank => Json::String("rank".to_string()),
        Expr::Compare { op, lhs, rhs } => json!({
            "compare": { "op": op.as_str(), "lhs": expr_to_json(lhs), "rhs": expr_to_json(rhs) }
        }),
        Expr::Arith { op, lhs, rhs } => json!({
            "arith": { "op": op.as_str(), "lhs": expr_to_json(lhs), "rhs": expr_to_json(rhs) }
        }),
        Expr::Logic { op, args } => json!({
            "logic": { "op": op.as_str(), "args": args.iter().map(expr_to_json).collect::<Vec<_>>() }
        }),
    }
}

pub fn expr_from_json(j: &Json) -> Result<Expr, ShapeError> {
    if let Some(s) = j.as_str() {
        return if s == "rank" {
            Ok(Expr::Rank)
        } else {
            Err(ShapeError::UnknownKind { what: "expression", kind: s.to_string() })
        };
    }
    let obj = as_object(j, "expression")?;
    if obj.len() != 1 {
        return Err(msg("expression must be \"rank\" or a single-key object"));
    }
    let (k, inner) = obj.iter().next().expect("len checked");
    match k.as_str() {
        "literal" => Ok(Expr::Literal(value_from_json(inner)?)),
        "column" => {
            let name =
                inner.as_str().ok_or_else(|| msg("column payload must be a string"))?;
            if name.is_empty() {
                return Err(msg("column name must be non-empty"));
            }
            Ok(Expr::Column(name.to_string()))
        }
        "compare" => {
            let body = as_object(inner, "compare")?;
            check_keys(body, &["op", "lhs", "rhs"], &[])?;
            let op = req_str(body, "op")?;
            let op = CompareOp::parse(op).ok_or_else(|| ShapeError::UnknownKind {
                what: "compare op",
                kind: op.to_string(),
            })?;
            Ok(Expr::compare(op, expr_from_json(&body["lhs"])?, expr_from_json(&body["rhs"])?))
        }
        "arith" => {
            let body = as_object(inner, "arith")?;
            check_keys(body, &["op", "lhs", "rhs"], &[])?;
            let op = req_str(body, "op")?;
            let op = ArithOp::parse(op).ok_or_else(|| ShapeError::UnknownKind {
                what: "arith op",
                kind: op.to_string(),
            })?;
            Ok(Expr::arith(op, expr_from_json(&body["lhs"])?, expr_from_json(&body["rhs"])?))
        }
        "logic" => {
            let body = as_object(inner, "logic")?;
            check_keys(body, &["op", "args"], &[])?;
            let op = req_str(body, "op")?;
            let op = LogicOp::parse(op).ok_or_else(|| ShapeError::UnknownKind {
                what: "logic op",
                kind: op.to_string(),
            })?;
            let raw = body["args"].as_array().ok_or_else(|| msg("'args' must be an array"))?;
            match op {
                LogicOp::Not if raw.len() != 1 => {
                    return Err(msg("'not' takes exactly one operand"))
                }
                LogicOp::And | LogicOp::Or if raw.is_empty() => {
                    return Err(msg(format!("'{}' needs at least one operand", op.as_str())))
                }
                _ => {}
            }
            let args = raw.iter().map(expr_from_json).collect::<Result<Vec<_>, _>>()?;
            Ok(Expr::Logic { op, args })
        }
        other => Err(ShapeError::UnknownKind { what: "expression", kind: other.to_string() }),
    }
}

pub fn verb_to_json(v: &TransformVerb) -> Json {
    match v {
        TransformVerb::GroupBy(keys) => json!({ "op": "groupby", "args": keys }),
        TransformVerb::Rollup(aggs) => {
            let args: Vec<Json> = aggs
                .iter()
                .map(|a| {
                    let mut obj = Map::new();
                    obj.insert("out".to_string(), json!(a.out));
                    obj.insert("fn".to_string(), json!(a.agg.as_str()));
                    if let Some(attr) = &a.attr {
                        obj.insert("attr".to_string(), json!(attr));
                    }
                    Json::Object(obj)
                })
                .collect();
            json!({ "op": "rollup", "args": args })
        }
        TransformVerb::OrderBy(keys) => {
            let args: Vec<Json> = keys
                .iter()
                .map(|k| json!({ "attr": k.attribute, "desc": k.descending }))
                .collect();
            json!({ "op": "orderby", "args": args })
        }
        TransformVerb::Filter(expr) => json!({ "op": "filter", "args": [expr_to_json(expr)] }),
        TransformVerb::Derive { out, expr } => {
            json!({ "op": "derive", "args": [{ "out": out, "expr": expr_to_json(expr) }] })
        }
    }
}

pub fn verb_from_json(j: &Json) -> Result<TransformVerb, ShapeError> {
    let obj = as_object(j, "verb")?;
    check_keys(obj, &["op", "args"], &[])?;
    let op = req_str(obj, "op")?;
    let args = obj["args"].as_array().ok_or_else(|| msg("'args' must be an array"))?;
    match op {
        "groupby" => {
            let keys = args
                .iter()
                .map(|a| {
                    a.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| msg("groupby keys must be strings"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(TransformVerb::GroupBy(keys))
        }
        "rollup" => {
            let aggs = args
                .iter()
                .map(|a| {
                    let body = as_object(a, "aggregate")?;
                    check_keys(body, &["out", "fn"], &["attr"])?;
                    let out = req_str(body, "out")?.to_string();
                    let f = req_str(body, "fn")?;
                    let agg = AggregateFn::parse(f).ok_or_else(|| ShapeError::UnknownKind {
                        what: "aggregate fn",
                        kind: f.to_string(),
                    })?;
                    let attr = match body.get("attr") {
                        None => None,
                        Some(v) => Some(
                            v.as_str()
                                .map(str::to_string)
                                .ok_or_else(|| msg("'attr' must be a string"))?,
                        ),
                    };
                    Ok(Aggregate { out, agg, attr })
                })
                .collect::<Result<Vec<_>, ShapeError>>()?;
            Ok(TransformVerb::Rollup(aggs))
        }
        "orderby" => {
            let keys = args
                .iter()
                .map(|a| {
                    let body = as_object(a, "order key")?;
                    check_keys(body, &["attr"], &["desc"])?;
                    let attribute = req_str(body, "attr")?.to_string();
                    let descending = match body.get("desc") {
                        None => false,
                        Some(v) => {
                            v.as_bool().ok_or_else(|| msg("'desc' must be a boolean"))?
                        }
                    };
                    Ok(OrderKey { attribute, descending })
                })
                .collect::<Result<Vec<_>, ShapeError>>()?;
            Ok(TransformVerb::OrderBy(keys))
        }
        "filter" => {
            if args.len() != 1 {
                return Err(msg("filter takes exactly one expression"));
            }
            Ok(TransformVerb::Filter(expr_from_json(&args[0])?))
        }
        "derive" => {
            if args.len() != 1 {
                return Err(msg("derive takes exactly one {out, expr} object"));
            }
            let body = as_object(&args[0], "derive")?;
            check_keys(body, &["out", "expr"], &[])?;
            Ok(TransformVerb::Derive {
                out: req_str(body, "out")?.to_string(),
                expr: expr_from_json(&body["expr"])?,
            })
        }
        other => Err(ShapeError::UnknownKind { what: "verb op", kind: other.to_string() }),
    }
}

// ----- records and datasets --------------------------------------------

pub fn record_to_json(r: &Record) -> Json {
    Json::Object(r.iter().map(|(k, v)| (k.clone(), value_to_json(v))).collect())
}

pub fn record_from_json(j: &Json) -> Result<Record, ShapeError> {
    let obj = as_object(j, "record")?;
    obj.iter()
        .map(|(k, v)| Ok((k.clone(), value_from_json(v)?)))
        .collect()
}

pub fn dataset_to_json(d: &Dataset) -> Json {
    json!({
        "name": d.name,
        "records": d.records.iter().map(record_to_json).collect::<Vec<_>>(),
        "schema": d.schema.iter().map(attribute_to_json).collect::<Vec<_>>(),
    })
}

pub fn dataset_from_json(j: &Json) -> Result<Dataset, ShapeError> {
    let obj = as_object(j, "dataset")?;
    check_keys(obj, &["name", "records", "schema"], &[])?;
    let schema = obj["schema"]
        .as_array()
        .ok_or_else(|| msg("'schema' must be an array"))?
        .iter()
        .map(attribute_from_json)
        .collect::<Result<Vec<_>, _>>()?;
    let records = obj["records"]
        .as_array()
        .ok_or_else(|| msg("'records' must be an array"))?
        .iter()
        .map(record_from_json)
        .collect::<Result<Vec<_>, _>>()?;
    let d = Dataset { name: req_str(obj, "name")?.to_string(), schema, records };
    if let Some(v) = dataset::validate_dataset(&d).into_iter().next() {
        return Err(msg(format!("dataset does not fit its schema: {}", v.message)));
    }
    Ok(d)
}

// ----- trained model parameters ------------------------------------------

fn tree_to_json(t: &TreeNode) -> Json {
    match t {
        TreeNode::Leaf { label } => json!({ "leaf": { "label": label } }),
        TreeNode::Split { attribute, majority, children } => json!({
            "split": {
                "attribute": attribute,
                "children": children
                    .iter()
                    .map(|(category, node)| json!({ "category": category, "node": tree_to_json(node) }))
                    .collect::<Vec<_>>(),
                "majority": majority,
            }
        }),
    }
}

fn tree_from_json(j: &Json) -> Result<TreeNode, ShapeError> {
    let obj = as_object(j, "tree node")?;
    if obj.len() != 1 {
        return Err(msg("tree node must be a single-key object"));
    }
    let (k, inner) = obj.iter().next().expect("len checked");
    match k.as_str() {
        "leaf" => {
            let body = as_object(inner, "leaf")?;
            check_keys(body, &["label"], &[])?;
            Ok(TreeNode::Leaf { label: req_str(body, "label")?.to_string() })
        }
        "split" => {
            let body = as_object(inner, "split")?;
            check_keys(body, &["attribute", "children", "majority"], &[])?;
            let children = body["children"]
                .as_array()
                .ok_or_else(|| msg("'children' must be an array"))?
                .iter()
                .map(|c| {
                    let entry = as_object(c, "child")?;
                    check_keys(entry, &["category", "node"], &[])?;
                    Ok((req_str(entry, "category")?.to_string(), tree_from_json(&entry["node"])?))
                })
                .collect::<Result<Vec<_>, ShapeError>>()?;
            Ok(TreeNode::Split {
                attribute: req_str(body, "attribute")?.to_string(),
                majority: req_str(body, "majority")?.to_string(),
                children,
            })
        }
        other => Err(ShapeError::UnknownKind { what: "tree node", kind: other.to_string() }),
    }
}

fn iso_to_json(t: &IsoNode) -> Json {
    match t {
        IsoNode::Leaf { size } => json!({ "leaf": { "size": size } }),
        IsoNode::Split { attribute, value, left, right } => json!({
            "split": {
                "attribute": attribute,
                "left": iso_to_json(left),
                "right": iso_to_json(right),
                "value": value,
            }
        }),
    }
}

fn iso_from_json(j: &Json) -> Result<IsoNode, ShapeError> {
    let obj = as_object(j, "forest node")?;
    if obj.len() != 1 {
        return Err(msg("forest node must be a single-key object"));
    }
    let (k, inner) = obj.iter().next().expect("len checked");
    match k.as_str() {
        "leaf" => {
            let body = as_object(inner, "leaf")?;
            check_keys(body, &["size"], &[])?;
            let size = body["size"]
                .as_u64()
                .ok_or_else(|| msg("'size' must be a non-negative integer"))?;
            Ok(IsoNode::Leaf { size: size as usize })
        }
        "split" => {
            let body = as_object(inner, "split")?;
            check_keys(body, &["attribute", "left", "right", "value"], &[])?;
            let value = body["value"]
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| msg("'value' must be a finite number"))?;
            Ok(IsoNode::Split {
                attribute: req_str(body, "attribute")?.to_string(),
                value,
                left: Box::new(iso_from_json(&body["left"])?),
                right: Box::new(iso_from_json(&body["right"])?),
            })
        }
        other => Err(ShapeError::UnknownKind { what: "forest node", kind: other.to_string() }),
    }
}

fn f64_array(j: &Json, key: &str) -> Result<Vec<f64>, ShapeError> {
    j.as_array()
        .ok_or_else(|| msg(format!("'{key}' must be an array")))?
        .iter()
        .map(|x| {
            x.as_f64()
                .filter(|v| v.is_finite())
                .ok_or_else(|| msg(format!("'{key}' entries must be finite numbers")))
        })
        .collect()
}

fn count_map(j: &Json, key: &str) -> Result<BTreeMap<String, usize>, ShapeError> {
    j.as_object()
        .ok_or_else(|| msg(format!("'{key}' must be an object")))?
        .iter()
        .map(|(k, v)| {
            let n = v
                .as_u64()
                .ok_or_else(|| msg(format!("'{key}' entries must be non-negative integers")))?;
            Ok((k.clone(), n as usize))
        })
        .collect()
}

pub fn trained_to_json(t: &TrainedParameters) -> Json {
    match t {
        TrainedParameters::Regression { beta } => json!({ "beta": beta }),
        TrainedParameters::DecisionTree { root } => json!({ "root": tree_to_json(root) }),
        TrainedParameters::Knn(state) => json!({
            "examples": state.examples.iter().map(record_to_json).collect::<Vec<_>>(),
            "k": state.k,
            "scales": state
                .scales
                .iter()
                .map(|s| json!({ "attribute": s.attribute, "mean": s.mean, "std": s.std }))
                .collect::<Vec<_>>(),
        }),
        TrainedParameters::NaiveBayes(table) => json!({
            "alpha": table.alpha,
            "categories": table.categories,
            "classCounts": table.class_counts,
            "counts": table.counts,
        }),
        TrainedParameters::Kde { samples, bandwidth } => {
            json!({ "bandwidth": bandwidth, "samples": samples })
        }
        TrainedParameters::IsolationForest(forest) => json!({
            "seed": forest.seed,
            "subsample": forest.subsample,
            "treeCount": forest.tree_count,
            "trees": forest.trees.iter().map(iso_to_json).collect::<Vec<_>>(),
        }),
    }
}

pub fn trained_from_json(kind: ModelKind, j: &Json) -> Result<TrainedParameters, ShapeError> {
    let obj = as_object(j, "trained parameters")?;
    match kind {
        ModelKind::LinearRegression => {
            check_keys(obj, &["beta"], &[])?;
            Ok(TrainedParameters::Regression { beta: f64_array(&obj["beta"], "beta")? })
        }
        ModelKind::DecisionTreeClassification => {
            check_keys(obj, &["root"], &[])?;
            Ok(TrainedParameters::DecisionTree { root: tree_from_json(&obj["root"])? })
        }
        ModelKind::KnnClassification => {
            check_keys(obj, &["examples", "k", "scales"], &[])?;
            let k = obj["k"].as_u64().ok_or_else(|| msg("'k' must be a positive integer"))?;
            let scales = obj["scales"]
                .as_array()
                .ok_or_else(|| msg("'scales' must be an array"))?
                .iter()
                .map(|s| {
                    let body = as_object(s, "scale")?;
                    check_keys(body, &["attribute", "mean", "std"], &[])?;
                    let num = |key: &str| {
                        body[key]
                            .as_f64()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| msg(format!("'{key}' must be a finite number")))
                    };
                    Ok(NumericScale {
                        attribute: req_str(body, "attribute")?.to_string(),
                        mean: num("mean")?,
                        std: num("std")?,
                    })
                })
                .collect::<Result<Vec<_>, ShapeError>>()?;
            let examples = obj["examples"]
                .as_array()
                .ok_or_else(|| msg("'examples' must be an array"))?
                .iter()
                .map(record_from_json)
                .collect::<Result<Vec<_>, _>>()?;
            Ok(TrainedParameters::Knn(KnnState { k: k as usize, scales, examples }))
        }
        ModelKind::NaiveBayesClassification => {
            check_keys(obj, &["alpha", "categories", "classCounts", "counts"], &[])?;
            let alpha = obj["alpha"]
                .as_f64()
                .filter(|x| x.is_finite() && *x > 0.0)
                .ok_or_else(|| msg("'alpha' must be a positive number"))?;
            let categories = obj["categories"]
                .as_object()
                .ok_or_else(|| msg("'categories' must be an object"))?
                .iter()
                .map(|(attr, cats)| {
                    let set = cats
                        .as_array()
                        .ok_or_else(|| msg("'categories' entries must be arrays"))?
                        .iter()
                        .map(|c| {
                            c.as_str()
                                .map(str::to_string)
                                .ok_or_else(|| msg("categories must be strings"))
                        })
                        .collect::<Result<BTreeSet<_>, _>>()?;
                    Ok((attr.clone(), set))
                })
                .collect::<Result<BTreeMap<_, _>, ShapeError>>()?;
            let counts = obj["counts"]
                .as_object()
                .ok_or_else(|| msg("'counts' must be an object"))?
                .iter()
                .map(|(attr, by_class)| {
                    let by_class = by_class
                        .as_object()
                        .ok_or_else(|| msg("'counts' entries must be objects"))?
                        .iter()
                        .map(|(class, cats)| Ok((class.clone(), count_map(cats, "counts")?)))
                        .collect::<Result<BTreeMap<_, _>, ShapeError>>()?;
                    Ok((attr.clone(), by_class))
                })
                .collect::<Result<BTreeMap<_, _>, ShapeError>>()?;
            Ok(TrainedParameters::NaiveBayes(NaiveBayesTable {
                alpha,
                class_counts: count_map(&obj["classCounts"], "classCounts")?,
                categories,
                counts,
            }))
        }
        ModelKind::KernelDensity => {
            check_keys(obj, &["bandwidth", "samples"], &[])?;
            let bandwidth = obj["bandwidth"]
                .as_f64()
                .filter(|x| x.is_finite() && *x > 0.0)
                .ok_or_else(|| msg("'bandwidth' must be a positive number"))?;
            Ok(TrainedParameters::Kde {
                samples: f64_array(&obj["samples"], "samples")?,
                bandwidth,
            })
        }
        ModelKind::IsolationForest => {
            check_keys(obj, &["seed", "subsample", "treeCount", "trees"], &[])?;
            let int = |key: &str| {
                obj[key]
                    .as_u64()
                    .ok_or_else(|| msg(format!("'{key}' must be a non-negative integer")))
            };
            let trees = obj["trees"]
                .as_array()
                .ok_or_else(|| msg("'trees' must be an array"))?
                .iter()
                .map(iso_from_json)
                .collect::<Result<Vec<_>, _>>()?;
            Ok(TrainedParameters::IsolationForest(ForestState {
                trees,
                subsample: int("subsample")? as usize,
                tree_count: int("treeCount")? as usize,
                seed: int("seed")?,
            }))
        }
    }
}

// ----- models --------------------------------------------------------------

pub fn model_to_json(m: &RelationshipModel) -> Json {
    let mut obj = Map::new();
    obj.insert("hyper".to_string(), json!(m.hyper));
    obj.insert(
        "inputs".to_string(),
        Json::Array(m.inputs.iter().map(attribute_to_json).collect()),
    );
    obj.insert("kind".to_string(), json!(m.kind.as_str()));
    obj.insert("name".to_string(), json!(m.name));
    if let Some(output) = &m.output {
        obj.insert("output".to_string(), attribute_to_json(output));
    }
    obj.insert("seed".to_string(), json!(m.seed));
    if let Some(trained) = &m.trained {
        obj.insert("trained".to_string(), trained_to_json(trained));
    }
    Json::Object(obj)
}

pub fn model_from_json(j: &Json) -> Result<RelationshipModel, ShapeError> {
    let obj = as_object(j, "model")?;
    check_keys(obj, &["hyper", "inputs", "kind", "name", "seed"], &["output", "trained"])?;
    let kind = req_str(obj, "kind")?;
    let kind = ModelKind::parse(kind).ok_or_else(|| ShapeError::UnknownKind {
        what: "model kind",
        kind: kind.to_string(),
    })?;
    let inputs = obj["inputs"]
        .as_array()
        .ok_or_else(|| msg("'inputs' must be an array"))?
        .iter()
        .map(attribute_from_json)
        .collect::<Result<Vec<_>, _>>()?;
    let output = obj.get("output").map(attribute_from_json).transpose()?;
    let hyper = obj["hyper"]
        .as_object()
        .ok_or_else(|| msg("'hyper' must be an object"))?
        .iter()
        .map(|(k, v)| {
            let x = v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| msg("hyperparameters must be finite numbers"))?;
            Ok((k.clone(), x))
        })
        .collect::<Result<BTreeMap<_, _>, ShapeError>>()?;
    let seed = obj["seed"].as_u64().ok_or_else(|| msg("'seed' must be a non-negative integer"))?;
    let mut m = RelationshipModel::new(req_str(obj, "name")?, kind, inputs, output, hyper, seed)
        .map_err(|e| msg(e.to_string()))?;
    m.trained = obj.get("trained").map(|t| trained_from_json(kind, t)).transpose()?;
    Ok(m)
}

// ----- transformations -------------------------------------------------------

pub fn transformation_to_json(t: &DataTransformation) -> Json {
    json!({
        "name": t.name,
        "sources": t.sources,
        "transforms": t.transforms.iter().map(verb_to_json).collect::<Vec<_>>(),
    })
}

pub fn transformation_from_json(j: &Json) -> Result<DataTransformation, ShapeError> {
    let obj = as_object(j, "transformation")?;
    check_keys(obj, &["name", "sources", "transforms"], &[])?;
    let sources = obj["sources"]
        .as_array()
        .ok_or_else(|| msg("'sources' must be an array"))?
        .iter()
        .map(|s| s.as_str().map(str::to_string).ok_or_else(|| msg("sources must be strings")))
        .collect::<Result<Vec<_>, _>>()?;
    let transforms = obj["transforms"]
        .as_array()
        .ok_or_else(|| msg("'transforms' must be an array"))?
        .iter()
        .map(verb_from_json)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DataTransformation { name: req_str(obj, "name")?.to_string(), sources, transforms })
}

// ----- links -----------------------------------------------------------------

fn edges_to_json(edges: &BTreeMap<NodeId, Option<String>>) -> Json {
    Json::Array(
        edges
            .iter()
            .map(|(id, label)| {
                let mut obj = Map::new();
                obj.insert("family".to_string(), json!(id.family.as_str()));
                if let Some(label) = label {
                    obj.insert("label".to_string(), json!(label));
                }
                obj.insert("name".to_string(), json!(id.name));
                Json::Object(obj)
            })
            .collect(),
    )
}

fn edges_from_json(j: &Json, key: &str) -> Result<BTreeMap<NodeId, Option<String>>, ShapeError> {
    let mut out = BTreeMap::new();
    for entry in j.as_array().ok_or_else(|| msg(format!("'{key}' must be an array")))? {
        let obj = as_object(entry, "link")?;
        check_keys(obj, &["family", "name"], &["label"])?;
        let family = req_str(obj, "family")?;
        let family = NodeFamily::parse(family).ok_or_else(|| ShapeError::UnknownKind {
            what: "node family",
            kind: family.to_string(),
        })?;
        let id = NodeId::new(family, req_str(obj, "name")?);
        let label = match obj.get("label") {
            None => None,
            Some(l) => {
                Some(l.as_str().map(str::to_string).ok_or_else(|| msg("'label' must be a string"))?)
            }
        };
        if out.insert(id, label).is_some() {
            return Err(msg(format!("duplicate link entry under '{key}'")));
        }
    }
    Ok(out)
}

fn push_links(obj: &mut Map<String, Json>, links: &LinkSet) {
    if links.is_empty() {
        return;
    }
    let mut body = Map::new();
    for (key, edges) in
        [("related", &links.related), ("sources", &links.sources), ("targets", &links.targets)]
    {
        if !edges.is_empty() {
            body.insert(key.to_string(), edges_to_json(edges));
        }
    }
    obj.insert("links".to_string(), Json::Object(body));
}

fn links_from_json(obj: &Map<String, Json>) -> Result<LinkSet, ShapeError> {
    let Some(j) = obj.get("links") else {
        return Ok(LinkSet::default());
    };
    let body = as_object(j, "links")?;
    check_keys(body, &[], &["related", "sources", "targets"])?;
    let mut links = LinkSet::default();
    if let Some(e) = body.get("related") {
        links.related = edges_from_json(e, "related")?;
    }
    if let Some(e) = body.get("sources") {
        links.sources = edges_from_json(e, "sources")?;
    }
    if let Some(e) = body.get("targets") {
        links.targets = edges_from_json(e, "targets")?;
    }
    Ok(links)
}

// ----- knowledge nodes ---------------------------------------------------------

fn name_from(obj: &Map<String, Json>) -> Result<String, ShapeError> {
    let name = req_str(obj, "name")?;
    if name.is_empty() || name == WILDCARD {
        return Err(msg(format!("'{name}' is not a legal object name")));
    }
    Ok(name.to_string())
}

pub fn concept_to_json(c: &Concept) -> Json {
    let mut obj = Map::new();
    obj.insert("name".to_string(), json!(c.name));
    if !c.parents.is_empty() {
        obj.insert("parents".to_string(), json!(c.parents));
    }
    push_links(&mut obj, &c.links);
    Json::Object(obj)
}

pub fn concept_from_json(j: &Json) -> Result<Concept, ShapeError> {
    let obj = as_object(j, "concept")?;
    check_keys(obj, &["name"], &["parents", "links"])?;
    let parents = match obj.get("parents") {
        None => Vec::new(),
        Some(p) => p
            .as_array()
            .ok_or_else(|| msg("'parents' must be an array"))?
            .iter()
            .map(|s| s.as_str().map(str::to_string).ok_or_else(|| msg("parents must be strings")))
            .collect::<Result<Vec<_>, _>>()?,
    };
    Ok(Concept { name: name_from(obj)?, parents, links: links_from_json(obj)? })
}

pub fn domain_node_to_json(n: &DomainKnowledgeNode) -> Json {
    let mut obj = Map::new();
    obj.insert("coreConcept".to_string(), json!(n.core_concept));
    push_links(&mut obj, &n.links);
    if !n.metadata_attributes.is_empty() {
        obj.insert(
            "metadataAttributes".to_string(),
            Json::Array(n.metadata_attributes.iter().map(attribute_to_json).collect()),
        );
    }
    if !n.metadata_values.is_empty() {
        obj.insert("metadataValues".to_string(), record_to_json(&n.metadata_values));
    }
    obj.insert("name".to_string(), json!(n.name));
    if !n.relevant_concepts.is_empty() {
        obj.insert("relevantConcepts".to_string(), json!(n.relevant_concepts));
    }
    Json::Object(obj)
}

pub fn domain_node_from_json(j: &Json) -> Result<DomainKnowledgeNode, ShapeError> {
    let obj = as_object(j, "domain node")?;
    check_keys(
        obj,
        &["coreConcept", "name"],
        &["links", "metadataAttributes", "metadataValues", "relevantConcepts"],
    )?;
    let metadata_attributes = match obj.get("metadataAttributes") {
        None => Vec::new(),
        Some(a) => a
            .as_array()
            .ok_or_else(|| msg("'metadataAttributes' must be an array"))?
            .iter()
            .map(attribute_from_json)
            .collect::<Result<Vec<_>, _>>()?,
    };
    let metadata_values = match obj.get("metadataValues") {
        None => Record::new(),
        Some(v) => record_from_json(v)?,
    };
    let relevant_concepts = match obj.get("relevantConcepts") {
        None => Vec::new(),
        Some(r) => r
            .as_array()
            .ok_or_else(|| msg("'relevantConcepts' must be an array"))?
            .iter()
            .map(|s| s.as_str().map(str::to_string).ok_or_else(|| msg("concepts must be strings")))
            .collect::<Result<Vec<_>, _>>()?,
    };
    crate::knowledge::validate_metadata(&metadata_attributes, &metadata_values)
        .map_err(|e| msg(e.to_string()))?;
    Ok(DomainKnowledgeNode {
        name: name_from(obj)?,
        core_concept: req_str(obj, "coreConcept")?.to_string(),
        relevant_concepts,
        metadata_attributes,
        metadata_values,
        links: links_from_json(obj)?,
    })
}

pub fn analytic_node_to_json(n: &AnalyticKnowledgeNode) -> Json {
    let mut obj = Map::new();
    if let Some(d) = &n.description {
        obj.insert("description".to_string(), json!(d));
    }
    if n.embed_results {
        obj.insert("embedResults".to_string(), json!(true));
    }
    push_links(&mut obj, &n.links);
    obj.insert("name".to_string(), json!(n.name));
    if n.recompute {
        obj.insert("recompute".to_string(), json!(true));
    }
    if let Some(r) = &n.relationship {
        obj.insert("relationship".to_string(), json!(r));
    }
    if n.embed_results {
        if let Some(results) = &n.results {
            obj.insert("results".to_string(), dataset_to_json(results));
        }
    }
    obj.insert("timestamp".to_string(), json!(n.timestamp));
    if let Some(t) = &n.transformation {
        obj.insert("transformation".to_string(), json!(t));
    }
    Json::Object(obj)
}

pub fn analytic_node_from_json(j: &Json) -> Result<AnalyticKnowledgeNode, ShapeError> {
    let obj = as_object(j, "analytic node")?;
    check_keys(
        obj,
        &["name", "timestamp"],
        &["description", "embedResults", "links", "recompute", "relationship", "results", "transformation"],
    )?;
    let timestamp = obj["timestamp"]
        .as_i64()
        .ok_or_else(|| msg("'timestamp' must be integer epoch milliseconds"))?;
    let flag = |key: &str| match obj.get(key) {
        None => Ok(false),
        Some(v) => v.as_bool().ok_or_else(|| msg(format!("'{key}' must be a boolean"))),
    };
    let opt_str = |key: &str| match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_str()
            .map(|s| Some(s.to_string()))
            .ok_or_else(|| msg(format!("'{key}' must be a string"))),
    };
    let embed_results = flag("embedResults")?;
    let results = obj.get("results").map(dataset_from_json).transpose()?;
    if results.is_some() && !embed_results {
        return Err(msg("'results' may only appear alongside 'embedResults'"));
    }
    let transformation = opt_str("transformation")?;
    let relationship = opt_str("relationship")?;
    if transformation.is_none() && relationship.is_none() {
        return Err(msg("analytic node needs a transformation or a relationship"));
    }
    Ok(AnalyticKnowledgeNode {
        name: name_from(obj)?,
        timestamp,
        transformation,
        relationship,
        results,
        recompute: flag("recompute")?,
        embed_results,
        description: opt_str("description")?,
        links: links_from_json(obj)?,
    })
}

// ----- insights and tasks --------------------------------------------------------

fn wild_string_to_json(w: &Wildcardable<String>) -> Json {
    match w {
        Wildcardable::Wildcard => json!(WILDCARD),
        Wildcardable::Concrete(s) => json!(s),
    }
}

fn wild_string_from_json(j: &Json, what: &str) -> Result<Wildcardable<String>, ShapeError> {
    let s = j.as_str().ok_or_else(|| msg(format!("{what} must be a string")))?;
    if s == WILDCARD {
        Ok(Wildcardable::Wildcard)
    } else if s.is_empty() {
        Err(msg(format!("{what} must be non-empty")))
    } else {
        Ok(Wildcardable::Concrete(s.to_string()))
    }
}

fn name_list_to_json(list: &Wildcardable<Vec<Wildcardable<String>>>) -> Json {
    match list {
        Wildcardable::Wildcard => json!(WILDCARD),
        Wildcardable::Concrete(elems) => {
            Json::Array(elems.iter().map(wild_string_to_json).collect())
        }
    }
}

fn name_list_from_json(
    j: &Json,
    what: &str,
) -> Result<Wildcardable<Vec<Wildcardable<String>>>, ShapeError> {
    if let Some(s) = j.as_str() {
        return if s == WILDCARD {
            Ok(Wildcardable::Wildcard)
        } else {
            Err(msg(format!("'{what}' must be \"{WILDCARD}\" or an array")))
        };
    }
    let elems = j
        .as_array()
        .ok_or_else(|| msg(format!("'{what}' must be \"{WILDCARD}\" or an array")))?
        .iter()
        .map(|e| wild_string_from_json(e, "list element"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Wildcardable::Concrete(elems))
}

fn relationship_pattern_to_json(rp: &RelationshipPattern) -> Json {
    let mut obj = Map::new();
    if let Some(h) = &rp.hyper {
        let body: Map<String, Json> = h
            .iter()
            .map(|(k, v)| {
                let val = match v {
                    Wildcardable::Wildcard => json!(WILDCARD),
                    Wildcardable::Concrete(x) => json!(x),
                };
                (k.clone(), val)
            })
            .collect();
        obj.insert("hyper".to_string(), Json::Object(body));
    }
    if let Some(inputs) = &rp.inputs {
        obj.insert("inputs".to_string(), name_list_to_json(inputs));
    }
    if let Some(kind) = &rp.kind {
        let val = match kind {
            Wildcardable::Wildcard => json!(WILDCARD),
            Wildcardable::Concrete(k) => json!(k.as_str()),
        };
        obj.insert("kind".to_string(), val);
    }
    if let Some(name) = &rp.name {
        obj.insert("name".to_string(), wild_string_to_json(name));
    }
    if let Some(output) = &rp.output {
        obj.insert("output".to_string(), wild_string_to_json(output));
    }
    Json::Object(obj)
}

fn relationship_pattern_from_json(j: &Json) -> Result<RelationshipPattern, ShapeError> {
    let obj = as_object(j, "relationship pattern")?;
    check_keys(obj, &[], &["hyper", "inputs", "kind", "name", "output"])?;
    let hyper = match obj.get("hyper") {
        None => None,
        Some(h) => {
            let body = as_object(h, "hyper")?;
            let map = body
                .iter()
                .map(|(k, v)| {
                    let val = if v.as_str() == Some(WILDCARD) {
                        Wildcardable::Wildcard
                    } else {
                        let x = v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| {
                            msg(format!("hyperparameter '{k}' must be \"{WILDCARD}\" or a finite number"))
                        })?;
                        Wildcardable::Concrete(x)
                    };
                    Ok((k.clone(), val))
                })
                .collect::<Result<BTreeMap<_, _>, ShapeError>>()?;
            Some(map)
        }
    };
    let kind = match obj.get("kind") {
        None => None,
        Some(k) => {
            let s = k.as_str().ok_or_else(|| msg("'kind' must be a string"))?;
            if s == WILDCARD {
                Some(Wildcardable::Wildcard)
            } else {
                let parsed = ModelKind::parse(s).ok_or_else(|| ShapeError::UnknownKind {
                    what: "model kind",
                    kind: s.to_string(),
                })?;
                Some(Wildcardable::Concrete(parsed))
            }
        }
    };
    Ok(RelationshipPattern {
        name: obj.get("name").map(|n| wild_string_from_json(n, "'name'")).transpose()?,
        kind,
        inputs: obj.get("inputs").map(|i| name_list_from_json(i, "inputs")).transpose()?,
        output: obj.get("output").map(|o| wild_string_from_json(o, "'output'")).transpose()?,
        hyper,
    })
}

fn analytic_pattern_to_json(p: &AnalyticPattern) -> Json {
    let mut obj = Map::new();
    if let Some(r) = &p.relationship {
        let val = match r {
            Wildcardable::Wildcard => json!(WILDCARD),
            Wildcardable::Concrete(rp) => relationship_pattern_to_json(rp),
        };
        obj.insert("relationship".to_string(), val);
    }
    if let Some(t) = &p.transformation {
        obj.insert("transformation".to_string(), wild_string_to_json(t));
    }
    Json::Object(obj)
}

fn analytic_pattern_from_json(j: &Json) -> Result<AnalyticPattern, ShapeError> {
    let obj = as_object(j, "evidence pattern")?;
    check_keys(obj, &[], &["relationship", "transformation"])?;
    let relationship = match obj.get("relationship") {
        None => None,
        Some(r) => {
            if r.as_str() == Some(WILDCARD) {
                Some(Wildcardable::Wildcard)
            } else {
                Some(Wildcardable::Concrete(relationship_pattern_from_json(r)?))
            }
        }
    };
    Ok(AnalyticPattern {
        transformation: obj
            .get("transformation")
            .map(|t| wild_string_from_json(t, "'transformation'"))
            .transpose()?,
        relationship,
    })
}

fn analytic_list_to_json(list: &Wildcardable<Vec<Wildcardable<AnalyticRef>>>) -> Json {
    match list {
        Wildcardable::Wildcard => json!(WILDCARD),
        Wildcardable::Concrete(elems) => Json::Array(
            elems
                .iter()
                .map(|e| match e {
                    Wildcardable::Wildcard => json!(WILDCARD),
                    Wildcardable::Concrete(AnalyticRef::Node(n)) => json!(n),
                    Wildcardable::Concrete(AnalyticRef::Spec(p)) => analytic_pattern_to_json(p),
                })
                .collect(),
        ),
    }
}

fn analytic_list_from_json(
    j: &Json,
) -> Result<Wildcardable<Vec<Wildcardable<AnalyticRef>>>, ShapeError> {
    if let Some(s) = j.as_str() {
        return if s == WILDCARD {
            Ok(Wildcardable::Wildcard)
        } else {
            Err(msg(format!("'analyticKnowledge' must be \"{WILDCARD}\" or an array")))
        };
    }
    let elems = j
        .as_array()
        .ok_or_else(|| msg(format!("'analyticKnowledge' must be \"{WILDCARD}\" or an array")))?
        .iter()
        .map(|e| {
            if let Some(s) = e.as_str() {
                return if s == WILDCARD {
                    Ok(Wildcardable::Wildcard)
                } else if s.is_empty() {
                    Err(msg("evidence reference must be non-empty"))
                } else {
                    Ok(Wildcardable::Concrete(AnalyticRef::Node(s.to_string())))
                };
            }
            Ok(Wildcardable::Concrete(AnalyticRef::Spec(analytic_pattern_from_json(e)?)))
        })
        .collect::<Result<Vec<_>, ShapeError>>()?;
    Ok(Wildcardable::Concrete(elems))
}

pub fn insight_to_json(n: &InsightNode) -> Json {
    let mut obj = Map::new();
    obj.insert("analyticKnowledge".to_string(), analytic_list_to_json(&n.analytic_knowledge));
    if let Some(d) = &n.description {
        obj.insert("description".to_string(), json!(d));
    }
    obj.insert("domainKnowledge".to_string(), name_list_to_json(&n.domain_knowledge));
    push_links(&mut obj, &n.links);
    obj.insert("name".to_string(), json!(n.name));
    Json::Object(obj)
}

pub fn insight_from_json(j: &Json) -> Result<InsightNode, ShapeError> {
    let obj = as_object(j, "insight")?;
    check_keys(
        obj,
        &["analyticKnowledge", "domainKnowledge", "name"],
        &["description", "links"],
    )?;
    let description = match obj.get("description") {
        None => None,
        Some(d) => {
            Some(d.as_str().map(str::to_string).ok_or_else(|| msg("'description' must be a string"))?)
        }
    };
    Ok(InsightNode {
        name: name_from(obj)?,
        domain_knowledge: name_list_from_json(&obj["domainKnowledge"], "domainKnowledge")?,
        analytic_knowledge: analytic_list_from_json(&obj["analyticKnowledge"])?,
        description,
        links: links_from_json(obj)?,
    })
}

pub fn task_to_json(t: &SimpleTaskNode) -> Json {
    let mut obj = Map::new();
    if !t.insights.is_empty() {
        obj.insert("insights".to_string(), json!(t.insights));
    }
    push_links(&mut obj, &t.links);
    obj.insert("name".to_string(), json!(t.name));
    obj.insert("objective".to_string(), json!(t.objective));
    Json::Object(obj)
}

pub fn task_from_json(j: &Json) -> Result<SimpleTaskNode, ShapeError> {
    let obj = as_object(j, "task")?;
    check_keys(obj, &["name", "objective"], &["insights", "links"])?;
    let insights = match obj.get("insights") {
        None => Vec::new(),
        Some(i) => i
            .as_array()
            .ok_or_else(|| msg("'insights' must be an array"))?
            .iter()
            .map(|s| s.as_str().map(str::to_string).ok_or_else(|| msg("insights must be strings")))
            .collect::<Result<Vec<_>, _>>()?,
    };
    Ok(SimpleTaskNode {
        name: name_from(obj)?,
        objective: req_str(obj, "objective")?.to_string(),
        insights,
        links: links_from_json(obj)?,
    })
}

// ----- whole workspaces ----------------------------------------------------------

/// Problem found while encoding or decoding a workspace file. Pointers are
/// RFC 6901 JSON pointers into the document.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("malformed workspace at '{pointer}': {message}")]
    Format { pointer: String, message: String },
    #[error("unknown {what} '{kind}' at '{pointer}'")]
    UnknownKind { pointer: String, what: &'static str, kind: String },
    #[error("unresolved reference to {reference} at '{pointer}'")]
    BrokenReference { pointer: String, reference: String },
}

fn escape_pointer(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn located(pointer: String, e: ShapeError) -> CodecError {
    match e {
        ShapeError::UnknownKind { what, kind } => CodecError::UnknownKind { pointer, what, kind },
        ShapeError::Malformed(message) => CodecError::Format { pointer, message },
    }
}

/// First dangling reference in registry order, if any. Both directions of
/// the codec refuse to pass one through.
fn find_broken_reference(w: &Workspace) -> Option<CodecError> {
    let broken = |registry: &str, name: &str, reference: String| {
        Some(CodecError::BrokenReference {
            pointer: format!("/{registry}/{}", escape_pointer(name)),
            reference,
        })
    };
    for (name, n) in &w.analytic_nodes {
        if let Some(t) = &n.transformation {
            if !w.transformations.contains_key(t) {
                return broken("analyticNodes", name, format!("transformation '{t}'"));
            }
        }
        if let Some(r) = &n.relationship {
            if !w.models.contains_key(r) {
                return broken("analyticNodes", name, format!("model '{r}'"));
            }
        }
    }
    for (name, c) in &w.concepts {
        for p in &c.parents {
            if !w.concepts.contains_key(p) {
                return broken("concepts", name, format!("concept '{p}'"));
            }
        }
    }
    for (name, n) in &w.domain_nodes {
        for c in std::iter::once(&n.core_concept).chain(n.relevant_concepts.iter()) {
            if !w.concepts.contains_key(c) {
                return broken("domainNodes", name, format!("concept '{c}'"));
            }
        }
    }
    for (name, n) in &w.insight_nodes {
        if let Wildcardable::Concrete(elems) = &n.domain_knowledge {
            for d in elems.iter().filter_map(Wildcardable::concrete) {
                if !w.domain_nodes.contains_key(d) {
                    return broken("insightNodes", name, format!("domain node '{d}'"));
                }
            }
        }
        if let Wildcardable::Concrete(elems) = &n.analytic_knowledge {
            for e in elems.iter().filter_map(Wildcardable::concrete) {
                match e {
                    AnalyticRef::Node(a) => {
                        if !w.analytic_nodes.contains_key(a) {
                            return broken("insightNodes", name, format!("analytic node '{a}'"));
                        }
                    }
                    AnalyticRef::Spec(p) => {
                        if let Some(Wildcardable::Concrete(t)) = &p.transformation {
                            if !w.transformations.contains_key(t) {
                                return broken("insightNodes", name, format!("transformation '{t}'"));
                            }
                        }
                        if let Some(Wildcardable::Concrete(rp)) = &p.relationship {
                            if let Some(Wildcardable::Concrete(m)) = &rp.name {
                                if !w.models.contains_key(m) {
                                    return broken("insightNodes", name, format!("model '{m}'"));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    for (name, t) in &w.task_nodes {
        for i in std::iter::once(&t.objective).chain(t.insights.iter()) {
            if !w.insight_nodes.contains_key(i) {
                return broken("taskNodes", name, format!("insight '{i}'"));
            }
        }
    }
    for (name, t) in &w.transformations {
        for s in &t.sources {
            if !w.dataset_refs.contains_key(s) {
                return broken("transformations", name, format!("dataset '{s}'"));
            }
        }
    }
    let registered: BTreeMap<NodeId, ()> =
        w.all_linked_nodes().map(|(id, _)| (id, ())).collect();
    for (id, links) in w.all_linked_nodes() {
        for other in links
            .sources
            .keys()
            .chain(links.targets.keys())
            .chain(links.related.keys())
        {
            if !registered.contains_key(other) {
                let registry = match id.family {
                    NodeFamily::Concept => "concepts",
                    NodeFamily::Domain => "domainNodes",
                    NodeFamily::Analytic => "analyticNodes",
                    NodeFamily::Insight => "insightNodes",
                    NodeFamily::Task => "taskNodes",
                };
                return Some(CodecError::BrokenReference {
                    pointer: format!("/{registry}/{}/links", escape_pointer(&id.name)),
                    reference: other.to_string(),
                });
            }
        }
    }
    None
}

pub fn workspace_to_json(w: &Workspace) -> Result<Json, CodecError> {
    if let Some(e) = find_broken_reference(w) {
        return Err(e);
    }
    fn registry<T>(items: &BTreeMap<String, T>, encode: impl Fn(&T) -> Json) -> Json {
        Json::Object(items.iter().map(|(k, v)| (k.clone(), encode(v))).collect())
    }
    Ok(json!({
        "analyticNodes": registry(&w.analytic_nodes, analytic_node_to_json),
        "concepts": registry(&w.concepts, concept_to_json),
        "datasets": registry(&w.dataset_refs, |d: &DatasetRef| json!({
            "path": d.path,
            "schema": d.schema.iter().map(attribute_to_json).collect::<Vec<_>>(),
        })),
        "domainNodes": registry(&w.domain_nodes, domain_node_to_json),
        "insightNodes": registry(&w.insight_nodes, insight_to_json),
        "models": registry(&w.models, model_to_json),
        "name": w.name,
        "taskNodes": registry(&w.task_nodes, task_to_json),
        "transformations": registry(&w.transformations, transformation_to_json),
        "version": 1,
    }))
}

/// Canonical bytes: compact JSON, sorted keys, one trailing newline.
pub fn serialize_workspace(w: &Workspace) -> Result<Vec<u8>, CodecError> {
    let j = workspace_to_json(w)?;
    let mut s = serde_json::to_string(&j).expect("tree has no non-string keys");
    s.push('\n');
    Ok(s.into_bytes())
}

fn decode_registry<T>(
    top: &Map<String, Json>,
    key: &str,
    decode: impl Fn(&Json) -> Result<T, ShapeError>,
    name_of: impl Fn(&T) -> Option<&str>,
) -> Result<BTreeMap<String, T>, CodecError> {
    let reg = top[key].as_object().ok_or_else(|| CodecError::Format {
        pointer: format!("/{key}"),
        message: format!("'{key}' must be an object"),
    })?;
    let mut out = BTreeMap::new();
    for (name, j) in reg {
        let pointer = format!("/{key}/{}", escape_pointer(name));
        let item = decode(j).map_err(|e| located(pointer.clone(), e))?;
        if let Some(inner) = name_of(&item) {
            if inner != name {
                return Err(CodecError::Format {
                    pointer,
                    message: format!("entry is named '{inner}' but keyed as '{name}'"),
                });
            }
        }
        out.insert(name.clone(), item);
    }
    Ok(out)
}

pub fn deserialize_workspace(bytes: &[u8]) -> Result<Workspace, CodecError> {
    let j: Json = serde_json::from_slice(bytes).map_err(|e| CodecError::Format {
        pointer: String::new(),
        message: e.to_string(),
    })?;
    let top = as_object(&j, "workspace").map_err(|e| located(String::new(), e))?;
    check_keys(
        top,
        &[
            "analyticNodes",
            "concepts",
            "datasets",
            "domainNodes",
            "insightNodes",
            "models",
            "name",
            "taskNodes",
            "transformations",
            "version",
        ],
        &[],
    )
    .map_err(|e| located(String::new(), e))?;
    if top["version"].as_u64() != Some(1) {
        return Err(CodecError::Format {
            pointer: "/version".to_string(),
            message: "unsupported format version".to_string(),
        });
    }
    let name = top["name"]
        .as_str()
        .ok_or_else(|| CodecError::Format {
            pointer: "/name".to_string(),
            message: "'name' must be a string".to_string(),
        })?
        .to_string();
    let dataset_refs = decode_registry(
        top,
        "datasets",
        |j| {
            let obj = as_object(j, "dataset reference")?;
            check_keys(obj, &["path", "schema"], &[])?;
            let path = req_str(obj, "path")?.to_string();
            let schema = obj["schema"]
                .as_array()
                .ok_or_else(|| msg("'schema' must be an array"))?
                .iter()
                .map(attribute_from_json)
                .collect::<Result<Vec<_>, _>>()?;
            Ok(DatasetRef { path, schema })
        },
        |_| None,
    )?;
    let w = Workspace {
        name,
        dataset_refs,
        concepts: decode_registry(top, "concepts", concept_from_json, |c| Some(&c.name))?,
        domain_nodes: decode_registry(top, "domainNodes", domain_node_from_json, |n| {
            Some(&n.name)
        })?,
        analytic_nodes: decode_registry(top, "analyticNodes", analytic_node_from_json, |n| {
            Some(&n.name)
        })?,
        insight_nodes: decode_registry(top, "insightNodes", insight_from_json, |n| Some(&n.name))?,
        task_nodes: decode_registry(top, "taskNodes", task_from_json, |t| Some(&t.name))?,
        transformations: decode_registry(top, "transformations", transformation_from_json, |t| {
            Some(&t.name)
        })?,
        models: decode_registry(top, "models", model_from_json, |m| Some(&m.name))?,
    };
    if let Some(e) = find_broken_reference(&w) {
        return Err(e);
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::CompareOp;

    #[test]
    fn values_round_trip() {
        for v in [
            Value::Nominal("STREET".to_string()),
            Value::Quantitative(2.5),
            Value::Quantitative(-0.0),
            Value::Temporal(1_430_092_800_000),
            Value::Null,
        ] {
            assert_eq!(value_from_json(&value_to_json(&v)).unwrap(), v);
        }
    }

    #[test]
    fn value_rejects_unknown_kind_and_bad_payload() {
        assert!(matches!(
            value_from_json(&json!({"categorical": "x"})),
            Err(ShapeError::UnknownKind { what: "value kind", .. })
        ));
        assert!(matches!(
            value_from_json(&json!({"temporal": 1.5})),
            Err(ShapeError::Malformed(_))
        ));
    }

    #[test]
    fn attributes_round_trip_and_reject_extras() {
        let a = Attribute::temporal("CrimeDate");
        assert_eq!(attribute_from_json(&attribute_to_json(&a)).unwrap(), a);
        assert!(attribute_from_json(&json!({"name":"x","type":"nominal","extra":1})).is_err());
        assert!(matches!(
            attribute_from_json(&json!({"name":"x","type":"categorical"})),
            Err(ShapeError::UnknownKind { what: "attribute type", .. })
        ));
    }

    #[test]
    fn exprs_round_trip() {
        let e = Expr::Logic {
            op: LogicOp::And,
            args: vec![
                Expr::compare(CompareOp::Le, Expr::Rank, Expr::number(2.0)),
                Expr::compare(
                    CompareOp::Ne,
                    Expr::column("day"),
                    Expr::Literal(Value::Null),
                ),
            ],
        };
        assert_eq!(expr_from_json(&expr_to_json(&e)).unwrap(), e);
    }

    #[test]
    fn expr_arity_is_checked() {
        assert!(expr_from_json(&json!({"logic":{"op":"not","args":[]}})).is_err());
        assert!(expr_from_json(&json!({"logic":{"op":"and","args":[]}})).is_err());
    }

    #[test]
    fn verbs_round_trip() {
        let verbs = [
            TransformVerb::GroupBy(vec!["CrimeDate".to_string()]),
            TransformVerb::Rollup(vec![
                Aggregate { out: "count".to_string(), agg: AggregateFn::Count, attr: None },
                Aggregate {
                    out: "total".to_string(),
                    agg: AggregateFn::Sum,
                    attr: Some("x".to_string()),
                },
            ]),
            TransformVerb::OrderBy(vec![OrderKey {
                attribute: "count".to_string(),
                descending: true,
            }]),
            TransformVerb::Filter(Expr::compare(CompareOp::Le, Expr::Rank, Expr::number(2.0))),
            TransformVerb::Derive { out: "z".to_string(), expr: Expr::column("count") },
        ];
        for v in &verbs {
            assert_eq!(&verb_from_json(&verb_to_json(v)).unwrap(), v);
        }
    }

    #[test]
    fn unknown_verb_is_reported_by_name() {
        assert!(matches!(
            verb_from_json(&json!({"op":"pivot","args":[]})),
            Err(ShapeError::UnknownKind { what: "verb op", kind }) if kind == "pivot"
        ));
    }

    fn record(pairs: &[(&str, Value)]) -> Record {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn trained_parameters_round_trip_for_every_kind() {
        use crate::relationship::{ForestState, IsoNode, KnnState, NaiveBayesTable, NumericScale};
        let cases = [
            (ModelKind::LinearRegression, TrainedParameters::Regression { beta: vec![1.0, 2.5] }),
            (
                ModelKind::DecisionTreeClassification,
                TrainedParameters::DecisionTree {
                    root: TreeNode::Split {
                        attribute: "Premise".to_string(),
                        majority: "LARCENY".to_string(),
                        children: vec![
                            ("ALLEY".to_string(), TreeNode::Leaf { label: "AUTO THEFT".to_string() }),
                            ("STREET".to_string(), TreeNode::Leaf { label: "LARCENY".to_string() }),
                        ],
                    },
                },
            ),
            (
                ModelKind::KnnClassification,
                TrainedParameters::Knn(KnnState {
                    k: 3,
                    scales: vec![NumericScale {
                        attribute: "x".to_string(),
                        mean: 0.5,
                        std: 1.25,
                    }],
                    examples: vec![record(&[
                        ("label", Value::Nominal("a".to_string())),
                        ("x", Value::Quantitative(0.5)),
                    ])],
                }),
            ),
            (
                ModelKind::NaiveBayesClassification,
                TrainedParameters::NaiveBayes(NaiveBayesTable {
                    alpha: 1.0,
                    class_counts: [("c1".to_string(), 3usize)].into_iter().collect(),
                    categories: [(
                        "A".to_string(),
                        ["x".to_string(), "y".to_string()].into_iter().collect(),
                    )]
                    .into_iter()
                    .collect(),
                    counts: [(
                        "A".to_string(),
                        [(
                            "c1".to_string(),
                            [("x".to_string(), 2usize)].into_iter().collect(),
                        )]
                        .into_iter()
                        .collect(),
                    )]
                    .into_iter()
                    .collect(),
                }),
            ),
            (
                ModelKind::KernelDensity,
                TrainedParameters::Kde { samples: vec![-1.0, 1.0], bandwidth: 0.75 },
            ),
            (
                ModelKind::IsolationForest,
                TrainedParameters::IsolationForest(ForestState {
                    trees: vec![IsoNode::Split {
                        attribute: "x".to_string(),
                        value: 0.5,
                        left: Box::new(IsoNode::Leaf { size: 1 }),
                        right: Box::new(IsoNode::Leaf { size: 3 }),
                    }],
                    subsample: 4,
                    tree_count: 1,
                    seed: 7,
                }),
            ),
        ];
        for (kind, params) in &cases {
            let decoded = trained_from_json(*kind, &trained_to_json(params)).unwrap();
            assert_eq!(&decoded, params, "{kind:?}");
        }
    }

    #[test]
    fn models_round_trip_and_enforce_their_own_constraints() {
        let m = RelationshipModel::new(
            "predictCrimeType",
            ModelKind::DecisionTreeClassification,
            vec![Attribute::nominal("Inside/Outside"), Attribute::nominal("Premise")],
            Some(Attribute::nominal("Description")),
            [("max_depth".to_string(), 4.0)].into_iter().collect(),
            0,
        )
        .unwrap();
        assert_eq!(model_from_json(&model_to_json(&m)).unwrap(), m);
        assert!(matches!(
            model_from_json(&json!({
                "hyper": {}, "inputs": [], "kind": "GradientBoost", "name": "m", "seed": 0
            })),
            Err(ShapeError::UnknownKind { what: "model kind", .. })
        ));
        // Structurally valid JSON carrying an illegal spec is still rejected.
        let quantitative_dt = json!({
            "hyper": {},
            "inputs": [{"name": "x", "type": "quantitative"}],
            "kind": "DecisionTreeClassification",
            "name": "m",
            "output": {"name": "y", "type": "nominal"},
            "seed": 0
        });
        assert!(model_from_json(&quantitative_dt).is_err());
    }

    fn fixture_workspace() -> Workspace {
        use crate::expr::Expr;
        use crate::knowledge::LinkKind;
        use crate::transform::{Aggregate, OrderKey};

        let mut w = Workspace::new("crime-analysis");
        w.register_dataset(
            "baltimoreCrime",
            "baltimore_crime.csv",
            vec![
                Attribute::temporal("CrimeDate"),
                Attribute::nominal("Inside/Outside"),
                Attribute::nominal("Premise"),
                Attribute::nominal("Description"),
            ],
        )
        .unwrap();
        w.register_transformation(DataTransformation {
            name: "aggTransform".to_string(),
            sources: vec!["baltimoreCrime".to_string()],
            transforms: vec![
                TransformVerb::GroupBy(vec!["CrimeDate".to_string()]),
                TransformVerb::Rollup(vec![Aggregate {
                    out: "count".to_string(),
                    agg: AggregateFn::Count,
                    attr: None,
                }]),
                TransformVerb::OrderBy(vec![OrderKey {
                    attribute: "count".to_string(),
                    descending: true,
                }]),
                TransformVerb::Filter(Expr::compare(
                    CompareOp::Le,
                    Expr::Rank,
                    Expr::number(2.0),
                )),
            ],
        })
        .unwrap();
        w.register_model(
            RelationshipModel::new(
                "predictCrimeType",
                ModelKind::DecisionTreeClassification,
                vec![Attribute::nominal("Inside/Outside"), Attribute::nominal("Premise")],
                Some(Attribute::nominal("Description")),
                BTreeMap::new(),
                0,
            )
            .unwrap(),
        )
        .unwrap();
        w.create_concept("Crime", &[]).unwrap();
        w.create_concept("Protest", &[]).unwrap();
        w.create_domain_node(
            "2015BaltimoreProtests",
            "Protest",
            &[],
            vec![Attribute::nominal("link")],
            record(&[(
                "link",
                Value::Nominal(
                    "https://en.wikipedia.org/wiki/2015_Baltimore_protests".to_string(),
                ),
            )]),
        )
        .unwrap();
        w.create_analytic_node(
            "peakCrimes",
            1_430_110_800_000,
            Some("aggTransform"),
            None,
            Some("top days of reported crimes"),
        )
        .unwrap();
        w.create_analytic_node(
            "crimeLocations",
            1_430_110_800_000,
            None,
            Some("predictCrimeType"),
            Some("location is a poor predictor of crime type"),
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
            Some("peak crime follows the funeral; location matters less"),
        )
        .unwrap();
        w.create_insight_node(
            "protestsObjective",
            Wildcardable::Concrete(vec![Wildcardable::Concrete(
                "2015BaltimoreProtests".to_string(),
            )]),
            Wildcardable::Wildcard,
            Some("how did the protests impact crime?"),
        )
        .unwrap();
        w.create_task("protestsTask", "protestsObjective", &["johnsInsight"]).unwrap();
        w.link_nodes(
            &NodeId::new(NodeFamily::Domain, "2015BaltimoreProtests"),
            &NodeId::new(NodeFamily::Insight, "johnsInsight"),
            LinkKind::Target,
            Some("evidence"),
        )
        .unwrap();
        w
    }

    #[test]
    fn workspace_serialization_is_canonical_and_round_trips() {
        let w = fixture_workspace();
        let bytes = serialize_workspace(&w).unwrap();
        assert_eq!(bytes.last(), Some(&b'\n'));
        assert_eq!(bytes.iter().filter(|b| **b == b'\n').count(), 1);
        let decoded = deserialize_workspace(&bytes).unwrap();
        assert_eq!(decoded, w);
        assert_eq!(serialize_workspace(&decoded).unwrap(), bytes);
    }

    #[test]
    fn wildcard_grammar_round_trips() {
        let j = insight_to_json(&fixture_workspace().insight_nodes["protestsObjective"]);
        assert_eq!(j["analyticKnowledge"], json!("*"));
        let insight = InsightNode {
            name: "shaped".to_string(),
            domain_knowledge: Wildcardable::Concrete(vec![
                Wildcardable::Concrete("2015BaltimoreProtests".to_string()),
                Wildcardable::Wildcard,
            ]),
            analytic_knowledge: Wildcardable::Concrete(vec![Wildcardable::Concrete(
                AnalyticRef::Spec(AnalyticPattern {
                    transformation: Some(Wildcardable::Wildcard),
                    relationship: Some(Wildcardable::Concrete(RelationshipPattern {
                        name: None,
                        kind: Some(Wildcardable::Concrete(
                            ModelKind::DecisionTreeClassification,
                        )),
                        inputs: Some(Wildcardable::Concrete(vec![
                            Wildcardable::Concrete("Premise".to_string()),
                            Wildcardable::Wildcard,
                        ])),
                        output: Some(Wildcardable::Wildcard),
                        hyper: Some(
                            [
                                ("max_depth".to_string(), Wildcardable::Concrete(4.0)),
                                ("k".to_string(), Wildcardable::Wildcard),
                            ]
                            .into_iter()
                            .collect(),
                        ),
                    })),
                }),
            )]),
            description: None,
            links: LinkSet::default(),
        };
        let round = insight_from_json(&insight_to_json(&insight)).unwrap();
        assert_eq!(round, insight);
    }

    #[test]
    fn results_travel_only_when_embedding_is_on() {
        let mut w = fixture_workspace();
        let results = Dataset {
            name: "peaks".to_string(),
            schema: vec![Attribute::temporal("CrimeDate"), Attribute::quantitative("count")],
            records: vec![record(&[
                ("CrimeDate", Value::Temporal(1_430_092_800_000)),
                ("count", Value::Quantitative(3.0)),
            ])],
        };
        let node = w.analytic_nodes.get_mut("peakCrimes").unwrap();
        node.results = Some(results.clone());
        let bytes = serialize_workspace(&w).unwrap();
        let decoded = deserialize_workspace(&bytes).unwrap();
        assert_eq!(decoded.analytic_nodes["peakCrimes"].results, None);

        let node = w.analytic_nodes.get_mut("peakCrimes").unwrap();
        node.embed_results = true;
        let bytes = serialize_workspace(&w).unwrap();
        let decoded = deserialize_workspace(&bytes).unwrap();
        assert_eq!(decoded.analytic_nodes["peakCrimes"].results, Some(results));
    }

    #[test]
    fn format_errors_carry_json_pointers() {
        let w = fixture_workspace();
        let mut j = workspace_to_json(&w).unwrap();
        j["models"]["predictCrimeType"]["kind"] = json!("GradientBoost");
        let err = deserialize_workspace(serde_json::to_string(&j).unwrap().as_bytes());
        assert!(matches!(
            err,
            Err(CodecError::UnknownKind { pointer, what: "model kind", kind })
                if pointer == "/models/predictCrimeType" && kind == "GradientBoost"
        ));

        let mut j = workspace_to_json(&w).unwrap();
        j["version"] = json!(2);
        assert!(matches!(
            deserialize_workspace(serde_json::to_string(&j).unwrap().as_bytes()),
            Err(CodecError::Format { pointer, .. }) if pointer == "/version"
        ));

        let mut j = workspace_to_json(&w).unwrap();
        j["concepts"]["Crime"]["name"] = json!("Crimes");
        assert!(matches!(
            deserialize_workspace(serde_json::to_string(&j).unwrap().as_bytes()),
            Err(CodecError::Format { pointer, message })
                if pointer == "/concepts/Crime" && message.contains("keyed")
        ));

        assert!(matches!(
            deserialize_workspace(b"{not json"),
            Err(CodecError::Format { pointer, .. }) if pointer.is_empty()
        ));
    }

    #[test]
    fn broken_references_are_refused_in_both_directions() {
        let mut w = fixture_workspace();
        w.transformations.get_mut("aggTransform").unwrap().sources =
            vec!["missingData".to_string()];
        assert!(matches!(
            serialize_workspace(&w),
            Err(CodecError::BrokenReference { pointer, reference })
                if pointer == "/transformations/aggTransform" && reference.contains("missingData")
        ));

        let w = fixture_workspace();
        let mut j = workspace_to_json(&w).unwrap();
        j["taskNodes"]["protestsTask"]["objective"] = json!("ghostObjective");
        assert!(matches!(
            deserialize_workspace(serde_json::to_string(&j).unwrap().as_bytes()),
            Err(CodecError::BrokenReference { pointer, .. })
                if pointer == "/taskNodes/protestsTask"
        ));
    }

    #[test]
    fn pointer_tokens_escape_slashes() {
        assert_eq!(escape_pointer("Inside/Outside"), "Inside~1Outside");
        assert_eq!(escape_pointer("a~b"), "a~0b");
    }

    #[test]
    fn link_edges_keep_labels_and_families() {
        let w = fixture_workspace();
        let j = domain_node_to_json(&w.domain_nodes["2015BaltimoreProtests"]);
        assert_eq!(
            j["links"]["targets"],
            json!([{ "family": "insight", "label": "evidence", "name": "johnsInsight" }])
        );
        let decoded = domain_node_from_json(&j).unwrap();
        assert_eq!(decoded, w.domain_nodes["2015BaltimoreProtests"]);
    }

    #[test]
    fn records_reject_non_objects_and_bad_values() {
        assert!(record_from_json(&json!([1, 2])).is_err());
        assert!(record_from_json(&json!({"x": {"quantitative": "three"}})).is_err());
        let r = record(&[("x", Value::Quantitative(1.5)), ("s", Value::Null)]);
        assert_eq!(record_from_json(&record_to_json(&r)).unwrap(), r);
    }
}
