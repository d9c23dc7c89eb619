//! Verb pipelines over datasets: groupby, rollup, orderby, filter, derive.
//!
//! A pipeline is data, not code. Building one validates it (all problems are
//! collected, not just the first); executing one is a pure function from the
//! source dataset to a new dataset.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::codec::{self, ShapeError};
use crate::dataset::{Attribute, AttributeType, Dataset, Record, Value, WILDCARD};
use crate::expr::{eval_expr, EvalError, Expr, ExprValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateFn {
    Count,
    Sum,
    Mean,
    Min,
    Max,
}

impl AggregateFn {
    pub fn as_str(self) -> &'static str {
        match self {
            AggregateFn::Count => "count",
            AggregateFn::Sum => "sum",
            AggregateFn::Mean => "mean",
            AggregateFn::Min => "min",
            AggregateFn::Max => "max",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "count" => Some(AggregateFn::Count),
            "sum" => Some(AggregateFn::Sum),
            "mean" => Some(AggregateFn::Mean),
            "min" => Some(AggregateFn::Min),
            "max" => Some(AggregateFn::Max),
            _ => None,
        }
    }

    /// Count takes no argument attribute; the rest require one.
    pub fn needs_attr(self) -> bool {
        self != AggregateFn::Count
    }
}

/// One output column of a rollup.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub out: String,
    pub agg: AggregateFn,
    pub attr: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderKey {
    pub attribute: String,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransformVerb {
    GroupBy(Vec<String>),
    Rollup(Vec<Aggregate>),
    OrderBy(Vec<OrderKey>),
    Filter(Expr),
    Derive { out: String, expr: Expr },
}

impl TransformVerb {
    pub fn op_name(&self) -> &'static str {
        match self {
            TransformVerb::GroupBy(_) => "groupby",
            TransformVerb::Rollup(_) => "rollup",
            TransformVerb::OrderBy(_) => "orderby",
            TransformVerb::Filter(_) => "filter",
            TransformVerb::Derive { .. } => "derive",
        }
    }
}

/// A named, serializable pipeline. `sources` may list several datasets (the
/// type admits future composition) but only single-source pipelines execute.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTransformation {
    pub name: String,
    pub sources: Vec<String>,
    pub transforms: Vec<TransformVerb>,
}

/// One build-time problem. Indices refer to the verb list, zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformViolation {
    #[error("verb {index}: unknown verb '{op}'")]
    UnknownVerb { index: usize, op: String },
    #[error("verb {index}: malformed expression: {message}")]
    MalformedExpr { index: usize, message: String },
    #[error("verb {index}: rank() requires a preceding orderby")]
    RankOutsideOrderedContext { index: usize },
    #[error("verb {index}: unknown attribute '{attribute}'")]
    UnknownAttribute { index: usize, attribute: String },
    #[error("verb {index}: output attribute '{attribute}' already exists")]
    DuplicateOutput { index: usize, attribute: String },
    #[error("verb {index}: {message}")]
    InvalidVerb { index: usize, message: String },
    #[error("transformation lists no source datasets")]
    NoSources,
}

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("source dataset '{0}' did not resolve")]
    UnresolvedSource(String),
    #[error("pipeline has {0} sources; only single-source pipelines are executable")]
    SourceCount(usize),
    #[error("verb {index}: unknown attribute '{attribute}'")]
    UnknownAttribute { index: usize, attribute: String },
    #[error("verb {index}: {message}")]
    Type { index: usize, message: String },
    #[error("verb {index}: {source}")]
    Evaluation {
        index: usize,
        #[source]
        source: EvalError,
    },
}

/// Schema snapshot threaded through build-time validation. Types are tracked
/// where known; a derived column's type is only knowable at execution.
type ThreadedSchema = Vec<(String, Option<AttributeType>)>;

fn threaded(schema: &[Attribute]) -> ThreadedSchema {
    schema.iter().map(|a| (a.name.clone(), Some(a.attribute_type))).collect()
}

fn lookup(schema: &ThreadedSchema, name: &str) -> Option<Option<AttributeType>> {
    schema.iter().find(|(n, _)| n == name).map(|(_, t)| *t)
}

/// Validate a verb pipeline. With a known input schema every attribute
/// reference is checked; without one (unresolvable or multi-source), only
/// schema-independent rules apply. Returns every violation found.
pub fn validate_pipeline(
    sources: &[String],
    verbs: &[TransformVerb],
    input_schema: Option<&[Attribute]>,
) -> Vec<TransformViolation> {
    let mut out = Vec::new();
    if sources.is_empty() {
        out.push(TransformViolation::NoSources);
    }
    let mut schema: Option<ThreadedSchema> = input_schema.map(threaded);
    let mut pending_groups: Option<Vec<String>> = None;
    let mut ordered = false;

    let check_attr = |schema: &Option<ThreadedSchema>,
                          out: &mut Vec<TransformViolation>,
                          index: usize,
                          name: &str| {
        if let Some(s) = schema {
            if lookup(s, name).is_none() {
                out.push(TransformViolation::UnknownAttribute {
                    index,
                    attribute: name.to_string(),
                });
            }
        }
    };

    for (index, verb) in verbs.iter().enumerate() {
        match verb {
            TransformVerb::GroupBy(keys) => {
                if keys.is_empty() {
                    out.push(TransformViolation::InvalidVerb {
                        index,
                        message: "groupby needs at least one key".to_string(),
                    });
                }
                let mut seen = BTreeSet::new();
                for k in keys {
                    check_attr(&schema, &mut out, index, k);
                    if !seen.insert(k.as_str()) {
                        out.push(TransformViolation::InvalidVerb {
                            index,
                            message: format!("duplicate groupby key '{k}'"),
                        });
                    }
                }
                pending_groups = Some(keys.clone());
            }
            TransformVerb::Rollup(aggs) => {
                if aggs.is_empty() {
                    out.push(TransformViolation::InvalidVerb {
                        index,
                        message: "rollup needs at least one aggregate".to_string(),
                    });
                }
                let keys = pending_groups.take().unwrap_or_default();
                let mut next: ThreadedSchema = keys
                    .iter()
                    .map(|k| (k.clone(), schema.as_ref().and_then(|s| lookup(s, k)).flatten()))
                    .collect();
                for a in aggs {
                    if a.out.is_empty() || a.out == WILDCARD {
                        out.push(TransformViolation::InvalidVerb {
                            index,
                            message: format!("illegal output name '{}'", a.out),
                        });
                    }
                    if next.iter().any(|(n, _)| *n == a.out) {
                        out.push(TransformViolation::DuplicateOutput {
                            index,
                            attribute: a.out.clone(),
                        });
                    }
                    let mut out_type = Some(AttributeType::Quantitative);
                    match (&a.attr, a.agg.needs_attr()) {
                        (Some(attr), true) => {
                            check_attr(&schema, &mut out, index, attr);
                            let known = schema.as_ref().and_then(|s| lookup(s, attr)).flatten();
                            if let Some(t) = known {
                                if t.is_categorical() {
                                    out.push(TransformViolation::InvalidVerb {
                                        index,
                                        message: format!(
                                            "{} requires a quantitative or temporal attribute, got {t} '{attr}'",
                                            a.agg.as_str()
                                        ),
                                    });
                                }
                            }
                            if matches!(a.agg, AggregateFn::Min | AggregateFn::Max) {
                                out_type = known;
                            }
                        }
                        (None, true) => out.push(TransformViolation::InvalidVerb {
                            index,
                            message: format!("{} requires an attribute", a.agg.as_str()),
                        }),
                        (Some(_), false) => out.push(TransformViolation::InvalidVerb {
                            index,
                            message: "count takes no attribute".to_string(),
                        }),
                        (None, false) => {}
                    }
                    next.push((a.out.clone(), out_type));
                }
                schema = Some(next);
                ordered = false;
            }
            TransformVerb::OrderBy(keys) => {
                if keys.is_empty() {
                    out.push(TransformViolation::InvalidVerb {
                        index,
                        message: "orderby needs at least one key".to_string(),
                    });
                }
                for k in keys {
                    check_attr(&schema, &mut out, index, &k.attribute);
                }
                ordered = true;
            }
            TransformVerb::Filter(expr) => {
                for c in expr.columns() {
                    check_attr(&schema, &mut out, index, c);
                }
                if expr.uses_rank() && !ordered {
                    out.push(TransformViolation::RankOutsideOrderedContext { index });
                }
            }
            TransformVerb::Derive { out: name, expr } => {
                if name.is_empty() || name == WILDCARD {
                    out.push(TransformViolation::InvalidVerb {
                        index,
                        message: format!("illegal output name '{name}'"),
                    });
                }
                if let Some(s) = &schema {
                    if lookup(s, name).is_some() {
                        out.push(TransformViolation::DuplicateOutput {
                            index,
                            attribute: name.clone(),
                        });
                    }
                }
                for c in expr.columns() {
                    check_attr(&schema, &mut out, index, c);
                }
                if expr.uses_rank() && !ordered {
                    out.push(TransformViolation::RankOutsideOrderedContext { index });
                }
                if let Some(s) = &mut schema {
                    s.push((name.clone(), None));
                }
            }
        }
    }
    out
}

/// Build a pipeline from its raw JSON verb list (the wire form), collecting
/// every problem. Parse failures mask schema-level checks: when any verb
/// fails to parse, only parse violations are reported.
pub fn build_transformation(
    name: impl Into<String>,
    sources: Vec<String>,
    raw_verbs: &[serde_json::Value],
    input_schema: Option<&[Attribute]>,
) -> Result<DataTransformation, Vec<TransformViolation>> {
    let mut violations = Vec::new();
    let mut verbs = Vec::with_capacity(raw_verbs.len());
    for (index, raw) in raw_verbs.iter().enumerate() {
        match codec::verb_from_json(raw) {
            Ok(v) => verbs.push(v),
            Err(ShapeError::UnknownKind { what: "verb op", kind }) => {
                violations.push(TransformViolation::UnknownVerb { index, op: kind })
            }
            Err(e) => violations
                .push(TransformViolation::MalformedExpr { index, message: e.to_string() }),
        }
    }
    if violations.is_empty() {
        violations.extend(validate_pipeline(&sources, &verbs, input_schema));
    } else if sources.is_empty() {
        violations.push(TransformViolation::NoSources);
    }
    if violations.is_empty() {
        Ok(DataTransformation { name: name.into(), sources, transforms: verbs })
    } else {
        Err(violations)
    }
}

/// Total order used by `orderby`: Null first, then within-kind natural order;
/// distinct kinds order by an arbitrary fixed rank so sorting never panics on
/// a mixed column.
fn cmp_order(a: &Value, b: &Value) -> Ordering {
    fn kind_rank(v: &Value) -> u8 {
        match v {
            Value::Null => 0,
            Value::Nominal(_) => 1,
            Value::Quantitative(_) => 2,
            Value::Temporal(_) => 3,
        }
    }
    match (a, b) {
        (Value::Nominal(x), Value::Nominal(y)) => x.cmp(y),
        (Value::Quantitative(x), Value::Quantitative(y)) => {
            x.partial_cmp(y).unwrap_or(Ordering::Equal)
        }
        (Value::Temporal(x), Value::Temporal(y)) => x.cmp(y),
        _ => kind_rank(a).cmp(&kind_rank(b)),
    }
}

fn cmp_same_kind(a: &Value, b: &Value, index: usize) -> Result<Ordering, TransformError> {
    match (a, b) {
        (Value::Quantitative(x), Value::Quantitative(y)) => {
            Ok(x.partial_cmp(y).unwrap_or(Ordering::Equal))
        }
        (Value::Temporal(x), Value::Temporal(y)) => Ok(x.cmp(y)),
        _ => Err(TransformError::Type {
            index,
            message: "mixed value kinds in aggregate".to_string(),
        }),
    }
}

struct PipelineState {
    table: Dataset,
    /// Keys of a groupby awaiting its rollup.
    groups: Option<Vec<String>>,
    /// Zero-based ranks assigned by the most recent orderby, parallel to
    /// `table.records`; filter subsets them, rollup discards them.
    ranks: Option<Vec<usize>>,
}

/// Execute a pipeline. `resolve` maps a source name to its dataset. The
/// result keeps the source dataset's name, so an empty pipeline reproduces
/// its source exactly.
pub fn execute_data_transformation<'a, F>(
    t: &DataTransformation,
    resolve: F,
) -> Result<Dataset, TransformError>
where
    F: Fn(&str) -> Option<&'a Dataset>,
{
    if t.sources.len() != 1 {
        return Err(TransformError::SourceCount(t.sources.len()));
    }
    let source = resolve(&t.sources[0])
        .ok_or_else(|| TransformError::UnresolvedSource(t.sources[0].clone()))?;
    let mut state = PipelineState { table: source.clone(), groups: None, ranks: None };
    for (index, verb) in t.transforms.iter().enumerate() {
        apply_verb(&mut state, verb, index)?;
    }
    Ok(state.table)
}

fn require_attr<'a>(
    table: &'a Dataset,
    name: &str,
    index: usize,
) -> Result<&'a Attribute, TransformError> {
    table
        .attribute(name)
        .ok_or_else(|| TransformError::UnknownAttribute { index, attribute: name.to_string() })
}

fn apply_verb(
    state: &mut PipelineState,
    verb: &TransformVerb,
    index: usize,
) -> Result<(), TransformError> {
    match verb {
        TransformVerb::GroupBy(keys) => {
            for k in keys {
                require_attr(&state.table, k, index)?;
            }
            state.groups = Some(keys.clone());
        }
        TransformVerb::Rollup(aggs) => {
            let keys = state.groups.take().unwrap_or_default();
            apply_rollup(state, &keys, aggs, index)?;
            state.ranks = None;
        }
        TransformVerb::OrderBy(keys) => {
            for k in keys {
                require_attr(&state.table, &k.attribute, index)?;
            }
            let records = std::mem::take(&mut state.table.records);
            let mut records: Vec<Record> = records;
            records.sort_by(|a, b| {
                for k in keys {
                    let va = a.get(&k.attribute).unwrap_or(&Value::Null);
                    let vb = b.get(&k.attribute).unwrap_or(&Value::Null);
                    let ord = cmp_order(va, vb);
                    let ord = if k.descending { ord.reverse() } else { ord };
                    if ord != Ordering::Equal {
                        return ord;
                    }
                }
                Ordering::Equal
            });
            state.ranks = Some((0..records.len()).collect());
            state.table.records = records;
        }
        TransformVerb::Filter(expr) => {
            let mut kept_records = Vec::new();
            let mut kept_ranks = state.ranks.as_ref().map(|_| Vec::new());
            for (i, rec) in state.table.records.iter().enumerate() {
                let rank = state.ranks.as_ref().map(|r| r[i]);
                let keep = eval_expr(expr, rec, rank)
                    .map_err(|source| TransformError::Evaluation { index, source })?
                    .is_true();
                if keep {
                    kept_records.push(rec.clone());
                    if let (Some(ranks), Some(r)) = (&mut kept_ranks, rank) {
                        ranks.push(r);
                    }
                }
            }
            state.table.records = kept_records;
            state.ranks = kept_ranks;
        }
        TransformVerb::Derive { out, expr } => {
            if out.is_empty() || out == WILDCARD {
                return Err(TransformError::Type {
                    index,
                    message: format!("illegal output name '{out}'"),
                });
            }
            if state.table.attribute(out).is_some() {
                return Err(TransformError::Type {
                    index,
                    message: format!("output attribute '{out}' already exists"),
                });
            }
            let mut produced = Vec::with_capacity(state.table.records.len());
            for (i, rec) in state.table.records.iter().enumerate() {
                let rank = state.ranks.as_ref().map(|r| r[i]);
                match eval_expr(expr, rec, rank)
                    .map_err(|source| TransformError::Evaluation { index, source })?
                {
                    ExprValue::Data(v) => produced.push(v),
                    ExprValue::Bool(_) => {
                        return Err(TransformError::Type {
                            index,
                            message: "derive produced a boolean; only cell values can be stored"
                                .to_string(),
                        })
                    }
                }
            }
            let mut out_type = None;
            for v in &produced {
                let t = match v {
                    Value::Null => continue,
                    Value::Nominal(_) => AttributeType::Nominal,
                    Value::Quantitative(_) => AttributeType::Quantitative,
                    Value::Temporal(_) => AttributeType::Temporal,
                };
                match out_type {
                    None => out_type = Some(t),
                    Some(prev) if prev == t => {}
                    Some(prev) => {
                        return Err(TransformError::Type {
                            index,
                            message: format!("derive produced mixed kinds ({prev} and {t})"),
                        })
                    }
                }
            }
            state.table.schema.push(Attribute::new(
                out.clone(),
                out_type.unwrap_or(AttributeType::Nominal),
            ));
            for (rec, v) in state.table.records.iter_mut().zip(produced) {
                rec.insert(out.clone(), v);
            }
        }
    }
    Ok(())
}

fn apply_rollup(
    state: &mut PipelineState,
    keys: &[String],
    aggs: &[Aggregate],
    index: usize,
) -> Result<(), TransformError> {
    let table = &state.table;
    let mut key_attrs = Vec::with_capacity(keys.len());
    for k in keys {
        key_attrs.push(require_attr(table, k, index)?.clone());
    }
    let mut out_schema = key_attrs;
    for a in aggs {
        if a.out.is_empty() || a.out == WILDCARD {
            return Err(TransformError::Type {
                index,
                message: format!("illegal output name '{}'", a.out),
            });
        }
        if out_schema.iter().any(|s| s.name == a.out) {
            return Err(TransformError::Type {
                index,
                message: format!("output attribute '{}' already exists", a.out),
            });
        }
        let out_type = match (a.agg, &a.attr) {
            (AggregateFn::Count, None) => AttributeType::Quantitative,
            (AggregateFn::Count, Some(_)) => {
                return Err(TransformError::Type {
                    index,
                    message: "count takes no attribute".to_string(),
                })
            }
            (agg, Some(attr)) => {
                let attr = require_attr(table, attr, index)?;
                if attr.attribute_type.is_categorical() {
                    return Err(TransformError::Type {
                        index,
                        message: format!(
                            "{} requires a quantitative or temporal attribute, got {} '{}'",
                            agg.as_str(),
                            attr.attribute_type,
                            attr.name
                        ),
                    });
                }
                match agg {
                    AggregateFn::Min | AggregateFn::Max => attr.attribute_type,
                    _ => AttributeType::Quantitative,
                }
            }
            (agg, None) => {
                return Err(TransformError::Type {
                    index,
                    message: format!("{} requires an attribute", agg.as_str()),
                })
            }
        };
        out_schema.push(Attribute::new(a.out.clone(), out_type));
    }

    // Partition rows by key tuple, groups ordered by first appearance.
    let mut tuples: Vec<Vec<&Value>> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (ri, rec) in table.records.iter().enumerate() {
        let tuple: Vec<&Value> =
            keys.iter().map(|k| rec.get(k).unwrap_or(&Value::Null)).collect();
        match tuples.iter().position(|t| *t == tuple) {
            Some(g) => members[g].push(ri),
            None => {
                tuples.push(tuple);
                members.push(vec![ri]);
            }
        }
    }
    if keys.is_empty() && tuples.is_empty() {
        // Whole-table rollup of an empty table still yields one row.
        tuples.push(Vec::new());
        members.push(Vec::new());
    }

    let mut records = Vec::with_capacity(tuples.len());
    for (tuple, rows) in tuples.iter().zip(&members) {
        let mut rec = Record::new();
        for (k, v) in keys.iter().zip(tuple) {
            rec.insert(k.clone(), (*v).clone());
        }
        for a in aggs {
            let value = match a.agg {
                AggregateFn::Count => Value::Quantitative(rows.len() as f64),
                _ => {
                    let attr = a.attr.as_deref().expect("checked above");
                    let cells: Vec<&Value> = rows
                        .iter()
                        .map(|ri| table.records[*ri].get(attr).unwrap_or(&Value::Null))
                        .filter(|v| !v.is_null())
                        .collect();
                    match a.agg {
                        AggregateFn::Sum => Value::Quantitative(
                            cells.iter().filter_map(|v| v.as_number()).sum(),
                        ),
                        AggregateFn::Mean => {
                            if cells.is_empty() {
                                Value::Null
                            } else {
                                let sum: f64 = cells.iter().filter_map(|v| v.as_number()).sum();
                                Value::Quantitative(sum / cells.len() as f64)
                            }
                        }
                        AggregateFn::Min | AggregateFn::Max => {
                            let want_max = a.agg == AggregateFn::Max;
                            let mut best: Option<&Value> = None;
                            for v in &cells {
                                best = match best {
                                    None => Some(v),
                                    Some(b) => {
                                        let ord = cmp_same_kind(v, b, index)?;
                                        if (want_max && ord == Ordering::Greater)
                                            || (!want_max && ord == Ordering::Less)
                                        {
                                            Some(v)
                                        } else {
                                            Some(b)
                                        }
                                    }
                                };
                            }
                            best.cloned().unwrap_or(Value::Null)
                        }
                        AggregateFn::Count => unreachable!(),
                    }
                }
            };
            rec.insert(a.out.clone(), value);
        }
        records.push(rec);
    }
    state.table = Dataset::new(state.table.name.clone(), out_schema, records);
    Ok(())
}
