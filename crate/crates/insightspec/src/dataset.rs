//! Tabular datasets: attribute schemas, typed cells, CSV/JSON ingestion.
//!
//! A [`Dataset`] is immutable once loaded. Transformations and models never
//! mutate one; they produce new datasets or read-only views.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, NaiveDate};
use thiserror::Error;

/// Reserved token understood by objective matching. It is not a legal
/// attribute name anywhere in a schema.
pub const WILDCARD: &str = "*";

/// Measurement level of an attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttributeType {
    Nominal,
    Ordinal,
    Quantitative,
    Temporal,
}

impl AttributeType {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeType::Nominal => "nominal",
            AttributeType::Ordinal => "ordinal",
            AttributeType::Quantitative => "quantitative",
            AttributeType::Temporal => "temporal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nominal" => Some(AttributeType::Nominal),
            "ordinal" => Some(AttributeType::Ordinal),
            "quantitative" => Some(AttributeType::Quantitative),
            "temporal" => Some(AttributeType::Temporal),
            _ => None,
        }
    }

    /// Nominal and ordinal attributes hold category values.
    pub fn is_categorical(self) -> bool {
        matches!(self, AttributeType::Nominal | AttributeType::Ordinal)
    }
}

impl fmt::Display for AttributeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named, typed column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub attribute_type: AttributeType,
}

impl Attribute {
    pub fn new(name: impl Into<String>, attribute_type: AttributeType) -> Self {
        Attribute { name: name.into(), attribute_type }
    }

    pub fn nominal(name: impl Into<String>) -> Self {
        Attribute::new(name, AttributeType::Nominal)
    }

    pub fn ordinal(name: impl Into<String>) -> Self {
        Attribute::new(name, AttributeType::Ordinal)
    }

    pub fn quantitative(name: impl Into<String>) -> Self {
        Attribute::new(name, AttributeType::Quantitative)
    }

    pub fn temporal(name: impl Into<String>) -> Self {
        Attribute::new(name, AttributeType::Temporal)
    }
}

/// A single cell.
///
/// Quantitative payloads are always finite; temporal payloads are epoch
/// milliseconds (UTC). Missing cells are `Null`, never an empty string or NaN.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Nominal(String),
    Quantitative(f64),
    Temporal(i64),
    Null,
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// `true` when the payload is legal for a column of type `ty`.
    /// `Null` is legal everywhere.
    pub fn matches_type(&self, ty: AttributeType) -> bool {
        match self {
            Value::Null => true,
            Value::Nominal(_) => ty.is_categorical(),
            Value::Quantitative(_) => ty == AttributeType::Quantitative,
            Value::Temporal(_) => ty == AttributeType::Temporal,
        }
    }

    /// Numeric view: the quantitative payload, or temporal milliseconds.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Quantitative(x) => Some(*x),
            Value::Temporal(ms) => Some(*ms as f64),
            _ => None,
        }
    }

    /// Human-readable form for messages and graph labels.
    pub fn render(&self) -> String {
        match self {
            Value::Nominal(s) => s.clone(),
            Value::Quantitative(x) => format!("{x}"),
            Value::Temporal(ms) => format!("{ms}"),
            Value::Null => "null".to_string(),
        }
    }
}

/// One row, keyed by attribute name.
pub type Record = BTreeMap<String, Value>;

/// A named table with a typed schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub schema: Vec<Attribute>,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, schema: Vec<Attribute>, records: Vec<Record>) -> Self {
        Dataset { name: name.into(), schema, records }
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.schema.iter().find(|a| a.name == name)
    }

    /// Column view in row order. Absent cells surface as `Null`.
    pub fn column(&self, name: &str) -> Vec<&Value> {
        self.records.iter().map(|r| r.get(name).unwrap_or(&Value::Null)).collect()
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    /// The table has no columns at all.
    #[error("table has no columns")]
    EmptyHeader,
    /// A cell or structural element could not be read. Row 0 is the header;
    /// data rows are numbered from 1.
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    /// A schema override referenced a column the table does not have, or the
    /// override itself is malformed.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}

/// One problem found by [`validate_dataset`]. `row` is 1-based; `None` means
/// the schema itself is at fault.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetViolation {
    pub row: Option<usize>,
    pub attribute: Option<String>,
    pub message: String,
}

impl fmt::Display for DatasetViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.row, &self.attribute) {
            (Some(r), Some(a)) => write!(f, "row {r}, attribute '{a}': {}", self.message),
            (Some(r), None) => write!(f, "row {r}: {}", self.message),
            (None, Some(a)) => write!(f, "attribute '{a}': {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

/// Parse a temporal cell to epoch milliseconds. Accepts RFC 3339 timestamps,
/// `YYYY-MM-DD`, and `MM/DD/YYYY`; bare dates are taken as midnight UTC.
pub fn parse_temporal(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp_millis());
    }
    let date = NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%m/%d/%Y"))
        .ok()?;
    Some(date.and_hms_opt(0, 0, 0)?.and_utc().timestamp_millis())
}

fn parse_finite(s: &str) -> Option<f64> {
    let x: f64 = s.trim().parse().ok()?;
    x.is_finite().then_some(x)
}

/// Raw table shared by the CSV and JSON readers. `None` cells were absent in
/// the source (JSON objects may omit keys); empty strings count as missing.
struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<Option<String>>>,
}

fn check_header(header: &[String]) -> Result<(), DatasetError> {
    if header.is_empty() {
        return Err(DatasetError::EmptyHeader);
    }
    let mut seen = BTreeSet::new();
    for name in header {
        if name.is_empty() {
            return Err(DatasetError::Parse { row: 0, message: "empty column name".to_string() });
        }
        if name == WILDCARD {
            return Err(DatasetError::Parse {
                row: 0,
                message: format!("'{WILDCARD}' is reserved and cannot name a column"),
            });
        }
        if !seen.insert(name) {
            return Err(DatasetError::Parse {
                row: 0,
                message: format!("duplicate column name '{name}'"),
            });
        }
    }
    Ok(())
}

fn read_csv(bytes: &[u8]) -> Result<RawTable, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(bytes);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| DatasetError::Parse { row: 0, message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    check_header(&header)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| DatasetError::Parse { row: i + 1, message: e.to_string() })?;
        rows.push(rec.iter().map(|c| Some(c.to_string())).collect());
    }
    Ok(RawTable { header, rows })
}

fn read_json(bytes: &[u8]) -> Result<RawTable, DatasetError> {
    let parsed: serde_json::Value = serde_json::from_slice(bytes)
        .map_err(|e| DatasetError::Parse { row: 0, message: e.to_string() })?;
    let items = parsed.as_array().ok_or_else(|| DatasetError::Parse {
        row: 0,
        message: "expected a JSON array of objects".to_string(),
    })?;
    let mut keys = BTreeSet::new();
    for (i, item) in items.iter().enumerate() {
        let obj = item.as_object().ok_or_else(|| DatasetError::Parse {
            row: i + 1,
            message: "expected a JSON object".to_string(),
        })?;
        keys.extend(obj.keys().cloned());
    }
    let header: Vec<String> = keys.into_iter().collect();
    check_header(&header)?;
    let mut rows = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let obj = item.as_object().expect("checked above");
        let mut row = Vec::with_capacity(header.len());
        for name in &header {
            let cell = match obj.get(name) {
                None | Some(serde_json::Value::Null) => None,
                Some(serde_json::Value::String(s)) => Some(s.clone()),
                Some(serde_json::Value::Number(n)) => Some(n.to_string()),
                Some(other) => {
                    return Err(DatasetError::Parse {
                        row: i + 1,
                        message: format!("attribute '{name}': unsupported JSON value {other}"),
                    })
                }
            };
            row.push(cell);
        }
        rows.push(row);
    }
    Ok(RawTable { header, rows })
}

/// Infer a column's type from its non-missing cells.
///
/// Quantitative wins when every cell parses as a finite number; temporal when
/// every cell parses as a date; otherwise nominal. Ordinal is never inferred,
/// because rank order cannot be read off the raw strings. An all-missing
/// column is nominal.
fn infer_type<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> AttributeType {
    let mut any = false;
    let mut quantitative = true;
    let mut temporal = true;
    for c in cells {
        any = true;
        quantitative = quantitative && parse_finite(c).is_some();
        temporal = temporal && parse_temporal(c).is_some();
        if !quantitative && !temporal {
            break;
        }
    }
    if !any {
        AttributeType::Nominal
    } else if quantitative {
        AttributeType::Quantitative
    } else if temporal {
        AttributeType::Temporal
    } else {
        AttributeType::Nominal
    }
}

fn cell_missing(cell: &Option<String>) -> bool {
    match cell {
        None => true,
        Some(s) => s.is_empty(),
    }
}

fn convert_cell(
    cell: &Option<String>,
    attr: &Attribute,
    row: usize,
) -> Result<Value, DatasetError> {
    if cell_missing(cell) {
        return Ok(Value::Null);
    }
    let raw = cell.as_deref().expect("non-missing cell");
    match attr.attribute_type {
        AttributeType::Nominal | AttributeType::Ordinal => Ok(Value::Nominal(raw.to_string())),
        AttributeType::Quantitative => parse_finite(raw).map(Value::Quantitative).ok_or_else(|| {
            DatasetError::Parse {
                row,
                message: format!("attribute '{}': '{raw}' is not a finite number", attr.name),
            }
        }),
        AttributeType::Temporal => parse_temporal(raw).map(Value::Temporal).ok_or_else(|| {
            DatasetError::Parse {
                row,
                message: format!("attribute '{}': '{raw}' is not a date", attr.name),
            }
        }),
    }
}

fn build_dataset(
    name: &str,
    raw: &RawTable,
    schema_override: Option<&[Attribute]>,
) -> Result<Dataset, DatasetError> {
    let schema: Vec<Attribute> = match schema_override {
        Some(given) => {
            if given.is_empty() {
                return Err(DatasetError::SchemaMismatch("override schema is empty".to_string()));
            }
            let mut seen = BTreeSet::new();
            for a in given {
                if !raw.header.iter().any(|h| h == &a.name) {
                    return Err(DatasetError::SchemaMismatch(format!(
                        "attribute '{}' not present in table",
                        a.name
                    )));
                }
                if !seen.insert(&a.name) {
                    return Err(DatasetError::SchemaMismatch(format!(
                        "attribute '{}' listed twice",
                        a.name
                    )));
                }
            }
            given.to_vec()
        }
        None => raw
            .header
            .iter()
            .enumerate()
            .map(|(col, h)| {
                let cells = raw
                    .rows
                    .iter()
                    .filter_map(move |r| r.get(col).filter(|c| !cell_missing(c)))
                    .map(|c| c.as_deref().expect("non-missing cell"));
                Attribute::new(h.clone(), infer_type(cells))
            })
            .collect(),
    };
    let col_of: BTreeMap<&str, usize> =
        raw.header.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    let mut records = Vec::with_capacity(raw.rows.len());
    for (i, row) in raw.rows.iter().enumerate() {
        let mut rec = Record::new();
        for attr in &schema {
            let col = col_of[attr.name.as_str()];
            let cell = row.get(col).cloned().unwrap_or(None);
            rec.insert(attr.name.clone(), convert_cell(&cell, attr, i + 1)?);
        }
        records.push(rec);
    }
    Ok(Dataset::new(name, schema, records))
}

/// Load a table from raw bytes, sniffing CSV vs. JSON from the first
/// non-whitespace byte. With a `schema_override` the table is projected onto
/// exactly those attributes and every cell must convert to the declared type;
/// without one, types are inferred per column.
pub fn load_table(
    name: &str,
    bytes: &[u8],
    schema_override: Option<&[Attribute]>,
) -> Result<Dataset, DatasetError> {
    let first = bytes.iter().copied().find(|b| !b.is_ascii_whitespace());
    if first == Some(b'[') {
        load_json(name, bytes, schema_override)
    } else {
        load_csv(name, bytes, schema_override)
    }
}

pub fn load_csv(
    name: &str,
    bytes: &[u8],
    schema_override: Option<&[Attribute]>,
) -> Result<Dataset, DatasetError> {
    build_dataset(name, &read_csv(bytes)?, schema_override)
}

/// Load a JSON array of flat objects. Numbers are accepted for quantitative
/// and temporal columns, strings everywhere; `null` and absent keys both
/// load as `Null`. The schema is the sorted union of keys unless overridden.
pub fn load_json(
    name: &str,
    bytes: &[u8],
    schema_override: Option<&[Attribute]>,
) -> Result<Dataset, DatasetError> {
    build_dataset(name, &read_json(bytes)?, schema_override)
}

/// Write the table as CSV in schema column order. Temporal cells come out
/// as RFC 3339 UTC and nulls as empty cells, so `load_csv` reads the output
/// back under the same schema.
pub fn to_csv(dataset: &Dataset) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(dataset.schema.iter().map(|a| a.name.as_str()))
        .expect("writing to memory");
    for record in &dataset.records {
        let row: Vec<String> = dataset
            .schema
            .iter()
            .map(|a| match record.get(&a.name) {
                None | Some(Value::Null) => String::new(),
                Some(Value::Temporal(ms)) => chrono::DateTime::from_timestamp_millis(*ms)
                    .map(|dt| dt.to_rfc3339_opts(chrono::SecondsFormat::Millis, true))
                    .unwrap_or_else(|| ms.to_string()),
                Some(v) => v.render(),
            })
            .collect();
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV output is UTF-8")
}

/// Check a dataset against its own schema. Returns every violation rather
/// than stopping at the first, so callers can report them all at once.
pub fn validate_dataset(dataset: &Dataset) -> Vec<DatasetViolation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for attr in &dataset.schema {
        if attr.name.is_empty() {
            out.push(DatasetViolation {
                row: None,
                attribute: None,
                message: "empty attribute name".to_string(),
            });
        }
        if attr.name == WILDCARD {
            out.push(DatasetViolation {
                row: None,
                attribute: Some(attr.name.clone()),
                message: format!("'{WILDCARD}' is reserved and cannot name an attribute"),
            });
        }
        if !seen.insert(attr.name.as_str()) {
            out.push(DatasetViolation {
                row: None,
                attribute: Some(attr.name.clone()),
                message: "duplicate attribute name".to_string(),
            });
        }
    }
    if dataset.schema.is_empty() {
        out.push(DatasetViolation {
            row: None,
            attribute: None,
            message: "schema has no attributes".to_string(),
        });
    }
    for (i, rec) in dataset.records.iter().enumerate() {
        let row = i + 1;
        for attr in &dataset.schema {
            match rec.get(&attr.name) {
                None => out.push(DatasetViolation {
                    row: Some(row),
                    attribute: Some(attr.name.clone()),
                    message: "missing cell".to_string(),
                }),
                Some(v) => {
                    if !v.matches_type(attr.attribute_type) {
                        out.push(DatasetViolation {
                            row: Some(row),
                            attribute: Some(attr.name.clone()),
                            message: format!(
                                "value {} does not fit declared type {}",
                                v.render(),
                                attr.attribute_type
                            ),
                        });
                    }
                    if let Value::Quantitative(x) = v {
                        if !x.is_finite() {
                            out.push(DatasetViolation {
                                row: Some(row),
                                attribute: Some(attr.name.clone()),
                                message: "non-finite quantitative value".to_string(),
                            });
                        }
                    }
                }
            }
        }
        for key in rec.keys() {
            if dataset.attribute(key).is_none() {
                out.push(DatasetViolation {
                    row: Some(row),
                    attribute: Some(key.clone()),
                    message: "cell has no schema attribute".to_string(),
                });
            }
        }
    }
    out
}
