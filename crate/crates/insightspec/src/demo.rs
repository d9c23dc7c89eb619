//! A small, fully wired example workspace: Baltimore crime records, an
//! aggregation pipeline, a trained-on-demand classifier, and the knowledge
//! objects an analyst would hang off them. Used by the CLI examples and the
//! end-to-end tests; handy as a template for new workspaces.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::dataset::{Attribute, Record, Value};
use crate::expr::{CompareOp, Expr};
use crate::insight::{AnalyticRef, Wildcardable};
use crate::knowledge::{LinkKind, NodeFamily, NodeId};
use crate::relationship::{ModelKind, RelationshipModel};
use crate::transform::{Aggregate, AggregateFn, DataTransformation, OrderKey, TransformVerb};
use crate::workspace::Workspace;

/// One week of incident records, small enough to reason about by hand:
/// three incidents on 04/27, two on 04/28, one each on 05/01 and 05/02, and
/// `Premise` alone determines `Description`.
pub const CRIME_CSV: &str = "\
CrimeDate,Inside/Outside,Premise,Description
04/27/2015,O,STREET,LARCENY
04/27/2015,I,APARTMENT,ASSAULT
04/27/2015,O,STREET,LARCENY
04/28/2015,I,ROW/TOWNHOUSE,BURGLARY
04/28/2015,O,ALLEY,AUTO THEFT
05/01/2015,I,APARTMENT,ASSAULT
05/02/2015,O,STREET,LARCENY
";

/// File name the workspace expects the records under, next to the
/// workspace file.
pub const CRIME_CSV_FILE: &str = "baltimore_crime.csv";

pub fn crime_schema() -> Vec<Attribute> {
    vec![
        Attribute::temporal("CrimeDate"),
        Attribute::nominal("Inside/Outside"),
        Attribute::nominal("Premise"),
        Attribute::nominal("Description"),
    ]
}

/// 2015-04-27T05:00:00Z, the fixed timestamp every demo node carries so the
/// workspace serializes identically on every run.
pub const DEMO_TIMESTAMP: i64 = 1_430_110_800_000;

pub fn crime_workspace() -> Workspace {
    let mut w = Workspace::new("crime-analysis");
    w.register_dataset("baltimoreCrime", CRIME_CSV_FILE, crime_schema())
        .expect("fresh registry");
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
            TransformVerb::Filter(Expr::compare(CompareOp::Le, Expr::Rank, Expr::number(2.0))),
        ],
    })
    .expect("fresh registry");
    w.register_model(
        RelationshipModel::new(
            "predictCrimeType",
            ModelKind::DecisionTreeClassification,
            vec![Attribute::nominal("Inside/Outside"), Attribute::nominal("Premise")],
            Some(Attribute::nominal("Description")),
            BTreeMap::new(),
            0,
        )
        .expect("legal model spec"),
    )
    .expect("fresh registry");

    w.create_concept("Crime", &[]).expect("fresh registry");
    w.create_concept("Protest", &[]).expect("fresh registry");
    let mut meta = Record::new();
    meta.insert(
        "link".to_string(),
        Value::Nominal("https://en.wikipedia.org/wiki/2015_Baltimore_protests".to_string()),
    );
    w.create_domain_node(
        "2015BaltimoreProtests",
        "Protest",
        &["Crime"],
        vec![Attribute::nominal("link")],
        meta,
    )
    .expect("concepts registered above");

    w.create_analytic_node(
        "peakCrimes",
        DEMO_TIMESTAMP,
        Some("aggTransform"),
        None,
        Some("top three days of reported crimes"),
    )
    .expect("transformation registered above");
    w.create_analytic_node(
        "crimeLocations",
        DEMO_TIMESTAMP,
        None,
        Some("predictCrimeType"),
        Some("location is a poor predictor of crime type"),
    )
    .expect("model registered above");

    w.create_insight_node(
        "johnsInsight",
        Wildcardable::Concrete(vec![Wildcardable::Concrete("2015BaltimoreProtests".to_string())]),
        Wildcardable::Concrete(vec![
            Wildcardable::Concrete(AnalyticRef::Node("peakCrimes".to_string())),
            Wildcardable::Concrete(AnalyticRef::Node("crimeLocations".to_string())),
        ]),
        Some("peak crime fell on the day of the funeral; location adds little"),
    )
    .expect("references registered above");
    w.create_insight_node(
        "protestsObjective",
        Wildcardable::Concrete(vec![Wildcardable::Concrete("2015BaltimoreProtests".to_string())]),
        Wildcardable::Wildcard,
        Some("how did the protests impact crime in the city?"),
    )
    .expect("references registered above");
    w.create_insight_node(
        "aprilCrimeObjective",
        Wildcardable::Wildcard,
        Wildcardable::Concrete(vec![Wildcardable::Concrete(AnalyticRef::Node(
            "peakCrimes".to_string(),
        ))]),
        Some("what happened on April 27 that may have led to more crime?"),
    )
    .expect("references registered above");

    w.create_task("protestsTask", "protestsObjective", &["johnsInsight"])
        .expect("insights registered above");

    w.link_nodes(
        &NodeId::new(NodeFamily::Insight, "johnsInsight"),
        &NodeId::new(NodeFamily::Domain, "2015BaltimoreProtests"),
        LinkKind::Source,
        Some("interprets"),
    )
    .expect("nodes registered above");
    w
}

/// Write the workspace file plus its CSV into `dir`; returns the workspace
/// file's path.
pub fn write_crime_workspace(dir: &Path) -> std::io::Result<PathBuf> {
    let w = crime_workspace();
    let bytes = crate::codec::serialize_workspace(&w).expect("demo workspace is closed");
    std::fs::write(dir.join(CRIME_CSV_FILE), CRIME_CSV)?;
    let path = dir.join("crime.insight.json");
    std::fs::write(&path, bytes)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_workspace_is_internally_consistent() {
        let w = crime_workspace();
        assert_eq!(w.validate(), Vec::<String>::new());
    }

    #[test]
    fn demo_matching_pairs_the_objective_with_the_insight() {
        let w = crime_workspace();
        assert_eq!(
            w.match_objective_by_name("protestsObjective").unwrap(),
            vec!["johnsInsight".to_string()]
        );
        assert_eq!(w.match_objective_by_name("aprilCrimeObjective").unwrap(), Vec::<String>::new());
        assert_eq!(w.validate_task("protestsTask").unwrap(), Vec::<String>::new());
    }

    #[test]
    fn demo_pipeline_keeps_the_top_three_days() {
        let w = crime_workspace();
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(CRIME_CSV_FILE), CRIME_CSV).unwrap();
        let datasets = w.load_all_datasets(dir.path()).unwrap();
        let out = w.execute_transformation("aggTransform", &datasets).unwrap();
        let counts: Vec<f64> =
            out.records.iter().map(|r| r["count"].as_number().unwrap()).collect();
        assert_eq!(counts, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn demo_files_round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_crime_workspace(dir.path()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let decoded = crate::codec::deserialize_workspace(&bytes).unwrap();
        assert_eq!(decoded, crime_workspace());
    }
}
