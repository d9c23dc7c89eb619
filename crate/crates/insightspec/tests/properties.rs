//! Randomized invariants for the value codec, CSV round trips, comparison
//! semantics, and link mirroring.

use std::collections::BTreeMap;

use proptest::prelude::*;

use insightspec::codec;
use insightspec::dataset::{self, Attribute, Dataset, Record, Value};
use insightspec::expr::{eval_expr, CompareOp, Expr};
use insightspec::knowledge::{LinkKind, LinkSet, NodeFamily, NodeId};
use insightspec::workspace::Workspace;

fn any_value() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::Null),
        "[ -~]{1,12}".prop_map(Value::Nominal),
        (-1.0e9..1.0e9f64).prop_map(Value::Quantitative),
        (-2_000_000_000_000i64..2_000_000_000_000i64).prop_map(Value::Temporal),
    ]
}

fn concept_pool() -> Workspace {
    let mut w = Workspace::new("pool");
    for name in ["a", "b", "c", "d"] {
        w.create_concept(name, &[]).unwrap();
    }
    w
}

proptest! {
    #[test]
    fn value_json_round_trips(v in any_value()) {
        let j = codec::value_to_json(&v);
        prop_assert_eq!(codec::value_from_json(&j).unwrap(), v);
    }

    // Keys may contain the characters JSON pointers escape; the codec must
    // carry them through untouched.
    #[test]
    fn record_json_round_trips(r in prop::collection::btree_map("[a-z0-9/~]{1,8}", any_value(), 0..6)) {
        let j = codec::record_to_json(&r);
        prop_assert_eq!(codec::record_from_json(&j).unwrap(), r);
    }

    #[test]
    fn csv_round_trips_under_a_fixed_schema(
        rows in prop::collection::vec(
            (
                prop::option::of("[ -~]{1,10}"),
                prop::option::of(-1.0e6..1.0e6f64),
                prop::option::of(-2_000_000_000_000i64..2_000_000_000_000i64),
            ),
            0..12,
        )
    ) {
        let schema = vec![
            Attribute::nominal("n"),
            Attribute::quantitative("q"),
            Attribute::temporal("t"),
        ];
        let records: Vec<Record> = rows
            .into_iter()
            .map(|(n, q, t)| {
                let mut r = Record::new();
                r.insert("n".to_string(), n.map(Value::Nominal).unwrap_or(Value::Null));
                r.insert("q".to_string(), q.map(Value::Quantitative).unwrap_or(Value::Null));
                r.insert("t".to_string(), t.map(Value::Temporal).unwrap_or(Value::Null));
                r
            })
            .collect();
        let table = Dataset::new("round", schema.clone(), records);
        let csv = dataset::to_csv(&table);
        let back = dataset::load_csv("round", csv.as_bytes(), Some(&schema)).unwrap();
        prop_assert_eq!(back, table);
    }

    #[test]
    fn comparisons_against_null_are_never_true(
        v in any_value(),
        op in prop::sample::select(vec![
            CompareOp::Eq, CompareOp::Ne, CompareOp::Lt,
            CompareOp::Le, CompareOp::Ge, CompareOp::Gt,
        ]),
        null_on_left in any::<bool>(),
    ) {
        let (lhs, rhs) = if null_on_left {
            (Expr::Literal(Value::Null), Expr::Literal(v))
        } else {
            (Expr::Literal(v), Expr::Literal(Value::Null))
        };
        let out = eval_expr(&Expr::compare(op, lhs, rhs), &Record::new(), None).unwrap();
        prop_assert!(!out.is_true());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Any stream of link calls leaves every edge mirrored, and replaying the
    // stream changes nothing.
    #[test]
    fn link_streams_stay_dual_and_idempotent(
        ops in prop::collection::vec((0..4usize, 0..4usize, 0..3u8, any::<bool>()), 0..20)
    ) {
        let names = ["a", "b", "c", "d"];
        let mut w = concept_pool();
        let apply = |w: &mut Workspace| {
            for (ai, bi, k, labeled) in &ops {
                if ai == bi {
                    continue;
                }
                let a = NodeId::new(NodeFamily::Concept, names[*ai]);
                let b = NodeId::new(NodeFamily::Concept, names[*bi]);
                let kind = [LinkKind::Source, LinkKind::Target, LinkKind::Related][*k as usize];
                let label = labeled.then_some("seen with");
                w.link_nodes(&a, &b, kind, label).unwrap();
            }
        };
        apply(&mut w);
        prop_assert_eq!(w.audit_links(), Vec::<String>::new());
        let snapshot: BTreeMap<NodeId, LinkSet> =
            w.all_linked_nodes().map(|(id, l)| (id, l.clone())).collect();
        apply(&mut w);
        let replayed: BTreeMap<NodeId, LinkSet> =
            w.all_linked_nodes().map(|(id, l)| (id, l.clone())).collect();
        prop_assert_eq!(replayed, snapshot);
    }
}
