//! Row expressions for filter and derive verbs.
//!
//! Expressions are plain data (no closures) so pipelines serialize. Evaluation
//! is total over well-formed rows: a `Null` operand propagates `Null` through
//! arithmetic, and any comparison touching `Null` is false. The only error is
//! referencing a column the row does not have at all.

use thiserror::Error;

use crate::dataset::{Record, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CompareOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Eq => "==",
            CompareOp::Ne => "!=",
            CompareOp::Ge => ">=",
            CompareOp::Gt => ">",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "<" => Some(CompareOp::Lt),
            "<=" => Some(CompareOp::Le),
            "==" => Some(CompareOp::Eq),
            "!=" => Some(CompareOp::Ne),
            ">=" => Some(CompareOp::Ge),
            ">" => Some(CompareOp::Gt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn as_str(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "+" => Some(ArithOp::Add),
            "-" => Some(ArithOp::Sub),
            "*" => Some(ArithOp::Mul),
            "/" => Some(ArithOp::Div),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicOp {
    And,
    Or,
    Not,
}

impl LogicOp {
    pub fn as_str(self) -> &'static str {
        match self {
            LogicOp::And => "and",
            LogicOp::Or => "or",
            LogicOp::Not => "not",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "and" => Some(LogicOp::And),
            "or" => Some(LogicOp::Or),
            "not" => Some(LogicOp::Not),
            _ => None,
        }
    }
}

/// Serializable expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Value),
    Column(String),
    /// Zero-based position assigned by the most recent `orderby`.
    Rank,
    Compare { op: CompareOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Arith { op: ArithOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Logic { op: LogicOp, args: Vec<Expr> },
}

impl Expr {
    pub fn column(name: impl Into<String>) -> Self {
        Expr::Column(name.into())
    }

    pub fn number(x: f64) -> Self {
        Expr::Literal(Value::Quantitative(x))
    }

    pub fn text(s: impl Into<String>) -> Self {
        Expr::Literal(Value::Nominal(s.into()))
    }

    pub fn compare(op: CompareOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Compare { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn arith(op: ArithOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Arith { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn uses_rank(&self) -> bool {
        match self {
            Expr::Rank => true,
            Expr::Literal(_) | Expr::Column(_) => false,
            Expr::Compare { lhs, rhs, .. } | Expr::Arith { lhs, rhs, .. } => {
                lhs.uses_rank() || rhs.uses_rank()
            }
            Expr::Logic { args, .. } => args.iter().any(Expr::uses_rank),
        }
    }

    /// Every column name the expression reads, in first-use order.
    pub fn columns(&self) -> Vec<&str> {
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a str>) {
            match e {
                Expr::Column(name) => {
                    if !out.contains(&name.as_str()) {
                        out.push(name);
                    }
                }
                Expr::Literal(_) | Expr::Rank => {}
                Expr::Compare { lhs, rhs, .. } | Expr::Arith { lhs, rhs, .. } => {
                    walk(lhs, out);
                    walk(rhs, out);
                }
                Expr::Logic { args, .. } => args.iter().for_each(|a| walk(a, out)),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

/// Result of evaluating an expression: either a storable cell value or a
/// transient boolean (booleans exist only during evaluation; they are not a
/// cell type).
#[derive(Debug, Clone, PartialEq)]
pub enum ExprValue {
    Data(Value),
    Bool(bool),
}

impl ExprValue {
    pub fn is_true(&self) -> bool {
        matches!(self, ExprValue::Bool(true))
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
}

/// Evaluate `e` against one row. `rank` is the row's zero-based position from
/// the most recent `orderby`, when one is in effect; without it `Rank`
/// evaluates to `Null`.
pub fn eval_expr(e: &Expr, row: &Record, rank: Option<usize>) -> Result<ExprValue, EvalError> {
    match e {
        Expr::Literal(v) => Ok(ExprValue::Data(v.clone())),
        Expr::Column(name) => row
            .get(name)
            .cloned()
            .map(ExprValue::Data)
            .ok_or_else(|| EvalError::UnknownColumn(name.clone())),
        Expr::Rank => Ok(ExprValue::Data(match rank {
            Some(r) => Value::Quantitative(r as f64),
            None => Value::Null,
        })),
        Expr::Compare { op, lhs, rhs } => {
            let l = eval_expr(lhs, row, rank)?;
            let r = eval_expr(rhs, row, rank)?;
            Ok(ExprValue::Bool(compare(*op, &l, &r)))
        }
        Expr::Arith { op, lhs, rhs } => {
            let l = eval_expr(lhs, row, rank)?;
            let r = eval_expr(rhs, row, rank)?;
            Ok(ExprValue::Data(arith(*op, &l, &r)))
        }
        Expr::Logic { op, args } => {
            let mut bits = Vec::with_capacity(args.len());
            for a in args {
                bits.push(truthy(&eval_expr(a, row, rank)?));
            }
            Ok(ExprValue::Bool(match op {
                LogicOp::And => bits.iter().all(|b| *b),
                LogicOp::Or => bits.iter().any(|b| *b),
                LogicOp::Not => !bits.first().copied().unwrap_or(false),
            }))
        }
    }
}

/// Comparison never errors. Null on either side is false; ordering is defined
/// only within a single value kind (numbers, dates, or strings), and a
/// cross-kind ordering test is false.
fn compare(op: CompareOp, l: &ExprValue, r: &ExprValue) -> bool {
    use std::cmp::Ordering;
    let ord = |o: Ordering| match op {
        CompareOp::Lt => o == Ordering::Less,
        CompareOp::Le => o != Ordering::Greater,
        CompareOp::Ge => o != Ordering::Less,
        CompareOp::Gt => o == Ordering::Greater,
        CompareOp::Eq | CompareOp::Ne => unreachable!("handled before ordering"),
    };
    match (l, r) {
        (ExprValue::Bool(a), ExprValue::Bool(b)) => match op {
            CompareOp::Eq => a == b,
            CompareOp::Ne => a != b,
            _ => false,
        },
        (ExprValue::Data(a), ExprValue::Data(b)) => {
            if a.is_null() || b.is_null() {
                return false;
            }
            match op {
                CompareOp::Eq => a == b,
                CompareOp::Ne => a != b,
                _ => match (a, b) {
                    (Value::Quantitative(x), Value::Quantitative(y)) => {
                        x.partial_cmp(y).map(ord).unwrap_or(false)
                    }
                    (Value::Temporal(x), Value::Temporal(y)) => ord(x.cmp(y)),
                    (Value::Nominal(x), Value::Nominal(y)) => ord(x.cmp(y)),
                    _ => false,
                },
            }
        }
        _ => false,
    }
}

/// Arithmetic is numeric: quantitative payloads and temporal milliseconds.
/// Anything else, including Null and division by zero, yields Null.
fn arith(op: ArithOp, l: &ExprValue, r: &ExprValue) -> Value {
    let (x, y) = match (l, r) {
        (ExprValue::Data(a), ExprValue::Data(b)) => match (a.as_number(), b.as_number()) {
            (Some(x), Some(y)) => (x, y),
            _ => return Value::Null,
        },
        _ => return Value::Null,
    };
    let out = match op {
        ArithOp::Add => x + y,
        ArithOp::Sub => x - y,
        ArithOp::Mul => x * y,
        ArithOp::Div => x / y,
    };
    if out.is_finite() {
        Value::Quantitative(out)
    } else {
        Value::Null
    }
}

fn truthy(v: &ExprValue) -> bool {
    matches!(v, ExprValue::Bool(true))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(pairs: &[(&str, Value)]) -> Record {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn rank_compare_keeps_top_three() {
        let e = Expr::compare(CompareOp::Le, Expr::Rank, Expr::number(2.0));
        let r = Record::new();
        assert!(eval_expr(&e, &r, Some(2)).unwrap().is_true());
        assert!(!eval_expr(&e, &r, Some(3)).unwrap().is_true());
    }

    #[test]
    fn additive_identity() {
        let e = Expr::arith(ArithOp::Add, Expr::number(0.0), Expr::column("a"));
        let r = row(&[("a", Value::Quantitative(5.0))]);
        assert_eq!(eval_expr(&e, &r, None).unwrap(), ExprValue::Data(Value::Quantitative(5.0)));
    }

    #[test]
    fn comparison_with_null_is_false() {
        let r = row(&[("a", Value::Null)]);
        for op in [CompareOp::Gt, CompareOp::Eq, CompareOp::Ne] {
            let e = Expr::compare(op, Expr::column("a"), Expr::number(1.0));
            assert!(!eval_expr(&e, &r, None).unwrap().is_true(), "{op:?}");
        }
    }

    #[test]
    fn null_propagates_through_arithmetic() {
        let e = Expr::arith(ArithOp::Mul, Expr::column("a"), Expr::number(2.0));
        let r = row(&[("a", Value::Null)]);
        assert_eq!(eval_expr(&e, &r, None).unwrap(), ExprValue::Data(Value::Null));
    }

    #[test]
    fn division_by_zero_is_null() {
        let e = Expr::arith(ArithOp::Div, Expr::number(1.0), Expr::number(0.0));
        assert_eq!(eval_expr(&e, &Record::new(), None).unwrap(), ExprValue::Data(Value::Null));
    }

    #[test]
    fn strings_order_lexicographically() {
        let e = Expr::compare(CompareOp::Lt, Expr::text("apple"), Expr::text("banana"));
        assert!(eval_expr(&e, &Record::new(), None).unwrap().is_true());
    }

    #[test]
    fn cross_kind_ordering_is_false_but_inequality_holds() {
        let lt = Expr::compare(CompareOp::Lt, Expr::text("1"), Expr::number(2.0));
        assert!(!eval_expr(&lt, &Record::new(), None).unwrap().is_true());
        let ne = Expr::compare(CompareOp::Ne, Expr::text("1"), Expr::number(1.0));
        assert!(eval_expr(&ne, &Record::new(), None).unwrap().is_true());
    }

    #[test]
    fn unknown_column_is_an_error_but_null_cell_is_not() {
        let e = Expr::column("missing");
        assert!(matches!(
            eval_expr(&e, &Record::new(), None),
            Err(EvalError::UnknownColumn(name)) if name == "missing"
        ));
        let r = row(&[("missing", Value::Null)]);
        assert_eq!(eval_expr(&e, &r, None).unwrap(), ExprValue::Data(Value::Null));
    }

    #[test]
    fn rank_without_order_context_is_null() {
        let e = Expr::compare(CompareOp::Le, Expr::Rank, Expr::number(2.0));
        assert!(!eval_expr(&e, &Record::new(), None).unwrap().is_true());
    }

    #[test]
    fn logic_ops_combine_comparisons() {
        let t = Expr::compare(CompareOp::Eq, Expr::number(1.0), Expr::number(1.0));
        let f = Expr::compare(CompareOp::Eq, Expr::number(1.0), Expr::number(2.0));
        let and = Expr::Logic { op: LogicOp::And, args: vec![t.clone(), f.clone()] };
        let or = Expr::Logic { op: LogicOp::Or, args: vec![t.clone(), f.clone()] };
        let not = Expr::Logic { op: LogicOp::Not, args: vec![f] };
        assert!(!eval_expr(&and, &Record::new(), None).unwrap().is_true());
        assert!(eval_expr(&or, &Record::new(), None).unwrap().is_true());
        assert!(eval_expr(&not, &Record::new(), None).unwrap().is_true());
    }

    #[test]
    fn columns_lists_each_name_once() {
        let e = Expr::arith(
            ArithOp::Add,
            Expr::column("a"),
            Expr::arith(ArithOp::Mul, Expr::column("b"), Expr::column("a")),
        );
        assert_eq!(e.columns(), ["a", "b"]);
    }
}
