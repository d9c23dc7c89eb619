//! Ordinary least squares via the normal equations.

use crate::dataset::{Attribute, Record};

use super::{numeric, ModelError};

/// Fit coefficients `[intercept, w1, .., wk]` minimizing squared error.
/// Solves (XᵀX)β = Xᵀy with Gaussian elimination; a singular normal matrix
/// (collinear inputs, or fewer rows than coefficients) is degenerate data.
pub(crate) fn fit(
    inputs: &[Attribute],
    output: &str,
    rows: &[Record],
) -> Result<Vec<f64>, ModelError> {
    let k = inputs.len() + 1;
    let mut a = vec![vec![0.0f64; k]; k];
    let mut b = vec![0.0f64; k];
    for row in rows {
        let mut x = Vec::with_capacity(k);
        x.push(1.0);
        x.extend(inputs.iter().map(|attr| numeric(row, &attr.name)));
        let y = numeric(row, output);
        for i in 0..k {
            b[i] += x[i] * y;
            for j in 0..k {
                a[i][j] += x[i] * x[j];
            }
        }
    }
    solve(a, b).ok_or_else(|| ModelError::DegenerateData("singular design matrix".to_string()))
}

pub(crate) fn predict(beta: &[f64], xs: &[f64]) -> f64 {
    beta[0] + xs.iter().zip(&beta[1..]).map(|(x, w)| x * w).sum::<f64>()
}

/// Partial-pivot elimination. None when the matrix is singular to working
/// precision (pivot below 1e-12 relative to the largest entry).
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite sums")
        })?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..k {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for c in col..k {
                    a[row][c] -= factor * a[col][c];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut beta = vec![0.0f64; k];
    for row in (0..k).rev() {
        let tail: f64 = (row + 1..k).map(|c| a[row][c] * beta[c]).sum();
        beta[row] = (b[row] - tail) / a[row][row];
    }
    Some(beta)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use crate::dataset::Value;
    use crate::relationship::{
        predict_record, train_model, ModelKind, RelationshipModel, TrainedParameters,
    };

    use super::*;

    fn xy_rows(pairs: &[(f64, f64)]) -> Vec<Record> {
        pairs
            .iter()
            .map(|(x, y)| {
                let mut r = Record::new();
                r.insert("x".to_string(), Value::Quantitative(*x));
                r.insert("y".to_string(), Value::Quantitative(*y));
                r
            })
            .collect()
    }

    fn model() -> RelationshipModel {
        RelationshipModel::new(
            "line",
            ModelKind::LinearRegression,
            vec![Attribute::quantitative("x")],
            Some(Attribute::quantitative("y")),
            BTreeMap::new(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn exact_line_recovers_intercept_and_slope() {
        let rows = xy_rows(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        let trained = train_model(&model(), &rows).unwrap();
        let Some(TrainedParameters::Regression { beta }) = &trained.trained else {
            panic!("expected regression parameters");
        };
        assert!((beta[0] - 1.0).abs() < 1e-12);
        assert!((beta[1] - 2.0).abs() < 1e-12);
        let mut q = Record::new();
        q.insert("x".to_string(), Value::Quantitative(3.0));
        assert_eq!(predict_record(&trained, &q).unwrap(), Value::Quantitative(7.0));
    }

    #[test]
    fn residuals_are_orthogonal_to_the_design() {
        // Noisy data: the fit is not exact, but X'r must still vanish.
        let rows = xy_rows(&[(0.0, 0.9), (1.0, 3.2), (2.0, 4.9), (3.0, 7.3), (4.0, 8.6)]);
        let trained = train_model(&model(), &rows).unwrap();
        let Some(TrainedParameters::Regression { beta }) = &trained.trained else {
            panic!("expected regression parameters");
        };
        let mut dot_one = 0.0;
        let mut dot_x = 0.0;
        for row in &rows {
            let x = numeric(row, "x");
            let r = numeric(row, "y") - predict(beta, &[x]);
            dot_one += r;
            dot_x += r * x;
        }
        assert!(dot_one.abs() < 1e-9, "sum of residuals = {dot_one}");
        assert!(dot_x.abs() < 1e-9, "x-weighted residuals = {dot_x}");
    }

    #[test]
    fn constant_input_is_degenerate() {
        let rows = xy_rows(&[(2.0, 1.0), (2.0, 3.0), (2.0, 5.0)]);
        assert!(matches!(
            train_model(&model(), &rows),
            Err(ModelError::DegenerateData(_))
        ));
    }

    #[test]
    fn collinear_inputs_are_degenerate() {
        let m = RelationshipModel::new(
            "plane",
            ModelKind::LinearRegression,
            vec![Attribute::quantitative("a"), Attribute::quantitative("b")],
            Some(Attribute::quantitative("y")),
            BTreeMap::new(),
            0,
        )
        .unwrap();
        let rows: Vec<Record> = (0..6)
            .map(|i| {
                let mut r = Record::new();
                let x = i as f64;
                r.insert("a".to_string(), Value::Quantitative(x));
                r.insert("b".to_string(), Value::Quantitative(2.0 * x));
                r.insert("y".to_string(), Value::Quantitative(x + 1.0));
                r
            })
            .collect();
        assert!(matches!(train_model(&m, &rows), Err(ModelError::DegenerateData(_))));
    }

    #[test]
    fn two_inputs_recover_an_exact_plane() {
        let m = RelationshipModel::new(
            "plane",
            ModelKind::LinearRegression,
            vec![Attribute::quantitative("a"), Attribute::quantitative("b")],
            Some(Attribute::quantitative("y")),
            BTreeMap::new(),
            0,
        )
        .unwrap();
        // y = 4 - a + 3b on a small grid.
        let mut rows = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                let mut r = Record::new();
                r.insert("a".to_string(), Value::Quantitative(a as f64));
                r.insert("b".to_string(), Value::Quantitative(b as f64));
                r.insert(
                    "y".to_string(),
                    Value::Quantitative(4.0 - a as f64 + 3.0 * b as f64),
                );
                rows.push(r);
            }
        }
        let trained = train_model(&m, &rows).unwrap();
        let Some(TrainedParameters::Regression { beta }) = &trained.trained else {
            panic!("expected regression parameters");
        };
        for (got, want) in beta.iter().zip([4.0, -1.0, 3.0]) {
            assert!((got - want).abs() < 1e-9, "beta {got} vs {want}");
        }
    }
}
