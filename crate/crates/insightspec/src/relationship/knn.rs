//! k-nearest-neighbor classification over mixed attribute types.
//!
//! Distance is the Euclidean norm over standardized quantitative inputs plus
//! a 0/1 mismatch count over categorical inputs. Standardization scales come
//! from the training set; a zero-spread attribute keeps scale 1 so it simply
//! stops discriminating. Neighbor ties break toward the earlier training
//! row, vote ties toward the closest supporting neighbor, so prediction is
//! deterministic.

use std::cmp::Ordering;

use crate::dataset::{Attribute, AttributeType, Record};

use super::{categorical, numeric};

#[derive(Debug, Clone, PartialEq)]
pub struct NumericScale {
    pub attribute: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnState {
    pub k: usize,
    pub scales: Vec<NumericScale>,
    /// Training rows restricted to the model's attributes.
    pub examples: Vec<Record>,
}

pub(crate) fn fit(inputs: &[Attribute], rows: &[Record], k: usize) -> KnnState {
    let scales = inputs
        .iter()
        .filter(|a| a.attribute_type == AttributeType::Quantitative)
        .map(|a| {
            let xs: Vec<f64> = rows.iter().map(|r| numeric(r, &a.name)).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
            let std = var.sqrt();
            NumericScale {
                attribute: a.name.clone(),
                mean,
                std: if std > 0.0 { std } else { 1.0 },
            }
        })
        .collect();
    KnnState { k, scales, examples: rows.to_vec() }
}

pub(crate) fn distance(state: &KnnState, inputs: &[Attribute], a: &Record, b: &Record) -> f64 {
    let mut squared = 0.0;
    let mut mismatches = 0.0;
    for attr in inputs {
        if attr.attribute_type == AttributeType::Quantitative {
            let scale = state
                .scales
                .iter()
                .find(|s| s.attribute == attr.name)
                .expect("every quantitative input is scaled at training time");
            let d = (numeric(a, &attr.name) - numeric(b, &attr.name)) / scale.std;
            squared += d * d;
        } else if categorical(a, &attr.name) != categorical(b, &attr.name) {
            mismatches += 1.0;
        }
    }
    squared.sqrt() + mismatches
}

pub(crate) fn predict(
    state: &KnnState,
    inputs: &[Attribute],
    output: &str,
    query: &Record,
) -> String {
    let mut order: Vec<(f64, usize)> = state
        .examples
        .iter()
        .enumerate()
        .map(|(i, e)| (distance(state, inputs, query, e), i))
        .collect();
    order.sort_by(|x, y| {
        x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal).then(x.1.cmp(&y.1))
    });
    let k = state.k.min(order.len());
    // Votes in neighbor order; the winner on a tied count is the label whose
    // closest supporter comes first.
    let mut votes: Vec<(&str, usize)> = Vec::new();
    for (_, i) in &order[..k] {
        let label = categorical(&state.examples[*i], output);
        match votes.iter_mut().find(|(l, _)| *l == label) {
            Some((_, n)) => *n += 1,
            None => votes.push((label, 1)),
        }
    }
    let top = votes.iter().map(|(_, n)| *n).max().expect("k >= 1");
    votes
        .iter()
        .find(|(_, n)| *n == top)
        .map(|(l, _)| l.to_string())
        .expect("at least one vote")
}
