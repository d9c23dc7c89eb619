//! Isolation forest outlier scoring.
//!
//! Each tree recursively splits a subsample on a random attribute at a
//! random point between the observed min and max; outliers isolate in short
//! paths. The anomaly score is 2^(-E[h(x)] / c(psi)) with the standard
//! normalizer c(m) = 2 H(m-1) - 2(m-1)/m computed from the exact harmonic
//! sum, so scores always land strictly inside (0, 1). All randomness comes
//! from one seeded ChaCha8 stream: same seed, same forest.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Attribute;

use super::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub enum IsoNode {
    Leaf {
        size: usize,
    },
    Split {
        attribute: String,
        value: f64,
        left: Box<IsoNode>,
        right: Box<IsoNode>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestState {
    pub trees: Vec<IsoNode>,
    /// Rows actually drawn per tree: min(subsample cap, n).
    pub subsample: usize,
    pub tree_count: usize,
    pub seed: u64,
}

/// Average path length of an unsuccessful binary search over m points. Zero
/// for m <= 1; c(2) = 1.
pub(crate) fn average_path_length(m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let harmonic: f64 = (1..m).map(|i| 1.0 / i as f64).sum();
    2.0 * harmonic - 2.0 * (m - 1) as f64 / m as f64
}

pub(crate) fn fit(
    inputs: &[Attribute],
    rows: &[Vec<f64>],
    tree_count: usize,
    subsample_cap: usize,
    seed: u64,
) -> Result<ForestState, ModelError> {
    let n = rows.len();
    if n < 2 {
        return Err(ModelError::DegenerateData(
            "isolation forest needs at least two records".to_string(),
        ));
    }
    let psi = subsample_cap.min(n);
    let height_limit = (psi as f64).log2().ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trees = Vec::with_capacity(tree_count);
    for _ in 0..tree_count {
        let chosen = rand::seq::index::sample(&mut rng, n, psi).into_vec();
        trees.push(build(rows, inputs, &chosen, 0, height_limit, &mut rng));
    }
    Ok(ForestState { trees, subsample: psi, tree_count, seed })
}

fn build(
    rows: &[Vec<f64>],
    inputs: &[Attribute],
    idx: &[usize],
    depth: usize,
    limit: usize,
    rng: &mut ChaCha8Rng,
) -> IsoNode {
    if depth >= limit || idx.len() <= 1 {
        return IsoNode::Leaf { size: idx.len() };
    }
    let mut candidates = Vec::new();
    for a in 0..inputs.len() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in idx {
            lo = lo.min(rows[i][a]);
            hi = hi.max(rows[i][a]);
        }
        if hi > lo {
            candidates.push((a, lo, hi));
        }
    }
    if candidates.is_empty() {
        return IsoNode::Leaf { size: idx.len() };
    }
    let (a, lo, hi) = candidates[rng.random_range(0..candidates.len())];
    let value = rng.random_range(lo..hi);
    let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][a] < value);
    IsoNode::Split {
        attribute: inputs[a].name.clone(),
        value,
        left: Box::new(build(rows, inputs, &left, depth + 1, limit, rng)),
        right: Box::new(build(rows, inputs, &right, depth + 1, limit, rng)),
    }
}

fn path_length(node: &IsoNode, point: &BTreeMap<&str, f64>, depth: f64) -> f64 {
    match node {
        IsoNode::Leaf { size } => depth + average_path_length(*size),
        IsoNode::Split { attribute, value, left, right } => {
            let x = point[attribute.as_str()];
            let child = if x < *value { left } else { right };
            path_length(child, point, depth + 1.0)
        }
    }
}

pub(crate) fn score(state: &ForestState, point: &BTreeMap<&str, f64>) -> f64 {
    let mean: f64 = state
        .trees
        .iter()
        .map(|t| path_length(t, point, 0.0))
        .sum::<f64>()
        / state.trees.len() as f64;
    2f64.powf(-mean / average_path_length(state.subsample))
}
