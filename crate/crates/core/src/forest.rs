//! Random forest classifier with Gini impurity-decrease feature importances.

use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, Split};
use crate::rng;
use crate::selectors::FeatureScores;

#[derive(Debug, Error, PartialEq)]
pub enum ForestError {
    #[error("a forest needs at least one tree")]
    NoTrees,
    #[error("min_leaf must be at least 1")]
    InvalidMinLeaf,
    #[error("labels contain a single class")]
    SingleClass,
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        column: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Bootstrap-weighted class counts `[negatives, positives]`.
    Leaf { counts: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    column,
                    threshold,
                    left,
                    right,
                } => at = if row[*column] <= *threshold { *left } else { *right },
                Node::Leaf { counts } => return counts[1] / (counts[0] + counts[1]),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_trees: usize,
    pub seed: u64,
    /// Per encoded column; sums to 1, or all zero if no tree ever split.
    pub importances: Vec<f64>,
}

impl ForestModel {
    /// Mean leaf positive fraction across trees.
    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|row| {
                let row = row.to_vec();
                self.trees.iter().map(|t| t.predict_row(&row)).sum::<f64>() / self.trees.len() as f64
            })
            .collect()
    }
}

/// Permutation that sorts rows lexicographically by features then label, so
/// the fit does not depend on the order rows arrive in.
fn canonical_order(x: &ArrayView2<'_, f64>, y: &[u8]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.sort_by(|&a, &b| {
        x.row(a)
            .iter()
            .zip(x.row(b).iter())
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(y[a].cmp(&y[b]))
    });
    order
}

pub fn fit_forest(x: ArrayView2<'_, f64>, y: &[u8], params: &ForestParams) -> Result<ForestModel, ForestError> {
    if params.n_trees == 0 {
        return Err(ForestError::NoTrees);
    }
    if params.min_leaf == 0 {
        return Err(ForestError::InvalidMinLeaf);
    }
    if x.nrows() != y.len() {
        return Err(ForestError::LengthMismatch {
            rows: x.nrows(),
            labels: y.len(),
        });
    }
    if !y.contains(&0) || !y.contains(&1) {
        return Err(ForestError::SingleClass);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ForestError::NonFinite);
    }

    let order = canonical_order(&x, y);
    let xs = x.select(Axis(0), &order);
    let ys: Vec<u8> = order.iter().map(|&i| y[i]).collect();
    // Column-major copy: node scans read one column at a time.
    let columns: Vec<Vec<f64>> = xs.columns().into_iter().map(|c| c.to_vec()).collect();

    let grown: Vec<(Tree, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(&columns, &ys, params, t as u64))
        .collect();

    let d = x.ncols();
    let mut importances = vec![0.0; d];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, imp) in grown {
        for (acc, v) in importances.iter_mut().zip(&imp) {
            *acc += v / params.n_trees as f64;
        }
        trees.push(tree);
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    }
    Ok(ForestModel {
        trees,
        n_trees: params.n_trees,
        seed: params.seed,
        importances,
    })
}

/// `n·Gini` for weighted class counts.
fn weighted_gini(c0: f64, c1: f64) -> f64 {
    let n = c0 + c1;
    if n == 0.0 {
        0.0
    } else {
        n - (c0 * c0 + c1 * c1) / n
    }
}

struct Candidate {
    gain: f64,
    column: usize,
    threshold: f64,
}

fn grow_tree(columns: &[Vec<f64>], y: &[u8], params: &ForestParams, tree_index: u64) -> (Tree, Vec<f64>) {
    let n = y.len();
    let d = columns.len();
    let mut rng = rng::stream(params.seed, rng::FOREST_BASE + tree_index);
    let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mtry = ((d as f64).sqrt().ceil() as usize).clamp(1, d);
    let mut importance = vec![0.0; d];
    let mut nodes: Vec<Node> = vec![Node::Leaf { counts: [0.0; 2] }];
    let min_leaf = params.min_leaf as f64;

    // (node slot, rows in node, depth)
    let mut stack = vec![(0usize, sample, 0usize)];
    let mut scratch: Vec<(f64, u8)> = Vec::with_capacity(n);
    let mut all_columns: Vec<usize> = (0..d).collect();
    while let Some((slot, rows, depth)) = stack.pop() {
        let c1 = rows.iter().filter(|&&i| y[i] == 1).count() as f64;
        let c0 = rows.len() as f64 - c1;
        let leaf = Node::Leaf { counts: [c0, c1] };
        let depth_ok = params.max_depth.is_none_or(|m| depth < m);
        if c0 == 0.0 || c1 == 0.0 || !depth_ok || (rows.len() as f64) < 2.0 * min_leaf {
            nodes[slot] = leaf;
            continue;
        }

        let parent = weighted_gini(c0, c1);
        // Candidates are scanned in draw order, so exact ties between
        // duplicated columns do not systematically favour the lower index.
        let (features, _) = all_columns.partial_shuffle(&mut rng, mtry);
        let features = features.to_vec();
        let mut best: Option<Candidate> = None;
        for &col in &features {
            scratch.clear();
            scratch.extend(rows.iter().map(|&i| (columns[col][i], y[i])));
            scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut l0, mut l1) = (0.0, 0.0);
            for k in 0..scratch.len() - 1 {
                if scratch[k].1 == 1 {
                    l1 += 1.0;
                } else {
                    l0 += 1.0;
                }
                let (v, next) = (scratch[k].0, scratch[k + 1].0);
                if v == next {
                    continue;
                }
                let left_n = (k + 1) as f64;
                let right_n = scratch.len() as f64 - left_n;
                if left_n < min_leaf || right_n < min_leaf {
                    continue;
                }
                let gain = parent - weighted_gini(l0, l1) - weighted_gini(c0 - l0, c1 - l1);
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = v + (next - v) / 2.0;
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(Candidate {
                        gain,
                        column: col,
                        threshold,
                    });
                }
            }
        }

        let Some(best) = best else {
            nodes[slot] = leaf;
            continue;
        };
        importance[best.column] += best.gain / n as f64;
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| columns[best.column][i] <= best.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { counts: [0.0; 2] });
        let right = nodes.len();
        nodes.push(Node::Leaf { counts: [0.0; 2] });
        nodes[slot] = Node::Split {
            column: best.column,
            threshold: best.threshold,
            left,
            right,
        };
        stack.push((right, right_rows, depth + 1));
        stack.push((left, left_rows, depth + 1));
    }
    (Tree { nodes }, importance)
}

/// Aggregates encoded-column importances to original features and
/// renormalizes. A forest that never split scores every feature equally.
pub fn forest_feature_scores(model: &ForestModel, ds: &Dataset) -> FeatureScores {
    let mut scores: Vec<f64> = ds
        .column_groups()
        .iter()
        .map(|g| g.iter().map(|&c| model.importances[c]).sum())
        .collect();
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        scores.iter_mut().for_each(|s| *s /= total);
    } else {
        let l = scores.len() as f64;
        scores.iter_mut().for_each(|s| *s = 1.0 / l);
    }
    FeatureScores::from_scores("rf", ds, scores, model.seed)
}

/// The RF selector: fit on the train partition and score original features.
pub fn rf_feature_scores(ds: &Dataset, split: &Split, params: &ForestParams) -> Result<FeatureScores, ForestError> {
    let start = Instant::now();
    let prepared = crate::data::impute_missing(ds, split);
    let x: Array2<f64> = prepared.x().select(Axis(0), &split.train_indices);
    let y: Vec<u8> = split.train_indices.iter().map(|&i| ds.y()[i]).collect();
    let model = fit_forest(x.view(), &y, params)?;
    Ok(forest_feature_scores(&model, ds).with_runtime(start.elapsed()))
}
