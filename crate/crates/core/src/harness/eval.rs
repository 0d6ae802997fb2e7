use std::time::Instant;

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::data::{round_half_up, standardize, Dataset, Split};
use crate::models::{auroc, fit_logreg, grid_search_cv, FitOptions, Penalty, DEFAULT_C_GRID};
use crate::selectors::{lasso_path_ranking, FeatureScores};

use super::HarnessError;

/// `max(1, round_half_up(p · n))`. A tiny epsilon absorbs representation
/// error in products such as `0.3 · 5`.
pub fn k_for_proportion(proportion: f64, n_features: usize) -> usize {
    round_half_up(proportion * n_features as f64 + 1e-9).clamp(1, n_features.max(1))
}

fn collapse(proportions: &[f64], n_features: usize) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::with_capacity(proportions.len());
    for &p in proportions {
        let k = k_for_proportion(p, n_features);
        if out.last().is_none_or(|&(_, prev)| prev != k) {
            out.push((p, k));
        }
    }
    out
}

/// Proportions 0.1, 0.2, …, 1.0 with their feature counts; repeated counts
/// keep only the smallest proportion.
pub fn proportions_to_k(n_features: usize) -> Vec<(f64, usize)> {
    let props: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    collapse(&props, n_features)
}

/// Settings of the downstream evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub folds: usize,
    pub c_grid: Vec<f64>,
    /// Ascending proportions in (0, 1].
    pub proportions: Vec<f64>,
    pub fit: FitOptions,
    /// Seed of the CV fold assignment.
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            c_grid: DEFAULT_C_GRID.to_vec(),
            proportions: (1..=10).map(|i| i as f64 / 10.0).collect(),
            fit: FitOptions::default(),
            seed: 42,
        }
    }
}

impl EvalConfig {
    pub fn points(&self, n_features: usize) -> Vec<(f64, usize)> {
        collapse(&self.proportions, n_features)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub proportion: f64,
    pub k: usize,
    pub auroc: f64,
    pub best_c: f64,
    /// The top-k features, listed in dataset column order.
    pub selected: Vec<String>,
    /// Set when every selected column is constant on the train partition;
    /// the AUROC is then recorded as 0.5.
    #[serde(default)]
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCurve {
    pub method: String,
    pub dataset: String,
    pub seed: u64,
    /// The downstream model is L1 rather than L2 logistic regression.
    #[serde(default)]
    pub lasso_special: bool,
    pub ranking: Vec<String>,
    pub points: Vec<EvalPoint>,
    /// Wall-clock figures vary between runs and are reported separately.
    #[serde(skip_serializing, default)]
    pub selector_runtime_seconds: f64,
    #[serde(skip_serializing, default)]
    pub eval_runtime_seconds: f64,
}

fn evaluate_standardized(
    ds_std: &Dataset,
    split: &Split,
    ranking: &FeatureScores,
    k: usize,
    proportion: f64,
    penalty: Penalty,
    cfg: &EvalConfig,
) -> Result<EvalPoint, HarnessError> {
    let n = ds_std.n_features();
    if k == 0 || k > n {
        return Err(HarnessError::InvalidK { k, n });
    }
    let mut features = ranking.top_k(ds_std, k)?;
    features.sort_unstable();
    let names = ds_std.feature_names();
    let selected: Vec<String> = features.iter().map(|&f| names[f].clone()).collect();
    let cols = ds_std.columns_for(&features);
    let x = ds_std.x().select(Axis(1), &cols);
    let train_x = x.select(Axis(0), &split.train_indices);
    let test_x = x.select(Axis(0), &split.test_indices);
    let train_y: Vec<u8> = split.train_indices.iter().map(|&i| ds_std.y()[i]).collect();
    let test_y: Vec<u8> = split.test_indices.iter().map(|&i| ds_std.y()[i]).collect();

    let constant = train_x.columns().into_iter().all(|c| c.iter().all(|&v| v == c[0]));
    if constant {
        return Ok(EvalPoint {
            proportion,
            k,
            auroc: 0.5,
            best_c: cfg.c_grid.iter().copied().fold(f64::INFINITY, f64::min),
            selected,
            degenerate: true,
        });
    }
    let model_err = |source| HarnessError::Model { k, source };
    let cv = grid_search_cv(train_x.view(), &train_y, &cfg.c_grid, cfg.folds, penalty, cfg.seed, &cfg.fit)
        .map_err(model_err)?;
    let model = fit_logreg(train_x.view(), &train_y, penalty, cv.best_c, &cfg.fit).map_err(model_err)?;
    let scores = model.decision_function(test_x.view()).map_err(model_err)?;
    Ok(EvalPoint {
        proportion,
        k,
        auroc: auroc(&scores, &test_y).map_err(model_err)?,
        best_c: cv.best_c,
        selected,
        degenerate: false,
    })
}

/// Test AUROC of a grid-searched logistic regression on the top-`k`
/// features of `ranking`, standardized on the train partition.
pub fn evaluate_selection(
    ds: &Dataset,
    split: &Split,
    ranking: &FeatureScores,
    k: usize,
    penalty: Penalty,
    cfg: &EvalConfig,
) -> Result<EvalPoint, HarnessError> {
    let proportion = k as f64 / ds.n_features() as f64;
    evaluate_standardized(&standardize(ds, split), split, ranking, k, proportion, penalty, cfg)
}

fn curve(
    ds: &Dataset,
    split: &Split,
    scores: &FeatureScores,
    penalty: Penalty,
    cfg: &EvalConfig,
) -> Result<EvalCurve, HarnessError> {
    if !scores.is_complete_for(ds) {
        return Err(HarnessError::IncompleteRanking {
            method: scores.method.clone(),
        });
    }
    let start = Instant::now();
    let ds_std = standardize(ds, split);
    let points = cfg
        .points(ds.n_features())
        .into_iter()
        .map(|(p, k)| evaluate_standardized(&ds_std, split, scores, k, p, penalty, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalCurve {
        method: scores.method.clone(),
        dataset: ds.name().to_string(),
        seed: split.seed,
        lasso_special: penalty == Penalty::L1,
        ranking: scores.ranking.clone(),
        points,
        selector_runtime_seconds: scores.runtime_seconds,
        eval_runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// The L2 evaluation curve of a selector's ranking.
pub fn run_curve(ds: &Dataset, split: &Split, scores: &FeatureScores, cfg: &EvalConfig) -> Result<EvalCurve, HarnessError> {
    curve(ds, split, scores, Penalty::L2, cfg)
}

/// The LASSO curve: path ranking, then an L1 downstream model at every k.
pub fn run_lasso_curve(ds: &Dataset, split: &Split, cfg: &EvalConfig) -> Result<EvalCurve, HarnessError> {
    let start = Instant::now();
    let scores = lasso_path_ranking(&standardize(ds, split), split)?
        .with_runtime(start.elapsed());
    run_lasso_curve_with(ds, split, &scores, cfg)
}

/// The L1 downstream evaluation for an already computed LASSO ranking.
pub fn run_lasso_curve_with(
    ds: &Dataset,
    split: &Split,
    scores: &FeatureScores,
    cfg: &EvalConfig,
) -> Result<EvalCurve, HarnessError> {
    curve(ds, split, scores, Penalty::L1, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::stratified_split;
    use crate::selectors::{random_ranking, Method};
    use crate::synthetic;

    #[test]
    fn k_grid() {
        let ks: Vec<usize> = proportions_to_k(10).iter().map(|p| p.1).collect();
        assert_eq!(ks, (1..=10).collect::<Vec<_>>());
        assert_eq!(proportions_to_k(1), vec![(0.1, 1)]);
        assert_eq!(k_for_proportion(0.3, 8), 2);
        let pima = proportions_to_k(8);
        assert_eq!(pima.iter().map(|p| p.1).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(pima[1], (0.2, 2));
        assert_eq!(pima[2], (0.4, 3));
        assert_eq!(k_for_proportion(0.5, 5), 3);
        assert_eq!(k_for_proportion(0.3, 5), 2);
    }

    fn cfg() -> EvalConfig {
        EvalConfig {
            c_grid: vec![0.01, 1.0, 100.0],
            ..EvalConfig::default()
        }
    }

    #[test]
    fn informative_feature_alone_separates() {
        let ds = synthetic::logistic(600, 4, &[0], 4.0, 2);
        let split = stratified_split(&ds, 0.25, 2).unwrap();
        let good = FeatureScores::from_order("m", &ds, vec![0, 1, 2, 3], 0);
        let bad = FeatureScores::from_order("m", &ds, vec![3, 2, 1, 0], 0);
        let a = evaluate_selection(&ds, &split, &good, 1, Penalty::L2, &cfg()).unwrap();
        let b = evaluate_selection(&ds, &split, &bad, 1, Penalty::L2, &cfg()).unwrap();
        assert!(a.auroc >= 0.9, "{}", a.auroc);
        assert!((b.auroc - 0.5).abs() <= 0.1, "{}", b.auroc);
        assert_eq!(a.selected, vec!["x0"]);
    }

    #[test]
    fn full_set_is_method_independent() {
        let ds = synthetic::logistic(300, 5, &[1, 3], 1.0, 3);
        let split = stratified_split(&ds, 0.2, 3).unwrap();
        let c = cfg();
        let r1 = run_curve(&ds, &split, &random_ranking(&ds, 1), &c).unwrap();
        let mi = Method::Mi.run(&ds, &split, 3, &Default::default()).unwrap();
        let r2 = run_curve(&ds, &split, &mi, &c).unwrap();
        let last = |c: &EvalCurve| serde_json::to_string(c.points.last().unwrap()).unwrap();
        assert_eq!(last(&r1), last(&r2));
        // With five features 0.9 already rounds to the full set.
        assert_eq!(r1.points.last().unwrap().k, 5);
        assert_eq!(r1.points.last().unwrap().proportion, 0.9);
        assert_eq!(r1.points, run_curve(&ds, &split, &random_ranking(&ds, 1), &c).unwrap().points);
    }

    #[test]
    fn constant_selection_is_flagged() {
        let mut ds = synthetic::logistic(100, 2, &[1], 1.0, 0);
        let mut x = ds.x().to_owned();
        x.column_mut(0).fill(3.0);
        ds = ds.with_x(x);
        let split = stratified_split(&ds, 0.2, 0).unwrap();
        let r = FeatureScores::from_order("m", &ds, vec![0, 1], 0);
        let p = evaluate_selection(&ds, &split, &r, 1, Penalty::L2, &cfg()).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.auroc, 0.5);
    }

    #[test]
    fn lasso_curve_is_flagged_and_deterministic() {
        let ds = synthetic::logistic(300, 4, &[0, 2], 1.5, 5);
        let split = stratified_split(&ds, 0.2, 5).unwrap();
        let a = run_lasso_curve(&ds, &split, &cfg()).unwrap();
        let b = run_lasso_curve(&ds, &split, &cfg()).unwrap();
        assert!(a.lasso_special);
        assert_eq!(a.points, b.points);
        let json = serde_json::to_value(&a).unwrap();
        assert!(json.get("selector_runtime_seconds").is_none());
    }
}
