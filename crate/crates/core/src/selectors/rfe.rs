use ndarray::Axis;

use crate::data::{standardize, Dataset, Split};
use crate::models::{fit_logreg, FitOptions, Penalty};

use super::{FeatureScores, SelectError};

/// Inverse regularization of the inner model used by wrapper selectors.
pub(crate) const INNER_C: f64 = 1.0;

/// Recursive feature elimination with an L2 logistic regression.
///
/// Each round refits on the surviving features and drops the one whose
/// encoded coefficients have the smallest Euclidean norm (ties drop the later
/// column). The reverse elimination order is the ranking.
pub fn rfe_ranking(ds: &Dataset, split: &Split) -> Result<FeatureScores, SelectError> {
    let (remaining, mut eliminated) = eliminate(ds, split, 1)?;
    eliminated.extend(remaining);
    eliminated.reverse();
    Ok(FeatureScores::from_order("rfe", ds, eliminated, 0))
}

/// The features left when elimination stops at `k` survivors, in column order.
pub fn rfe_survivors(ds: &Dataset, split: &Split, k: usize) -> Result<Vec<usize>, SelectError> {
    Ok(eliminate(ds, split, k.max(1))?.0)
}

/// Runs elimination until `keep` features remain; returns the survivors and
/// the eliminated features in elimination order.
fn eliminate(ds: &Dataset, split: &Split, keep: usize) -> Result<(Vec<usize>, Vec<usize>), SelectError> {
    let ds_std = standardize(ds, split);
    let train_x = ds_std.x().select(Axis(0), &split.train_indices);
    let train_y: Vec<u8> = split.train_indices.iter().map(|&i| ds.y()[i]).collect();
    let opts = FitOptions::default();

    let mut remaining: Vec<usize> = (0..ds.n_features()).collect();
    let mut eliminated = Vec::with_capacity(remaining.len());
    let mut step = 0;
    while remaining.len() > keep {
        step += 1;
        let cols = ds.columns_for(&remaining);
        let x = train_x.select(Axis(1), &cols);
        let model = fit_logreg(x.view(), &train_y, Penalty::L2, INNER_C, &opts)
            .map_err(|source| SelectError::EliminationFit { step, source })?;
        let weight_of = |col: usize| model.weights[cols.binary_search(&col).expect("column is selected")];
        let norms: Vec<f64> = remaining
            .iter()
            .map(|&f| ds.column_groups()[f].iter().map(|&c| weight_of(c).powi(2)).sum::<f64>().sqrt())
            .collect();
        let mut weakest = 0;
        for k in 1..remaining.len() {
            if norms[k] <= norms[weakest] {
                weakest = k;
            }
        }
        eliminated.push(remaining.remove(weakest));
    }
    Ok((remaining, eliminated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::stratified_split;
    use crate::synthetic;
    use ndarray::array;

    #[test]
    fn copy_of_target_survives() {
        let mut wins = 0;
        for seed in 0..20 {
            let ds = synthetic::copy_target(300, 4, 2, seed);
            let split = stratified_split(&ds, 0.2, seed).unwrap();
            let r = rfe_ranking(&ds, &split).unwrap();
            wins += usize::from(r.ranking[0] == "x2");
        }
        assert!(wins >= 19, "{wins}/20");
    }

    #[test]
    fn ranking_prefix_matches_early_stop() {
        let ds = synthetic::logistic(400, 6, &[1, 4], 2.0, 5);
        let split = stratified_split(&ds, 0.2, 5).unwrap();
        let full = rfe_ranking(&ds, &split).unwrap();
        for k in 1..=6 {
            let mut prefix = full.top_k(&ds, k).unwrap();
            prefix.sort_unstable();
            assert_eq!(prefix, rfe_survivors(&ds, &split, k).unwrap());
        }
    }

    #[test]
    fn single_feature_scores_one() {
        let ds = Dataset::from_numeric("one", vec!["a".into()], array![[0.0], [1.0], [2.0], [3.0]], vec![0, 1, 0, 1])
            .unwrap();
        let split = Split {
            train_indices: vec![0, 1, 2, 3],
            test_indices: vec![],
            seed: 0,
        };
        let r = rfe_ranking(&ds, &split).unwrap();
        assert_eq!(r.ranking, vec!["a"]);
        assert_eq!(r.scores["a"], 1.0);
    }
}
