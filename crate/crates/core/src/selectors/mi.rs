//! Plug-in mutual information on discretized features.

use crate::data::{impute_missing, Dataset, FeatureKind, Split};

use super::FeatureScores;

/// Equal-frequency bins used for numeric features.
pub const N_BINS: usize = 10;

/// Bin edges from the sorted train values: the value at each decile,
/// deduplicated. A value falls in the bin counting the edges below it.
fn equal_frequency_edges(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let mut edges: Vec<f64> = (1..N_BINS)
        .map(|q| values[((q * n).div_ceil(N_BINS)).saturating_sub(1).min(n - 1)])
        .collect();
    edges.dedup();
    edges
}

/// Discrete codes of one original feature on the given rows. Numeric bins
/// are fit on those same rows.
pub fn discretize(ds: &Dataset, feature: usize, rows: &[usize]) -> Vec<usize> {
    match ds.features()[feature].kind {
        FeatureKind::Categorical => {
            let codes = ds.category_codes(feature);
            rows.iter().map(|&i| codes[i]).collect()
        }
        FeatureKind::Numeric => {
            let col = ds.column_groups()[feature][0];
            let values: Vec<f64> = rows.iter().map(|&i| ds.x()[[i, col]]).collect();
            let edges = equal_frequency_edges(values.clone());
            values.iter().map(|v| edges.partition_point(|e| e < v)).collect()
        }
    }
}

fn entropy_of_counts(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(A; B) = H(A) + H(B) - H(A, B)` in nats from paired discrete codes,
/// clipped at zero.
pub fn mutual_information(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "paired samples required");
    if a.is_empty() {
        return 0.0;
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0usize; ka * kb];
    let mut ca = vec![0usize; ka];
    let mut cb = vec![0usize; kb];
    for (&u, &v) in a.iter().zip(b) {
        joint[u * kb + v] += 1;
        ca[u] += 1;
        cb[v] += 1;
    }
    let n = a.len() as f64;
    let h = entropy_of_counts(ca.into_iter(), n) + entropy_of_counts(cb.into_iter(), n)
        - entropy_of_counts(joint.into_iter(), n);
    h.max(0.0)
}

/// Discrete codes of every original feature on the train rows, plus the
/// train labels as codes.
pub(crate) fn train_codes(ds: &Dataset, split: &Split) -> (Vec<Vec<usize>>, Vec<usize>) {
    let ds = impute_missing(ds, split);
    let rows = &split.train_indices;
    let codes = (0..ds.n_features()).map(|f| discretize(&ds, f, rows)).collect();
    let y = rows.iter().map(|&i| usize::from(ds.y()[i])).collect();
    (codes, y)
}

/// `I(f; y)` for every original feature on the train partition.
pub fn mutual_information_scores(ds: &Dataset, split: &Split) -> FeatureScores {
    let (codes, y) = train_codes(ds, split);
    let scores = codes.iter().map(|c| mutual_information(c, &y)).collect();
    FeatureScores::from_scores("mi", ds, scores, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    /// Oracle: direct summation of p(a,b)·ln(p(a,b) / (p(a)·p(b))).
    fn direct_mi(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len() as f64;
        let mut total = 0.0;
        let la: std::collections::BTreeSet<_> = a.iter().collect();
        let lb: std::collections::BTreeSet<_> = b.iter().collect();
        for &&u in &la {
            for &&v in &lb {
                let pj = a.iter().zip(b).filter(|(x, y)| **x == u && **y == v).count() as f64 / n;
                if pj == 0.0 {
                    continue;
                }
                let pa = a.iter().filter(|x| **x == u).count() as f64 / n;
                let pb = b.iter().filter(|y| **y == v).count() as f64 / n;
                total += pj * (pj / (pa * pb)).ln();
            }
        }
        total
    }

    #[test]
    fn identical_balanced_binary_is_ln_two() {
        let a = [0, 1, 0, 1, 1, 0];
        assert!((mutual_information(&a, &a) - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn balanced_independent_table_is_zero() {
        let a = [0, 0, 1, 1];
        let b = [0, 1, 0, 1];
        assert_eq!(mutual_information(&a, &b), 0.0);
    }

    #[test]
    fn three_levels_match_direct_summation() {
        let a = [0, 0, 0, 1, 1, 2, 2, 2, 2, 1, 0, 2];
        let b = [0, 1, 0, 1, 1, 0, 0, 1, 0, 0, 0, 1];
        assert!((mutual_information(&a, &b) - direct_mi(&a, &b)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn matches_oracle_and_is_symmetric(
            pairs in prop::collection::vec((0usize..4, 0usize..3), 1..80)
        ) {
            let a: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let mi = mutual_information(&a, &b);
            prop_assert!(mi >= 0.0);
            prop_assert!((mi - direct_mi(&a, &b).max(0.0)).abs() < 1e-12);
            prop_assert!((mi - mutual_information(&b, &a)).abs() < 1e-12);
        }
    }

    #[test]
    fn deciles_of_a_ramp() {
        let codes = {
            let x = Array2::from_shape_fn((100, 1), |(i, _)| i as f64);
            let y = (0..100).map(|i| (i % 2) as u8).collect();
            let ds = Dataset::from_numeric("r", vec!["f".into()], x, y).unwrap();
            discretize(&ds, 0, &(0..100).collect::<Vec<_>>())
        };
        for (i, c) in codes.iter().enumerate() {
            assert_eq!(*c, i / 10);
        }
    }

    #[test]
    fn scaling_a_feature_keeps_the_ranking() {
        let n = 200;
        let x = Array2::from_shape_fn((n, 3), |(i, j)| ((i * (j + 3) * 7919) % 101) as f64 + if j == 1 { (i % 2) as f64 * 30.0 } else { 0.0 });
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let names = vec!["a".into(), "b".into(), "c".into()];
        let ds = Dataset::from_numeric("s", names.clone(), x.clone(), y.clone()).unwrap();
        let mut scaled = x;
        scaled.column_mut(1).mapv_inplace(|v| v * 1000.0);
        let ds2 = Dataset::from_numeric("s", names, scaled, y).unwrap();
        let split = crate::data::stratified_split(&ds, 0.25, 1).unwrap();
        let r1 = mutual_information_scores(&ds, &split);
        let r2 = mutual_information_scores(&ds2, &split);
        assert_eq!(r1.ranking, r2.ranking);
        assert_eq!(r1.ranking[0], "b");
    }
}
