//! Greedy minimum-redundancy maximum-relevance ranking (difference form).

use crate::data::{Dataset, Split};

use super::mi::{mutual_information, train_codes};
use super::FeatureScores;

/// Step values closer than this are treated as tied.
const TIE_EPS: f64 = 1e-12;

/// Ranks features by greedy selection of `I(f; y) - mean_{s in S} I(f; s)`.
///
/// Ties on the step value go to the less redundant candidate, then to the
/// lower column index. Reported scores follow the step values, made strictly
/// decreasing along the selection order and rescaled onto `[0, 1]`.
pub fn mrmr_ranking(ds: &Dataset, split: &Split) -> FeatureScores {
    let (codes, y) = train_codes(ds, split);
    let l = codes.len();
    let relevance: Vec<f64> = codes.iter().map(|c| mutual_information(c, &y)).collect();
    // Running sum of I(f; s) over the selected set, per candidate.
    let mut redundancy_sum = vec![0.0; l];
    let mut remaining: Vec<usize> = (0..l).collect();
    let mut order = Vec::with_capacity(l);
    let mut steps = Vec::with_capacity(l);

    while !remaining.is_empty() {
        let selected = order.len() as f64;
        let mut best: Option<(usize, f64, f64)> = None;
        for &f in &remaining {
            let redundancy = if order.is_empty() { 0.0 } else { redundancy_sum[f] / selected };
            let value = relevance[f] - redundancy;
            let take = match best {
                None => true,
                Some((_, bv, br)) => value > bv + TIE_EPS || ((value - bv).abs() <= TIE_EPS && redundancy < br - TIE_EPS),
            };
            if take {
                best = Some((f, value, redundancy));
            }
        }
        let (pick, value, _) = best.expect("remaining is non-empty");
        order.push(pick);
        steps.push(value);
        remaining.retain(|&f| f != pick);
        for &f in &remaining {
            redundancy_sum[f] += mutual_information(&codes[f], &codes[pick]);
        }
    }

    FeatureScores::with_order("mrmr", ds, rescale_steps(&steps, &order), order, 0)
}

/// Maps step values (in selection order) onto strictly decreasing scores in
/// `[0, 1]`, indexed by feature.
fn rescale_steps(steps: &[f64], order: &[usize]) -> Vec<f64> {
    let mut monotone = Vec::with_capacity(steps.len());
    let span = steps.iter().cloned().fold(f64::MIN, f64::max) - steps.iter().cloned().fold(f64::MAX, f64::min);
    let gap = 1e-9 * span.max(1.0);
    for &v in steps {
        let next = match monotone.last() {
            Some(&prev) if v >= prev - gap => prev - gap,
            _ => v,
        };
        monotone.push(next);
    }
    let lo = *monotone.last().expect("at least one feature");
    let hi = monotone[0];
    let mut scores = vec![1.0; order.len()];
    for (&f, &v) in order.iter().zip(&monotone) {
        scores[f] = if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };
    }
    scores
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::stratified_split;
    use crate::selectors::mutual_information_scores;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dup_dataset(seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 200;
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let x = Array2::from_shape_fn((n, 3), |(i, j)| match j {
            0 | 1 => f64::from(y[i]),
            _ => rng.random_range(0.0..1.0),
        });
        Dataset::from_numeric("dup", vec!["f1".into(), "f2".into(), "f3".into()], x, y).unwrap()
    }

    #[test]
    fn duplicate_of_first_pick_is_penalized() {
        // I(f1;y) = I(f2;y) = ln2, I(f2;f1) = ln2: step value 0. For the noise
        // feature I(f3;y) = I(f3;f1) exactly, so its value is 0 too; the tie
        // resolves to the less redundant f3.
        let ds = dup_dataset(1);
        let split = stratified_split(&ds, 0.2, 0).unwrap();
        let r = mrmr_ranking(&ds, &split);
        assert_eq!(r.ranking, vec!["f1", "f3", "f2"]);
    }

    #[test]
    fn starts_with_most_relevant_feature() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 300;
        let x = Array2::from_shape_fn((n, 5), |_| rng.random_range(-1.0..1.0));
        let y: Vec<u8> = (0..n).map(|i| u8::from(x[[i, 3]] + 0.5 * x[[i, 1]] > 0.0)).collect();
        let names = (0..5).map(|j| format!("x{j}")).collect();
        let ds = Dataset::from_numeric("s", names, x, y).unwrap();
        let split = stratified_split(&ds, 0.2, 0).unwrap();
        let mrmr = mrmr_ranking(&ds, &split);
        let mi = mutual_information_scores(&ds, &split);
        assert_eq!(mrmr.ranking[0], mi.ranking[0]);
        for pair in mrmr.ranking.windows(2) {
            assert!(mrmr.scores[&pair[0]] > mrmr.scores[&pair[1]]);
        }
        assert!(mrmr.scores.values().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn single_feature() {
        let x = Array2::from_shape_fn((10, 1), |(i, _)| i as f64);
        let y = (0..10).map(|i| u8::from(i >= 5)).collect();
        let ds = Dataset::from_numeric("one", vec!["only".into()], x, y).unwrap();
        let split = stratified_split(&ds, 0.2, 0).unwrap();
        assert_eq!(mrmr_ranking(&ds, &split).ranking, vec!["only"]);
    }

    #[test]
    fn rescaled_steps_decrease_strictly() {
        let s = rescale_steps(&[0.5, 0.1, 0.3, 0.3], &[2, 0, 3, 1]);
        assert_eq!(s[2], 1.0);
        assert_eq!(s[1], 0.0);
        assert!(s[2] > s[0] && s[0] > s[3] && s[3] > s[1]);
    }
}
