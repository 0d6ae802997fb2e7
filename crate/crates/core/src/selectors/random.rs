use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::rng;

use super::FeatureScores;

/// A seeded uniform shuffle of the original features.
pub fn random_ranking(ds: &Dataset, seed: u64) -> FeatureScores {
    let mut order: Vec<usize> = (0..ds.n_features()).collect();
    order.shuffle(&mut rng::stream(seed, rng::RANDOM_SELECT));
    FeatureScores::from_order("random", ds, order, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    #[test]
    fn same_seed_same_ranking() {
        let ds = synthetic::noise(20, 6, 0);
        assert_eq!(random_ranking(&ds, 5), random_ranking(&ds, 5));
        assert!(random_ranking(&ds, 5).is_complete_for(&ds));
    }

    #[test]
    fn first_place_is_uniform() {
        let ds = synthetic::noise(20, 5, 0);
        let mut first = [0usize; 5];
        for seed in 0..1000 {
            let r = random_ranking(&ds, seed);
            first[ds.feature_index(&r.ranking[0]).unwrap()] += 1;
        }
        for count in first {
            let freq = count as f64 / 1000.0;
            assert!((freq - 0.2).abs() <= 0.05, "{first:?}");
        }
    }

    #[test]
    fn single_feature() {
        let ds = synthetic::noise(20, 1, 0);
        assert_eq!(random_ranking(&ds, 3).ranking, vec!["x0"]);
    }
}
