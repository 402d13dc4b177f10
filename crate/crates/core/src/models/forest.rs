//! Bagged CART ensembles.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, DecisionTree, GrowParams};
use super::{check_training_data, class_weights, Predictor};
use crate::util::mix_seed;
use crate::{Error, Result};

/// Features examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(&self, n_features: usize) -> usize {
        let k = match *self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().round() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Fraction(f) => (f * n_features as f64).ceil() as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    /// Reweight classes inversely to their frequency.
    pub balanced: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 16,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            balanced: false,
            seed: 0,
        }
    }
}

impl ForestParams {
    fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParam("n_trees must be positive".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParam("min_samples_split must be at least 2".into()));
        }
        if let MaxFeatures::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParam(format!("feature fraction {f} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub params: ForestParams,
}

impl Forest {
    /// Assembles a forest from prebuilt trees.
    pub fn from_trees(trees: Vec<DecisionTree>, n_features: usize) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::Empty("forest trees"));
        }
        if let Some(f) = trees.iter().filter_map(DecisionTree::max_feature).max() {
            if f >= n_features {
                return Err(Error::InvalidInput(format!("tree splits on feature {f} of {n_features}")));
            }
        }
        let params = ForestParams { n_trees: trees.len(), ..ForestParams::default() };
        Ok(Self { trees, n_features, params })
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.predict_checked(x)
    }
}

impl Predictor for Forest {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Trains `n_trees` trees on bootstrap resamples. Tree `t` draws from its own
/// stream seeded by `(seed, t)`, so results do not depend on thread count.
pub fn train_forest(x: &[Vec<f64>], y: &[u8], params: &ForestParams) -> Result<Forest> {
    params.validate()?;
    let n_features = check_training_data(x, y)?;
    let grow = GrowParams {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        max_features: params.max_features.resolve(n_features),
        class_weight: class_weights(y, params.balanced),
    };
    let n = x.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(params.seed, t as u64));
            let sample: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(x, y, sample, grow, &mut rng)
        })
        .collect();
    Ok(Forest { trees, n_features, params: params.clone() })
}

pub fn forest_predict_proba(forest: &Forest, x: &[f64]) -> Result<f64> {
    forest.predict_checked(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::Node;
    use proptest::prelude::*;

    fn separable(n: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
        let x: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let attack = i % 2 == 1;
                let base = if attack { 0.6 } else { 0.0 };
                vec![base + 0.4 * ((i * 37 % 101) as f64 / 100.0), (i * 53 % 97) as f64 / 96.0]
            })
            .collect();
        let y = x.iter().map(|r| (r[0] >= 0.5) as u8).collect();
        (x, y)
    }

    /// Best single threshold on one feature, by exhaustive search.
    fn brute_force_stump_accuracy(x: &[Vec<f64>], y: &[u8]) -> f64 {
        let mut best = 0.0f64;
        for f in 0..x[0].len() {
            for t in x.iter().map(|r| r[f]) {
                let hits = x.iter().zip(y).filter(|(r, &l)| ((r[f] > t) as u8) == l).count();
                best = best.max(hits as f64 / x.len() as f64);
            }
        }
        best
    }

    fn accuracy(forest: &Forest, x: &[Vec<f64>], y: &[u8]) -> f64 {
        let hits = x.iter().zip(y).filter(|(r, &l)| ((forest.predict(r) >= 0.5) as u8) == l).count();
        hits as f64 / x.len() as f64
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let (x, y) = separable(100);
        assert_eq!(brute_force_stump_accuracy(&x, &y), 1.0);
        let forest = train_forest(&x, &y, &ForestParams { seed: 5, ..Default::default() }).unwrap();
        assert_eq!(accuracy(&forest, &x, &y), 1.0);
    }

    #[test]
    fn xor_with_single_full_tree() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = vec![0, 1, 1, 0];
        let params = ForestParams {
            n_trees: 1,
            max_depth: 2,
            max_features: MaxFeatures::Fraction(1.0),
            bootstrap: false,
            ..Default::default()
        };
        let forest = train_forest(&x, &y, &params).unwrap();
        assert_eq!(accuracy(&forest, &x, &y), 1.0);
    }

    #[test]
    fn same_seed_same_forest() {
        let (mut x, mut y) = separable(60);
        x.extend(x.clone());
        y.extend(y.clone());
        let p = ForestParams { n_trees: 10, seed: 11, ..Default::default() };
        let a = train_forest(&x, &y, &p).unwrap();
        let b = train_forest(&x, &y, &p).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn training_errors() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(train_forest(&x, &[1, 1], &ForestParams::default()), Err(Error::SingleClass)));
        let p = ForestParams { n_trees: 0, ..Default::default() };
        assert!(train_forest(&x, &[0, 1], &p).is_err());
    }

    fn stump(threshold: f64, left: [usize; 2], right: [usize; 2]) -> DecisionTree {
        let s = left[0] + left[1] + right[0] + right[1];
        DecisionTree::from_nodes(vec![
            Node::Split { feature: 0, threshold, left: 1, right: 2, samples: s },
            Node::leaf(left),
            Node::leaf(right),
        ])
        .unwrap()
    }

    #[test]
    fn prediction_averages_leaves() {
        let all_one = Forest::from_trees(vec![stump(0.5, [0, 3], [0, 2]); 3], 1).unwrap();
        assert_eq!(forest_predict_proba(&all_one, &[0.1]).unwrap(), 1.0);
        let split = Forest::from_trees(vec![stump(0.5, [0, 3], [0, 2]), stump(0.5, [4, 0], [1, 0])], 1).unwrap();
        assert_eq!(split.predict(&[0.0]), 0.5);
        assert!(matches!(forest_predict_proba(&split, &[0.0, 1.0]), Err(Error::WidthMismatch { .. })));
        assert!(Forest::from_trees(vec![stump(0.5, [1, 0], [0, 1])], 0).is_err());
    }

    #[test]
    fn stump_threshold_flips_prediction() {
        let f = Forest::from_trees(vec![stump(0.5, [5, 0], [0, 5])], 1).unwrap();
        assert_eq!(f.predict(&[0.5]), 0.0);
        assert_eq!(f.predict(&[0.5 + 1e-12]), 1.0);
    }

    proptest! {
        #[test]
        fn ensemble_bounds_and_order_invariance(seed in 0u64..500, probe in prop::collection::vec(0.0f64..1.0, 3)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rand::Rng::random::<f64>(&mut rng)).collect()).collect();
            let mut y: Vec<u8> = x.iter().map(|r| (r[0] + 0.3 * r[1] > 0.6) as u8).collect();
            y[0] = 0;
            y[1] = 1;
            let forest = train_forest(&x, &y, &ForestParams { n_trees: 7, max_depth: 4, seed, ..Default::default() }).unwrap();
            let p = forest.predict(&probe);
            let per_tree: Vec<f64> = forest.trees.iter().map(|t| t.predict(&probe)).collect();
            let lo = per_tree.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = per_tree.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo - 1e-12 <= p && p <= hi + 1e-12);
            let mut reversed = forest.clone();
            reversed.trees.reverse();
            prop_assert!((reversed.predict(&probe) - p).abs() < 1e-12);
        }
    }
}
