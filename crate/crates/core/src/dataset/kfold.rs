use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KFolds {
    /// (train indices, test indices) per fold, both ascending.
    pub folds: Vec<(Vec<usize>, Vec<usize>)>,
    /// False when a class had fewer than k rows and plain shuffling was used.
    pub stratified: bool,
}

/// Stratified k-fold split over binary labels.
///
/// Each class is shuffled with the seed and dealt round-robin over the folds,
/// continuing the rotation from one class to the next, so every fold holds
/// within one row of its share of each class.
pub fn kfold_split(labels: &[u8], k: usize, seed: u64) -> Result<KFolds> {
    if k < 2 {
        return Err(Error::InvalidParam(format!("k must be at least 2, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::InvalidInput(format!("{} rows cannot fill {k} folds", labels.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        by_class[usize::from(l != 0)].push(i);
    }
    let stratified = by_class.iter().all(|c| c.len() >= k);
    let order: Vec<usize> = if stratified {
        by_class
            .into_iter()
            .flat_map(|mut class| {
                class.shuffle(&mut rng);
                class
            })
            .collect()
    } else {
        log::warn!("a class has fewer than {k} rows; falling back to unstratified folds");
        let mut all: Vec<usize> = (0..labels.len()).collect();
        all.shuffle(&mut rng);
        all
    };
    let mut test_sets = vec![Vec::new(); k];
    for (pos, idx) in order.into_iter().enumerate() {
        test_sets[pos % k].push(idx);
    }
    let folds = test_sets
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let mut in_test = vec![false; labels.len()];
            for &i in &test {
                in_test[i] = true;
            }
            let train = (0..labels.len()).filter(|&i| !in_test[i]).collect();
            (train, test)
        })
        .collect();
    Ok(KFolds { folds, stratified })
}
