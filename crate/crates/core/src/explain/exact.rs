use rayon::prelude::*;

use super::{Explanation, Method, ValueFunction};
use crate::models::Predictor;
use crate::{Error, Result};

/// Largest feature count enumerated exhaustively (2^p coalition values).
pub const MAX_EXACT_FEATURES: usize = 20;

/// `|S|! (p-|S|-1)! / p!` for every coalition size.
pub(crate) fn shapley_weights(p: usize) -> Vec<f64> {
    // 1 / (p * C(p-1, s)), with C built incrementally
    let mut binom = 1.0;
    (0..p)
        .map(|s| {
            if s > 0 {
                binom = binom * (p - s) as f64 / s as f64;
            }
            1.0 / (p as f64 * binom)
        })
        .collect()
}

/// Shapley values by enumerating every coalition, each value computed once.
pub fn exact_shapley<M: Predictor + ?Sized>(vf: &ValueFunction<'_, M>) -> Result<Explanation> {
    let p = vf.n_features();
    if p > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures { features: p, max: MAX_EXACT_FEATURES });
    }
    let values: Vec<f64> = (0..1u64 << p).into_par_iter().map(|bits| vf.value_bits(bits)).collect();
    let weights = shapley_weights(p);
    let phi = (0..p)
        .map(|j| {
            let bit = 1u64 << j;
            (0..1u64 << p)
                .filter(|s| s & bit == 0)
                .map(|s| weights[s.count_ones() as usize] * (values[(s | bit) as usize] - values[s as usize]))
                .sum()
        })
        .collect();
    Ok(Explanation {
        phi,
        base_value: values[0],
        predicted: values[(1usize << p) - 1],
        method: Method::Exact,
        coalition_budget: None,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::FnModel;

    #[test]
    fn weights_sum_over_subsets_to_one() {
        for p in 1..12 {
            let w = shapley_weights(p);
            let mut binom = 1.0;
            let mut total = 0.0;
            for (s, ws) in w.iter().enumerate() {
                if s > 0 {
                    binom = binom * (p - s) as f64 / s as f64;
                }
                total += ws * binom;
            }
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interaction_split_evenly() {
        let f = FnModel { n_features: 2, f: |x: &[f64]| x[0] * x[1] };
        let bg = vec![vec![0.0, 0.0]];
        let e = exact_shapley(&ValueFunction::new(&f, &[1.0, 1.0], &bg).unwrap()).unwrap();
        assert_eq!(e.phi, vec![0.5, 0.5]);
        assert_eq!(e.base_value, 0.0);
        assert_eq!(e.predicted, 1.0);
    }

    #[test]
    fn too_many_features() {
        let f = FnModel { n_features: 21, f: |_: &[f64]| 0.0 };
        let x = vec![0.0; 21];
        let bg = vec![x.clone()];
        let vf = ValueFunction::new(&f, &x, &bg).unwrap();
        assert!(matches!(exact_shapley(&vf), Err(Error::TooManyFeatures { .. })));
    }
}
