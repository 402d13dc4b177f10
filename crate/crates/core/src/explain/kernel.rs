//! KernelSHAP: a weighted least-squares fit of the additive surrogate
//! `g(z) = φ0 + Σ φj zj` to coalition values, with the empty and full
//! coalitions imposed as constraints (`φ0 = val(∅)`, `Σφ = f(x) - φ0`).

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::exact::MAX_EXACT_FEATURES;
use super::{Explanation, Method, ValueFunction};
use crate::models::Predictor;
use crate::util::mix_seed;
use crate::{Error, Result};

/// Coalitions to evaluate, counting the empty and full ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    /// All `2^p` coalitions.
    Full,
    Samples(usize),
}

impl std::str::FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(Budget::Full);
        }
        s.parse().map(Budget::Samples).map_err(|_| Error::InvalidParam(format!("budget '{s}' is neither 'full' nor a count")))
    }
}

impl std::fmt::Display for Budget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Budget::Full => f.write_str("full"),
            Budget::Samples(n) => write!(f, "{n}"),
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Kernel mass of all coalitions of size `s`: `π(s) * C(M, s) = (M-1) / (s (M-s))`.
fn size_mass(m: usize, s: usize) -> f64 {
    (m - 1) as f64 / (s * (m - s)) as f64
}

/// Shapley kernel weight of one coalition of size `s`.
fn kernel_weight(m: usize, s: usize) -> f64 {
    size_mass(m, s) / binomial(m, s)
}

fn push_combinations(m: usize, s: usize, weight: f64, out: &mut Vec<(Vec<bool>, f64)>) {
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        let mut mask = vec![false; m];
        idx.iter().for_each(|&i| mask[i] = true);
        out.push((mask, weight));
        // advance to the next combination in lexicographic order
        let Some(pos) = (0..s).rev().find(|&i| idx[i] != i + m - s) else { return };
        idx[pos] += 1;
        for i in pos + 1..s {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

/// Weighted interior coalitions for a budget of `interior` evaluations:
/// whole size pairs (s, M-s) are enumerated while they fit, smallest first,
/// and the rest is filled with complementary pairs sampled by kernel mass.
fn coalitions(m: usize, interior: usize, rng: &mut ChaCha8Rng) -> Vec<(Vec<bool>, f64)> {
    let mut out = Vec::new();
    let mut remaining = interior;
    let mut next_size = 1;
    while next_size <= m / 2 {
        let s = next_size;
        let count = if s == m - s { binomial(m, s) } else { 2.0 * binomial(m, s) };
        if count > remaining as f64 {
            break;
        }
        push_combinations(m, s, kernel_weight(m, s), &mut out);
        if s != m - s {
            push_combinations(m, m - s, kernel_weight(m, s), &mut out);
        }
        remaining -= count as usize;
        next_size += 1;
    }
    let sizes: Vec<usize> = (next_size..=m - next_size).collect();
    let pairs = remaining / 2;
    if sizes.is_empty() || pairs == 0 {
        return out;
    }
    let masses: Vec<f64> = sizes.iter().map(|&s| size_mass(m, s)).collect();
    let weight = masses.iter().sum::<f64>() / (2 * pairs) as f64;
    let pick = WeightedIndex::new(&masses).expect("positive masses");
    for _ in 0..pairs {
        let s = sizes[pick.sample(rng)];
        let mut mask = vec![false; m];
        for i in rand::seq::index::sample(rng, m, s) {
            mask[i] = true;
        }
        let complement = mask.iter().map(|b| !b).collect();
        out.push((mask, weight));
        out.push((complement, weight));
    }
    out
}

/// Solves for φ given weighted coalitions; `None` when the system is singular.
fn solve(m: usize, rows: &[(Vec<bool>, f64)], values: &[f64], base: f64, delta: f64) -> Option<Vec<f64>> {
    // eliminate the last feature through the sum constraint
    let n = m - 1;
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    let mut a = vec![0.0; n];
    for ((mask, w), v) in rows.iter().zip(values) {
        let last = f64::from(u8::from(mask[n]));
        for (j, aj) in a.iter_mut().enumerate() {
            *aj = f64::from(u8::from(mask[j])) - last;
        }
        let target = v - base - last * delta;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            rhs[i] += w * a[i] * target;
            for j in 0..n {
                gram[(i, j)] += w * a[i] * a[j];
            }
        }
    }
    let scale = gram.diagonal().max();
    let chol = gram.cholesky()?;
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |acc, d| acc.min(d * d));
    if !(scale > 0.0) || min_pivot < 1e-12 * scale {
        return None;
    }
    let head = chol.solve(&rhs);
    let mut phi: Vec<f64> = head.iter().copied().collect();
    phi.push(delta - phi.iter().sum::<f64>());
    Some(phi)
}

pub fn kernel_shap<M: Predictor + ?Sized>(vf: &ValueFunction<'_, M>, budget: Budget, seed: u64) -> Result<Explanation> {
    let m = vf.n_features();
    let base = vf.base_value();
    let predicted = vf.value_mask(&vec![true; m]);
    let delta = predicted - base;
    let explanation = |phi, used| Explanation {
        phi,
        base_value: base,
        predicted,
        method: Method::Kernel,
        coalition_budget: Some(used),
        seed: Some(seed),
    };
    let total = if m < 64 { 1usize.checked_shl(m as u32) } else { None };
    let full = match budget {
        Budget::Full if m > MAX_EXACT_FEATURES => {
            return Err(Error::TooManyFeatures { features: m, max: MAX_EXACT_FEATURES });
        }
        Budget::Full => true,
        Budget::Samples(b) if b < m + 2 => return Err(Error::BudgetTooSmall { budget: b, min: m + 2, features: m }),
        Budget::Samples(b) => total.is_some_and(|t| b >= t),
    };
    if m == 1 {
        return Ok(explanation(vec![delta], 2));
    }
    let interior = match (full, budget) {
        (true, _) => total.expect("small p") - 2,
        (false, Budget::Samples(b)) => b - 2,
        (false, Budget::Full) => unreachable!(),
    };
    for attempt in 0..2u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, attempt));
        let rows = coalitions(m, interior, &mut rng);
        let values: Vec<f64> = rows.par_iter().map(|(mask, _)| vf.value_mask(mask)).collect();
        if let Some(phi) = solve(m, &rows, &values, base, delta) {
            return Ok(explanation(phi, rows.len() + 2));
        }
        if full {
            break;
        }
        log::warn!("kernel SHAP system singular with {} coalitions; resampling", rows.len());
    }
    Err(Error::SingularSystem)
}
