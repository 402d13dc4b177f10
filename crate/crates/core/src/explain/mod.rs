//! Shapley attributions under the interventional value function:
//! `val(S)` is the mean model output over background rows `b` with the
//! features in `S` taken from `x` and the rest from `b`.

mod exact;
mod kernel;
mod ranking;
mod tree;

pub use exact::{exact_shapley, MAX_EXACT_FEATURES};
pub use kernel::{kernel_shap, Budget};
pub use ranking::{global_ranking, read_ranking_csv, write_ranking_csv, GlobalRanking, RankedFeature};
pub use tree::tree_shap;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::models::{Predictor, TrainedModel};
use crate::util::mix_seed;
use crate::{Error, Result};

/// Interventional coalition value function for one explained row.
pub struct ValueFunction<'a, M: ?Sized> {
    model: &'a M,
    x: &'a [f64],
    background: &'a [Vec<f64>],
}

impl<'a, M: Predictor + ?Sized> ValueFunction<'a, M> {
    pub fn new(model: &'a M, x: &'a [f64], background: &'a [Vec<f64>]) -> Result<Self> {
        if background.is_empty() {
            return Err(Error::Empty("background set"));
        }
        let p = model.n_features();
        if let Some(r) = std::iter::once(x).chain(background.iter().map(Vec::as_slice)).find(|r| r.len() != p) {
            return Err(Error::WidthMismatch { expected: p, got: r.len() });
        }
        Ok(Self { model, x, background })
    }

    pub fn n_features(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        self.x
    }

    pub fn background(&self) -> &[Vec<f64>] {
        self.background
    }

    pub fn model(&self) -> &M {
        self.model
    }

    /// Value of the coalition whose members have `mask[j] == true`.
    pub fn value_mask(&self, mask: &[bool]) -> f64 {
        let mut z = vec![0.0; self.x.len()];
        let mut total = 0.0;
        for b in self.background {
            for (j, zj) in z.iter_mut().enumerate() {
                *zj = if mask[j] { self.x[j] } else { b[j] };
            }
            total += self.model.predict(&z);
        }
        total / self.background.len() as f64
    }

    /// Value of a coalition given as a bitmask over the first 64 features.
    pub(crate) fn value_bits(&self, bits: u64) -> f64 {
        let mask: Vec<bool> = (0..self.x.len()).map(|j| bits >> j & 1 == 1).collect();
        self.value_mask(&mask)
    }

    /// `val(∅)`: the mean prediction over the background.
    pub fn base_value(&self) -> f64 {
        self.value_mask(&vec![false; self.x.len()])
    }
}

/// `val(S)` for a coalition given by feature indices.
pub fn coalition_value<M: Predictor + ?Sized>(vf: &ValueFunction<'_, M>, coalition: &[usize]) -> Result<f64> {
    let mut mask = vec![false; vf.n_features()];
    for &j in coalition {
        if j >= mask.len() {
            return Err(Error::InvalidInput(format!("feature index {j} out of range")));
        }
        mask[j] = true;
    }
    Ok(vf.value_mask(&mask))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Kernel,
    Tree,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Kernel => "kernel",
            Method::Tree => "tree",
        }
    }

    /// Tree for forests, kernel otherwise.
    pub fn default_for(model: &TrainedModel) -> Self {
        match model {
            TrainedModel::Rf(_) => Method::Tree,
            TrainedModel::Dff(_) => Method::Kernel,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "kernel" => Ok(Method::Kernel),
            "tree" => Ok(Method::Tree),
            _ => Err(Error::InvalidParam(format!("unknown explanation method '{s}' (exact, kernel or tree)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub phi: Vec<f64>,
    pub base_value: f64,
    pub predicted: f64,
    pub method: Method,
    /// Coalitions evaluated, counting the empty and full ones (kernel only).
    pub coalition_budget: Option<usize>,
    pub seed: Option<u64>,
}

impl Explanation {
    /// `base_value + Σφ - predicted`.
    pub fn additivity_gap(&self) -> f64 {
        self.base_value + self.phi.iter().sum::<f64>() - self.predicted
    }
}

/// `k` distinct row indices drawn uniformly (all rows when `k >= n`), in
/// ascending order.
pub fn sample_indices(n: usize, k: usize, seed: u64) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainOptions {
    pub method: Method,
    pub budget: Budget,
    pub seed: u64,
}

/// Explains every row of `rows` (model-space inputs) against `background`.
/// Row `i` of a kernel run uses a seed derived from `(seed, i)`.
pub fn explain_rows(
    model: &TrainedModel,
    rows: &[Vec<f64>],
    background: &[Vec<f64>],
    opts: &ExplainOptions,
) -> Result<Vec<Explanation>> {
    let forest = match (opts.method, model) {
        (Method::Tree, TrainedModel::Rf(f)) => Some(f),
        (Method::Tree, _) => return Err(Error::Unsupported("tree explanations need a forest model".into())),
        _ => None,
    };
    rows.par_iter()
        .enumerate()
        .map(|(i, x)| match opts.method {
            Method::Tree => tree_shap(forest.expect("checked above"), x, background),
            Method::Exact => exact_shapley(&ValueFunction::new(model, x, background)?),
            Method::Kernel => kernel_shap(&ValueFunction::new(model, x, background)?, opts.budget, mix_seed(opts.seed, i as u64)),
        })
        .collect()
}

#[derive(Serialize)]
struct ExplanationLine<'a> {
    index: usize,
    phi: &'a [f64],
    base: f64,
    prediction: f64,
    method: Method,
    coalition_budget: Option<usize>,
    seed: Option<u64>,
    config_hash: &'a str,
}

/// One JSON object per explanation; `indices` are the source row numbers.
pub fn write_explanations_jsonl<W: Write>(
    mut out: W,
    explanations: &[Explanation],
    indices: &[usize],
    config_hash: &str,
) -> Result<()> {
    for (e, &index) in explanations.iter().zip(indices) {
        let line = ExplanationLine {
            index,
            phi: &e.phi,
            base: e.base_value,
            prediction: e.predicted,
            method: e.method,
            coalition_budget: e.coalition_budget,
            seed: e.seed,
            config_hash,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
