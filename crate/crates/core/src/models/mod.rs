//! Binary classifiers: a random forest and a feed-forward network, both
//! returning the attack probability of a learnable-feature row.

pub mod forest;
pub mod mlp;
pub mod persist;
pub mod tree;

pub use forest::{forest_predict_proba, train_forest, Forest, ForestParams, MaxFeatures};
pub use mlp::{mlp_gradient, mlp_predict_proba, train_mlp, Dense, Gradients, Mlp, MlpParams};
pub use persist::SavedModel;
pub use tree::{DecisionTree, Node};

use serde::{Deserialize, Serialize};

use crate::dataset::MinMaxScaler;
use crate::{Error, Result};

/// Anything mapping a feature row to a probability.
pub trait Predictor: Sync {
    fn n_features(&self) -> usize;

    /// Unchecked prediction; `x` must have `n_features()` entries.
    fn predict(&self, x: &[f64]) -> f64;

    fn predict_checked(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::WidthMismatch { expected: self.n_features(), got: x.len() });
        }
        Ok(self.predict(x))
    }
}

/// Closure adapter, handy for explaining hand-written functions.
pub struct FnModel<F> {
    pub n_features: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Predictor for FnModel<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Returns the feature width after checking shape, finiteness and that
/// both classes occur.
pub(crate) fn check_training_data(x: &[Vec<f64>], y: &[u8]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let width = x[0].len();
    if width == 0 {
        return Err(Error::InvalidInput("rows have no features".into()));
    }
    for row in x {
        if row.len() != width {
            return Err(Error::WidthMismatch { expected: width, got: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
    }
    if y.iter().any(|&l| l > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    let attacks = y.iter().filter(|&&l| l == 1).count();
    if attacks == 0 || attacks == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(width)
}

/// Per-class sample weights; `n / (2 n_c)` when balanced, else 1.
pub(crate) fn class_weights(y: &[u8], balanced: bool) -> [f64; 2] {
    if !balanced {
        return [1.0, 1.0];
    }
    let n1 = y.iter().filter(|&&l| l == 1).count() as f64;
    let n0 = y.len() as f64 - n1;
    let n = y.len() as f64;
    [n / (2.0 * n0.max(1.0)), n / (2.0 * n1.max(1.0))]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rf,
    Dff,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rf => "rf",
            ModelKind::Dff => "dff",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" | "forest" | "random-forest" => Ok(ModelKind::Rf),
            "dff" | "mlp" => Ok(ModelKind::Dff),
            _ => Err(Error::InvalidParam(format!("unknown model kind '{s}' (expected rf or dff)"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Hyperparameters for either model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Rf(ForestParams),
    Dff(MlpParams),
}

impl ModelSpec {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Rf => ModelSpec::Rf(ForestParams::default()),
            ModelKind::Dff => ModelSpec::Dff(MlpParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Rf(_) => ModelKind::Rf,
            ModelSpec::Dff(_) => ModelKind::Dff,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelSpec::Rf(p) => p.seed,
            ModelSpec::Dff(p) => p.seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            ModelSpec::Rf(p) => p.seed = seed,
            ModelSpec::Dff(p) => p.seed = seed,
        }
        spec
    }

    pub fn train(&self, x: &[Vec<f64>], y: &[u8]) -> Result<TrainedModel> {
        match self {
            ModelSpec::Rf(p) => train_forest(x, y, p).map(TrainedModel::Rf),
            ModelSpec::Dff(p) => train_mlp(x, y, p).map(TrainedModel::Dff),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Rf(Forest),
    Dff(Mlp),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Rf(_) => ModelKind::Rf,
            TrainedModel::Dff(_) => ModelKind::Dff,
        }
    }

    pub fn as_forest(&self) -> Option<&Forest> {
        match self {
            TrainedModel::Rf(f) => Some(f),
            TrainedModel::Dff(_) => None,
        }
    }
}

impl Predictor for TrainedModel {
    fn n_features(&self) -> usize {
        match self {
            TrainedModel::Rf(f) => f.n_features(),
            TrainedModel::Dff(m) => m.n_features(),
        }
    }

    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            TrainedModel::Rf(f) => f.predict(x),
            TrainedModel::Dff(m) => m.predict(x),
        }
    }
}

/// Scaler followed by a model: takes raw learnable features.
pub struct ScaledModel<'a, M: ?Sized> {
    pub scaler: &'a MinMaxScaler,
    pub model: &'a M,
}

impl<M: Predictor + ?Sized> Predictor for ScaledModel<'_, M> {
    fn n_features(&self) -> usize {
        self.scaler.width()
    }

    fn predict(&self, x: &[f64]) -> f64 {
        let mut buf = vec![0.0; x.len()];
        self.scaler.transform_into(x, &mut buf);
        self.model.predict(&buf)
    }
}
