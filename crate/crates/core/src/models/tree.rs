//! CART decision trees with Gini impurity over binary labels.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize, samples: usize },
    /// `value` is the attack-class probability.
    Leaf { class_counts: [usize; 2], value: f64, samples: usize },
}

impl Node {
    pub fn samples(&self) -> usize {
        match self {
            Node::Split { samples, .. } | Node::Leaf { samples, .. } => *samples,
        }
    }

    /// A leaf whose probability follows from its class counts.
    pub fn leaf(class_counts: [usize; 2]) -> Node {
        let samples = class_counts[0] + class_counts[1];
        let value = if samples == 0 { 0.0 } else { class_counts[1] as f64 / samples as f64 };
        Node::Leaf { class_counts, value, samples }
    }
}

/// Binary tree stored as a node array with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    /// Builds a tree from explicit nodes, checking structure: children point
    /// forward, every node is reachable exactly once, sample counts add up and
    /// leaf probabilities lie in `[0, 1]`.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Empty("tree nodes"));
        }
        let mut parents = vec![0usize; nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            match node {
                Node::Split { left, right, samples, threshold, .. } => {
                    for &c in [left, right] {
                        if c <= i || c >= nodes.len() {
                            return Err(Error::InvalidInput(format!("node {i} has invalid child {c}")));
                        }
                        parents[c] += 1;
                    }
                    if nodes[*left].samples() + nodes[*right].samples() != *samples {
                        return Err(Error::InvalidInput(format!("node {i}: child sample counts do not add up")));
                    }
                    if !threshold.is_finite() {
                        return Err(Error::InvalidInput(format!("node {i}: non-finite threshold")));
                    }
                }
                Node::Leaf { value, class_counts, samples } => {
                    if !(0.0..=1.0).contains(value) || class_counts[0] + class_counts[1] != *samples {
                        return Err(Error::InvalidInput(format!("leaf {i} is inconsistent")));
                    }
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&p| p != 1) {
            return Err(Error::InvalidInput("nodes do not form a single binary tree".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Largest feature index used by a split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { value, .. } => return *value,
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Number of non-constant features examined per split.
    pub max_features: usize,
    pub class_weight: [f64; 2],
}

struct Grower<'a, R> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    params: GrowParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
    features: Vec<usize>,
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn gini_weighted(w0: f64, w1: f64) -> f64 {
    let total = w0 + w1;
    if total <= 0.0 {
        return 0.0;
    }
    // total * gini = total - (w0^2 + w1^2) / total
    total - (w0 * w0 + w1 * w1) / total
}

impl<R: Rng> Grower<'_, R> {
    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let ones = idx.iter().filter(|&&i| self.y[i] == 1).count();
        [idx.len() - ones, ones]
    }

    fn leaf(&mut self, counts: [usize; 2]) -> usize {
        let [c0, c1] = counts;
        let w0 = c0 as f64 * self.params.class_weight[0];
        let w1 = c1 as f64 * self.params.class_weight[1];
        let value = if w0 + w1 > 0.0 { w1 / (w0 + w1) } else { 0.0 };
        self.nodes.push(Node::Leaf { class_counts: counts, value, samples: c0 + c1 });
        self.nodes.len() - 1
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<Split> {
        let [cw0, cw1] = self.params.class_weight;
        let mut features = std::mem::take(&mut self.features);
        features.shuffle(self.rng);
        let mut best: Option<Split> = None;
        let mut examined = 0;
        let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(idx.len());
        let (mut tot0, mut tot1) = (0.0, 0.0);
        for &i in idx {
            if self.y[i] == 1 { tot1 += cw1 } else { tot0 += cw0 }
        }
        for &f in &features {
            if examined >= self.params.max_features {
                break;
            }
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pairs[0].0 == pairs[pairs.len() - 1].0 {
                continue;
            }
            examined += 1;
            let (mut l0, mut l1) = (0.0, 0.0);
            for k in 0..pairs.len() - 1 {
                if pairs[k].1 == 1 { l1 += cw1 } else { l0 += cw0 }
                let (lo, hi) = (pairs[k].0, pairs[k + 1].0);
                if lo == hi {
                    continue;
                }
                let score = gini_weighted(l0, l1) + gini_weighted(tot0 - l0, tot1 - l1);
                if best.as_ref().is_none_or(|b| score < b.score) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi || !threshold.is_finite() {
                        threshold = lo;
                    }
                    best = Some(Split { feature: f, threshold, score });
                }
            }
        }
        self.features = features;
        best
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let pure = counts[0] == 0 || counts[1] == 0;
        if pure || depth >= self.params.max_depth || idx.len() < self.params.min_samples_split {
            return self.leaf(counts);
        }
        let Some(split) = self.best_split(idx) else {
            return self.leaf(counts);
        };
        // partition in place: rows going left first
        let mut boundary = 0;
        for k in 0..idx.len() {
            if self.x[idx[k]][split.feature] <= split.threshold {
                idx.swap(k, boundary);
                boundary += 1;
            }
        }
        let me = self.nodes.len();
        self.nodes.push(Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: 0,
            right: 0,
            samples: idx.len(),
        });
        let (left_idx, right_idx) = idx.split_at_mut(boundary);
        let left = self.grow(left_idx, depth + 1);
        let right = self.grow(right_idx, depth + 1);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[me] {
            *l = left;
            *r = right;
        }
        me
    }
}

/// Grows one tree on the rows listed in `sample` (duplicates allowed).
pub(crate) fn grow_tree<R: Rng>(
    x: &[Vec<f64>],
    y: &[u8],
    mut sample: Vec<usize>,
    params: GrowParams,
    rng: &mut R,
) -> DecisionTree {
    let n_features = x.first().map_or(0, Vec::len);
    let mut grower = Grower { x, y, params, rng, nodes: Vec::new(), features: (0..n_features).collect() };
    grower.grow(&mut sample, 0);
    DecisionTree { nodes: grower.nodes }
}
