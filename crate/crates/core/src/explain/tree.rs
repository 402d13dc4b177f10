//! Interventional TreeSHAP. For one tree and a pair (x, b) the hybrid
//! input reaches a leaf exactly when the coalition holds every feature in
//! `A` (splits where the path follows x against b) and none in `C` (splits
//! where it follows b against x). That leaf game has the closed-form
//! Shapley values
//!
//! ```text
//! φi = +v (|A|-1)! |C|! / (|A|+|C|)!   for i in A
//! φi = -v |A|! (|C|-1)! / (|A|+|C|)!  for i in C
//! ```
//!
//! summed over reachable leaves, averaged over background rows and trees.

use super::{Explanation, Method};
use crate::models::{DecisionTree, Forest, Node, Predictor};
use crate::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Free,
    FromX,
    FromB,
}

struct Walk<'a> {
    nodes: &'a [Node],
    x: &'a [f64],
    b: &'a [f64],
    side: Vec<Side>,
    from_x: Vec<usize>,
    from_b: Vec<usize>,
    /// `inv_binom[n][k] = 1 / C(n, k)`
    inv_binom: &'a [Vec<f64>],
    phi: &'a mut [f64],
}

impl Walk<'_> {
    fn visit(&mut self, i: usize) {
        match self.nodes[i] {
            Node::Leaf { value, .. } => self.leaf(value),
            Node::Split { feature, threshold, left, right, .. } => {
                let x_child = if self.x[feature] <= threshold { left } else { right };
                let b_child = if self.b[feature] <= threshold { left } else { right };
                if x_child == b_child {
                    return self.visit(x_child);
                }
                match self.side[feature] {
                    Side::FromX => self.visit(x_child),
                    Side::FromB => self.visit(b_child),
                    Side::Free => {
                        self.side[feature] = Side::FromX;
                        self.from_x.push(feature);
                        self.visit(x_child);
                        self.from_x.pop();
                        self.side[feature] = Side::FromB;
                        self.from_b.push(feature);
                        self.visit(b_child);
                        self.from_b.pop();
                        self.side[feature] = Side::Free;
                    }
                }
            }
        }
    }

    fn leaf(&mut self, v: f64) {
        let (a, c) = (self.from_x.len(), self.from_b.len());
        if a + c == 0 {
            return;
        }
        // (a-1)! c! / (a+c)! = 1 / (a C(a+c, a))
        if a > 0 {
            let w = v * self.inv_binom[a + c][a] / a as f64;
            self.from_x.iter().for_each(|&i| self.phi[i] += w);
        }
        if c > 0 {
            let w = v * self.inv_binom[a + c][c] / c as f64;
            self.from_b.iter().for_each(|&i| self.phi[i] -= w);
        }
    }
}

fn inverse_binomials(n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut binom = vec![1.0];
    for k in 0..=n {
        if k > 0 {
            let mut next = vec![1.0; k + 1];
            for j in 1..k {
                next[j] = binom[j - 1] + binom[j];
            }
            binom = next;
        }
        rows.push(binom.iter().map(|c| 1.0 / c).collect());
    }
    rows
}

/// Interventional Shapley values of a forest at `x` against `background`.
pub fn tree_shap(forest: &Forest, x: &[f64], background: &[Vec<f64>]) -> Result<Explanation> {
    let p = forest.n_features();
    if background.is_empty() {
        return Err(Error::Empty("background set"));
    }
    if let Some(r) = std::iter::once(x).chain(background.iter().map(Vec::as_slice)).find(|r| r.len() != p) {
        return Err(Error::WidthMismatch { expected: p, got: r.len() });
    }
    let depth = forest.trees.iter().map(DecisionTree::depth).max().unwrap_or(0);
    let inv_binom = inverse_binomials(depth);
    let mut phi = vec![0.0; p];
    let mut side = vec![Side::Free; p];
    for tree in &forest.trees {
        for b in background {
            let mut walk = Walk {
                nodes: tree.nodes(),
                x,
                b,
                side: std::mem::take(&mut side),
                from_x: Vec::with_capacity(depth),
                from_b: Vec::with_capacity(depth),
                inv_binom: &inv_binom,
                phi: &mut phi,
            };
            walk.visit(0);
            side = walk.side;
        }
    }
    let scale = 1.0 / (forest.trees.len() * background.len()) as f64;
    phi.iter_mut().for_each(|v| *v *= scale);
    let base_value = background.iter().map(|b| forest.predict(b)).sum::<f64>() / background.len() as f64;
    Ok(Explanation {
        phi,
        base_value,
        predicted: forest.predict(x),
        method: Method::Tree,
        coalition_budget: None,
        seed: None,
    })
}
