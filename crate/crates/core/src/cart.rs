//! Binary CART trees with Gini splitting.
//!
//! Candidate splits are compared with exact rational arithmetic on the class
//! counts, so tie-breaking (lower feature index, then lower threshold) does
//! not depend on floating-point summation order.

use std::cmp::Ordering;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gini impurity `1 - p^2 - q^2` of a node with the given class counts.
pub fn gini(positives: u64, negatives: u64) -> Result<f64> {
    let n = positives + negatives;
    if n == 0 {
        return Err(Error::InvalidInput("gini of an empty node".into()));
    }
    let p = positives as f64 / n as f64;
    let q = negatives as f64 / n as f64;
    Ok(1.0 - p * p - q * q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        probability: f64,
    },
}

/// A tree stored in pre-order: node 0 is the root and every child index is
/// greater than its parent's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Node>", into = "Vec<Node>")]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(probability: f64) -> Tree {
        Tree {
            nodes: vec![Node::Leaf { probability }],
        }
    }

    /// Checks pre-order layout, forward links and that every node is reached
    /// exactly once.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Tree> {
        if nodes.is_empty() {
            return Err(Error::InvalidInput("tree has no nodes".into()));
        }
        let mut expected = 0usize;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i != expected || i >= nodes.len() {
                return Err(Error::InvalidInput(format!(
                    "tree is not in pre-order at node {expected}"
                )));
            }
            expected += 1;
            match nodes[i] {
                Node::Split { left, right, threshold, .. } => {
                    if !threshold.is_finite() {
                        return Err(Error::InvalidInput(format!("non-finite threshold at node {i}")));
                    }
                    stack.push(right);
                    stack.push(left);
                }
                Node::Leaf { probability } => {
                    if !(0.0..=1.0).contains(&probability) {
                        return Err(Error::InvalidInput(format!(
                            "leaf probability {probability} at node {i} is outside [0, 1]"
                        )));
                    }
                }
            }
        }
        if expected != nodes.len() {
            return Err(Error::InvalidInput(format!(
                "{} of {} tree nodes are unreachable",
                nodes.len() - expected,
                nodes.len()
            )));
        }
        Ok(Tree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of splits on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Leaf probability reached by `x`; goes left iff `x[feature] < threshold`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { probability } => return probability,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] < threshold { left } else { right };
                }
            }
        }
    }

    /// The `(feature, threshold)` comparisons made while predicting `x`.
    pub fn decision_path(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let mut path = Vec::new();
        let mut i = 0;
        while let Node::Split { feature, threshold, left, right } = self.nodes[i] {
            path.push((feature, threshold));
            i = if x[feature] < threshold { left } else { right };
        }
        path
    }
}

impl TryFrom<Vec<Node>> for Tree {
    type Error = Error;

    fn try_from(nodes: Vec<Node>) -> Result<Tree> {
        Tree::from_nodes(nodes)
    }
}

impl From<Tree> for Vec<Node> {
    fn from(t: Tree) -> Self {
        t.nodes
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub features: &'a [f64],
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Parent Gini minus the size-weighted Gini of the children.
    pub gain: f64,
    pub weighted_gini: f64,
    pub left_count: usize,
}

/// `2·Σ pos·neg/n` over both children, kept as the exact fraction
/// `num / den` (the weighted child Gini times the parent size).
#[derive(Clone, Copy)]
struct Impurity {
    num: u128,
    den: u128,
}

impl Impurity {
    fn node(pos: u64, n: u64) -> Impurity {
        Impurity {
            num: u128::from(pos) * u128::from(n - pos),
            den: u128::from(n),
        }
    }

    fn children(pl: u64, nl: u64, pr: u64, nr: u64) -> Impurity {
        let al = u128::from(pl) * u128::from(nl - pl);
        let ar = u128::from(pr) * u128::from(nr - pr);
        Impurity {
            num: al * u128::from(nr) + ar * u128::from(nl),
            den: u128::from(nl) * u128::from(nr),
        }
    }

    fn cmp(&self, other: &Impurity) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    /// As a Gini value for a node of `n` samples.
    fn gini(&self, n: u64) -> f64 {
        2.0 * self.num as f64 / self.den as f64 / n as f64
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m > lo {
        m
    } else {
        hi
    }
}

/// Exhaustive split search over `idx`, a multiset of rows of `x`.
pub(crate) fn best_split_indexed(
    x: &[&[f64]],
    y: &[bool],
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let n = idx.len();
    let min_leaf = min_leaf.max(1);
    if n < 2 * min_leaf {
        return None;
    }
    let pos = idx.iter().filter(|&&i| y[i]).count() as u64;
    let parent = Impurity::node(pos, n as u64);
    if parent.num == 0 {
        return None;
    }
    let mut feats = features.to_vec();
    feats.sort_unstable();
    feats.dedup();

    let mut best: Option<(Impurity, Split)> = None;
    let mut order = idx.to_vec();
    for &f in &feats {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let mut left_pos = 0u64;
        for i in 1..n {
            if y[order[i - 1]] {
                left_pos += 1;
            }
            let lo = x[order[i - 1]][f];
            let hi = x[order[i]][f];
            if lo >= hi || i < min_leaf || n - i < min_leaf {
                continue;
            }
            let imp = Impurity::children(left_pos, i as u64, pos - left_pos, (n - i) as u64);
            if imp.cmp(&parent) != Ordering::Less {
                continue;
            }
            if best.as_ref().is_none_or(|(b, _)| imp.cmp(b) == Ordering::Less) {
                let weighted = imp.gini(n as u64);
                best = Some((
                    imp,
                    Split {
                        feature: f,
                        threshold: midpoint(lo, hi),
                        gain: parent.gini(n as u64) - weighted,
                        weighted_gini: weighted,
                        left_count: i,
                    },
                ));
            }
        }
    }
    best.map(|(_, s)| s)
}

/// Best Gini split of `samples` over `feature_subset`, or `None` when no
/// split lowers impurity with at least `min_leaf` samples on each side.
pub fn best_split(samples: &[Sample], feature_subset: &[usize], min_leaf: usize) -> Option<Split> {
    let x: Vec<&[f64]> = samples.iter().map(|s| s.features).collect();
    let y: Vec<bool> = samples.iter().map(|s| s.label).collect();
    let idx: Vec<usize> = (0..samples.len()).collect();
    best_split_indexed(&x, &y, &idx, feature_subset, min_leaf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf_samples: usize,
    /// Node budget of this tree (internal nodes plus leaves).
    pub max_nodes: usize,
    /// Features drawn per split; clamped to the number available.
    pub features_per_split: usize,
}

struct Frontier {
    node: usize,
    depth: usize,
    idx: Vec<usize>,
    split: Option<Split>,
}

enum Draft {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Grows one tree best-first: the frontier leaf whose split removes the most
/// size-weighted impurity is expanded next, until the node budget, depth
/// limit or available splits run out.
pub fn grow_tree<R: Rng>(
    x: &[&[f64]],
    y: &[bool],
    idx: Vec<usize>,
    config: &TreeConfig,
    rng: &mut R,
) -> Tree {
    if idx.is_empty() {
        return Tree::leaf(0.0);
    }
    let n_features = x[idx[0]].len();
    let k = config.features_per_split.clamp(1, n_features.max(1));
    let probability = |idx: &[usize]| idx.iter().filter(|&&i| y[i]).count() as f64 / idx.len() as f64;

    let propose = |idx: &[usize], depth: usize, rng: &mut R| -> Option<Split> {
        if depth >= config.max_depth || n_features == 0 {
            return None;
        }
        let mut subset = index::sample(rng, n_features, k).into_vec();
        subset.sort_unstable();
        best_split_indexed(x, y, idx, &subset, config.min_leaf_samples)
    };

    let mut drafts = vec![Draft::Leaf(probability(&idx))];
    let split = propose(&idx, 0, rng);
    let mut frontier = vec![Frontier { node: 0, depth: 0, idx, split }];

    while drafts.len() + 2 <= config.max_nodes {
        // highest weighted gain; earliest-created on ties
        let pick = frontier
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.split.map(|s| (i, s.gain * f.idx.len() as f64, f.node)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
        let Some((pos, _, _)) = pick else { break };
        let leaf = frontier.swap_remove(pos);
        let split = leaf.split.expect("picked leaves have splits");
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = leaf
            .idx
            .iter()
            .partition(|&&i| x[i][split.feature] < split.threshold);
        let l = drafts.len();
        drafts.push(Draft::Leaf(probability(&left_idx)));
        drafts.push(Draft::Leaf(probability(&right_idx)));
        drafts[leaf.node] = Draft::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: l + 1,
        };
        for (node, part) in [(l, left_idx), (l + 1, right_idx)] {
            let split = propose(&part, leaf.depth + 1, rng);
            frontier.push(Frontier { node, depth: leaf.depth + 1, idx: part, split });
        }
    }

    // re-lay the drafts out in pre-order
    let mut nodes = Vec::with_capacity(drafts.len());
    let mut stack = vec![(0usize, None::<(usize, bool)>)];
    while let Some((d, parent)) = stack.pop() {
        let at = nodes.len();
        if let Some((p, is_left)) = parent {
            if let Node::Split { left, right, .. } = &mut nodes[p] {
                if is_left {
                    *left = at;
                } else {
                    *right = at;
                }
            }
        }
        match drafts[d] {
            Draft::Leaf(probability) => nodes.push(Node::Leaf { probability }),
            Draft::Split { feature, threshold, left, right } => {
                nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
                stack.push((right, Some((at, false))));
                stack.push((left, Some((at, true))));
            }
        }
    }
    Tree { nodes }
}
