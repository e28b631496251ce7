//! Single CART tree grown on weighted Gini impurity.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ForestError;
use crate::seed::Rng;
use crate::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Weighted class totals of the training samples that reached the leaf.
    Leaf { negative: f64, positive: f64 },
    /// `x[feature] <= threshold` goes left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Arena-stored binary tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

/// Nested form used for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeRecord {
    Leaf { negative: f64, positive: f64 },
    Split { feature: usize, threshold: f64, left: Box<NodeRecord>, right: Box<NodeRecord> },
}

impl Tree {
    /// Validates that children indices point forward into the arena, every
    /// node is reachable exactly once, thresholds are finite and leaf counts
    /// are non-negative with a positive total.
    pub fn new(nodes: Vec<Node>, dimension: usize) -> Result<Self, ForestError> {
        let invalid = |m: &str| ForestError::InvalidTree(m.to_string());
        if nodes.is_empty() {
            return Err(invalid("empty tree"));
        }
        let mut referenced = vec![false; nodes.len()];
        referenced[0] = true;
        for (i, node) in nodes.iter().enumerate() {
            match *node {
                Node::Leaf { negative, positive } => {
                    if !(negative >= 0.0 && positive >= 0.0 && negative + positive > 0.0) {
                        return Err(invalid("leaf counts must be non-negative with positive total"));
                    }
                }
                Node::Split { feature, threshold, left, right } => {
                    if feature >= dimension || !threshold.is_finite() {
                        return Err(invalid("split feature out of range or threshold not finite"));
                    }
                    for child in [left, right] {
                        if child <= i || child >= nodes.len() || referenced[child] {
                            return Err(invalid("child index must point to a fresh later node"));
                        }
                        referenced[child] = true;
                    }
                }
            }
        }
        if referenced.iter().any(|r| !r) {
            return Err(invalid("unreachable node"));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Weighted positive fraction at the leaf `x` falls into.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { negative, positive } => return positive / (negative + positive),
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn to_record(&self) -> NodeRecord {
        fn go(nodes: &[Node], i: usize) -> NodeRecord {
            match nodes[i] {
                Node::Leaf { negative, positive } => NodeRecord::Leaf { negative, positive },
                Node::Split { feature, threshold, left, right } => NodeRecord::Split {
                    feature,
                    threshold,
                    left: Box::new(go(nodes, left)),
                    right: Box::new(go(nodes, right)),
                },
            }
        }
        go(&self.nodes, 0)
    }

    pub fn from_record(record: &NodeRecord, dimension: usize) -> Result<Self, ForestError> {
        fn go(rec: &NodeRecord, nodes: &mut Vec<Node>) -> usize {
            let at = nodes.len();
            match rec {
                NodeRecord::Leaf { negative, positive } => {
                    nodes.push(Node::Leaf { negative: *negative, positive: *positive })
                }
                NodeRecord::Split { feature, threshold, left, right } => {
                    nodes.push(Node::Leaf { negative: 0.0, positive: 0.0 });
                    let l = go(left, nodes);
                    let r = go(right, nodes);
                    nodes[at] = Node::Split { feature: *feature, threshold: *threshold, left: l, right: r };
                }
            }
            at
        }
        let mut nodes = Vec::new();
        go(record, &mut nodes);
        Self::new(nodes, dimension)
    }
}

/// Growth limits for one tree.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: usize,
}

struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    /// Higher score wins; ties go to the lower feature, then lower threshold.
    fn beats(&self, other: &Candidate) -> bool {
        if self.score != other.score {
            return self.score > other.score;
        }
        (self.feature, self.threshold) < (other.feature, other.threshold)
    }
}

/// Grow a tree over the rows listed in `rows`, where `weight[i]` and
/// `count[i]` carry the bootstrap multiplicity of row `i`.
pub(crate) fn grow(
    x: &Matrix,
    labels: &[u8],
    weight: &[f64],
    count: &[u32],
    mut rows: Vec<usize>,
    params: GrowParams,
    rng: &mut Rng,
) -> Tree {
    let d = x.cols();
    let min_leaf = params.min_samples_leaf.max(1) as u64;
    let mut nodes: Vec<Node> = Vec::new();
    let mut scratch: Vec<usize> = Vec::with_capacity(rows.len());
    let mut features: Vec<usize> = (0..d).collect();
    // (start, end, depth, node slot)
    let mut stack = vec![(0usize, rows.len(), 0usize, 0usize)];
    nodes.push(Node::Leaf { negative: 0.0, positive: 0.0 });

    while let Some((start, end, depth, slot)) = stack.pop() {
        let span = &rows[start..end];
        let (mut neg, mut pos, mut n) = (0.0, 0.0, 0u64);
        for &i in span {
            if labels[i] != 0 {
                pos += weight[i];
            } else {
                neg += weight[i];
            }
            n += u64::from(count[i]);
        }
        let leaf = Node::Leaf { negative: neg, positive: pos };
        let stop = neg == 0.0
            || pos == 0.0
            || params.max_depth.is_some_and(|m| depth >= m)
            || n < 2 * min_leaf;
        if stop {
            nodes[slot] = leaf;
            continue;
        }

        let parent_score = (neg * neg + pos * pos) / (neg + pos);
        features.shuffle(rng);
        let mut best: Option<Candidate> = None;
        let mut informative = 0;
        for &f in features.iter() {
            if informative >= params.max_features {
                break;
            }
            scratch.clear();
            scratch.extend_from_slice(span);
            scratch.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
            let lo = x.get(scratch[0], f);
            let hi = x.get(scratch[scratch.len() - 1], f);
            if lo == hi {
                // constant features do not count towards max_features
                continue;
            }
            informative += 1;
            let (mut ln, mut lp, mut lc) = (0.0, 0.0, 0u64);
            for k in 0..scratch.len() - 1 {
                let i = scratch[k];
                if labels[i] != 0 {
                    lp += weight[i];
                } else {
                    ln += weight[i];
                }
                lc += u64::from(count[i]);
                let a = x.get(i, f);
                let b = x.get(scratch[k + 1], f);
                if a == b || lc < min_leaf || n - lc < min_leaf {
                    continue;
                }
                let (rn, rp) = (neg - ln, pos - lp);
                let (lw, rw) = (ln + lp, rn + rp);
                if lw <= 0.0 || rw <= 0.0 {
                    continue;
                }
                // weighted child Gini is minimised where this sum peaks
                let score = (ln * ln + lp * lp) / lw + (rn * rn + rp * rp) / rw;
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                let cand = Candidate { score, feature: f, threshold };
                if best.as_ref().is_none_or(|bst| cand.beats(bst)) {
                    best = Some(cand);
                }
            }
        }
        // numerical guard: children may never be less pure than the parent
        let Some(best) = best.filter(|b| b.score >= parent_score * (1.0 - 1e-12)) else {
            nodes[slot] = leaf;
            continue;
        };

        let span = &mut rows[start..end];
        scratch.clear();
        scratch.extend(span.iter().copied().filter(|&i| x.get(i, best.feature) <= best.threshold));
        let mid = scratch.len();
        scratch.extend(span.iter().copied().filter(|&i| x.get(i, best.feature) > best.threshold));
        span.copy_from_slice(&scratch);

        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf { negative: 0.0, positive: 0.0 });
        nodes.push(Node::Leaf { negative: 0.0, positive: 0.0 });
        nodes[slot] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
        stack.push((start + mid, end, depth + 1, right));
        stack.push((start, start + mid, depth + 1, left));
    }
    Tree { nodes }
}
