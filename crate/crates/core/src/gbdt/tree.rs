use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tree node. Rows with `x[feature] < threshold` go left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "F: Scalar")]
pub enum Node<F> {
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
    /// `value` already includes the learning-rate shrinkage; `leaf` is the leaf's
    /// ordinal in left-first depth-first order.
    Leaf {
        value: F,
        leaf: usize,
    },
}

/// Axis-aligned binary regression tree; `nodes[0]` is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Node<F>>", into = "Vec<Node<F>>", bound = "F: Scalar")]
pub struct Tree<F> {
    nodes: Vec<Node<F>>,
    leaves: usize,
}

impl<F: Scalar> Tree<F> {
    /// Validates structure: children point forward, every node is reachable once,
    /// leaf ordinals are `0..leaves` in depth-first order, leaf values are finite.
    pub fn from_nodes(nodes: Vec<Node<F>>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("tree has no nodes"));
        }
        let mut visited = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        let mut next_leaf = 0;
        while let Some(i) = stack.pop() {
            if i >= nodes.len() || visited[i] {
                return Err(Error::invalid(format!("tree node {i} is out of range or shared")));
            }
            visited[i] = true;
            match &nodes[i] {
                Node::Split { threshold, left, right, .. } => {
                    if *left <= i || *right <= i || !threshold.is_finite() {
                        return Err(Error::invalid(format!("tree node {i} has invalid children or threshold")));
                    }
                    stack.push(*right);
                    stack.push(*left);
                }
                Node::Leaf { value, leaf } => {
                    if *leaf != next_leaf || !value.is_finite() {
                        return Err(Error::invalid(format!(
                            "tree leaf at node {i} has ordinal {leaf} or non-finite value"
                        )));
                    }
                    next_leaf += 1;
                }
            }
        }
        if visited.iter().any(|v| !v) {
            return Err(Error::invalid("tree has unreachable nodes"));
        }
        Ok(Self { nodes, leaves: next_leaf })
    }

    /// Single-leaf tree.
    pub fn leaf(value: F) -> Self {
        Self { nodes: vec![Node::Leaf { value, leaf: 0 }], leaves: 1 }
    }

    /// Depth-one tree: leaf 0 for `x[feature] < threshold`, leaf 1 otherwise.
    pub fn stump(feature: usize, threshold: F, left_value: F, right_value: F) -> Self {
        Self {
            nodes: vec![
                Node::Split { feature, threshold, left: 1, right: 2 },
                Node::Leaf { value: left_value, leaf: 0 },
                Node::Leaf { value: right_value, leaf: 1 },
            ],
            leaves: 2,
        }
    }

    pub(crate) fn from_nodes_unchecked(nodes: Vec<Node<F>>, leaves: usize) -> Self {
        debug_assert!(Self::from_nodes(nodes.clone()).is_ok());
        Self { nodes, leaves }
    }

    pub fn nodes(&self) -> &[Node<F>] {
        &self.nodes
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves
    }

    pub fn depth(&self) -> usize {
        fn go<F>(nodes: &[Node<F>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    /// Returns `(leaf ordinal, leaf value)` for `x`.
    #[inline]
    pub fn locate(&self, x: &[F]) -> (usize, F) {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] < *threshold { *left } else { *right };
                }
                Node::Leaf { value, leaf } => return (*leaf, *value),
            }
        }
    }

    #[inline]
    pub fn predict(&self, x: &[F]) -> F {
        self.locate(x).1
    }

    #[inline]
    pub fn leaf_index(&self, x: &[F]) -> usize {
        self.locate(x).0
    }
}

impl<F: Scalar> TryFrom<Vec<Node<F>>> for Tree<F> {
    type Error = Error;

    fn try_from(nodes: Vec<Node<F>>) -> Result<Self> {
        Self::from_nodes(nodes)
    }
}

impl<F: Scalar> From<Tree<F>> for Vec<Node<F>> {
    fn from(t: Tree<F>) -> Self {
        t.nodes
    }
}
