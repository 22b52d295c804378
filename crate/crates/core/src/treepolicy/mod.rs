//! Depth-`L` axis-aligned decision-tree policies and exact policy search.
//!
//! A tree routes a context to the left child iff `x[feature] <= threshold`.
//! Searched trees are always complete to depth `L`; a shallower policy is
//! represented by a split that sends every row to one side.
//!
//! Split thresholds come from a fixed candidate set per feature: `-inf`, the
//! midpoints between consecutive distinct training values, and `+inf`. Among
//! trees whose objectives tie (within a relative `1e-12`), the winner is the
//! smallest under [`tie_order`]: feature index, then threshold, then the left
//! subtree, then the right subtree, with leaf actions compared by index.

mod brute;
mod search;
mod text;

use std::cmp::Ordering;

pub use brute::brute_oracle;
pub use search::{exact_search, exact_search_recursive};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TreePolicy {
    Leaf {
        action: usize,
    },
    Node {
        feature: usize,
        threshold: f64,
        left: Box<TreePolicy>,
        right: Box<TreePolicy>,
    },
}

/// The policy class: complete trees of depth `depth` over `p` features and
/// `k` actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeClassSpec {
    pub depth: usize,
    pub p: usize,
    pub k: usize,
}

/// A searched tree together with its objective `Σ_t scores[t][tree(x_t)]`,
/// summed in row order.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub tree: TreePolicy,
    pub objective: f64,
}

impl TreePolicy {
    pub fn leaf(action: usize) -> Self {
        TreePolicy::Leaf { action }
    }

    pub fn node(feature: usize, threshold: f64, left: TreePolicy, right: TreePolicy) -> Self {
        TreePolicy::Node {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Routes without checking the context length.
    pub fn action(&self, x: &[f64]) -> usize {
        let mut node = self;
        loop {
            match node {
                TreePolicy::Leaf { action } => return *action,
                TreePolicy::Node {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    /// Action for context `x`, which must have length `p`.
    pub fn predict(&self, x: &[f64], p: usize) -> Result<usize> {
        if x.len() != p {
            return Err(Error::Dimension {
                expected: p,
                got: x.len(),
            });
        }
        if self.max_feature().is_some_and(|f| f >= p) {
            return Err(Error::Dimension {
                expected: p,
                got: self.max_feature().unwrap_or(0) + 1,
            });
        }
        Ok(self.action(x))
    }

    pub fn depth(&self) -> usize {
        match self {
            TreePolicy::Leaf { .. } => 0,
            TreePolicy::Node { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn max_feature(&self) -> Option<usize> {
        match self {
            TreePolicy::Leaf { .. } => None,
            TreePolicy::Node {
                feature, left, right, ..
            } => Some(
                (*feature)
                    .max(left.max_feature().unwrap_or(0))
                    .max(right.max_feature().unwrap_or(0)),
            ),
        }
    }

    pub fn max_action(&self) -> usize {
        match self {
            TreePolicy::Leaf { action } => *action,
            TreePolicy::Node { left, right, .. } => left.max_action().max(right.max_action()),
        }
    }

    /// Checks that the tree belongs to `spec`'s class.
    pub fn validate(&self, spec: &TreeClassSpec) -> Result<()> {
        if self.depth() > spec.depth {
            return Err(Error::Config(format!(
                "tree depth {} exceeds class depth {}",
                self.depth(),
                spec.depth
            )));
        }
        if self.max_action() >= spec.k {
            return Err(Error::Config(format!(
                "leaf action {} out of range for {} arms",
                self.max_action(),
                spec.k
            )));
        }
        if let Some(f) = self.max_feature().filter(|&f| f >= spec.p) {
            return Err(Error::Config(format!(
                "split feature {f} out of range for p={}",
                spec.p
            )));
        }
        Ok(())
    }
}

/// Objective `Σ_t scores[t][tree(x_t)]`, accumulated in row order.
pub fn objective(tree: &TreePolicy, scores: &[Vec<f64>], contexts: &[Vec<f64>]) -> f64 {
    scores.iter().zip(contexts).map(|(row, x)| row[tree.action(x)]).sum()
}

/// Total order used to break objective ties.
pub fn tie_order(a: &TreePolicy, b: &TreePolicy) -> Ordering {
    use TreePolicy::*;
    match (a, b) {
        (Leaf { action: x }, Leaf { action: y }) => x.cmp(y),
        (Leaf { .. }, Node { .. }) => Ordering::Less,
        (Node { .. }, Leaf { .. }) => Ordering::Greater,
        (
            Node {
                feature: fa,
                threshold: ta,
                left: la,
                right: ra,
            },
            Node {
                feature: fb,
                threshold: tb,
                left: lb,
                right: rb,
            },
        ) => fa
            .cmp(fb)
            .then(ta.total_cmp(tb))
            .then_with(|| tie_order(la, lb))
            .then_with(|| tie_order(ra, rb)),
    }
}

/// Tolerance below which two objectives count as tied.
pub(crate) fn tie_tol(a: f64, b: f64) -> f64 {
    1e-12 * 1f64.max(a.abs()).max(b.abs())
}

/// `Greater` when `a` has the clearly larger objective, `Equal` when tied.
pub(crate) fn cmp_value(a: f64, b: f64) -> Ordering {
    let tol = tie_tol(a, b);
    if a > b + tol {
        Ordering::Greater
    } else if a < b - tol {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

/// Lowest-index action whose value is tied with the maximum.
pub(crate) fn best_action(sums: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (a, &v) in sums.iter().enumerate().skip(1) {
        if cmp_value(v, sums[best]) == Ordering::Greater {
            best = a;
        }
    }
    (best, sums[best])
}

/// Candidate split thresholds derived from the training contexts.
#[derive(Debug, Clone)]
pub struct Thresholds {
    /// Sorted distinct values of each feature.
    values: Vec<Vec<f64>>,
}

impl Thresholds {
    pub fn new(contexts: &[Vec<f64>], p: usize) -> Self {
        let values = (0..p)
            .map(|f| {
                let mut v: Vec<f64> = contexts.iter().map(|x| x[f]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        Thresholds { values }
    }

    /// Every candidate threshold of `feature`, ascending.
    pub fn candidates(&self, feature: usize) -> Vec<f64> {
        let vals = &self.values[feature];
        let mut out = Vec::with_capacity(vals.len() + 1);
        out.push(f64::NEG_INFINITY);
        out.extend(vals.windows(2).map(|w| midpoint(w[0], w[1])));
        out.push(f64::INFINITY);
        out
    }

    /// Smallest candidate threshold of `feature` that is `>= v`, where `v` is
    /// one of the training values.
    pub fn after(&self, feature: usize, v: f64) -> f64 {
        let vals = &self.values[feature];
        match vals.binary_search_by(|probe| probe.total_cmp(&v)) {
            Ok(i) if i + 1 < vals.len() => midpoint(vals[i], vals[i + 1]),
            Ok(_) => f64::INFINITY,
            Err(_) => panic!("value {v} is not a training value of feature {feature}"),
        }
    }
}

/// Midpoint `m` of `a < b` with `a <= m < b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m.is_finite() && m >= a && m < b {
        m
    } else {
        let m = a / 2.0 + b / 2.0;
        if m >= a && m < b {
            m
        } else {
            a
        }
    }
}

/// The complete depth-`depth` tree that splits on feature 0 at `-inf`
/// everywhere and takes action 0: the first tree in tie order.
pub fn first_tree(depth: usize) -> TreePolicy {
    if depth == 0 {
        TreePolicy::leaf(0)
    } else {
        let child = first_tree(depth - 1);
        TreePolicy::node(0, f64::NEG_INFINITY, child.clone(), child)
    }
}

pub(crate) fn check_instance(scores: &[Vec<f64>], contexts: &[Vec<f64>], spec: &TreeClassSpec) -> Result<()> {
    if scores.len() != contexts.len() {
        return Err(Error::Dimension {
            expected: contexts.len(),
            got: scores.len(),
        });
    }
    if let Some(row) = scores.iter().find(|r| r.len() != spec.k) {
        return Err(Error::Dimension {
            expected: spec.k,
            got: row.len(),
        });
    }
    if let Some(x) = contexts.iter().find(|x| x.len() != spec.p) {
        return Err(Error::Dimension {
            expected: spec.p,
            got: x.len(),
        });
    }
    if scores
        .iter()
        .flatten()
        .chain(contexts.iter().flatten())
        .any(|v| !v.is_finite())
    {
        return Err(Error::Config("scores and contexts must be finite".into()));
    }
    Ok(())
}
