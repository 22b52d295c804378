//! Exact maximization of `Σ_t scores[t][tree(x_t)]` over complete trees.
//!
//! Depth 1 is a single sweep per feature over sorted rows with running
//! per-arm sums. Depth 2 sweeps the root threshold of each root feature
//! while a prefix-maximum segment tree per second-level feature keeps the
//! best depth-1 subtree of each side available in `O(p · K²)` per root
//! position. Deeper trees enumerate root splits and recurse.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::{
    best_action, check_instance, cmp_value, objective, tie_order, SearchResult, Thresholds, TreeClassSpec, TreePolicy,
};
use crate::error::Result;

const EMPTY: u32 = u32::MAX;

/// Exact best tree of `spec`'s class for the given per-row arm scores.
pub fn exact_search(scores: &[Vec<f64>], contexts: &[Vec<f64>], spec: &TreeClassSpec) -> Result<SearchResult> {
    run(scores, contexts, spec, Strategy::Fast)
}

/// Same contract as [`exact_search`] but every depth above one is solved by
/// plain recursion over root splits. Quadratic per level; meant for
/// cross-checking on small instances.
pub fn exact_search_recursive(
    scores: &[Vec<f64>],
    contexts: &[Vec<f64>],
    spec: &TreeClassSpec,
) -> Result<SearchResult> {
    run(scores, contexts, spec, Strategy::Recursive)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Strategy {
    Fast,
    Recursive,
}

fn run(scores: &[Vec<f64>], contexts: &[Vec<f64>], spec: &TreeClassSpec, strategy: Strategy) -> Result<SearchResult> {
    check_instance(scores, contexts, spec)?;
    let tree = if spec.k <= 1 {
        TreePolicy::leaf(0)
    } else {
        let inst = Instance {
            scores,
            contexts,
            thresholds: Thresholds::new(contexts, spec.p),
            p: spec.p,
            k: spec.k,
            strategy,
        };
        let rows: Vec<usize> = (0..scores.len()).collect();
        inst.best(&rows, spec.depth, true).1
    };
    let objective = objective(&tree, scores, contexts);
    Ok(SearchResult { tree, objective })
}

struct Instance<'a> {
    scores: &'a [Vec<f64>],
    contexts: &'a [Vec<f64>],
    thresholds: Thresholds,
    p: usize,
    k: usize,
    strategy: Strategy,
}

/// A depth-1 tree: split plus two leaf actions.
#[derive(Debug, Clone, Copy)]
struct Stump {
    value: f64,
    feature: usize,
    threshold: f64,
    left: usize,
    right: usize,
}

impl Stump {
    fn key_cmp(&self, other: &Stump) -> Ordering {
        self.feature
            .cmp(&other.feature)
            .then(self.threshold.total_cmp(&other.threshold))
            .then(self.left.cmp(&other.left))
            .then(self.right.cmp(&other.right))
    }

    fn beats(&self, other: &Stump) -> bool {
        match cmp_value(self.value, other.value) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.key_cmp(other) == Ordering::Less,
        }
    }

    fn tree(&self) -> TreePolicy {
        TreePolicy::node(
            self.feature,
            self.threshold,
            TreePolicy::leaf(self.left),
            TreePolicy::leaf(self.right),
        )
    }
}

fn keep_better(best: &mut Option<Stump>, cand: Stump) {
    if best.as_ref().is_none_or(|b| cand.beats(b)) {
        *best = Some(cand);
    }
}

/// A depth-2 tree given by its root split and two stumps.
#[derive(Debug, Clone, Copy)]
struct Fork {
    value: f64,
    feature: usize,
    threshold: f64,
    left: Stump,
    right: Stump,
}

impl Fork {
    fn key_cmp(&self, other: &Fork) -> Ordering {
        self.feature
            .cmp(&other.feature)
            .then(self.threshold.total_cmp(&other.threshold))
            .then_with(|| self.left.key_cmp(&other.left))
            .then_with(|| self.right.key_cmp(&other.right))
    }

    fn beats(&self, other: &Fork) -> bool {
        match cmp_value(self.value, other.value) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.key_cmp(other) == Ordering::Less,
        }
    }

    fn tree(&self) -> TreePolicy {
        TreePolicy::node(self.feature, self.threshold, self.left.tree(), self.right.tree())
    }
}

/// Rows of a subset sorted by one feature, split into runs of equal value.
struct Groups {
    /// Local indices into the subset, sorted by feature value.
    order: Vec<usize>,
    /// `starts[g]..starts[g + 1]` is group `g` within `order`.
    starts: Vec<usize>,
    values: Vec<f64>,
}

impl Groups {
    fn len(&self) -> usize {
        self.values.len()
    }

    fn members(&self, g: usize) -> &[usize] {
        &self.order[self.starts[g]..self.starts[g + 1]]
    }
}

impl Instance<'_> {
    fn groups(&self, rows: &[usize], feature: usize) -> Groups {
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by(|&a, &b| {
            self.contexts[rows[a]][feature]
                .total_cmp(&self.contexts[rows[b]][feature])
                .then(a.cmp(&b))
        });
        let mut starts = Vec::new();
        let mut values = Vec::new();
        for (i, &local) in order.iter().enumerate() {
            let v = self.contexts[rows[local]][feature];
            if values.last() != Some(&v) {
                starts.push(i);
                values.push(v);
            }
        }
        starts.push(order.len());
        Groups { order, starts, values }
    }

    fn root_threshold(&self, feature: usize, groups: &Groups, pos: usize) -> f64 {
        if pos == 0 {
            f64::NEG_INFINITY
        } else {
            self.thresholds.after(feature, groups.values[pos - 1])
        }
    }

    fn best(&self, rows: &[usize], depth: usize, top: bool) -> (f64, TreePolicy) {
        match depth {
            0 => self.best_leaf(rows),
            1 => {
                let s = self.best_stump(rows);
                (s.value, s.tree())
            }
            2 if self.strategy == Strategy::Fast => {
                let f = self.best_fork(rows, top);
                (f.value, f.tree())
            }
            _ => self.best_by_recursion(rows, depth, top),
        }
    }

    fn best_leaf(&self, rows: &[usize]) -> (f64, TreePolicy) {
        let mut sums = vec![0.0; self.k];
        for &r in rows {
            add_into(&mut sums, &self.scores[r]);
        }
        let (a, v) = best_action(&sums);
        (v, TreePolicy::leaf(a))
    }

    fn best_stump(&self, rows: &[usize]) -> Stump {
        let k = self.k;
        let mut best = None;
        for f in 0..self.p {
            let groups = self.groups(rows, f);
            let g_count = groups.len();
            // suffix[g] holds the per-arm sums of groups g.., accumulated
            // from the back so both sides are plain running sums.
            let mut suffix = vec![0.0; (g_count + 1) * k];
            for g in (0..g_count).rev() {
                let (head, tail) = suffix.split_at_mut((g + 1) * k);
                let cur = &mut head[g * k..];
                cur.copy_from_slice(&tail[..k]);
                for &local in groups.members(g) {
                    add_into(cur, &self.scores[rows[local]]);
                }
            }
            let mut prefix = vec![0.0; k];
            for pos in 0..=g_count {
                let (a, va) = best_action(&prefix);
                let (b, vb) = best_action(&suffix[pos * k..(pos + 1) * k]);
                keep_better(
                    &mut best,
                    Stump {
                        value: va + vb,
                        feature: f,
                        threshold: self.root_threshold(f, &groups, pos),
                        left: a,
                        right: b,
                    },
                );
                if pos < g_count {
                    for &local in groups.members(pos) {
                        add_into(&mut prefix, &self.scores[rows[local]]);
                    }
                }
            }
        }
        best.expect("p >= 1")
    }

    fn best_fork(&self, rows: &[usize], parallel: bool) -> Fork {
        let per_feature: Vec<Option<Fork>> = if parallel {
            (0..self.p)
                .into_par_iter()
                .map(|f| self.best_fork_at(rows, f))
                .collect()
        } else {
            (0..self.p).map(|f| self.best_fork_at(rows, f)).collect()
        };
        let mut best: Option<Fork> = None;
        for cand in per_feature.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
        }
        best.expect("p >= 1")
    }

    /// Best depth-2 tree whose root splits on `root`.
    fn best_fork_at(&self, rows: &[usize], root: usize) -> Option<Fork> {
        let root_groups = self.groups(rows, root);
        let g_count = root_groups.len();
        let second: Vec<Groups> = (0..self.p).map(|f| self.groups(rows, f)).collect();
        // group_of[f][local] = group of that row in feature f's order.
        let group_of: Vec<Vec<u32>> = second
            .iter()
            .map(|groups| {
                let mut idx = vec![0u32; rows.len()];
                for g in 0..groups.len() {
                    for &local in groups.members(g) {
                        idx[local] = g as u32;
                    }
                }
                idx
            })
            .collect();

        let side_best = |trees: &[PrefixTree]| -> Stump {
            let mut best = None;
            for (f, tree) in trees.iter().enumerate() {
                tree.for_each_pair(|a, b, value, pos| {
                    let threshold = if pos == EMPTY {
                        f64::NEG_INFINITY
                    } else {
                        self.thresholds.after(f, second[f].values[pos as usize])
                    };
                    keep_better(
                        &mut best,
                        Stump {
                            value,
                            feature: f,
                            threshold,
                            left: a,
                            right: b,
                        },
                    );
                });
            }
            best.expect("p >= 1")
        };
        let insert_group = |trees: &mut [PrefixTree], g: usize| {
            for &local in root_groups.members(g) {
                let s = &self.scores[rows[local]];
                for (f, tree) in trees.iter_mut().enumerate() {
                    tree.add(group_of[f][local] as usize, s);
                }
            }
        };
        let fresh = || -> Vec<PrefixTree> { second.iter().map(|g| PrefixTree::new(g.len(), self.k)).collect() };

        let mut left_best = Vec::with_capacity(g_count + 1);
        let mut trees = fresh();
        for pos in 0..=g_count {
            left_best.push(side_best(&trees));
            if pos < g_count {
                insert_group(&mut trees, pos);
            }
        }
        let mut right_best = vec![None; g_count + 1];
        let mut trees = fresh();
        for pos in (0..=g_count).rev() {
            right_best[pos] = Some(side_best(&trees));
            if pos > 0 {
                insert_group(&mut trees, pos - 1);
            }
        }

        let mut best: Option<Fork> = None;
        for (pos, (l, r)) in left_best.into_iter().zip(right_best).enumerate() {
            let r = r.expect("filled");
            let cand = Fork {
                value: l.value + r.value,
                feature: root,
                threshold: self.root_threshold(root, &root_groups, pos),
                left: l,
                right: r,
            };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
        }
        best
    }

    fn best_by_recursion(&self, rows: &[usize], depth: usize, parallel: bool) -> (f64, TreePolicy) {
        let solve_feature = |f: usize| -> Option<(f64, TreePolicy)> {
            let groups = self.groups(rows, f);
            let mut best: Option<(f64, TreePolicy)> = None;
            for pos in 0..=groups.len() {
                let split = groups.starts.get(pos).copied().unwrap_or(rows.len());
                let left: Vec<usize> = groups.order[..split].iter().map(|&l| rows[l]).collect();
                let right: Vec<usize> = groups.order[split..].iter().map(|&l| rows[l]).collect();
                let (vl, tl) = self.best(&left, depth - 1, false);
                let (vr, tr) = self.best(&right, depth - 1, false);
                let cand = (
                    vl + vr,
                    TreePolicy::node(f, self.root_threshold(f, &groups, pos), tl, tr),
                );
                if best.as_ref().is_none_or(|b| tree_beats(&cand, b)) {
                    best = Some(cand);
                }
            }
            best
        };
        let per_feature: Vec<Option<(f64, TreePolicy)>> = if parallel {
            (0..self.p).into_par_iter().map(solve_feature).collect()
        } else {
            (0..self.p).map(solve_feature).collect()
        };
        let mut best: Option<(f64, TreePolicy)> = None;
        for cand in per_feature.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| tree_beats(&cand, b)) {
                best = Some(cand);
            }
        }
        best.expect("p >= 1")
    }
}

fn tree_beats(a: &(f64, TreePolicy), b: &(f64, TreePolicy)) -> bool {
    match cmp_value(a.0, b.0) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => tie_order(&a.1, &b.1) == Ordering::Less,
    }
}

fn add_into(acc: &mut [f64], row: &[f64]) {
    for (a, v) in acc.iter_mut().zip(row) {
        *a += v;
    }
}

/// Segment tree over the value groups of one feature. Each node stores the
/// per-arm score sums of its range and, for every arm pair `(a, b)`, the
/// maximum over prefixes of `Σ (s_a − s_b)` with the earliest group
/// attaining it (`EMPTY` for the empty prefix).
///
/// For a side with totals `S`, the best stump on this feature sending
/// prefix groups to action `a` and the rest to `b` is `S_b + pref[a][b]`.
struct PrefixTree {
    k: usize,
    size: usize,
    sums: Vec<f64>,
    pref: Vec<f64>,
    pos: Vec<u32>,
}

impl PrefixTree {
    fn new(groups: usize, k: usize) -> Self {
        let size = groups.max(1).next_power_of_two();
        let nodes = 2 * size;
        PrefixTree {
            k,
            size,
            sums: vec![0.0; nodes * k],
            pref: vec![0.0; nodes * k * k],
            pos: vec![EMPTY; nodes * k * k],
        }
    }

    fn add(&mut self, group: usize, row: &[f64]) {
        let k = self.k;
        let mut node = self.size + group;
        add_into(&mut self.sums[node * k..(node + 1) * k], row);
        for a in 0..k {
            for b in 0..k {
                let d = self.sums[node * k + a] - self.sums[node * k + b];
                let i = (node * k + a) * k + b;
                if cmp_value(d, 0.0) == Ordering::Greater {
                    self.pref[i] = d;
                    self.pos[i] = group as u32;
                } else {
                    self.pref[i] = 0.0;
                    self.pos[i] = EMPTY;
                }
            }
        }
        while node > 1 {
            node /= 2;
            self.pull(node);
        }
    }

    fn pull(&mut self, node: usize) {
        let k = self.k;
        let (l, r) = (2 * node, 2 * node + 1);
        for a in 0..k {
            self.sums[node * k + a] = self.sums[l * k + a] + self.sums[r * k + a];
        }
        for a in 0..k {
            for b in 0..k {
                let li = (l * k + a) * k + b;
                let ri = (r * k + a) * k + b;
                let ni = (node * k + a) * k + b;
                let through_right = self.sums[l * k + a] - self.sums[l * k + b] + self.pref[ri];
                if self.pos[ri] != EMPTY && cmp_value(through_right, self.pref[li]) == Ordering::Greater {
                    self.pref[ni] = through_right;
                    self.pos[ni] = self.pos[ri];
                } else {
                    self.pref[ni] = self.pref[li];
                    self.pos[ni] = self.pos[li];
                }
            }
        }
    }

    /// Calls `f(a, b, value, pos)` for every arm pair in lexicographic order.
    fn for_each_pair(&self, mut f: impl FnMut(usize, usize, f64, u32)) {
        let k = self.k;
        for a in 0..k {
            for b in 0..k {
                let i = (k + a) * k + b;
                f(a, b, self.sums[k + b] + self.pref[i], self.pos[i]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treepolicy::first_tree;

    fn spec(depth: usize, p: usize, k: usize) -> TreeClassSpec {
        TreeClassSpec { depth, p, k }
    }

    #[test]
    fn four_row_step_function() {
        let ctx: Vec<Vec<f64>> = (1..=4).map(|v| vec![v as f64]).collect();
        let scores = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]];
        let res = exact_search(&scores, &ctx, &spec(1, 1, 2)).unwrap();
        assert_eq!(
            res.tree,
            TreePolicy::node(0, 2.5, TreePolicy::leaf(0), TreePolicy::leaf(1))
        );
        assert_eq!(res.objective, 4.0);
    }

    #[test]
    fn single_arm_returns_leaf_zero() {
        let ctx = vec![vec![0.1, 0.2], vec![0.3, -1.0]];
        let scores = vec![vec![2.0], vec![-0.5]];
        let res = exact_search(&scores, &ctx, &spec(2, 2, 1)).unwrap();
        assert_eq!(res.tree, TreePolicy::leaf(0));
        assert_eq!(res.objective, 1.5);
    }

    #[test]
    fn all_zero_scores_pick_first_tree() {
        let ctx = vec![vec![0.1, 0.2], vec![0.3, -1.0], vec![-0.4, 0.0]];
        let scores = vec![vec![0.0; 3]; 3];
        for depth in 1..=3 {
            let res = exact_search(&scores, &ctx, &spec(depth, 2, 3)).unwrap();
            assert_eq!(res.tree, first_tree(depth));
        }
    }

    #[test]
    fn depth_two_captures_interval() {
        // Arm 1 is best only for the middle value: needs two splits.
        let ctx: Vec<Vec<f64>> = (0..9).map(|v| vec![v as f64, 0.0]).collect();
        let scores: Vec<Vec<f64>> = (0..9)
            .map(|v| {
                if (3..6).contains(&v) {
                    vec![0.0, 1.0]
                } else {
                    vec![1.0, 0.0]
                }
            })
            .collect();
        let d1 = exact_search(&scores, &ctx, &spec(1, 2, 2)).unwrap();
        let d2 = exact_search(&scores, &ctx, &spec(2, 2, 2)).unwrap();
        assert_eq!(d1.objective, 6.0);
        assert_eq!(d2.objective, 9.0);
    }

    #[test]
    fn fast_and_recursive_agree_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..60 {
            let n = rng.random_range(1..40);
            let p = rng.random_range(1..4);
            let k = rng.random_range(2..4);
            // Coarse contexts force repeated values.
            let ctx: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..p).map(|_| rng.random_range(0..6) as f64).collect())
                .collect();
            let scores: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let fast = exact_search(&scores, &ctx, &spec(2, p, k)).unwrap();
            let slow = exact_search_recursive(&scores, &ctx, &spec(2, p, k)).unwrap();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn depth_three_uses_recursion_over_fast_forks() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let n = 14;
            let ctx: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(0..5) as f64, rng.random()])
                .collect();
            let scores: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
            let fast = exact_search(&scores, &ctx, &spec(3, 2, 2)).unwrap();
            let slow = exact_search_recursive(&scores, &ctx, &spec(3, 2, 2)).unwrap();
            assert_eq!(fast, slow);
            assert!(fast.tree.depth() == 3);
        }
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let ctx = vec![vec![0.0]];
        assert!(exact_search(&[vec![0.0, 1.0], vec![0.0, 1.0]], &ctx, &spec(1, 1, 2)).is_err());
        assert!(exact_search(&[vec![0.0]], &ctx, &spec(1, 1, 2)).is_err());
        assert!(exact_search(&[vec![f64::NAN, 1.0]], &ctx, &spec(1, 1, 2)).is_err());
    }
}
