//! Exhaustive enumeration over every complete tree of depth one or two.
//!
//! Partitions are formed by evaluating each candidate threshold directly on
//! the rows, with no sorting or running sums, so this path shares nothing
//! with [`exact_search`](super::exact_search) beyond the candidate set and the
//! tie rules.

use std::cmp::Ordering;

use super::{
    best_action, check_instance, cmp_value, objective, tie_order, SearchResult, Thresholds, TreeClassSpec, TreePolicy,
};
use crate::error::{Error, Result};

const MAX_ROWS: usize = 40;
const MAX_P: usize = 3;
const MAX_DEPTH: usize = 2;
const MAX_K: usize = 3;

/// Best tree found by enumerating all split structures, thresholds and leaf
/// actions. Limited to `T <= 40`, `p <= 3`, `L <= 2`, `K <= 3`.
pub fn brute_oracle(scores: &[Vec<f64>], contexts: &[Vec<f64>], spec: &TreeClassSpec) -> Result<SearchResult> {
    if scores.len() > MAX_ROWS || spec.p > MAX_P || spec.depth > MAX_DEPTH || spec.k > MAX_K {
        return Err(Error::OracleGuard(format!(
            "T={}, p={}, L={}, K={} (limits T<={MAX_ROWS}, p<={MAX_P}, L<={MAX_DEPTH}, K<={MAX_K})",
            scores.len(),
            spec.p,
            spec.depth,
            spec.k
        )));
    }
    check_instance(scores, contexts, spec)?;

    let tree = if spec.k <= 1 {
        TreePolicy::leaf(0)
    } else {
        let thresholds = Thresholds::new(contexts, spec.p);
        let splits: Vec<(usize, f64)> = (0..spec.p)
            .flat_map(|f| thresholds.candidates(f).into_iter().map(move |t| (f, t)))
            .collect();
        let all: Vec<usize> = (0..scores.len()).collect();
        match spec.depth {
            0 => leaf(scores, &all, spec.k).1,
            1 => best_depth_one(scores, contexts, &splits, &all, spec.k).1,
            _ => best_depth_two(scores, contexts, &splits, spec.k),
        }
    };
    let objective = objective(&tree, scores, contexts);
    Ok(SearchResult { tree, objective })
}

fn leaf(scores: &[Vec<f64>], rows: &[usize], k: usize) -> (f64, TreePolicy) {
    let sums: Vec<f64> = (0..k).map(|a| rows.iter().map(|&r| scores[r][a]).sum()).collect();
    let (a, v) = best_action(&sums);
    (v, TreePolicy::leaf(a))
}

fn partition(contexts: &[Vec<f64>], rows: &[usize], (f, t): (usize, f64)) -> (Vec<usize>, Vec<usize>) {
    rows.iter().partition(|&&r| contexts[r][f] <= t)
}

fn beats(cand: &(f64, TreePolicy), best: &Option<(f64, TreePolicy)>) -> bool {
    match best {
        None => true,
        Some(b) => match cmp_value(cand.0, b.0) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => tie_order(&cand.1, &b.1) == Ordering::Less,
        },
    }
}

fn stump(
    scores: &[Vec<f64>],
    contexts: &[Vec<f64>],
    split: (usize, f64),
    rows: &[usize],
    k: usize,
) -> (f64, TreePolicy) {
    let (l, r) = partition(contexts, rows, split);
    let (vl, tl) = leaf(scores, &l, k);
    let (vr, tr) = leaf(scores, &r, k);
    (vl + vr, TreePolicy::node(split.0, split.1, tl, tr))
}

fn best_depth_one(
    scores: &[Vec<f64>],
    contexts: &[Vec<f64>],
    splits: &[(usize, f64)],
    rows: &[usize],
    k: usize,
) -> (f64, TreePolicy) {
    let mut best = None;
    for &s in splits {
        let cand = stump(scores, contexts, s, rows, k);
        if beats(&cand, &best) {
            best = Some(cand);
        }
    }
    best.expect("at least two candidate splits")
}

fn best_depth_two(scores: &[Vec<f64>], contexts: &[Vec<f64>], splits: &[(usize, f64)], k: usize) -> TreePolicy {
    let all: Vec<usize> = (0..scores.len()).collect();
    let mut best: Option<(f64, TreePolicy)> = None;
    for &root in splits {
        let (l, r) = partition(contexts, &all, root);
        // Every child stump of each side, in split order.
        let left: Vec<(f64, TreePolicy)> = splits.iter().map(|&s| stump(scores, contexts, s, &l, k)).collect();
        let right: Vec<(f64, TreePolicy)> = splits.iter().map(|&s| stump(scores, contexts, s, &r, k)).collect();
        for (vl, tl) in &left {
            for (vr, tr) in &right {
                let value = vl + vr;
                if let Some(b) = &best {
                    if cmp_value(value, b.0) == Ordering::Less {
                        continue;
                    }
                }
                let cand = (value, TreePolicy::node(root.0, root.1, tl.clone(), tr.clone()));
                if beats(&cand, &best) {
                    best = Some(cand);
                }
            }
        }
    }
    best.expect("at least two candidate splits").1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treepolicy::first_tree;

    #[test]
    fn guard_rejects_large_instances() {
        let ctx = vec![vec![0.0; 4]];
        let scores = vec![vec![0.0, 1.0]];
        let spec = TreeClassSpec { depth: 1, p: 4, k: 2 };
        assert!(matches!(brute_oracle(&scores, &ctx, &spec), Err(Error::OracleGuard(_))));
        let spec = TreeClassSpec { depth: 3, p: 1, k: 2 };
        assert!(brute_oracle(&scores, &[vec![0.0]], &spec).is_err());
    }

    #[test]
    fn single_row_takes_its_argmax() {
        let ctx = vec![vec![0.4, 1.0]];
        let scores = vec![vec![0.1, 0.7, -0.2]];
        let spec = TreeClassSpec { depth: 2, p: 2, k: 3 };
        let res = brute_oracle(&scores, &ctx, &spec).unwrap();
        assert_eq!(res.objective, 0.7);
        assert_eq!(res.tree.action(&ctx[0]), 1);
    }

    #[test]
    fn all_zero_scores_pick_first_tree() {
        let ctx = vec![vec![1.0], vec![2.0]];
        let scores = vec![vec![0.0, 0.0]; 2];
        for depth in 1..=2 {
            let spec = TreeClassSpec { depth, p: 1, k: 2 };
            assert_eq!(brute_oracle(&scores, &ctx, &spec).unwrap().tree, first_tree(depth));
        }
    }

    #[test]
    fn four_row_step_function() {
        let ctx: Vec<Vec<f64>> = (1..=4).map(|v| vec![v as f64]).collect();
        let scores = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]];
        let res = brute_oracle(&scores, &ctx, &TreeClassSpec { depth: 1, p: 1, k: 2 }).unwrap();
        assert_eq!(
            res.tree,
            TreePolicy::node(0, 2.5, TreePolicy::leaf(0), TreePolicy::leaf(1))
        );
        assert_eq!(res.objective, 4.0);
    }
}
