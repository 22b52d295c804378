//! Out-of-sample policy value and regret against the best tree in the class,
//! both measured on the noiseless means of a held-out test set.

use crate::agent::{greedy_linear, AgentState};
use crate::env::TestSet;
use crate::error::{Error, Result};
use crate::treepolicy::{exact_search, TreeClassSpec, TreePolicy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretReport {
    pub policy_value: f64,
    pub best_value: f64,
    pub regret: f64,
    pub n_test: usize,
}

impl RegretReport {
    pub fn new(policy_value: f64, best_value: f64, n_test: usize) -> Self {
        RegretReport {
            policy_value,
            best_value,
            regret: best_value - policy_value,
            n_test,
        }
    }
}

/// Mean true reward of the actions `policy` picks on the test contexts.
pub fn policy_value_fn(policy: impl Fn(&[f64]) -> usize, test: &TestSet) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Config("empty test set".into()));
    }
    let total: f64 = test
        .contexts
        .iter()
        .zip(&test.true_means)
        .map(|(x, mu)| mu[policy(x)])
        .sum();
    Ok(total / test.len() as f64)
}

pub fn policy_value(tree: &TreePolicy, test: &TestSet) -> Result<f64> {
    if let Some(x) = test.contexts.first() {
        if tree.max_feature().is_some_and(|f| f >= x.len()) {
            return Err(Error::Dimension {
                expected: x.len(),
                got: tree.max_feature().unwrap_or(0) + 1,
            });
        }
    }
    if let Some(mu) = test.true_means.first() {
        if tree.max_action() >= mu.len() {
            return Err(Error::Dimension {
                expected: mu.len(),
                got: tree.max_action() + 1,
            });
        }
    }
    policy_value_fn(|x| tree.action(x), test)
}

/// Best tree of the class on the test set's true means, and its mean value.
pub fn best_in_class(test: &TestSet, spec: &TreeClassSpec) -> Result<(TreePolicy, f64)> {
    if test.is_empty() {
        return Err(Error::Config("empty test set".into()));
    }
    let res = exact_search(&test.true_means, &test.contexts, spec)?;
    Ok((res.tree, res.objective / test.len() as f64))
}

pub fn regret(tree: &TreePolicy, test: &TestSet, spec: &TreeClassSpec) -> Result<RegretReport> {
    let (_, best) = best_in_class(test, spec)?;
    Ok(RegretReport::new(policy_value(tree, test)?, best, test.len()))
}

/// Regret of the collection agent frozen at its current posterior means and
/// acting greedily (lowest index on ties).
pub fn agent_regret(agent: &AgentState, test: &TestSet, spec: &TreeClassSpec) -> Result<RegretReport> {
    let (_, best) = best_in_class(test, spec)?;
    let value = frozen_agent_value(&agent.posterior_means(), test)?;
    Ok(RegretReport::new(value, best, test.len()))
}

/// Value of the greedy linear policy with the given per-arm coefficients.
pub fn frozen_agent_value(thetas: &[Vec<f64>], test: &TestSet) -> Result<f64> {
    policy_value_fn(|x| greedy_linear(thetas, x), test)
}
