//! End-to-end protocol: collect adaptively, score, learn under each weight
//! scheme, and evaluate against the best tree on a shared test set.
//!
//! Each replication owns one RNG stream seeded with `base_seed ^ rep`, and
//! every collection step consumes a fixed number of draws. Horizon prefixes
//! of one long run therefore match shorter runs exactly.

use std::time::Instant;

use rayon::prelude::*;

use crate::agent::{AgentConfig, AgentState, FloorSchedule, LoggedSample};
use crate::aipw::{score_log, weight_sequence, ScoreMatrix, WeightScheme};
use crate::config::{EnvSource, ExperimentConfig};
use crate::env::{load_classification_csv, make_synthetic, make_test_set, Environment, TestSet};
use crate::error::Result;
use crate::eval::{best_in_class, frozen_agent_value, policy_value};
use crate::io::ResultRow;
use crate::nuisance::{NuisanceConfig, NuisanceModel};
use crate::rng_from_seed;
use crate::treepolicy::{exact_search, SearchResult, TreeClassSpec};

/// Mixed into the base seed to derive the test-set stream.
const TEST_SEED_TAG: u64 = 0x7e57_5e7d_0000_0001;

/// Scheme id used for the collection agent's own rows.
pub const AGENT_SCHEME: &str = "agent";

/// Output of one simulated collection run.
#[derive(Debug, Clone)]
pub struct Collection {
    pub samples: Vec<LoggedSample>,
    /// Floored assignment probabilities at every step.
    pub probs: Vec<Vec<f64>>,
    /// Agent posterior means after each requested horizon.
    pub snapshots: Vec<Vec<Vec<f64>>>,
}

/// Runs the floored Thompson sampling agent for `horizon` steps.
pub fn collect(
    env: &Environment,
    horizon: usize,
    alpha: f64,
    agent_config: AgentConfig,
    seed: u64,
    snapshot_at: &[usize],
) -> Collection {
    let mut rng = rng_from_seed(seed);
    let sched = FloorSchedule::new(alpha, env.k);
    let mut agent = AgentState::new(env.p, env.k, agent_config);
    let mut samples = Vec::with_capacity(horizon);
    let mut probs = Vec::with_capacity(horizon);
    let mut snapshots = Vec::with_capacity(snapshot_at.len());
    for t in 1..=horizon {
        let (x, rewards) = env.sample_step(&mut rng);
        let (sample, e) = agent.select_and_log(&x, &rewards, t, &sched, &mut rng);
        samples.push(sample);
        probs.push(e);
        if snapshot_at.contains(&t) {
            snapshots.push(agent.posterior_means());
        }
    }
    Collection {
        samples,
        probs,
        snapshots,
    }
}

/// AIPW elements of a log under the default sequential ridge nuisance.
pub fn score_samples(samples: &[LoggedSample], p: usize, k: usize) -> Result<Vec<Vec<f64>>> {
    let mut model = NuisanceModel::new(p, k, NuisanceConfig::default());
    score_log(samples, &mut model)
}

/// Learns a tree from the first `gamma.len()` rows under one weight scheme.
pub fn learn_from_scores(
    gamma: &[Vec<f64>],
    contexts: &[Vec<f64>],
    scheme: WeightScheme,
    sched: &FloorSchedule,
    spec: &TreeClassSpec,
) -> Result<SearchResult> {
    let weights = weight_sequence(scheme, gamma.len(), sched);
    let scores = ScoreMatrix::new(gamma.to_vec(), weights)?;
    exact_search(&scores.weighted, contexts, spec)
}

/// Learns a tree straight from logged samples.
pub fn learn_from_log(
    samples: &[LoggedSample],
    p: usize,
    k: usize,
    scheme: WeightScheme,
    alpha: f64,
    depth: usize,
) -> Result<SearchResult> {
    let gamma = score_samples(samples, p, k)?;
    let contexts: Vec<Vec<f64>> = samples.iter().map(|s| s.x.clone()).collect();
    let spec = TreeClassSpec { depth, p, k };
    learn_from_scores(&gamma, &contexts, scheme, &FloorSchedule::new(alpha, k), &spec)
}

pub fn build_env(source: &EnvSource, seed: u64) -> Result<Environment> {
    match source {
        EnvSource::Synthetic => Ok(make_synthetic(seed)),
        EnvSource::Classification { csv, label } => load_classification_csv(csv, label),
    }
}

pub fn test_seed(base_seed: u64) -> u64 {
    base_seed ^ TEST_SEED_TAG
}

/// Runs the full protocol and returns rows ordered by `(T, scheme, rep)`,
/// with the agent rows after the learner schemes at each horizon.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let env = build_env(&config.env, config.base_seed)?;
    let n_test = config.n_test.unwrap_or_else(|| env.default_n_test());
    let test = make_test_set(&env, n_test, test_seed(config.base_seed));
    run_on(&env, &test, config)
}

/// [`run_experiment`] with a prebuilt environment and test set.
pub fn run_on(env: &Environment, test: &TestSet, config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let spec = TreeClassSpec {
        depth: config.depth,
        p: env.p,
        k: env.k,
    };
    let (_, best_value) = best_in_class(test, &spec)?;
    let per_rep: Vec<Result<Vec<ResultRow>>> = (0..config.n_reps)
        .into_par_iter()
        .map(|rep| run_replication(env, test, config, &spec, best_value, rep))
        .collect();
    let mut rows = Vec::new();
    for r in per_rep {
        rows.extend(r?);
    }
    let scheme_rank = |id: &str| {
        config
            .schemes
            .iter()
            .position(|s| s.to_string() == id)
            .unwrap_or(config.schemes.len())
    };
    rows.sort_by(|a, b| {
        a.horizon
            .cmp(&b.horizon)
            .then(scheme_rank(&a.scheme).cmp(&scheme_rank(&b.scheme)))
            .then(a.rep.cmp(&b.rep))
    });
    Ok(rows)
}

fn run_replication(
    env: &Environment,
    test: &TestSet,
    config: &ExperimentConfig,
    spec: &TreeClassSpec,
    best_value: f64,
    rep: usize,
) -> Result<Vec<ResultRow>> {
    let agent_config = AgentConfig {
        m_draws: config.m_draws,
        ..AgentConfig::default()
    };
    let seed = config.base_seed ^ rep as u64;
    let started = Instant::now();
    let run = collect(
        env,
        config.max_horizon(),
        config.alpha,
        agent_config,
        seed,
        &config.horizons,
    );
    let gamma = score_samples(&run.samples, env.p, env.k)?;
    let contexts: Vec<Vec<f64>> = run.samples.iter().map(|s| s.x.clone()).collect();
    let collect_ms = started.elapsed().as_millis() as u64;
    let sched = FloorSchedule::new(config.alpha, env.k);

    let mut rows = Vec::new();
    for (&horizon, thetas) in config.horizons.iter().zip(&run.snapshots) {
        let agent_regret = best_value - frozen_agent_value(thetas, test)?;
        for &scheme in &config.schemes {
            let started = Instant::now();
            let learned = learn_from_scores(&gamma[..horizon], &contexts[..horizon], scheme, &sched, spec)?;
            let regret = best_value - policy_value(&learned.tree, test)?;
            rows.push(ResultRow {
                env: env.id().to_owned(),
                horizon,
                scheme: scheme.to_string(),
                rep,
                regret,
                agent_regret,
                wall_ms: started.elapsed().as_millis() as u64,
            });
        }
        rows.push(ResultRow {
            env: env.id().to_owned(),
            horizon,
            scheme: AGENT_SCHEME.to_owned(),
            rep,
            regret: agent_regret,
            agent_regret,
            wall_ms: collect_ms,
        });
    }
    Ok(rows)
}

/// Mean and standard error of `regret` over the rows matching a horizon and
/// scheme.
pub fn summarize(rows: &[ResultRow], horizon: usize, scheme: &str) -> Option<(f64, f64, usize)> {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.horizon == horizon && r.scheme == scheme)
        .map(|r| r.regret)
        .collect();
    let n = vals.len();
    if n == 0 {
        return None;
    }
    let mean = vals.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Some((mean, se, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            horizons: vec![50, 120, 200],
            n_reps: 2,
            n_test: Some(500),
            m_draws: 50,
            schemes: crate::config::default_schemes(0.5),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn row_count_contract() {
        let rows = run_experiment(&small()).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 4 + 2 * 3);
        assert!(rows.iter().all(|r| r.regret >= -1e-9));
        assert_eq!(rows.iter().filter(|r| r.scheme == AGENT_SCHEME).count(), 6);
        assert_eq!(rows[0].horizon, 50);
        assert_eq!(rows[0].scheme, "uniform");
    }

    #[test]
    fn invalid_config_is_rejected_up_front() {
        let cfg = ExperimentConfig {
            horizons: vec![100, 100],
            ..small()
        };
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn summarize_mean_and_se() {
        let row = |regret| ResultRow {
            env: "synthetic".into(),
            horizon: 10,
            scheme: "uniform".into(),
            rep: 0,
            regret,
            agent_regret: 0.0,
            wall_ms: 0,
        };
        let (m, se, n) = summarize(&[row(1.0), row(3.0)], 10, "uniform").unwrap();
        assert_eq!((m, n), (2.0, 2));
        assert!((se - 1.0).abs() < 1e-12);
        assert!(summarize(&[], 10, "uniform").is_none());
    }
}
