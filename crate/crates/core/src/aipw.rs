//! AIPW scores, pre-specified weight schemes and the generalized estimator.
//!
//! Also hosts two diagnostic calculators: the high-probability regret bound
//! for a weighted estimator and the entropy-integral bound for depth-`L`
//! decision trees. Neither is used to pick weights at runtime.

use std::fmt;
use std::str::FromStr;

use crate::agent::{FloorSchedule, LoggedSample};
use crate::error::{Error, Result};
use crate::nuisance::OutcomeModel;

/// Per-arm AIPW element of one logged sample:
/// `muhat[w] + 1{w = W}·(Y − muhat[w]) / e`.
pub fn aipw_elements(sample: &LoggedSample, muhat: &[f64]) -> Result<Vec<f64>> {
    if !(sample.e > 0.0 && sample.e <= 1.0) {
        return Err(Error::Propensity(sample.e));
    }
    Ok(muhat
        .iter()
        .enumerate()
        .map(|(w, &m)| {
            if w == sample.w {
                m + (sample.y - m) / sample.e
            } else {
                m
            }
        })
        .collect())
}

/// Computes the `T × K` matrix of AIPW elements, predicting each row from the
/// model before feeding that row to it.
pub fn score_log<M: OutcomeModel>(samples: &[LoggedSample], model: &mut M) -> Result<Vec<Vec<f64>>> {
    let mut gamma = Vec::with_capacity(samples.len());
    for s in samples {
        let muhat = model.predict(&s.x);
        gamma.push(aipw_elements(s, &muhat)?);
        model.update(s)?;
    }
    Ok(gamma)
}

/// Rule producing the deterministic weights `h_1..h_T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightScheme {
    Uniform,
    PowerDecay(f64),
    FloorMatched,
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Uniform => f.write_str("uniform"),
            WeightScheme::PowerDecay(beta) => write!(f, "pow:{beta}"),
            WeightScheme::FloorMatched => f.write_str("floor"),
        }
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "uniform" => Ok(WeightScheme::Uniform),
            "floor" => Ok(WeightScheme::FloorMatched),
            _ => {
                let beta = s
                    .strip_prefix("pow:")
                    .and_then(|b| b.parse::<f64>().ok())
                    .filter(|b| b.is_finite() && *b >= 0.0)
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "unknown weight scheme {s:?} (expected uniform, floor or pow:<beta>)"
                        ))
                    })?;
                Ok(WeightScheme::PowerDecay(beta))
            }
        }
    }
}

pub fn weight_sequence(scheme: WeightScheme, horizon: usize, sched: &FloorSchedule) -> Vec<f64> {
    (1..=horizon)
        .map(|t| match scheme {
            WeightScheme::Uniform => 1.0,
            WeightScheme::PowerDecay(beta) => (t as f64).powf(-beta),
            WeightScheme::FloorMatched => sched.g(t),
        })
        .collect()
}

/// Raw AIPW elements together with a weight sequence and the normalized,
/// reweighted elements `h_t·Γ̂_t(w) / Σ_s h_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub gamma: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub weighted: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(gamma: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if gamma.len() != weights.len() {
            return Err(Error::Dimension {
                expected: gamma.len(),
                got: weights.len(),
            });
        }
        if let Some(&h) = weights.iter().find(|&&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::Config(format!("weights must be positive, got {h}")));
        }
        let total: f64 = weights.iter().sum();
        let weighted = gamma
            .iter()
            .zip(&weights)
            .map(|(row, &h)| row.iter().map(|&v| v * h / total).collect())
            .collect();
        Ok(ScoreMatrix {
            gamma,
            weights,
            weighted,
        })
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }
}

/// Generalized AIPW value `Σ_t h_t·Γ̂_t(a_t) / Σ_t h_t` of the actions a
/// policy takes on the logged contexts.
pub fn generalized_q(scores: &ScoreMatrix, policy_actions: &[usize]) -> f64 {
    assert_eq!(policy_actions.len(), scores.len(), "one action per row");
    let total: f64 = scores.weights.iter().sum();
    scores
        .gamma
        .iter()
        .zip(&scores.weights)
        .zip(policy_actions)
        .map(|((row, &h), &a)| h * row[a])
        .sum::<f64>()
        / total
}

/// Normalized weights minimizing `max_t h̃_t / g_t` over the simplex:
/// `h̃_t = g_t / Σ_s g_s`.
pub fn optimal_weights(g: &[f64]) -> Vec<f64> {
    let total: f64 = g.iter().sum();
    g.iter().map(|&v| v / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretBoundInputs {
    pub m: f64,
    pub delta: f64,
    pub kappa: f64,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
}

/// High-probability regret bound of the policy maximizing the weighted
/// estimator:
///
/// `M·√T·max_t(h_t/g_t) / Σ_t h_t · (475κ + 1180 + 160·√ln(1/δ) + 160/√T)`.
pub fn regret_bound(inputs: &RegretBoundInputs) -> Result<f64> {
    let RegretBoundInputs { m, delta, kappa, h, g } = inputs;
    if h.len() != g.len() || h.is_empty() {
        return Err(Error::Dimension {
            expected: g.len(),
            got: h.len(),
        });
    }
    if !(*delta > 0.0 && *delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    if h.iter().chain(g.iter()).any(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::Config("weights and floors must be positive".into()));
    }
    let t = h.len() as f64;
    let ratio = h.iter().zip(g).map(|(a, b)| a / b).fold(f64::MIN, f64::max);
    let hsum: f64 = h.iter().sum();
    let tail = 475.0 * kappa + 1180.0 + 160.0 * (1.0 / delta).ln().sqrt() + 160.0 / t.sqrt();
    Ok(m * t.sqrt() * ratio / hsum * tail)
}

/// Entropy-integral bound of depth-`L` trees on `p` features with `K` arms:
/// `√((2^L−1)·ln p + 2^L·ln K) + (4/3)·L^(1/4)·√(2^L−1)`.
pub fn tree_entropy_bound(depth: usize, p: usize, k: usize) -> Result<f64> {
    if depth < 1 || p < 1 || k < 2 {
        return Err(Error::Config(format!(
            "entropy bound needs L >= 1, p >= 1, K >= 2 (got L={depth}, p={p}, K={k})"
        )));
    }
    let leaves = 2f64.powi(depth as i32);
    let internal = leaves - 1.0;
    let first = (internal * (p as f64).ln() + leaves * (k as f64).ln()).sqrt();
    let second = 4.0 / 3.0 * (depth as f64).powf(0.25) * internal.sqrt();
    Ok(first + second)
}
