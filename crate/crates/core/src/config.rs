//! Experiment configuration and its `key = value` file format.
//!
//! ```text
//! # comments start with '#'
//! env = synthetic            # or: classification
//! csv = data/iris.csv        # classification only
//! label = class              # classification only
//! alpha = 0.5
//! depth = 2
//! horizons = 1000, 2154, 4642, 10000
//! schemes = uniform, pow:0.25, pow:0.5, pow:1
//! reps = 50
//! n_test = 100000
//! seed = 0
//! m_draws = 1000
//! out = results.csv
//! ```

use std::path::PathBuf;

use crate::aipw::WeightScheme;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSource {
    Synthetic,
    Classification { csv: PathBuf, label: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSource,
    pub alpha: f64,
    pub depth: usize,
    pub horizons: Vec<usize>,
    pub schemes: Vec<WeightScheme>,
    pub n_reps: usize,
    /// Test-set size; `None` picks the environment default.
    pub n_test: Option<usize>,
    pub base_seed: u64,
    /// Thompson sampling Monte Carlo rounds per step.
    pub m_draws: usize,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvSource::Synthetic,
            alpha: 0.5,
            depth: 2,
            horizons: log_spaced(1000, 10_000, 4),
            schemes: default_schemes(0.5),
            n_reps: 50,
            n_test: None,
            base_seed: 0,
            m_draws: 1000,
            output: None,
        }
    }
}

/// `h_t = t^(-beta)` for `beta` in `{0, alpha/2, alpha, 2 alpha}`.
pub fn default_schemes(alpha: f64) -> Vec<WeightScheme> {
    vec![
        WeightScheme::Uniform,
        WeightScheme::PowerDecay(alpha / 2.0),
        WeightScheme::PowerDecay(alpha),
        WeightScheme::PowerDecay(2.0 * alpha),
    ]
}

/// `n` integers spaced evenly on a log scale from `lo` to `hi` inclusive.
pub fn log_spaced(lo: usize, hi: usize, n: usize) -> Vec<usize> {
    if n <= 1 || lo == hi {
        return vec![hi];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp().round() as usize)
        .collect();
    out.dedup();
    out
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.depth < 1 {
            return bad("depth must be at least 1".into());
        }
        if self.horizons.is_empty() || self.horizons[0] == 0 {
            return bad("horizons must be a non-empty list of positive integers".into());
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("horizons must be strictly increasing, got {:?}", self.horizons));
        }
        if self.schemes.is_empty() {
            return bad("at least one weight scheme is required".into());
        }
        if self.n_reps < 1 {
            return bad("reps must be at least 1".into());
        }
        if self.n_test == Some(0) {
            return bad("n_test must be at least 1".into());
        }
        if self.m_draws < 1 {
            return bad("m_draws must be at least 1".into());
        }
        Ok(())
    }

    pub fn max_horizon(&self) -> usize {
        *self.horizons.last().expect("validated")
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
        }
        match key {
            "env" => match value {
                "synthetic" => self.env = EnvSource::Synthetic,
                "classification" => {
                    if !matches!(self.env, EnvSource::Classification { .. }) {
                        self.env = EnvSource::Classification {
                            csv: PathBuf::new(),
                            label: String::new(),
                        };
                    }
                }
                _ => return Err(Error::Config(format!("env: unknown environment {value:?}"))),
            },
            "csv" | "label" => {
                let (mut csv, mut label) = match &self.env {
                    EnvSource::Classification { csv, label } => (csv.clone(), label.clone()),
                    EnvSource::Synthetic => (PathBuf::new(), String::new()),
                };
                if key == "csv" {
                    csv = PathBuf::from(value);
                } else {
                    label = value.to_owned();
                }
                self.env = EnvSource::Classification { csv, label };
            }
            "alpha" => self.alpha = num(key, value)?,
            "depth" => self.depth = num(key, value)?,
            "horizons" => self.horizons = split_list(value).map(|v| num(key, v)).collect::<Result<_>>()?,
            "schemes" => self.schemes = split_list(value).map(str::parse).collect::<Result<_>>()?,
            "reps" => self.n_reps = num(key, value)?,
            "n_test" => self.n_test = Some(num(key, value)?),
            "seed" => self.base_seed = num(key, value)?,
            "m_draws" => self.m_draws = num(key, value)?,
            "out" => self.output = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses a config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}
