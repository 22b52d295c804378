//! Sequential per-arm ridge outcome model.
//!
//! Predictions made for step `t` only ever see samples with index `< t`: the
//! model refuses to ingest an index that is not strictly increasing, and the
//! scoring loop always predicts before it updates.

use nalgebra::{DMatrix, DVector};

use crate::agent::LoggedSample;
use crate::error::{Error, Result};

/// Something that predicts every arm's mean from strictly past data.
pub trait OutcomeModel {
    fn predict(&self, x: &[f64]) -> Vec<f64>;
    fn update(&mut self, sample: &LoggedSample) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuisanceConfig {
    pub lambda: f64,
    pub intercept: bool,
}

impl Default for NuisanceConfig {
    fn default() -> Self {
        NuisanceConfig {
            lambda: 1e-3,
            intercept: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NuisanceModel {
    grams: Vec<DMatrix<f64>>,
    moments: Vec<DVector<f64>>,
    config: NuisanceConfig,
    last_t: Option<usize>,
}

impl NuisanceModel {
    pub fn new(p: usize, k: usize, config: NuisanceConfig) -> Self {
        assert!(config.lambda > 0.0, "ridge must be positive");
        let d = p + usize::from(config.intercept);
        NuisanceModel {
            grams: vec![DMatrix::identity(d, d) * config.lambda; k],
            moments: vec![DVector::zeros(d); k],
            config,
            last_t: None,
        }
    }

    fn features(&self, x: &[f64]) -> DVector<f64> {
        if self.config.intercept {
            DVector::from_iterator(x.len() + 1, std::iter::once(1.0).chain(x.iter().copied()))
        } else {
            DVector::from_column_slice(x)
        }
    }

    /// Current coefficient vector of every arm (intercept first when enabled).
    pub fn coefficients(&self) -> Vec<Vec<f64>> {
        self.grams
            .iter()
            .zip(&self.moments)
            .map(|(g, b)| {
                let chol = g.clone().cholesky().expect("gram is SPD");
                chol.solve(b).iter().copied().collect()
            })
            .collect()
    }

    pub fn last_index(&self) -> Option<usize> {
        self.last_t
    }
}

impl OutcomeModel for NuisanceModel {
    fn predict(&self, x: &[f64]) -> Vec<f64> {
        let z = self.features(x);
        self.coefficients()
            .iter()
            .map(|theta| theta.iter().zip(z.iter()).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn update(&mut self, sample: &LoggedSample) -> Result<()> {
        if let Some(last) = self.last_t {
            if sample.t <= last {
                return Err(Error::OutOfOrder { got: sample.t, last });
            }
        }
        let z = self.features(&sample.x);
        let w = sample.w;
        self.grams[w].ger(1.0, &z, &z, 1.0);
        self.moments[w].axpy(sample.y, &z, 1.0);
        self.last_t = Some(sample.t);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: usize, x: Vec<f64>, w: usize, y: f64) -> LoggedSample {
        LoggedSample { t, x, w, y, e: 0.5 }
    }

    #[test]
    fn empty_model_predicts_zero() {
        let m = NuisanceModel::new(3, 4, NuisanceConfig::default());
        assert_eq!(m.predict(&[1.0, 2.0, 3.0]), vec![0.0; 4]);
    }

    #[test]
    fn near_ols_on_noiseless_line() {
        let mut m = NuisanceModel::new(
            2,
            2,
            NuisanceConfig {
                lambda: 1e-6,
                intercept: true,
            },
        );
        for t in 1..=40 {
            let x1 = (t as f64 - 20.0) / 10.0;
            let x2 = ((t * 7) % 5) as f64;
            m.update(&sample(t, vec![x1, x2], 0, 2.0 * x1)).unwrap();
        }
        let pred = m.predict(&[3.0, 1.0]);
        assert!((pred[0] - 6.0).abs() < 1e-3, "{pred:?}");
        assert_eq!(pred[1], 0.0);
    }

    #[test]
    fn predictions_are_linear_without_intercept() {
        let mut m = NuisanceModel::new(
            2,
            2,
            NuisanceConfig {
                lambda: 1e-3,
                intercept: false,
            },
        );
        m.update(&sample(1, vec![1.0, 0.5], 0, 1.0)).unwrap();
        m.update(&sample(2, vec![-0.3, 2.0], 1, -2.0)).unwrap();
        m.update(&sample(3, vec![0.7, 0.1], 0, 0.4)).unwrap();
        let (x, xp) = ([0.4, -1.0], [2.0, 0.3]);
        let sum = [x[0] + xp[0], x[1] + xp[1]];
        let lhs: Vec<f64> = m
            .predict(&sum)
            .iter()
            .zip(m.predict(&[0.0, 0.0]))
            .map(|(a, b)| a + b)
            .collect();
        let rhs: Vec<f64> = m.predict(&x).iter().zip(m.predict(&xp)).map(|(a, b)| a + b).collect();
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn update_touches_only_chosen_arm() {
        let mut m = NuisanceModel::new(2, 3, NuisanceConfig::default());
        m.update(&sample(1, vec![1.0, 1.0], 2, 5.0)).unwrap();
        let pred = m.predict(&[1.0, 1.0]);
        assert_eq!(&pred[..2], &[0.0, 0.0]);
        assert!(pred[2] > 4.9);
    }

    #[test]
    fn rejects_non_increasing_index() {
        let mut m = NuisanceModel::new(1, 2, NuisanceConfig::default());
        m.update(&sample(3, vec![1.0], 0, 1.0)).unwrap();
        assert!(matches!(
            m.update(&sample(3, vec![1.0], 1, 1.0)),
            Err(Error::OutOfOrder { got: 3, last: 3 })
        ));
        assert!(m.update(&sample(2, vec![1.0], 1, 1.0)).is_err());
        assert!(m.update(&sample(4, vec![1.0], 1, 1.0)).is_ok());
    }
}
