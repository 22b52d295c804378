//! Context and potential-outcome environments.
//!
//! Two environments are provided: a three-dimensional synthetic problem whose
//! arm means depend quadratically on the first coordinate, and an adapter that
//! turns a labelled classification table into a bandit problem (one arm per
//! class, one-hot mean rewards). Both add Gaussian noise to every arm's
//! potential reward.

use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::{rng_from_seed, SimRng};

/// Dimension of the synthetic context.
pub const SYNTHETIC_DIM: usize = 3;
/// Half-width of the synthetic context support.
pub const SYNTHETIC_HALF_WIDTH: f64 = 2.0;

/// Feature table of a classification environment, already standardized.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTable {
    pub features: Vec<Vec<f64>>,
    /// Relabeled classes in `0..k`.
    pub labels: Vec<usize>,
    /// Raw label for each relabeled class, in order of first appearance.
    pub classes: Vec<String>,
    pub feature_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvKind {
    Synthetic,
    Classification(ClassTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub kind: EnvKind,
    pub p: usize,
    pub k: usize,
    pub noise_sd: f64,
    /// Asserted bound on the magnitude of mean outcomes.
    pub bound_m: f64,
}

/// Held-out contexts and their noiseless arm means.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    pub contexts: Vec<Vec<f64>>,
    pub true_means: Vec<Vec<f64>>,
}

impl TestSet {
    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }
}

/// Quadratic two-arm environment on `Uniform[-2, 2]^3`.
///
/// The seed is accepted for interface symmetry; the environment itself is
/// deterministic and all randomness comes from the caller's stream.
pub fn make_synthetic(_seed: u64) -> Environment {
    Environment {
        kind: EnvKind::Synthetic,
        p: SYNTHETIC_DIM,
        k: 2,
        noise_sd: 1.0,
        bound_m: 3.0,
    }
}

impl Environment {
    /// Builds a classification environment from raw rows. Features are
    /// standardized per column; zero-variance columns become all zeros.
    pub fn classification(
        feature_names: Vec<String>,
        mut features: Vec<Vec<f64>>,
        raw_labels: Vec<String>,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyTable);
        }
        let p = feature_names.len();
        for (i, row) in features.iter().enumerate() {
            if row.len() != p {
                return Err(Error::BadRow {
                    row: i + 1,
                    message: format!("expected {p} features, found {}", row.len()),
                });
            }
        }
        if raw_labels.len() != features.len() {
            return Err(Error::Dimension {
                expected: features.len(),
                got: raw_labels.len(),
            });
        }

        let mut classes: Vec<String> = Vec::new();
        let labels: Vec<usize> = raw_labels
            .iter()
            .map(|raw| match classes.iter().position(|c| c == raw) {
                Some(i) => i,
                None => {
                    classes.push(raw.clone());
                    classes.len() - 1
                }
            })
            .collect();
        if classes.len() < 2 {
            return Err(Error::SingleClass(classes.remove(0)));
        }

        standardize(&mut features, p);
        let k = classes.len();
        Ok(Environment {
            kind: EnvKind::Classification(ClassTable {
                features,
                labels,
                classes,
                feature_names,
            }),
            p,
            k,
            noise_sd: 1.0,
            bound_m: 1.0,
        })
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self.kind, EnvKind::Synthetic)
    }

    pub fn id(&self) -> &'static str {
        match self.kind {
            EnvKind::Synthetic => "synthetic",
            EnvKind::Classification(_) => "classification",
        }
    }

    /// Mean reward of every arm at `x`. For classification environments `x`
    /// must be one of the table rows; the mean is the one-hot label vector.
    pub fn true_means(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.p {
            return Err(Error::Dimension {
                expected: self.p,
                got: x.len(),
            });
        }
        match &self.kind {
            EnvKind::Synthetic => Ok(synthetic_means(x)),
            EnvKind::Classification(table) => {
                let row = table
                    .features
                    .iter()
                    .position(|r| r.as_slice() == x)
                    .ok_or_else(|| Error::BadRow {
                        row: 0,
                        message: "context is not a row of the classification table".into(),
                    })?;
                Ok(one_hot(table.labels[row], self.k))
            }
        }
    }

    /// Number of rows in the backing table, if any.
    pub fn table_rows(&self) -> Option<usize> {
        match &self.kind {
            EnvKind::Synthetic => None,
            EnvKind::Classification(t) => Some(t.features.len()),
        }
    }

    /// Draws a context and returns it with its mean vector (no noise).
    fn draw_context(&self, rng: &mut SimRng) -> (Vec<f64>, Vec<f64>) {
        match &self.kind {
            EnvKind::Synthetic => {
                let unif = Uniform::new(-SYNTHETIC_HALF_WIDTH, SYNTHETIC_HALF_WIDTH).expect("finite bounds");
                let x: Vec<f64> = (0..self.p).map(|_| unif.sample(rng)).collect();
                let mu = synthetic_means(&x);
                (x, mu)
            }
            EnvKind::Classification(table) => {
                let i = rng.random_range(0..table.features.len());
                (table.features[i].clone(), one_hot(table.labels[i], self.k))
            }
        }
    }

    /// One collection step: a context and the noisy potential reward of every
    /// arm. Consumes a fixed number of draws per call for a given environment.
    pub fn sample_step(&self, rng: &mut SimRng) -> (Vec<f64>, Vec<f64>) {
        let (x, mut rewards) = self.draw_context(rng);
        for r in rewards.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *r += self.noise_sd * z;
        }
        (x, rewards)
    }

    /// Default held-out size: 100000 for the synthetic problem, otherwise
    /// `min(100000, 10 * rows)`.
    pub fn default_n_test(&self) -> usize {
        match self.table_rows() {
            None => 100_000,
            Some(rows) => (10 * rows).min(100_000),
        }
    }
}

pub fn synthetic_means(x: &[f64]) -> Vec<f64> {
    let q = x[0] * x[0];
    vec![q - 1.0, 1.0 - q]
}

fn one_hot(label: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[label] = 1.0;
    v
}

/// Columns with larger magnitudes are rescaled before standardizing.
const HUGE_FEATURE: f64 = 1e150;

fn standardize(rows: &mut [Vec<f64>], p: usize) {
    let n = rows.len() as f64;
    for j in 0..p {
        let scale = rows.iter().map(|r| r[j].abs()).fold(0.0, f64::max);
        if scale > HUGE_FEATURE {
            for r in rows.iter_mut() {
                r[j] /= scale;
            }
        }
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for r in rows.iter_mut() {
            r[j] = if sd > 0.0 { (r[j] - mean) / sd } else { 0.0 };
        }
    }
}

pub fn make_test_set(env: &Environment, n_test: usize, seed: u64) -> TestSet {
    let mut rng = rng_from_seed(seed);
    let (contexts, true_means) = (0..n_test.max(1)).map(|_| env.draw_context(&mut rng)).unzip();
    TestSet { contexts, true_means }
}

/// Parses a classification table: a header row, one label column named
/// `label_column`, every other column numeric.
pub fn parse_classification_csv<R: Read>(reader: R, label_column: &str) -> Result<Environment> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabel(label_column.to_owned()))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != header.len() {
            return Err(Error::BadRow {
                row,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let mut x = Vec::with_capacity(feature_names.len());
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            let v: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::NonNumeric {
                    row,
                    column: header[j].clone(),
                    value: field.to_owned(),
                })?;
            x.push(v);
        }
        features.push(x);
        labels.push(record[label_idx].to_owned());
    }
    Environment::classification(feature_names, features, labels)
}

pub fn load_classification_csv(path: &Path, label_column: &str) -> Result<Environment> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_classification_csv(std::io::BufReader::new(file), label_column)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_env(text: &str) -> Result<Environment> {
        parse_classification_csv(text.as_bytes(), "y")
    }

    #[test]
    fn huge_features_stay_finite() {
        let env = csv_env("a,y\n1.7e308,p\n-1.7e308,q\n1e300,p\n").unwrap();
        let EnvKind::Classification(table) = &env.kind else {
            unreachable!()
        };
        assert!(table.features.iter().flatten().all(|v| v.is_finite()));
        let col: Vec<f64> = table.features.iter().map(|r| r[0]).collect();
        assert!(col[0] > col[2] && col[2] > col[1]);
    }

    #[test]
    fn synthetic_shape_and_means() {
        let env = make_synthetic(0);
        assert_eq!((env.p, env.k, env.noise_sd), (3, 2, 1.0));
        assert_eq!(env.true_means(&[0.0, 0.0, 0.0]).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(env.true_means(&[1.0, 0.3, -2.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(env.true_means(&[2.0, 0.0, 0.0]).unwrap(), vec![3.0, -3.0]);
        assert_eq!(env.true_means(&[0.0, 5.0, 5.0]).unwrap(), vec![-1.0, 1.0]);
    }

    #[test]
    fn true_means_rejects_wrong_dimension() {
        let env = make_synthetic(0);
        assert!(matches!(
            env.true_means(&[0.0, 1.0]),
            Err(Error::Dimension { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn zero_noise_rewards_equal_means() {
        let mut env = make_synthetic(0);
        env.noise_sd = 0.0;
        let mut rng = rng_from_seed(3);
        for _ in 0..100 {
            let (x, r) = env.sample_step(&mut rng);
            assert_eq!(r, synthetic_means(&x));
            assert!(x.iter().all(|v| v.abs() <= 2.0));
        }
    }

    #[test]
    fn synthetic_first_coordinate_is_centered() {
        // sd of the mean of 1e5 Uniform[-2,2] draws is ~0.0037; 0.02 is > 5 sd.
        let env = make_synthetic(0);
        let mut rng = rng_from_seed(11);
        let n = 100_000;
        let mean = (0..n).map(|_| env.sample_step(&mut rng).0[0]).sum::<f64>() / n as f64;
        assert!(mean.abs() <= 0.02, "mean {mean}");
    }

    #[test]
    fn synthetic_means_are_bounded_by_three() {
        let env = make_synthetic(0);
        let test = make_test_set(&env, 5000, 1);
        let max = test.true_means.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max <= env.bound_m);
    }

    #[test]
    fn classification_relabels_by_first_appearance() {
        let env = csv_env("a,y\n1,5\n2,2\n3,2\n4,9\n").unwrap();
        let EnvKind::Classification(t) = &env.kind else {
            panic!()
        };
        assert_eq!(t.labels, vec![0, 1, 1, 2]);
        assert_eq!(t.classes, vec!["5", "2", "9"]);
        assert_eq!((env.k, env.p), (3, 1));
    }

    #[test]
    fn classification_shape_propagates() {
        let mut text = String::from("f1,f2,f3,f4,f5,f6,f7,y\n");
        for i in 0..100 {
            let feats: Vec<String> = (0..7).map(|j| format!("{}", (i * 7 + j) % 13)).collect();
            text.push_str(&format!("{},{}\n", feats.join(","), i % 3));
        }
        let env = csv_env(&text).unwrap();
        assert_eq!((env.k, env.p), (3, 7));
        assert_eq!(env.default_n_test(), 1000);
    }

    #[test]
    fn classification_errors_are_distinct() {
        assert!(matches!(csv_env("a,y\n1,0\n2,0\n"), Err(Error::SingleClass(_))));
        assert!(matches!(
            csv_env("a,y\nfoo,0\n2,1\n"),
            Err(Error::NonNumeric { row: 1, .. })
        ));
        assert!(matches!(
            parse_classification_csv("a,b\n1,2\n".as_bytes(), "y"),
            Err(Error::MissingLabel(_))
        ));
        assert!(matches!(csv_env("a,y\n"), Err(Error::EmptyTable)));
        let missing = load_classification_csv(Path::new("/nonexistent/file.csv"), "y");
        assert!(matches!(missing, Err(Error::Io { .. })));
    }

    #[test]
    fn classification_standardizes_and_one_hots() {
        let env = csv_env("a,b,y\n1,7,x\n3,7,z\n").unwrap();
        let EnvKind::Classification(t) = &env.kind else {
            panic!()
        };
        assert_eq!(t.features, vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(env.true_means(&[1.0, 0.0]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn single_row_table_always_returns_that_row() {
        let table = ClassTable {
            features: vec![vec![0.5, -1.0]],
            labels: vec![1],
            classes: vec!["a".into(), "b".into()],
            feature_names: vec!["u".into(), "v".into()],
        };
        let env = Environment {
            kind: EnvKind::Classification(table),
            p: 2,
            k: 2,
            noise_sd: 1.0,
            bound_m: 1.0,
        };
        let mut rng = rng_from_seed(0);
        for _ in 0..20 {
            assert_eq!(env.sample_step(&mut rng).0, vec![0.5, -1.0]);
        }
    }

    #[test]
    fn test_sets_are_deterministic() {
        let env = make_synthetic(0);
        let a = make_test_set(&env, 1000, 42);
        let b = make_test_set(&env, 1000, 42);
        assert_eq!(a, b);
        assert_eq!(make_test_set(&env, 1, 42).len(), 1);
        for (x, mu) in a.contexts.iter().zip(&a.true_means) {
            assert_eq!(mu, &env.true_means(x).unwrap());
        }
    }
}
