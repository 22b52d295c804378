//! Adaptive data collection with floored linear Thompson sampling.
//!
//! Each arm keeps a Bayesian ridge posterior `N(A⁻¹b, v²A⁻¹)`. Preliminary
//! assignment probabilities are Monte Carlo argmax frequencies of posterior
//! draws; they are then lifted to the floor `g(t) = t^(-alpha) / K` by
//! clamping small arms and shrinking the rest toward the floor.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::SimRng;

const SHRINK_EPS: f64 = 1e-12;

/// Assignment probability floor `g(t) = t^(-alpha) / K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorSchedule {
    pub alpha: f64,
    pub k: usize,
}

impl FloorSchedule {
    pub fn new(alpha: f64, k: usize) -> Self {
        debug_assert!((0.0..=1.0).contains(&alpha));
        debug_assert!(k >= 1);
        FloorSchedule { alpha, k }
    }

    /// Floor at 1-based time `t`.
    pub fn g(&self, t: usize) -> f64 {
        (t as f64).powf(-self.alpha) / self.k as f64
    }

    pub fn sequence(&self, horizon: usize) -> Vec<f64> {
        (1..=horizon).map(|t| self.g(t)).collect()
    }
}

/// One logged collection step `(t, X_t, W_t, Y_t, e_t(X_t; W_t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedSample {
    /// 1-based time index.
    pub t: usize,
    pub x: Vec<f64>,
    pub w: usize,
    pub y: f64,
    /// Probability with which `w` was assigned.
    pub e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    /// Ridge on each arm's Gram matrix.
    pub lambda: f64,
    /// Posterior covariance scale `v²`.
    pub prior_var: f64,
    /// Monte Carlo rounds used to estimate the preliminary probabilities.
    pub m_draws: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            lambda: 1.0,
            prior_var: 1.0,
            m_draws: 1000,
        }
    }
}

#[derive(Debug, Clone)]
struct ArmPosterior {
    gram: DMatrix<f64>,
    moment: DVector<f64>,
}

/// Linear Thompson sampling state: one ridge posterior per arm.
#[derive(Debug, Clone)]
pub struct AgentState {
    arms: Vec<ArmPosterior>,
    config: AgentConfig,
    p: usize,
}

impl AgentState {
    pub fn new(p: usize, k: usize, config: AgentConfig) -> Self {
        assert!(config.lambda > 0.0, "ridge must be positive");
        let arm = ArmPosterior {
            gram: DMatrix::identity(p, p) * config.lambda,
            moment: DVector::zeros(p),
        };
        AgentState {
            arms: vec![arm; k],
            config,
            p,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    /// Posterior mean `A_w⁻¹ b_w` of every arm.
    pub fn posterior_means(&self) -> Vec<Vec<f64>> {
        self.arms
            .iter()
            .map(|arm| {
                let chol = arm.gram.clone().cholesky().expect("gram is SPD");
                chol.solve(&arm.moment).iter().copied().collect()
            })
            .collect()
    }

    /// Mean and standard deviation of the Thompson score `x·θ̃_w` per arm.
    ///
    /// `x·θ̃_w` with `θ̃_w ~ N(θ̂_w, v²A_w⁻¹)` is exactly
    /// `N(x·θ̂_w, v² xᵀA_w⁻¹x)`, so each round needs one scalar draw per arm.
    fn score_moments(&self, x: &[f64]) -> Vec<(f64, f64)> {
        let xv = DVector::from_column_slice(x);
        self.arms
            .iter()
            .map(|arm| {
                let chol = arm.gram.clone().cholesky().expect("gram is SPD");
                let theta = chol.solve(&arm.moment);
                let mut half = xv.clone();
                chol.l_dirty().solve_lower_triangular_mut(&mut half);
                let var = self.config.prior_var * half.norm_squared();
                (xv.dot(&theta), var.sqrt())
            })
            .collect()
    }

    /// Preliminary assignment probabilities: the share of `m_draws` posterior
    /// rounds in which each arm has the largest sampled score (ties go to the
    /// lowest index).
    pub fn preliminary_probs(&self, x: &[f64], rng: &mut SimRng) -> Vec<f64> {
        assert_eq!(x.len(), self.p, "context dimension");
        let moments = self.score_moments(x);
        let mut counts = vec![0usize; self.arms.len()];
        for _ in 0..self.config.m_draws {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (w, &(mean, sd)) in moments.iter().enumerate() {
                let z: f64 = StandardNormal.sample(rng);
                let score = mean + sd * z;
                if score > best_score {
                    best = w;
                    best_score = score;
                }
            }
            counts[best] += 1;
        }
        let m = self.config.m_draws as f64;
        counts.into_iter().map(|c| c as f64 / m).collect()
    }

    /// Greedy action under the posterior means; ties go to the lowest index.
    pub fn greedy_action(&self, x: &[f64]) -> usize {
        greedy_linear(&self.posterior_means(), x)
    }

    /// Computes the floored distribution at `x`, samples an arm, observes its
    /// potential reward and updates that arm's posterior.
    ///
    /// Returns the logged sample and the full floored probability vector.
    pub fn select_and_log(
        &mut self,
        x: &[f64],
        rewards: &[f64],
        t: usize,
        sched: &FloorSchedule,
        rng: &mut SimRng,
    ) -> (LoggedSample, Vec<f64>) {
        assert!(t >= 1, "time index is 1-based");
        assert_eq!(rewards.len(), self.arms.len(), "one potential reward per arm");
        let ebar = self.preliminary_probs(x, rng);
        let probs = apply_floor(&ebar, t, sched);
        let w = sample_index(&probs, rng);
        let y = rewards[w];
        self.update(w, x, y);
        let sample = LoggedSample {
            t,
            x: x.to_vec(),
            w,
            y,
            e: probs[w],
        };
        (sample, probs)
    }

    pub fn update(&mut self, w: usize, x: &[f64], y: f64) {
        let xv = DVector::from_column_slice(x);
        let arm = &mut self.arms[w];
        arm.gram.ger(1.0, &xv, &xv, 1.0);
        arm.moment.axpy(y, &xv, 1.0);
    }
}

/// Argmax of `x·θ_w` over arms, lowest index on ties.
pub fn greedy_linear(thetas: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (w, theta) in thetas.iter().enumerate() {
        let s: f64 = theta.iter().zip(x).map(|(a, b)| a * b).sum();
        if s > best_score {
            best = w;
            best_score = s;
        }
    }
    best
}

/// Lifts `ebar` onto the floor `g(t)`.
///
/// Arms below the floor are set to `g(t)`; the others become
/// `g(t) + c·(ebar_w − g(t))` with `c` chosen so the result sums to one.
pub fn apply_floor(ebar: &[f64], t: usize, sched: &FloorSchedule) -> Vec<f64> {
    let k = ebar.len();
    let g = sched.g(t);
    let excess: f64 = ebar.iter().filter(|&&e| e >= g).map(|&e| e - g).sum();
    if excess < SHRINK_EPS {
        return vec![1.0 / k as f64; k];
    }
    let c = (1.0 - k as f64 * g) / excess;
    ebar.iter().map(|&e| if e < g { g } else { g + c * (e - g) }).collect()
}

/// Inverse-CDF draw from a probability vector using one uniform.
pub fn sample_index(probs: &[f64], rng: &mut SimRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;
    use proptest::prelude::*;

    fn batch_ridge(xs: &[Vec<f64>], ys: &[f64], lambda: f64) -> Vec<f64> {
        // Augmented least squares [X; sqrt(λ) I] θ = [y; 0] via QR.
        let p = xs[0].len();
        let n = xs.len();
        let mut a = DMatrix::zeros(n + p, p);
        let mut b = DVector::zeros(n + p);
        for (i, (x, &y)) in xs.iter().zip(ys).enumerate() {
            for j in 0..p {
                a[(i, j)] = x[j];
            }
            b[i] = y;
        }
        for j in 0..p {
            a[(n + j, j)] = lambda.sqrt();
        }
        let qr = a.qr();
        let qtb = qr.q().transpose() * b;
        let r = qr.r();
        r.solve_upper_triangular(&qtb).unwrap().iter().copied().collect()
    }

    #[test]
    fn floor_example() {
        let sched = FloorSchedule::new(0.5, 2);
        assert!((sched.g(4) - 0.25).abs() < 1e-15);
        let e = apply_floor(&[0.9, 0.1], 4, &sched);
        assert!((e[0] - 0.75).abs() < 1e-12 && (e[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn floor_at_one_over_k_is_uniform() {
        let sched = FloorSchedule::new(0.0, 3);
        assert_eq!(apply_floor(&[0.7, 0.2, 0.1], 9, &sched), vec![1.0 / 3.0; 3]);
        let sched = FloorSchedule::new(0.5, 2);
        assert_eq!(apply_floor(&[0.3, 0.7], 1, &sched), vec![0.5, 0.5]);
    }

    #[test]
    fn uninformed_agent_splits_evenly() {
        // Binomial(1000, 1/2) has sd ~0.016; [0.4, 0.6] is > 6 sd wide.
        let agent = AgentState::new(3, 2, AgentConfig::default());
        let mut rng = rng_from_seed(5);
        let e = agent.preliminary_probs(&[0.3, -1.2, 0.8], &mut rng);
        assert!(e.iter().all(|&v| (0.4..=0.6).contains(&v)), "{e:?}");
        assert_eq!(e.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn zero_context_ties_to_arm_zero() {
        let agent = AgentState::new(2, 3, AgentConfig::default());
        let mut rng = rng_from_seed(5);
        assert_eq!(agent.preliminary_probs(&[0.0, 0.0], &mut rng), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn dominant_posterior_takes_almost_all_mass() {
        let mut agent = AgentState::new(2, 2, AgentConfig::default());
        let mut rng = rng_from_seed(9);
        for i in 0..2000 {
            let x = [1.0, (i % 7) as f64 / 7.0 - 0.5];
            agent.update(0, &x, 2.0 * x[0]);
            agent.update(1, &x, -2.0 * x[0]);
        }
        let e = agent.preliminary_probs(&[1.0, 0.0], &mut rng);
        assert!(e[0] >= 0.99, "{e:?}");
    }

    #[test]
    fn recursive_posterior_matches_batch_ridge() {
        let mut agent = AgentState::new(3, 2, AgentConfig::default());
        let env = crate::env::make_synthetic(0);
        let sched = FloorSchedule::new(0.5, 2);
        let mut rng = rng_from_seed(21);
        let mut per_arm: Vec<(Vec<Vec<f64>>, Vec<f64>)> = vec![(vec![], vec![]); 2];
        for t in 1..=50 {
            let (x, r) = env.sample_step(&mut rng);
            let (s, probs) = agent.select_and_log(&x, &r, t, &sched, &mut rng);
            assert_eq!(s.e, probs[s.w]);
            assert_eq!(s.y, r[s.w]);
            per_arm[s.w].0.push(s.x);
            per_arm[s.w].1.push(s.y);
        }
        let means = agent.posterior_means();
        for (w, (xs, ys)) in per_arm.iter().enumerate() {
            if xs.is_empty() {
                continue;
            }
            let batch = batch_ridge(xs, ys, 1.0);
            for (a, b) in means[w].iter().zip(&batch) {
                assert!((a - b).abs() < 1e-8, "arm {w}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn long_run_respects_floor() {
        let env = crate::env::make_synthetic(0);
        let sched = FloorSchedule::new(0.5, 2);
        let mut agent = AgentState::new(
            3,
            2,
            AgentConfig {
                m_draws: 100,
                ..Default::default()
            },
        );
        let mut rng = rng_from_seed(2);
        let mut min_e = f64::INFINITY;
        for t in 1..=10_000 {
            let (x, r) = env.sample_step(&mut rng);
            let (s, _) = agent.select_and_log(&x, &r, t, &sched, &mut rng);
            min_e = min_e.min(s.e);
        }
        assert!(min_e >= sched.g(10_000));
    }

    #[test]
    fn selection_is_deterministic() {
        let env = crate::env::make_synthetic(0);
        let sched = FloorSchedule::new(0.5, 2);
        let run = || {
            let mut agent = AgentState::new(3, 2, AgentConfig::default());
            let mut rng = rng_from_seed(77);
            (1..=20)
                .map(|t| {
                    let (x, r) = env.sample_step(&mut rng);
                    agent.select_and_log(&x, &r, t, &sched, &mut rng).0
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, k).prop_map(|v| {
            let s: f64 = v.iter().sum::<f64>().max(1e-9);
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn floor_output_is_a_floored_distribution(
            ebar in (2usize..6).prop_flat_map(simplex),
            t in 1usize..100_000,
            alpha in 0.0f64..=1.0,
        ) {
            let sched = FloorSchedule::new(alpha, ebar.len());
            let g = sched.g(t);
            let e = apply_floor(&ebar, t, &sched);
            prop_assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(e.iter().all(|&v| v >= g));
            let again = apply_floor(&e, t, &sched);
            for (a, b) in e.iter().zip(&again) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            for i in 0..ebar.len() {
                for j in 0..ebar.len() {
                    if ebar[i] >= g && ebar[j] >= g && ebar[i] < ebar[j] {
                        prop_assert!(e[i] <= e[j]);
                    }
                }
            }
        }
    }
}
