//! Monte Carlo benches on a [`FiniteMdp`]: trajectories are drawn under `π_b`,
//! each estimator is evaluated per trajectory, and the sample statistics are
//! compared against the exact value of `π_e`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dp::{check_policy, dp_evaluate, DpValueTable};
use super::stats::EstimatorStats;
use crate::env::{ActionId, FiniteMdp};
use crate::error::{Error, Result};
use crate::estimators::{self, EstimatorConfig, EstimatorKind, Trajectory, TrajectoryStep};
use crate::policy::TabularPolicy;
use crate::seeding::derive_seed;
use crate::tree::HistoryKey;

pub const MIN_BENCH_SAMPLES: usize = 1000;
pub const DEFAULT_MDP_SEED: u64 = 0;
pub const DEFAULT_TARGET_ROW: [f64; 2] = [0.7, 0.3];
pub const DEFAULT_BEHAVIOR_ROW: [f64; 2] = [0.5, 0.5];

const BEHAVIOR_STREAM: u64 = 0;
const ON_POLICY_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 0x6e6f_6973_65;

/// Where `Q̂`/`V̂` come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRegime {
    /// The exact DP values.
    Exact,
    /// Exact `Q` plus a fixed draw of `U(-ε, ε)` per `(s, a, t)`; `V̂` is the
    /// `π_e`-average of the perturbed `Q̂`. The draw depends only on the seed,
    /// so different `ε` scale the same perturbation.
    Noisy(f64),
    /// `Q̂ = V̂ = 0`.
    Zero,
}

impl ModelRegime {
    pub fn label(&self) -> String {
        match self {
            ModelRegime::Exact => "exact".into(),
            ModelRegime::Noisy(eps) => format!("noise eps={eps}"),
            ModelRegime::Zero => "zero".into(),
        }
    }
}

/// Plug-in `Q̂(s, a, t)` and `V̂(s, t)` tables, `V̂(s, H) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlugInModel {
    n_states: usize,
    n_actions: usize,
    q: Vec<f64>,
    v: Vec<f64>,
}

impl PlugInModel {
    pub fn build(truth: &DpValueTable, pi_e: &TabularPolicy, regime: ModelRegime, seed: u64) -> Self {
        let (ns, na, h) = (truth.n_states(), truth.n_actions(), truth.horizon());
        let mut q = vec![0.0; h * ns * na];
        let mut v = vec![0.0; (h + 1) * ns];
        if regime == ModelRegime::Zero {
            return PlugInModel {
                n_states: ns,
                n_actions: na,
                q,
                v,
            };
        }
        let eps = match regime {
            ModelRegime::Noisy(eps) => eps,
            _ => 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[NOISE_STREAM]));
        for t in 0..h {
            for s in 0..ns {
                let mut vs = 0.0;
                for a in 0..na {
                    let u: f64 = rng.gen_range(-1.0..=1.0);
                    let qsa = truth.q(s, a, t) + eps * u;
                    q[(t * ns + s) * na + a] = qsa;
                    vs += pi_e.prob(s, a) * qsa;
                }
                v[t * ns + s] = vs;
            }
        }
        PlugInModel {
            n_states: ns,
            n_actions: na,
            q,
            v,
        }
    }

    pub fn q(&self, s: usize, a: usize, t: usize) -> f64 {
        self.q[(t * self.n_states + s) * self.n_actions + a]
    }

    pub fn v(&self, s: usize, t: usize) -> f64 {
        self.v[t * self.n_states + s]
    }
}

/// An MDP with a fixed target and behavior policy and the exact target values.
#[derive(Debug, Clone)]
pub struct Bench {
    mdp: FiniteMdp,
    pi_e: TabularPolicy,
    pi_b: TabularPolicy,
    gamma: f64,
    truth: DpValueTable,
}

impl Bench {
    pub fn new(mdp: FiniteMdp, pi_e: TabularPolicy, pi_b: TabularPolicy, gamma: f64) -> Result<Self> {
        check_policy(&mdp, &pi_e)?;
        check_policy(&mdp, &pi_b)?;
        if !pi_b.is_strictly_positive() {
            return Err(Error::ZeroBehaviorProbability);
        }
        let truth = dp_evaluate(&mdp, &pi_e, gamma)?;
        Ok(Bench {
            mdp,
            pi_e,
            pi_b,
            gamma,
            truth,
        })
    }

    /// The default 4-state, 2-action, horizon-3 instance with `π_e = [0.7, 0.3]`
    /// and uniform `π_b` in every state, undiscounted.
    pub fn default_instance() -> Self {
        let mdp = FiniteMdp::validation_default(DEFAULT_MDP_SEED);
        let n = mdp.n_states();
        let pi_e = TabularPolicy::stationary(n, DEFAULT_TARGET_ROW.to_vec()).expect("valid row");
        let pi_b = TabularPolicy::stationary(n, DEFAULT_BEHAVIOR_ROW.to_vec()).expect("valid row");
        Bench::new(mdp, pi_e, pi_b, 1.0).expect("default bench is valid")
    }

    pub fn mdp(&self) -> &FiniteMdp {
        &self.mdp
    }

    pub fn truth(&self) -> &DpValueTable {
        &self.truth
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Exact `V^{π_e}` at the initial state.
    pub fn true_value(&self) -> f64 {
        self.truth.v(self.mdp.initial_state(), 0)
    }

    /// An unclipped estimator configuration matching this bench's discount.
    pub fn config(&self, kind: EstimatorKind, beta: f64) -> EstimatorConfig {
        EstimatorConfig {
            kind,
            beta,
            gamma: self.gamma,
            rho_clip: None,
            ..EstimatorConfig::default()
        }
    }

    pub fn model(&self, regime: ModelRegime, seed: u64) -> PlugInModel {
        PlugInModel::build(&self.truth, &self.pi_e, regime, seed)
    }

    fn sample_action(policy: &TabularPolicy, s: usize, rng: &mut ChaCha8Rng) -> usize {
        WeightedIndex::new(policy.row(s))
            .expect("policy rows are valid")
            .sample(rng)
    }

    /// Return of one episode under `π_e`.
    pub fn on_policy_return(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let mut s = self.mdp.initial_state();
        let mut ret = 0.0;
        let mut discount = 1.0;
        for _ in 0..self.mdp.horizon() {
            let a = Self::sample_action(&self.pi_e, s, rng);
            let (next, r) = self.mdp.step(s, a, rng)?;
            ret += discount * r;
            discount *= self.gamma;
            s = next;
        }
        Ok(ret)
    }

    /// One episode under `π_b`, annotated with `π_e` and the plug-in model.
    pub fn behavior_trajectory(&self, model: &PlugInModel, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
        let mut s = self.mdp.initial_state();
        let mut history = HistoryKey::root();
        let mut steps = Vec::with_capacity(self.mdp.horizon());
        for t in 0..self.mdp.horizon() {
            let a = Self::sample_action(&self.pi_b, s, rng);
            let (next, r) = self.mdp.step(s, a, rng)?;
            steps.push(TrajectoryStep {
                history: history.clone(),
                action: ActionId(a),
                reward: r,
                pi_e: self.pi_e.prob(s, a),
                pi_b: self.pi_b.prob(s, a),
                v_hat_next: model.v(next, t + 1),
                q_hat: model.q(s, a, t),
            });
            history = history.child(ActionId(a));
            s = next;
        }
        Ok(Trajectory::new(steps, model.v(self.mdp.initial_state(), 0)))
    }

    /// One estimate for sample `i`. Each sample owns its random streams, so
    /// results do not depend on evaluation order or thread count.
    fn estimate(&self, config: &EstimatorConfig, model: &PlugInModel, seed: u64, i: usize) -> Result<f64> {
        let stream = |tag: u64| ChaCha8Rng::seed_from_u64(derive_seed(seed, &[i as u64, tag]));
        let gamma = config.gamma;
        match config.kind {
            EstimatorKind::Mcts => self.on_policy_return(&mut stream(ON_POLICY_STREAM)),
            EstimatorKind::StepIs => {
                let traj = self.behavior_trajectory(model, &mut stream(BEHAVIOR_STREAM))?;
                estimators::v_step_is(&traj, gamma, config.rho_clip)
            }
            EstimatorKind::Dr => {
                let traj = self.behavior_trajectory(model, &mut stream(BEHAVIOR_STREAM))?;
                let v_dr = estimators::v_dr(&traj, gamma, config.rho_clip)?;
                if config.beta == 0.0 {
                    return Ok(v_dr);
                }
                let v_mc = self.on_policy_return(&mut stream(ON_POLICY_STREAM))?;
                estimators::v_hybrid(v_mc, v_dr, config.beta)
            }
        }
    }

    /// Per-sample estimates, in sample order.
    pub fn sample_estimates(
        &self,
        config: &EstimatorConfig,
        regime: ModelRegime,
        n_samples: usize,
        seed: u64,
    ) -> Result<Vec<f64>> {
        config.validate()?;
        let model = self.model(regime, seed);
        (0..n_samples)
            .into_par_iter()
            .map(|i| self.estimate(config, &model, seed, i))
            .collect()
    }

    pub fn measure(
        &self,
        config: &EstimatorConfig,
        regime: ModelRegime,
        n_samples: usize,
        seed: u64,
    ) -> Result<EstimatorStats> {
        if n_samples < MIN_BENCH_SAMPLES {
            return Err(Error::InvalidConfig(format!(
                "benches need at least {MIN_BENCH_SAMPLES} samples, got {n_samples}"
            )));
        }
        Ok(EstimatorStats::from_samples(
            &self.sample_estimates(config, regime, n_samples, seed)?,
        ))
    }
}

/// Exact mean and variance of an estimator, by enumerating every trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactMoments {
    pub mean: f64,
    pub variance: f64,
}

impl Bench {
    fn enumerate<F>(&self, policy: &TabularPolicy, model: &PlugInModel, leaf: &mut F) -> Result<()>
    where
        F: FnMut(f64, &Trajectory) -> Result<()>,
    {
        let root = Trajectory::new(Vec::new(), model.v(self.mdp.initial_state(), 0));
        self.enumerate_from(self.mdp.initial_state(), 0, 1.0, root, policy, model, leaf)
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate_from<F>(
        &self,
        s: usize,
        t: usize,
        prob: f64,
        traj: Trajectory,
        policy: &TabularPolicy,
        model: &PlugInModel,
        leaf: &mut F,
    ) -> Result<()>
    where
        F: FnMut(f64, &Trajectory) -> Result<()>,
    {
        if t == self.mdp.horizon() {
            return leaf(prob, &traj);
        }
        let history = traj
            .steps
            .last()
            .map_or_else(HistoryKey::root, |st| st.history.child(st.action));
        for a in 0..self.mdp.n_actions() {
            let pa = policy.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            for (next, &pn) in self.mdp.row(s, a).iter().enumerate() {
                if pn == 0.0 {
                    continue;
                }
                let mut branch = traj.clone();
                branch.steps.push(TrajectoryStep {
                    history: history.clone(),
                    action: ActionId(a),
                    reward: self.mdp.reward(s, a),
                    pi_e: self.pi_e.prob(s, a),
                    pi_b: self.pi_b.prob(s, a),
                    v_hat_next: model.v(next, t + 1),
                    q_hat: model.q(s, a, t),
                });
                self.enumerate_from(next, t + 1, prob * pa * pn, branch, policy, model, leaf)?;
            }
        }
        Ok(())
    }

    fn moments_of<F>(&self, policy: &TabularPolicy, model: &PlugInModel, f: F) -> Result<ExactMoments>
    where
        F: Fn(&Trajectory) -> Result<f64>,
    {
        let (mut m1, mut m2) = (0.0, 0.0);
        self.enumerate(policy, model, &mut |p, traj| {
            let x = f(traj)?;
            m1 += p * x;
            m2 += p * x * x;
            Ok(())
        })?;
        Ok(ExactMoments {
            mean: m1,
            variance: (m2 - m1 * m1).max(0.0),
        })
    }

    /// Exact moments of the single-sample estimator that [`Bench::measure`]
    /// samples from. The hybrid's two parts come from independent episodes,
    /// so their variances add with weights `β²` and `(1-β)²`.
    pub fn exact_moments(&self, config: &EstimatorConfig, regime: ModelRegime, seed: u64) -> Result<ExactMoments> {
        config.validate()?;
        let model = self.model(regime, seed);
        let gamma = config.gamma;
        let clip = config.rho_clip;
        let on_policy = || self.moments_of(&self.pi_e, &model, |traj| Ok(traj.discounted_return(gamma)));
        match config.kind {
            EstimatorKind::Mcts => on_policy(),
            EstimatorKind::StepIs => {
                self.moments_of(&self.pi_b, &model, |traj| estimators::v_step_is(traj, gamma, clip))
            }
            EstimatorKind::Dr => {
                let dr = self.moments_of(&self.pi_b, &model, |traj| estimators::v_dr(traj, gamma, clip))?;
                let mc = on_policy()?;
                let beta = config.beta;
                Ok(ExactMoments {
                    mean: beta * mc.mean + (1.0 - beta) * dr.mean,
                    variance: beta * beta * mc.variance + (1.0 - beta) * (1.0 - beta) * dr.variance,
                })
            }
        }
    }
}

/// Samples `n_samples` estimates of `V^{π_e}` at the initial state and
/// summarizes them. `Mcts` is the on-policy return; `StepIs` and `Dr` use
/// trajectories drawn under `π_b` (`Dr` blends in the on-policy return by β).
pub fn measure_estimator(
    mdp: &FiniteMdp,
    pi_e: &TabularPolicy,
    pi_b: &TabularPolicy,
    config: &EstimatorConfig,
    regime: ModelRegime,
    n_samples: usize,
    seed: u64,
) -> Result<EstimatorStats> {
    Bench::new(mdp.clone(), pi_e.clone(), pi_b.clone(), config.gamma)?.measure(config, regime, n_samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_model_matches_truth() {
        let bench = Bench::default_instance();
        let m = bench.model(ModelRegime::Exact, 1);
        for t in 0..3 {
            for s in 0..4 {
                assert_eq!(m.v(s, t), bench.truth().v(s, t));
                assert_eq!(m.q(s, 1, t), bench.truth().q(s, 1, t));
            }
        }
    }

    #[test]
    fn noise_is_bounded_and_shared_across_eps() {
        let bench = Bench::default_instance();
        let small = bench.model(ModelRegime::Noisy(0.005), 9);
        let large = bench.model(ModelRegime::Noisy(0.01), 9);
        for t in 0..3 {
            for s in 0..4 {
                for a in 0..2 {
                    let q = bench.truth().q(s, a, t);
                    let d_small = small.q(s, a, t) - q;
                    let d_large = large.q(s, a, t) - q;
                    assert!(d_large.abs() <= 0.01);
                    assert!((2.0 * d_small - d_large).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn exact_dr_has_no_model_error_at_the_root() {
        let bench = Bench::default_instance();
        let model = bench.model(ModelRegime::Exact, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let traj = bench.behavior_trajectory(&model, &mut rng).unwrap();
        assert_eq!(traj.horizon(), 3);
        assert_eq!(traj.v_hat_root, bench.true_value());
    }

    #[test]
    fn zero_behavior_probability_is_rejected() {
        let mdp = FiniteMdp::validation_default(0);
        let pi_e = TabularPolicy::uniform(4, 2);
        let pi_b = TabularPolicy::stationary(4, vec![1.0, 0.0]).unwrap();
        assert_eq!(
            Bench::new(mdp, pi_e, pi_b, 1.0).unwrap_err(),
            Error::ZeroBehaviorProbability
        );
    }

    #[test]
    fn enumeration_is_unbiased_in_every_regime() {
        let bench = Bench::default_instance();
        let v = bench.true_value();
        for regime in [ModelRegime::Exact, ModelRegime::Noisy(0.3), ModelRegime::Zero] {
            for (kind, beta) in [
                (EstimatorKind::StepIs, 0.0),
                (EstimatorKind::Dr, 0.0),
                (EstimatorKind::Dr, 0.5),
            ] {
                let m = bench.exact_moments(&bench.config(kind, beta), regime, 4).unwrap();
                assert!((m.mean - v).abs() <= 1e-12, "{kind} {regime:?}: {} vs {v}", m.mean);
            }
        }
        let mc = bench
            .exact_moments(&bench.config(EstimatorKind::Mcts, 0.5), ModelRegime::Zero, 0)
            .unwrap();
        assert!((mc.mean - v).abs() <= 1e-12);
    }

    #[test]
    fn exact_variance_grows_with_model_error() {
        let bench = Bench::default_instance();
        let cfg = bench.config(EstimatorKind::Dr, 0.5);
        let vars: Vec<f64> = [0.0, 0.005, 0.01, 0.1]
            .iter()
            .map(|&e| bench.exact_moments(&cfg, ModelRegime::Noisy(e), 7).unwrap().variance)
            .collect();
        assert!(vars.windows(2).all(|w| w[0] < w[1]), "{vars:?}");
    }

    #[test]
    fn sampled_moments_agree_with_enumeration() {
        let bench = Bench::default_instance();
        let cfg = bench.config(EstimatorKind::Dr, 0.5);
        let exact = bench.exact_moments(&cfg, ModelRegime::Zero, 0).unwrap();
        let s = bench.measure(&cfg, ModelRegime::Zero, 20_000, 11).unwrap();
        assert!(s.z_score(exact.mean) <= 4.0);
        assert!((s.variance / exact.variance - 1.0).abs() < 0.05);
    }

    #[test]
    fn too_few_samples() {
        let bench = Bench::default_instance();
        let cfg = bench.config(EstimatorKind::Dr, 0.0);
        assert!(bench.measure(&cfg, ModelRegime::Exact, 999, 0).is_err());
    }

    #[test]
    fn estimates_do_not_depend_on_thread_count() {
        let bench = Bench::default_instance();
        let cfg = bench.config(EstimatorKind::Dr, 0.5);
        let a = bench.sample_estimates(&cfg, ModelRegime::Zero, 200, 5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| bench.sample_estimates(&cfg, ModelRegime::Zero, 200, 5).unwrap());
        assert_eq!(a, b);
    }
}
