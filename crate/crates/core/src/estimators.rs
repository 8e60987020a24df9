//! Value estimators backed up by the search.
//!
//! Everything here is a pure function of its inputs. Importance ratios use the
//! convention that the cumulative ratio at step `t` includes the ratio of the
//! action taken at `t`, i.e. `ρ_{0:t} = Π_{k<=t} π_e(a_k|h_k) / π_b(a_k|h_k)`.
//! That is the weighting under which the doubly robust correction telescopes
//! to an unbiased estimate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::ActionId;
use crate::error::{Error, Result};
use crate::tree::HistoryKey;

/// One decision along a trajectory, with the model values the DR correction needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub history: HistoryKey,
    pub action: ActionId,
    pub reward: f64,
    pub pi_e: f64,
    pub pi_b: f64,
    /// `V̂(h_{t+1})`, zero past a terminal state or off the model.
    pub v_hat_next: f64,
    /// `Q̂(h_t, a_t)`.
    pub q_hat: f64,
}

impl TrajectoryStep {
    /// A step with no model values: `π_e = π_b`, `Q̂ = V̂ = 0`.
    pub fn on_policy(history: HistoryKey, action: ActionId, reward: f64, pi_b: f64) -> Self {
        TrajectoryStep {
            history,
            action,
            reward,
            pi_e: pi_b,
            pi_b,
            v_hat_next: 0.0,
            q_hat: 0.0,
        }
    }

    pub fn ratio(&self) -> Result<f64> {
        if self.pi_b <= 0.0 {
            return Err(Error::ZeroBehaviorProbability);
        }
        Ok(self.pi_e / self.pi_b)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    /// `V̂(h_0)`.
    pub v_hat_root: f64,
}

impl Trajectory {
    pub fn new(steps: Vec<TrajectoryStep>, v_hat_root: f64) -> Self {
        Trajectory { steps, v_hat_root }
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn discounted_return(&self, gamma: f64) -> f64 {
        let mut discount = 1.0;
        let mut total = 0.0;
        for step in &self.steps {
            total += discount * step.reward;
            discount *= gamma;
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "mcts")]
    Mcts,
    #[serde(rename = "is")]
    StepIs,
    #[serde(rename = "dr")]
    Dr,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [EstimatorKind::Mcts, EstimatorKind::StepIs, EstimatorKind::Dr];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Mcts => "mcts",
            EstimatorKind::StepIs => "is",
            EstimatorKind::Dr => "dr",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcts" => Ok(EstimatorKind::Mcts),
            "is" | "is-mcts" | "step-is" | "stepis" => Ok(EstimatorKind::StepIs),
            "dr" | "dr-mcts" => Ok(EstimatorKind::Dr),
            other => Err(Error::InvalidConfig(format!("unknown estimator kind `{other}`"))),
        }
    }
}

/// The β values swept when tuning the hybrid weight.
pub const BETA_SWEEP: [f64; 4] = [0.0, 0.25, 0.35, 0.5];

/// Every tunable of one searcher.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    /// Weight of the rollout return in the hybrid.
    pub beta: f64,
    /// Softmax temperature of the target policy.
    pub tau: f64,
    pub gamma: f64,
    /// PUCT exploration constant.
    pub c: f64,
    pub k_folds: usize,
    /// Uniform mixing weight applied to the behavior policy.
    pub lambda: f64,
    /// Upper clip on cumulative importance ratios; `None` disables clipping.
    pub rho_clip: Option<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            kind: EstimatorKind::Dr,
            beta: 0.5,
            tau: 1.0,
            gamma: 1.0,
            c: std::f64::consts::SQRT_2,
            k_folds: 3,
            lambda: 0.1,
            rho_clip: Some(10.0),
        }
    }
}

impl EstimatorConfig {
    pub fn with_kind(kind: EstimatorKind) -> Self {
        EstimatorConfig {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::BetaOutOfRange(self.beta));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidTemperature(self.tau));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return bad(format!("c must be finite and >= 0, got {}", self.c));
        }
        if self.k_folds < 2 {
            return Err(Error::InvalidK(self.k_folds));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        if let Some(clip) = self.rho_clip {
            if !(clip > 0.0) {
                return bad(format!("rho_clip must be > 0, got {clip}"));
            }
        }
        Ok(())
    }
}

/// Cumulative ratios `ρ_{0:t}` for `t = 0..H-1`, each clipped to `[0, rho_clip]`.
pub fn cumulative_ratios(traj: &Trajectory, rho_clip: Option<f64>) -> Result<Vec<f64>> {
    let mut product = 1.0;
    traj.steps
        .iter()
        .map(|step| {
            product *= step.ratio()?;
            Ok(match rho_clip {
                Some(clip) => product.clamp(0.0, clip),
                None => product,
            })
        })
        .collect()
}

/// Mean of the rollout returns seen through a node.
pub fn v_mcts(reward_samples: &[f64]) -> Result<f64> {
    if reward_samples.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(reward_samples.iter().sum::<f64>() / reward_samples.len() as f64)
}

/// Trajectory-wise importance sampling: full-trajectory ratio times the discounted return.
pub fn v_is(traj: &Trajectory, gamma: f64, rho_clip: Option<f64>) -> Result<f64> {
    let ratios = cumulative_ratios(traj, rho_clip)?;
    let weight = ratios.last().copied().unwrap_or(1.0);
    Ok(weight * traj.discounted_return(gamma))
}

/// Per-decision importance sampling: each reward weighted by the ratios up to its step.
pub fn v_step_is(traj: &Trajectory, gamma: f64, rho_clip: Option<f64>) -> Result<f64> {
    let ratios = cumulative_ratios(traj, rho_clip)?;
    let mut discount = 1.0;
    let mut total = 0.0;
    for (step, rho) in traj.steps.iter().zip(ratios) {
        total += discount * rho * step.reward;
        discount *= gamma;
    }
    Ok(total)
}

/// Doubly robust estimate: the model value at the root plus importance-weighted
/// temporal-difference corrections.
pub fn v_dr(traj: &Trajectory, gamma: f64, rho_clip: Option<f64>) -> Result<f64> {
    let ratios = cumulative_ratios(traj, rho_clip)?;
    let mut discount = 1.0;
    let mut total = traj.v_hat_root;
    for (step, rho) in traj.steps.iter().zip(ratios) {
        total += discount * rho * (step.reward + gamma * step.v_hat_next - step.q_hat);
        discount *= gamma;
    }
    Ok(total)
}

pub fn v_hybrid(v_mcts_val: f64, v_dr_val: f64, beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::BetaOutOfRange(beta));
    }
    Ok(beta * v_mcts_val + (1.0 - beta) * v_dr_val)
}

/// `Σ_a π_e(a) · mean(R(a))`; actions without samples contribute zero.
pub fn v_hat<'a, I>(edges: I) -> f64
where
    I: IntoIterator<Item = (f64, &'a [f64])>,
{
    edges
        .into_iter()
        .map(|(p, samples)| match v_mcts(samples) {
            Ok(mean) => p * mean,
            Err(_) => 0.0,
        })
        .sum()
}

/// Cross-fitted action value: the average of per-fold means over `k`
/// contiguous, near-equal folds in arrival order. Falls back to the plain mean
/// with fewer than `k` samples and to zero with none.
pub fn q_hat_kfold(rewards: &[f64], k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    let n = rewards.len();
    if n == 0 {
        return Ok(0.0);
    }
    if n < k {
        return v_mcts(rewards);
    }
    let base = n / k;
    let extra = n % k;
    let mut start = 0;
    let mut total = 0.0;
    for fold in 0..k {
        let len = base + usize::from(fold < extra);
        let slice = &rewards[start..start + len];
        total += slice.iter().sum::<f64>() / len as f64;
        start += len;
    }
    Ok(total / k as f64)
}
