//! Named validation suites over the estimator identities and the MDP benches.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::env::ActionId;
use crate::error::{Error, Result};
use crate::estimators::{self, EstimatorKind, Trajectory, TrajectoryStep};
use crate::oracle::{Bench, ModelRegime};
use crate::policy::target_policy;
use crate::tree::HistoryKey;

/// Unbiasedness threshold in standard errors.
pub const Z_LIMIT: f64 = 4.0;
/// Tolerance for identities that hold exactly in real arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
pub const EPSILONS: [f64; 3] = [0.0, 0.005, 0.01];
pub const HYBRID_BETA: f64 = 0.5;
const COLLAPSE_CASES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Unbiasedness,
    Variance,
    Collapse,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Unbiasedness, Suite::Variance, Suite::Collapse];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Unbiasedness => "unbiasedness",
            Suite::Variance => "variance",
            Suite::Collapse => "collapse",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Relation {
    fn holds(self, measured: f64, threshold: f64) -> bool {
        match self {
            Relation::AtMost => measured <= threshold,
            Relation::Below => measured < threshold,
            Relation::AtLeast => measured >= threshold,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::Below => "<",
            Relation::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub assertion: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(assertion: impl Into<String>, measured: f64, relation: Relation, threshold: f64) -> Self {
        Check {
            assertion: assertion.into(),
            measured,
            relation,
            threshold,
            passed: relation.holds(measured, threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub suite: Suite,
    pub n_samples: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {} (n={}, seed={})", self.suite, self.n_samples, self.seed)?;
        for c in &self.checks {
            writeln!(
                f,
                "  {} {}: {:.6e} {} {:.6e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.assertion,
                c.measured,
                c.relation.symbol(),
                c.threshold
            )?;
        }
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

pub fn run_validation(suite: Suite, n_samples: usize, seed: u64) -> Result<ValidationReport> {
    let checks = match suite {
        Suite::Unbiasedness => unbiasedness(&Bench::default_instance(), n_samples, seed)?,
        Suite::Variance => variance(&Bench::default_instance(), n_samples, seed)?,
        Suite::Collapse => collapse(seed)?,
    };
    Ok(ValidationReport {
        suite,
        n_samples,
        seed,
        checks,
    })
}

/// Sampled means against the DP value for every model regime, plus the exact
/// means obtained by enumerating all trajectories.
fn unbiasedness(bench: &Bench, n: usize, seed: u64) -> Result<Vec<Check>> {
    let truth = bench.true_value();
    let regimes = [ModelRegime::Exact, ModelRegime::Noisy(0.01), ModelRegime::Zero];
    let estimators = [
        ("dr", bench.config(EstimatorKind::Dr, 0.0)),
        ("hybrid beta=0.5", bench.config(EstimatorKind::Dr, HYBRID_BETA)),
        ("step-is", bench.config(EstimatorKind::StepIs, 0.0)),
    ];
    let mut checks = Vec::new();
    for regime in regimes {
        for (name, config) in &estimators {
            if config.kind == EstimatorKind::StepIs && regime != ModelRegime::Exact {
                // step-IS ignores the model
                continue;
            }
            let stats = bench.measure(config, regime, n, seed)?;
            checks.push(Check::new(
                format!("|mean({name}) - V_dp| / se [{}]", regime.label()),
                stats.z_score(truth),
                Relation::AtMost,
                Z_LIMIT,
            ));
        }
    }
    for regime in regimes {
        let exact = bench.exact_moments(&bench.config(EstimatorKind::Dr, 0.0), regime, seed)?;
        checks.push(Check::new(
            format!("|E[dr] - V_dp| by enumeration [{}]", regime.label()),
            (exact.mean - truth).abs(),
            Relation::AtMost,
            EXACT_TOL,
        ));
    }
    Ok(checks)
}

/// Var(hybrid) against Var(on-policy return), and growth of Var(hybrid) with
/// model noise, both sampled and by enumeration.
fn variance(bench: &Bench, n: usize, seed: u64) -> Result<Vec<Check>> {
    let hybrid = bench.config(EstimatorKind::Dr, HYBRID_BETA);
    let mc = bench.config(EstimatorKind::Mcts, HYBRID_BETA);
    let var_mc = bench.measure(&mc, ModelRegime::Exact, n, seed)?.variance;
    let sampled: Vec<f64> = EPSILONS
        .iter()
        .map(|&eps| Ok(bench.measure(&hybrid, ModelRegime::Noisy(eps), n, seed)?.variance))
        .collect::<Result<_>>()?;
    let mut checks = vec![Check::new(
        "var(hybrid, exact model)",
        sampled[0],
        Relation::Below,
        var_mc,
    )];
    for (i, w) in sampled.windows(2).enumerate() {
        checks.push(Check::new(
            format!(
                "var(hybrid, eps={}) >= var(hybrid, eps={})",
                EPSILONS[i + 1],
                EPSILONS[i]
            ),
            w[1],
            Relation::AtLeast,
            w[0],
        ));
    }
    let exact_mc = bench.exact_moments(&mc, ModelRegime::Exact, seed)?.variance;
    let exact: Vec<f64> = EPSILONS
        .iter()
        .map(|&eps| Ok(bench.exact_moments(&hybrid, ModelRegime::Noisy(eps), seed)?.variance))
        .collect::<Result<_>>()?;
    checks.push(Check::new(
        "exact var(hybrid, exact model)",
        exact[0],
        Relation::Below,
        exact_mc,
    ));
    for (i, w) in exact.windows(2).enumerate() {
        checks.push(Check::new(
            format!(
                "exact var(hybrid, eps={}) >= exact var(hybrid, eps={})",
                EPSILONS[i + 1],
                EPSILONS[i]
            ),
            w[1],
            Relation::AtLeast,
            w[0],
        ));
    }
    Ok(checks)
}

/// Random trajectory with rewards in [0, 1] and policy probabilities in (0, 1].
fn random_trajectory(rng: &mut ChaCha8Rng, on_policy: bool) -> Trajectory {
    let h = rng.gen_range(1..=6);
    let mut history = HistoryKey::root();
    let mut steps = Vec::with_capacity(h);
    for _ in 0..h {
        let action = ActionId(rng.gen_range(0..4));
        let pi_b: f64 = rng.gen_range(0.05..=1.0);
        let pi_e = if on_policy { pi_b } else { rng.gen_range(0.0..=1.0) };
        steps.push(TrajectoryStep {
            history: history.clone(),
            action,
            reward: rng.gen_range(0.0..=1.0),
            pi_e,
            pi_b,
            v_hat_next: rng.gen_range(0.0..=1.0),
            q_hat: rng.gen_range(0.0..=1.0),
        });
        history = history.child(action);
    }
    let v_hat_root = rng.gen_range(0.0..=1.0);
    Trajectory::new(steps, v_hat_root)
}

/// Largest deviation from each algebraic identity over random cases.
fn collapse(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut is_gap, mut dr_gap, mut hybrid_gap, mut softmax_gap, mut fold_gap) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..COLLAPSE_CASES {
        let gamma = rng.gen_range(0.5..=1.0);

        let traj = random_trajectory(&mut rng, true);
        let ret = traj.discounted_return(gamma);
        is_gap = is_gap
            .max((estimators::v_is(&traj, gamma, None)? - ret).abs())
            .max((estimators::v_step_is(&traj, gamma, None)? - ret).abs());

        let mut traj = random_trajectory(&mut rng, false);
        for step in &mut traj.steps {
            step.q_hat = step.reward + gamma * step.v_hat_next;
        }
        dr_gap = dr_gap.max((estimators::v_dr(&traj, gamma, None)? - traj.v_hat_root).abs());

        let (x, y) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        hybrid_gap = hybrid_gap
            .max((estimators::v_hybrid(x, y, 1.0)? - x).abs())
            .max((estimators::v_hybrid(x, y, 0.0)? - y).abs());

        let n = rng.gen_range(1..=9);
        let tau = rng.gen_range(0.1..=5.0);
        let shift = rng.gen_range(-10.0..=10.0);
        let q: Vec<(ActionId, f64)> = (0..n).map(|a| (ActionId(a), rng.gen_range(0.0..=1.0))).collect();
        let shifted: Vec<(ActionId, f64)> = q.iter().map(|&(a, v)| (a, v + shift)).collect();
        let p = target_policy(&q, tau)?;
        let ps = target_policy(&shifted, tau)?;
        for (a, b) in p.probs().iter().zip(ps.probs()) {
            softmax_gap = softmax_gap.max((a - b).abs());
        }

        let k = rng.gen_range(2..=5);
        let per_fold = rng.gen_range(1..=6);
        let rewards: Vec<f64> = (0..k * per_fold).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
        fold_gap = fold_gap.max((estimators::q_hat_kfold(&rewards, k)? - mean).abs());
    }
    Ok(vec![
        Check::new(
            "on-policy |is - return|, |step-is - return|",
            is_gap,
            Relation::AtMost,
            EXACT_TOL,
        ),
        Check::new("perfect-model |dr - V_hat(h0)|", dr_gap, Relation::AtMost, EXACT_TOL),
        Check::new(
            "hybrid endpoints beta in {0, 1}",
            hybrid_gap,
            Relation::AtMost,
            EXACT_TOL,
        ),
        Check::new("softmax shift invariance", softmax_gap, Relation::AtMost, EXACT_TOL),
        Check::new("equal-fold q_hat - mean", fold_gap, Relation::AtMost, EXACT_TOL),
    ])
}
