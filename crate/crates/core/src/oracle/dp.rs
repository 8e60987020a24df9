//! Exact finite-horizon policy evaluation by backward induction.

use serde::Serialize;

use crate::env::FiniteMdp;
use crate::error::{Error, Result};
use crate::policy::TabularPolicy;

/// `v(s, t)` for `t` in `0..=H` and `q(s, a, t)` for `t` in `0..H`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpValueTable {
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    v: Vec<f64>,
    q: Vec<f64>,
}

impl DpValueTable {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn v(&self, s: usize, t: usize) -> f64 {
        self.v[t * self.n_states + s]
    }

    pub fn q(&self, s: usize, a: usize, t: usize) -> f64 {
        self.q[(t * self.n_states + s) * self.n_actions + a]
    }

    /// Largest `|v(s,t) - Σ_a π(a|s) q(s,a,t)|` over the table.
    pub fn bellman_residual(&self, pi: &TabularPolicy) -> f64 {
        let mut worst = 0.0f64;
        for t in 0..self.horizon {
            for s in 0..self.n_states {
                let backed: f64 = (0..self.n_actions).map(|a| pi.prob(s, a) * self.q(s, a, t)).sum();
                worst = worst.max((self.v(s, t) - backed).abs());
            }
        }
        worst
    }
}

pub(crate) fn check_policy(mdp: &FiniteMdp, pi: &TabularPolicy) -> Result<()> {
    if pi.n_states() != mdp.n_states() || pi.n_actions() != mdp.n_actions() {
        return Err(Error::InvalidConfig(format!(
            "policy is {}x{}, mdp is {}x{}",
            pi.n_states(),
            pi.n_actions(),
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    Ok(())
}

/// Values of `pi` on `mdp`, with `v(s, H) = 0`.
pub fn dp_evaluate(mdp: &FiniteMdp, pi: &TabularPolicy, gamma: f64) -> Result<DpValueTable> {
    check_policy(mdp, pi)?;
    let (ns, na, h) = (mdp.n_states(), mdp.n_actions(), mdp.horizon());
    let mut v = vec![0.0; (h + 1) * ns];
    let mut q = vec![0.0; h * ns * na];
    for t in (0..h).rev() {
        for s in 0..ns {
            let mut vs = 0.0;
            for a in 0..na {
                let next: f64 = mdp
                    .row(s, a)
                    .iter()
                    .enumerate()
                    .map(|(s2, p)| p * v[(t + 1) * ns + s2])
                    .sum();
                let qsa = mdp.reward(s, a) + gamma * next;
                q[(t * ns + s) * na + a] = qsa;
                vs += pi.prob(s, a) * qsa;
            }
            v[t * ns + s] = vs;
        }
    }
    Ok(DpValueTable {
        n_states: ns,
        n_actions: na,
        horizon: h,
        v,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rewards_give_zero_values() {
        let mdp = FiniteMdp::new(2, 2, 3, 0, vec![0.5; 8], vec![0.0; 4]).unwrap();
        let table = dp_evaluate(&mdp, &TabularPolicy::uniform(2, 2), 1.0).unwrap();
        for t in 0..=3 {
            for s in 0..2 {
                assert_eq!(table.v(s, t), 0.0);
            }
        }
    }

    #[test]
    fn one_step_uniform() {
        let mdp = FiniteMdp::new(1, 2, 1, 0, vec![1.0, 1.0], vec![0.2, 0.8]).unwrap();
        let table = dp_evaluate(&mdp, &TabularPolicy::uniform(1, 2), 1.0).unwrap();
        assert!((table.v(0, 0) - 0.5).abs() < 1e-15);
        assert_eq!(table.v(0, 1), 0.0);
    }

    #[test]
    fn deterministic_chain_pays_one() {
        // 0 -> 1 -> 2, reward only on leaving state 2
        let t = vec![
            0.0, 1.0, 0.0, //
            0.0, 0.0, 1.0, //
            0.0, 0.0, 1.0,
        ];
        let mdp = FiniteMdp::new(3, 1, 3, 0, t, vec![0.0, 0.0, 1.0]).unwrap();
        let table = dp_evaluate(&mdp, &TabularPolicy::uniform(3, 1), 1.0).unwrap();
        assert_eq!(table.v(0, 0), 1.0);
    }

    #[test]
    fn bellman_consistent_on_default_instance() {
        let mdp = FiniteMdp::validation_default(3);
        let pi = TabularPolicy::stationary(4, vec![0.3, 0.7]).unwrap();
        let table = dp_evaluate(&mdp, &pi, 0.9).unwrap();
        assert!(table.bellman_residual(&pi) <= 1e-12);
        for s in 0..4 {
            assert_eq!(table.v(s, 3), 0.0);
        }
    }

    #[test]
    fn rejects_mismatched_policy() {
        let mdp = FiniteMdp::validation_default(3);
        assert!(dp_evaluate(&mdp, &TabularPolicy::uniform(3, 2), 1.0).is_err());
    }
}
