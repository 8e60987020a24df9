//! The search loop: PUCT selection, single-node expansion, behavior-policy
//! rollout, value estimation (rollout return, per-decision IS, or the DR
//! hybrid) and backpropagation.
//!
//! For IS and DR the estimators see the whole root-to-terminal trajectory. Steps
//! taken inside the tree carry the target policy (softmax over that node's
//! Q-values), the smoothed behavior probability of the chosen action, and the
//! node's `Q̂`/`V̂`. Steps after the tree frontier are treated as on-policy with
//! no model (`ρ = 1`, `Q̂ = V̂ = 0`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ActionId, Environment, GameState, Player, Seat, TicTacToe};
use crate::error::{Error, Result};
use crate::estimators::{self, EstimatorConfig, EstimatorKind, Trajectory, TrajectoryStep};
use crate::policy::{target_policy, BehaviorPolicy, HeuristicPolicy, MixtureParams, PolicyDistribution, Smoothed};
use crate::seeding::derive_seed;
use crate::tree::{self, HistoryKey, NodeId, Tree, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub iterations: usize,
    pub max_rollout_depth: usize,
}

impl SearchBudget {
    pub fn new(iterations: usize, max_rollout_depth: usize) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be >= 1".into()));
        }
        Ok(SearchBudget {
            iterations,
            max_rollout_depth,
        })
    }

    /// `iterations` with the environment's default rollout cap.
    pub fn for_env<E: Environment>(env: &E, iterations: usize) -> Result<Self> {
        Self::new(iterations, env.default_rollout_depth())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_action: ActionId,
    /// `(a, Q(root, a))` over the root's legal actions, zero where unvisited.
    pub root_q: Vec<(ActionId, f64)>,
    pub root_visits: Vec<(ActionId, u32)>,
    pub iterations_run: usize,
}

/// Output of one behavior-policy rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    /// Discounted return from the rollout start, as seen by the perspective seat.
    pub ret: f64,
    pub trajectory: Trajectory,
    pub reached_terminal: bool,
}

/// Rolls out `behavior` from `state` until a terminal state or `max_depth`
/// steps. Every step is recorded as on-policy (`π_e = π_b`, no model values).
/// A cutoff contributes nothing beyond the rewards already collected.
pub fn simulate<E, B>(
    env: &E,
    state: &E::State,
    behavior: &B,
    gamma: f64,
    max_depth: usize,
    perspective: Seat,
    rng: &mut ChaCha8Rng,
) -> Result<Rollout>
where
    E: Environment,
    B: BehaviorPolicy<E::State> + ?Sized,
{
    if env.is_terminal(state) {
        return Ok(Rollout {
            ret: env.terminal_value(state, perspective).unwrap_or(0.0),
            trajectory: Trajectory::default(),
            reached_terminal: true,
        });
    }
    rollout_from(
        env,
        state,
        HistoryKey::root(),
        behavior,
        gamma,
        max_depth,
        perspective,
        rng,
    )
}

#[allow(clippy::too_many_arguments)]
fn rollout_from<E, B>(
    env: &E,
    start: &E::State,
    mut history: HistoryKey,
    behavior: &B,
    gamma: f64,
    max_depth: usize,
    perspective: Seat,
    rng: &mut ChaCha8Rng,
) -> Result<Rollout>
where
    E: Environment,
    B: BehaviorPolicy<E::State> + ?Sized,
{
    let mut state = start.clone();
    let mut steps = Vec::new();
    let mut ret = 0.0;
    let mut discount = 1.0;
    for _ in 0..max_depth {
        if env.is_terminal(&state) {
            break;
        }
        let legal = env.legal_actions(&state);
        let dist = behavior.distribution(&state, &legal)?;
        let action = dist.sample(rng);
        let (next, reward) = env.step(&state, action, perspective, rng)?;
        ret += discount * reward;
        discount *= gamma;
        steps.push(TrajectoryStep::on_policy(
            history.clone(),
            action,
            reward,
            dist.prob(action),
        ));
        history = history.child(action);
        state = next;
    }
    Ok(Rollout {
        ret,
        trajectory: Trajectory::new(steps, 0.0),
        reached_terminal: env.is_terminal(&state),
    })
}

/// Scale on which IS/DR corrections are computed.
///
/// Two-player games store values on `[0, 1]` and complement them for the other
/// seat. Ratio-weighted estimates are not complement-symmetric on that scale,
/// so the estimators run on the signed scale `u = 2v - 1` (win 1, draw 0,
/// loss -1), where the other seat's value is `-u`, and map back afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ValueFrame {
    Identity,
    Signed,
}

impl ValueFrame {
    fn for_env<E: Environment>(env: &E) -> Self {
        if env.zero_sum() {
            ValueFrame::Signed
        } else {
            ValueFrame::Identity
        }
    }

    /// A value (return-to-go or node statistic) into the frame.
    fn value(self, v: f64) -> f64 {
        match self {
            ValueFrame::Identity => v,
            ValueFrame::Signed => 2.0 * v - 1.0,
        }
    }

    /// A transition reward; only the reward of the final transition carries the outcome.
    fn reward(self, r: f64, terminal: bool) -> f64 {
        match self {
            ValueFrame::Signed if terminal => 2.0 * r - 1.0,
            _ => r,
        }
    }

    fn back(self, u: f64) -> f64 {
        match self {
            ValueFrame::Identity => u,
            ValueFrame::Signed => 0.5 * (u + 1.0),
        }
    }
}

/// Model values of one in-tree decision, in the search frame.
struct TreeStep {
    history: HistoryKey,
    action: ActionId,
    reward: f64,
    pi_e: f64,
    pi_b: f64,
    q_hat: f64,
    /// `V̂` of the node the decision was taken from.
    v_hat: f64,
}

/// A configured searcher over one environment.
pub struct Search<'a, E, B> {
    env: &'a E,
    behavior: Smoothed<&'a B>,
    config: EstimatorConfig,
    budget: SearchBudget,
}

impl<'a, E, B> Search<'a, E, B>
where
    E: Environment,
    B: BehaviorPolicy<E::State>,
{
    pub fn new(env: &'a E, behavior: &'a B, config: EstimatorConfig, budget: SearchBudget) -> Result<Self> {
        config.validate()?;
        if budget.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be >= 1".into()));
        }
        Ok(Search {
            env,
            behavior: Smoothed::new(behavior, MixtureParams::new(config.lambda)?),
            config,
            budget,
        })
    }

    pub fn run(&self, root: &E::State, seed: u64) -> Result<SearchResult> {
        self.run_with_tree(root, seed).map(|(result, _)| result)
    }

    /// Runs the search and also hands back the final tree.
    pub fn run_with_tree(&self, root: &E::State, seed: u64) -> Result<(SearchResult, Tree)> {
        let env = self.env;
        if env.is_terminal(root) {
            return Err(Error::TerminalRoot);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perspective = env.seat(root);
        let mut tree = Tree::new(perspective, env.legal_actions(root), env.zero_sum());
        for _ in 0..self.budget.iterations {
            self.iterate(&mut tree, root, perspective, &mut rng)?;
        }
        let root_node = tree.root();
        let root_q = tree::q_table(root_node);
        let root_visits = root_node
            .legal_actions()
            .iter()
            .map(|&a| (a, root_node.edge_visits(a)))
            .collect();
        let best_action = best_by_q(root_node)?;
        let result = SearchResult {
            best_action,
            root_q,
            root_visits,
            iterations_run: self.budget.iterations,
        };
        Ok((result, tree))
    }

    fn iterate(&self, tree: &mut Tree, root: &E::State, perspective: Seat, rng: &mut ChaCha8Rng) -> Result<()> {
        let env = self.env;
        let gamma = self.config.gamma;
        let frame = ValueFrame::for_env(env);
        let needs_model = self.config.kind != EstimatorKind::Mcts;

        let mut state = root.clone();
        let mut node = Tree::ROOT;
        let mut path: Vec<(NodeId, ActionId)> = Vec::new();
        let mut tree_steps: Vec<TreeStep> = Vec::new();
        let mut ret = 0.0;
        let mut discount = 1.0;

        // selection and expansion
        let leaf = loop {
            let current = tree.node(node);
            let prior = self.behavior.distribution(&state, current.legal_actions())?;
            let action = tree::puct_select(current, &prior, self.config.c)?;
            let model = if needs_model {
                Some(self.tree_step(tree, node, action, &prior, perspective, frame)?)
            } else {
                None
            };
            let (next, reward) = env.step(&state, action, perspective, rng)?;
            if let Some(step) = model {
                tree_steps.push(TreeStep { reward, ..step });
            }
            ret += discount * reward;
            discount *= gamma;
            path.push((node, action));
            state = next;
            if env.is_terminal(&state) {
                break None;
            }
            match tree.node(node).child(action) {
                Some(child) => node = child,
                None => {
                    let child = tree.expand(node, action, env.seat(&state), env.legal_actions(&state));
                    break Some(child);
                }
            }
        };

        let value = match leaf {
            // terminal reached inside the tree: back up the outcome itself
            None => ret,
            Some(leaf) => {
                let key = tree.node(leaf).key().clone();
                let rollout = rollout_from(
                    env,
                    &state,
                    key,
                    &self.behavior,
                    gamma,
                    self.budget.max_rollout_depth,
                    perspective,
                    rng,
                )?;
                let v_mcts = ret + discount * rollout.ret;
                match self.config.kind {
                    EstimatorKind::Mcts => v_mcts,
                    kind => {
                        let traj = self.assemble(tree_steps, rollout, frame);
                        let clip = self.config.rho_clip;
                        match kind {
                            EstimatorKind::StepIs => frame.back(estimators::v_step_is(&traj, gamma, clip)?),
                            _ => {
                                let v_dr = frame.back(estimators::v_dr(&traj, gamma, clip)?);
                                estimators::v_hybrid(v_mcts, v_dr, self.config.beta)?
                            }
                        }
                    }
                }
            }
        };
        tree.record_and_backpropagate(&path, value, perspective);
        Ok(())
    }

    /// Target/behavior probabilities and model values for an in-tree decision.
    fn tree_step(
        &self,
        tree: &Tree,
        id: NodeId,
        action: ActionId,
        prior: &PolicyDistribution,
        perspective: Seat,
        frame: ValueFrame,
    ) -> Result<TreeStep> {
        let node = tree.node(id);
        let pi_b = prior.prob(action);
        let to_frame = |v: f64| frame.value(tree.value_for(v, node.seat(), perspective));
        let (pi_e, v_hat) = if node.visits() > 0 {
            let target = target_policy(&tree::q_table(node), self.config.tau)?;
            let v_hat = estimators::v_hat(target.iter().map(|(a, p)| (p, node.samples(a))));
            (target.prob(action), to_frame(v_hat))
        } else {
            // no children yet, so no target policy: treat as on-policy
            (pi_b, 0.0)
        };
        let q_hat = if node.edge_visits(action) > 0 {
            to_frame(tree::q_hat(node, action, self.config.k_folds)?)
        } else {
            0.0
        };
        Ok(TreeStep {
            history: node.key().clone(),
            action,
            reward: 0.0,
            pi_e,
            pi_b,
            q_hat,
            v_hat,
        })
    }

    /// Joins the in-tree prefix with the rollout into one trajectory in `frame`.
    fn assemble(&self, tree_steps: Vec<TreeStep>, rollout: Rollout, frame: ValueFrame) -> Trajectory {
        let v_hat_root = tree_steps.first().map_or(0.0, |s| s.v_hat);
        let next_v_hats: Vec<f64> = tree_steps.iter().skip(1).map(|s| s.v_hat).collect();
        let mut steps: Vec<TrajectoryStep> = tree_steps
            .into_iter()
            .enumerate()
            .map(|(i, s)| TrajectoryStep {
                history: s.history,
                action: s.action,
                // in-tree transitions never end the game when a rollout follows
                reward: frame.reward(s.reward, false),
                pi_e: s.pi_e,
                pi_b: s.pi_b,
                v_hat_next: next_v_hats.get(i).copied().unwrap_or(0.0),
                q_hat: s.q_hat,
            })
            .collect();
        let n = rollout.trajectory.steps.len();
        for (i, mut step) in rollout.trajectory.steps.into_iter().enumerate() {
            step.reward = frame.reward(step.reward, rollout.reached_terminal && i + 1 == n);
            steps.push(step);
        }
        Trajectory::new(steps, v_hat_root)
    }
}

fn best_by_q(root: &TreeNode) -> Result<ActionId> {
    let mut best: Option<(ActionId, f64)> = None;
    for &a in root.legal_actions() {
        let q = root.q_or_zero(a);
        if best.is_none_or(|(_, b)| q > b) {
            best = Some((a, q));
        }
    }
    best.map(|(a, _)| a).ok_or(Error::NoLegalAction)
}

/// One-shot helper around [`Search`].
pub fn run_search<E, B>(
    env: &E,
    behavior: &B,
    root: &E::State,
    config: &EstimatorConfig,
    budget: &SearchBudget,
    seed: u64,
) -> Result<SearchResult>
where
    E: Environment,
    B: BehaviorPolicy<E::State>,
{
    Search::new(env, behavior, *config, *budget)?.run(root, seed)
}

/// Anything that can choose a Tic-Tac-Toe move.
pub trait MovePicker: Sync {
    fn pick(&self, state: &GameState, seed: u64) -> Result<ActionId>;

    fn name(&self) -> String;
}

/// A Tic-Tac-Toe player backed by a fresh search per move, using the
/// center/corner/edge heuristic as behavior policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchPlayer {
    pub config: EstimatorConfig,
    pub iterations: usize,
}

impl SearchPlayer {
    pub fn new(config: EstimatorConfig, iterations: usize) -> Self {
        SearchPlayer { config, iterations }
    }
}

impl MovePicker for SearchPlayer {
    fn pick(&self, state: &GameState, seed: u64) -> Result<ActionId> {
        let budget = SearchBudget::for_env(&TicTacToe, self.iterations)?;
        run_search(&TicTacToe, &HeuristicPolicy, state, &self.config, &budget, seed).map(|r| r.best_action)
    }

    fn name(&self) -> String {
        self.config.kind.name().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    XWins,
    OWins,
    Draw,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRecord {
    pub outcome: Outcome,
    pub moves: Vec<ActionId>,
}

/// Plays one game from the empty board; the per-move seed is derived from
/// `seed` and the ply, so a replay with the same seed is identical.
pub fn play_game(x: &dyn MovePicker, o: &dyn MovePicker, seed: u64) -> Result<GameRecord> {
    play_from(GameState::new(), x, o, seed)
}

pub fn play_from(start: GameState, x: &dyn MovePicker, o: &dyn MovePicker, seed: u64) -> Result<GameRecord> {
    let mut state = start;
    let mut moves = Vec::new();
    while !state.is_terminal() {
        let picker = match state.to_move() {
            Player::X => x,
            Player::O => o,
        };
        let action = picker.pick(&state, derive_seed(seed, &[moves.len() as u64]))?;
        state = state.apply(action)?;
        moves.push(action);
    }
    let outcome = match state.winner() {
        Some(Player::X) => Outcome::XWins,
        Some(Player::O) => Outcome::OWins,
        None => Outcome::Draw,
    };
    Ok(GameRecord { outcome, moves })
}
