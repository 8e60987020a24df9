use std::collections::HashSet;

use drmcts::oracle::{
    dp_evaluate, minimax_value, one_move_block_templates, one_move_win_templates, FirstLegalPlayer, MinimaxPlayer,
};
use drmcts::policy::{heuristic_action, HeuristicPolicy, TabularPolicy};
use drmcts::search::{play_from, GameRecord};
use drmcts::seeding::derive_seed;
use drmcts::{
    play_game, run_search, simulate, ActionId, Environment, Error, EstimatorConfig, EstimatorKind, FiniteMdp,
    GameState, Outcome, Player, Search, SearchBudget, SearchPlayer, TicTacToe,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TACTICAL_ITERATIONS: usize = 100;

fn budget(n: usize) -> SearchBudget {
    SearchBudget::for_env(&TicTacToe, n).unwrap()
}

fn search(state: &GameState, kind: EstimatorKind, n: usize, seed: u64) -> drmcts::SearchResult {
    run_search(
        &TicTacToe,
        &HeuristicPolicy,
        state,
        &EstimatorConfig::with_kind(kind),
        &budget(n),
        seed,
    )
    .unwrap()
}

fn reachable_positions() -> Vec<GameState> {
    let mut seen = HashSet::new();
    let mut stack = vec![GameState::new()];
    let mut out = Vec::new();
    while let Some(state) = stack.pop() {
        if state.is_terminal() || !seen.insert(state) {
            continue;
        }
        out.push(state);
        for a in state.legal_actions() {
            stack.push(state.apply(a).unwrap());
        }
    }
    out
}

fn wins_now(state: &GameState, a: ActionId) -> bool {
    state.apply(a).unwrap().winner() == Some(state.to_move())
}

/// The one move that avoids a worse result, in positions that are not won.
fn unique_save(state: &GameState) -> Option<ActionId> {
    let best = minimax_value(state);
    (best.value < 1.0 && best.best_actions.len() == 1 && state.legal_actions().len() > 1).then(|| best.best_actions[0])
}

#[test]
fn search_finds_immediate_wins_more_often_than_the_prior() {
    let positions: Vec<GameState> = reachable_positions()
        .into_iter()
        .filter(|s| s.legal_actions().iter().any(|&a| wins_now(s, a)))
        .collect();
    let prior = positions
        .iter()
        .filter(|s| wins_now(s, heuristic_action(s).unwrap()))
        .count();
    for kind in EstimatorKind::ALL {
        let found = positions
            .iter()
            .enumerate()
            .filter(|(i, s)| wins_now(s, search(s, kind, TACTICAL_ITERATIONS, *i as u64).best_action))
            .count();
        assert!(found > prior, "{kind}: {found} vs prior {prior} of {}", positions.len());
    }
}

#[test]
fn search_finds_unique_saving_moves_more_often_than_the_prior() {
    let positions: Vec<(GameState, ActionId)> = reachable_positions()
        .into_iter()
        .filter_map(|s| Some((s, unique_save(&s)?)))
        .collect();
    let prior = positions
        .iter()
        .filter(|(s, a)| heuristic_action(s).unwrap() == *a)
        .count();
    for kind in EstimatorKind::ALL {
        let found = positions
            .iter()
            .enumerate()
            .filter(|(i, (s, a))| search(s, kind, TACTICAL_ITERATIONS, *i as u64).best_action == *a)
            .count();
        assert!(found > prior, "{kind}: {found} vs prior {prior} of {}", positions.len());
    }
}

#[test]
fn answers_agree_with_minimax() {
    for t in one_move_win_templates() {
        assert_eq!(minimax_value(&t.state).value, 1.0);
    }
    for t in one_move_block_templates() {
        assert_eq!(minimax_value(&t.state).best_actions, vec![t.answer]);
    }
}

#[test]
fn same_seed_same_result_bytes() {
    let state = GameState::parse("X.. .O. ...").unwrap();
    for kind in EstimatorKind::ALL {
        let a = serde_json::to_string(&search(&state, kind, 80, 5)).unwrap();
        let b = serde_json::to_string(&search(&state, kind, 80, 5)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn every_iteration_passes_through_one_root_edge() {
    let state = GameState::new();
    for kind in EstimatorKind::ALL {
        for n in [1, 2, 17, 100] {
            let r = search(&state, kind, n, 3);
            assert_eq!(r.iterations_run, n);
            assert_eq!(r.root_visits.iter().map(|(_, v)| *v as usize).sum::<usize>(), n);
        }
    }
}

#[test]
fn single_iteration_visits_one_edge() {
    let r = search(&GameState::new(), EstimatorKind::Dr, 1, 0);
    let visited: Vec<_> = r.root_visits.iter().filter(|(_, v)| *v > 0).collect();
    assert_eq!(visited.len(), 1);
    // a fresh root has nothing to prefer but the lowest index
    assert_eq!(visited[0].0, ActionId(0));
}

#[test]
fn tree_statistics_stay_consistent() {
    let config = EstimatorConfig::with_kind(EstimatorKind::Dr);
    let s = Search::new(&TicTacToe, &HeuristicPolicy, config, budget(150)).unwrap();
    let (_, tree) = s.run_with_tree(&GameState::new(), 11).unwrap();
    for (_, node) in tree.nodes() {
        let edge_sum: u32 = node.edges().map(|(_, e)| e.visits()).sum();
        assert_eq!(node.visits(), edge_sum);
        for (a, e) in node.edges() {
            assert_eq!(e.visits() as usize, e.reward_samples().len());
            let mean = e.reward_samples().iter().sum::<f64>() / e.visits() as f64;
            assert!((e.q().unwrap() - mean).abs() <= 1e-9);
            assert!(node.legal_actions().contains(&a));
        }
        for (a, _) in node.children() {
            assert!(node.edge(a).is_some());
        }
    }
}

#[test]
fn best_action_is_argmax_of_root_q() {
    let r = search(&GameState::parse("X.. ... ..O").unwrap(), EstimatorKind::StepIs, 60, 9);
    let best = r
        .root_q
        .iter()
        .fold(None::<(ActionId, f64)>, |acc, &(a, q)| match acc {
            Some((_, bq)) if bq >= q => acc,
            _ => Some((a, q)),
        })
        .unwrap();
    assert_eq!(r.best_action, best.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dr_at_beta_one_builds_the_mcts_tree(seed in any::<u64>(), plies in 0usize..5, n in 1usize..80) {
        let mut state = GameState::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..plies {
            let legal = state.legal_actions();
            let pick = legal[rand::Rng::gen_range(&mut rng, 0..legal.len())];
            let next = state.apply(pick).unwrap();
            if next.is_terminal() {
                break;
            }
            state = next;
        }
        let mcts = search(&state, EstimatorKind::Mcts, n, seed);
        let dr_config = EstimatorConfig { beta: 1.0, ..EstimatorConfig::with_kind(EstimatorKind::Dr) };
        let dr = run_search(&TicTacToe, &HeuristicPolicy, &state, &dr_config, &budget(n), seed).unwrap();
        prop_assert_eq!(dr.best_action, mcts.best_action);
        prop_assert_eq!(dr.root_visits, mcts.root_visits);
        for ((a1, q1), (a2, q2)) in dr.root_q.iter().zip(&mcts.root_q) {
            prop_assert_eq!(a1, a2);
            prop_assert!((q1 - q2).abs() <= 1e-12);
        }
    }
}

#[test]
fn terminal_root_is_rejected() {
    let done = GameState::parse("XXX OO. ...").unwrap();
    let err = run_search(
        &TicTacToe,
        &HeuristicPolicy,
        &done,
        &EstimatorConfig::default(),
        &budget(10),
        0,
    )
    .unwrap_err();
    assert_eq!(err, Error::TerminalRoot);
}

#[test]
fn simulate_edge_cases() {
    let policy = drmcts::policy::Smoothed::new(HeuristicPolicy, drmcts::policy::MixtureParams::new(0.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    // X to move, one cell left, and it completes the diagonal
    let last = GameState::parse("XOX OXO OX.").unwrap();
    let r = simulate(&TicTacToe, &last, &policy, 1.0, 9, Player::X.seat(), &mut rng).unwrap();
    assert_eq!(r.ret, 1.0);
    assert_eq!(r.trajectory.horizon(), 1);

    let r = simulate(&TicTacToe, &GameState::new(), &policy, 1.0, 0, 0, &mut rng).unwrap();
    assert_eq!(r.ret, 0.0);
    assert_eq!(r.trajectory.horizon(), 0);

    let won = GameState::parse("OOO XX. X..").unwrap();
    let r = simulate(&TicTacToe, &won, &policy, 1.0, 9, Player::O.seat(), &mut rng).unwrap();
    assert_eq!((r.ret, r.trajectory.horizon()), (1.0, 0));
}

#[test]
fn mdp_rollouts_match_dp_value_of_uniform_policy() {
    let mdp = FiniteMdp::validation_default(0);
    let uniform = TabularPolicy::uniform(mdp.n_states(), mdp.n_actions());
    let truth = dp_evaluate(&mdp, &uniform, 1.0).unwrap().v(mdp.initial_state(), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 10_000;
    let returns: Vec<f64> = (0..n)
        .map(|_| {
            simulate(
                &mdp,
                &mdp.root(),
                &uniform,
                1.0,
                mdp.default_rollout_depth(),
                0,
                &mut rng,
            )
            .unwrap()
            .ret
        })
        .collect();
    let mean = returns.iter().sum::<f64>() / n as f64;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - truth).abs() <= 4.0 * se, "mean {mean} truth {truth} se {se}");
}

#[test]
fn search_runs_on_the_mdp() {
    let mdp = FiniteMdp::validation_default(1);
    let pi_b = TabularPolicy::uniform(mdp.n_states(), mdp.n_actions());
    let budget = SearchBudget::for_env(&mdp, 200).unwrap();
    for kind in EstimatorKind::ALL {
        let config = EstimatorConfig::with_kind(kind);
        let (r, tree) = Search::new(&mdp, &pi_b, config, budget)
            .unwrap()
            .run_with_tree(&mdp.root(), 4)
            .unwrap();
        assert!(r.best_action.0 < mdp.n_actions());
        assert_eq!(tree.root().visits(), 200);
    }
}

#[test]
fn search_prefers_the_better_first_action_on_a_clear_mdp() {
    // action 1 pays 1 every step, action 0 pays nothing
    let mdp = FiniteMdp::new(1, 2, 3, 0, vec![1.0, 1.0], vec![0.0, 1.0]).unwrap();
    let pi_b = TabularPolicy::uniform(1, 2);
    let budget = SearchBudget::for_env(&mdp, 100).unwrap();
    // step-IS is left out: an early lucky return on action 0 makes the
    // softmax target shrink every later backup through action 1
    for kind in [EstimatorKind::Mcts, EstimatorKind::Dr] {
        for seed in 0..8 {
            let r = run_search(
                &mdp,
                &pi_b,
                &mdp.root(),
                &EstimatorConfig::with_kind(kind),
                &budget,
                seed,
            )
            .unwrap();
            assert_eq!(r.best_action, ActionId(1), "{kind} seed {seed}");
        }
    }
}

#[test]
fn perfect_players_draw() {
    let g = play_game(&MinimaxPlayer, &MinimaxPlayer, 0).unwrap();
    assert_eq!(g.outcome, Outcome::Draw);
    assert_eq!(g.moves.len(), 9);
}

#[test]
fn minimax_beats_first_legal_from_either_side() {
    assert_eq!(
        play_game(&MinimaxPlayer, &FirstLegalPlayer, 0).unwrap().outcome,
        Outcome::XWins
    );
    assert_eq!(
        play_game(&FirstLegalPlayer, &MinimaxPlayer, 0).unwrap().outcome,
        Outcome::OWins
    );
}

#[test]
fn replays_are_identical() {
    let dr = SearchPlayer::new(EstimatorConfig::with_kind(EstimatorKind::Dr), 40);
    let mcts = SearchPlayer::new(EstimatorConfig::with_kind(EstimatorKind::Mcts), 40);
    let seed = derive_seed(42, &[40, 3]);
    let a: GameRecord = play_game(&dr, &mcts, seed).unwrap();
    let b = play_game(&dr, &mcts, seed).unwrap();
    assert_eq!(a, b);
    assert!(matches!(a.moves.len(), 5..=9));
}

#[test]
fn play_from_a_midgame_position() {
    let start = GameState::parse("XX. OO. ...").unwrap();
    let g = play_from(start, &MinimaxPlayer, &FirstLegalPlayer, 1).unwrap();
    assert_eq!(g.moves, vec![ActionId(2)]);
    assert_eq!(g.outcome, Outcome::XWins);
}
