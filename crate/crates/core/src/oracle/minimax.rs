//! Exact Tic-Tac-Toe values by exhaustive search.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::env::{ActionId, GameState};
use crate::error::Result;
use crate::search::MovePicker;

/// Game-theoretic value of a position for the side to move (1 win, 0.5 draw,
/// 0 loss) and every move that attains it. Terminal positions have no moves.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxValue {
    pub value: f64,
    pub best_actions: Vec<ActionId>,
}

/// Memoized solver. Positions are small enough that one table covers the game.
#[derive(Debug, Default)]
pub struct Solver {
    memo: HashMap<GameState, f64>,
}

impl Solver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&mut self, state: &GameState) -> f64 {
        if let Some(&v) = self.memo.get(state) {
            return v;
        }
        let v = match state.terminal_value(state.to_move()) {
            Some(v) => v,
            None => state
                .legal_actions()
                .into_iter()
                .map(|a| 1.0 - self.value(&state.apply(a).expect("legal move")))
                .fold(f64::NEG_INFINITY, f64::max),
        };
        self.memo.insert(*state, v);
        v
    }

    pub fn solve(&mut self, state: &GameState) -> MinimaxValue {
        let value = self.value(state);
        let best_actions = state
            .legal_actions()
            .into_iter()
            .filter(|&a| 1.0 - self.value(&state.apply(a).expect("legal move")) == value)
            .collect();
        MinimaxValue { value, best_actions }
    }

    pub fn positions_solved(&self) -> usize {
        self.memo.len()
    }
}

thread_local! {
    static SOLVER: RefCell<Solver> = RefCell::new(Solver::new());
}

/// [`Solver::solve`] against a per-thread shared table.
pub fn minimax_value(state: &GameState) -> MinimaxValue {
    SOLVER.with(|s| s.borrow_mut().solve(state))
}

/// Perfect player; picks the lowest-index optimal move, ignoring the seed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MinimaxPlayer;

impl MovePicker for MinimaxPlayer {
    fn pick(&self, state: &GameState, _seed: u64) -> Result<ActionId> {
        minimax_value(state)
            .best_actions
            .first()
            .copied()
            .ok_or(crate::error::Error::NoLegalAction)
    }

    fn name(&self) -> String {
        "minimax".into()
    }
}

/// Always the first legal cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FirstLegalPlayer;

impl MovePicker for FirstLegalPlayer {
    fn pick(&self, state: &GameState, _seed: u64) -> Result<ActionId> {
        state
            .legal_actions()
            .first()
            .copied()
            .ok_or(crate::error::Error::NoLegalAction)
    }

    fn name(&self) -> String {
        "first-legal".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Player;

    #[test]
    fn empty_board_is_a_draw() {
        let v = minimax_value(&GameState::new());
        assert_eq!(v.value, 0.5);
        // every opening move draws
        assert_eq!(v.best_actions.len(), 9);
    }

    #[test]
    fn immediate_win() {
        let s = GameState::parse("XX. OO. ...").unwrap();
        let v = minimax_value(&s);
        assert_eq!(v.value, 1.0);
        assert_eq!(v.best_actions, vec![ActionId(2)]);
    }

    #[test]
    fn forced_loss_for_the_side_to_move() {
        // X holds two open threes; O can block only one
        let s = GameState::parse("X.X .O. X.O").unwrap();
        assert_eq!(s.to_move(), Player::O);
        assert_eq!(minimax_value(&s).value, 0.0);
    }

    #[test]
    fn terminal_states_take_their_terminal_value() {
        let won = GameState::parse("XXX OO. ...").unwrap();
        let v = minimax_value(&won);
        assert_eq!(v.value, 0.0);
        assert!(v.best_actions.is_empty());
        let full = GameState::parse("XOX XOO OXX").unwrap();
        assert_eq!(minimax_value(&full).value, 0.5);
    }

    #[test]
    fn full_solve_visits_every_reachable_position() {
        let mut solver = Solver::new();
        solver.value(&GameState::new());
        assert_eq!(solver.positions_solved(), 5478);
    }
}
