use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ActionId, Environment, Reward, Seat};
use crate::error::{Error, Result};

pub const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    X,
    O,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::X => Player::O,
            Player::O => Player::X,
        }
    }

    pub fn seat(self) -> Seat {
        match self {
            Player::X => 0,
            Player::O => 1,
        }
    }

    pub fn from_seat(seat: Seat) -> Player {
        if seat == 0 {
            Player::X
        } else {
            Player::O
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::X => "X",
            Player::O => "O",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Empty,
    X,
    O,
}

impl From<Player> for Cell {
    fn from(p: Player) -> Self {
        match p {
            Player::X => Cell::X,
            Player::O => Cell::O,
        }
    }
}

/// A Tic-Tac-Toe position. Moves return a fresh value; the receiver is never mutated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameState {
    cells: [Cell; 9],
    to_move: Player,
}

impl Default for GameState {
    fn default() -> Self {
        Self::new()
    }
}

impl GameState {
    pub fn new() -> Self {
        GameState {
            cells: [Cell::Empty; 9],
            to_move: Player::X,
        }
    }

    /// Builds a position from nine cells, inferring the side to move from the
    /// piece counts.
    pub fn from_cells(cells: [Cell; 9]) -> Result<Self> {
        let xs = cells.iter().filter(|&&c| c == Cell::X).count();
        let os = cells.iter().filter(|&&c| c == Cell::O).count();
        let to_move = match xs.checked_sub(os) {
            Some(0) => Player::X,
            Some(1) => Player::O,
            _ => {
                return Err(Error::InvalidBoard(format!(
                    "piece counts X={xs} O={os} are unreachable"
                )))
            }
        };
        let state = GameState { cells, to_move };
        let x_wins = state.has_line(Player::X);
        let o_wins = state.has_line(Player::O);
        if (x_wins && o_wins) || (x_wins && to_move == Player::X) || (o_wins && to_move == Player::O) {
            return Err(Error::InvalidBoard("winning lines inconsistent with move order".into()));
        }
        Ok(state)
    }

    /// Parses nine characters from `X`, `O` and `.` (or `-`, `_`), ignoring
    /// separators (`|`, `/`, spaces, newlines) so the output of `Display` round-trips.
    pub fn parse(s: &str) -> Result<Self> {
        let mut cells = Vec::with_capacity(9);
        for ch in s.chars() {
            match ch {
                'X' | 'x' => cells.push(Cell::X),
                'O' | 'o' => cells.push(Cell::O),
                '.' | '-' | '_' => cells.push(Cell::Empty),
                '|' | ' ' | '/' | '\n' | '\r' => {}
                other => return Err(Error::InvalidBoard(format!("unexpected character {other:?}"))),
            }
        }
        let cells: [Cell; 9] = cells
            .try_into()
            .map_err(|v: Vec<Cell>| Error::InvalidBoard(format!("expected 9 cells, got {}", v.len())))?;
        Self::from_cells(cells)
    }

    pub fn cells(&self) -> &[Cell; 9] {
        &self.cells
    }

    pub fn to_move(&self) -> Player {
        self.to_move
    }

    pub fn is_empty_cell(&self, index: usize) -> bool {
        self.cells.get(index) == Some(&Cell::Empty)
    }

    pub fn is_full(&self) -> bool {
        self.cells.iter().all(|&c| c != Cell::Empty)
    }

    fn has_line(&self, player: Player) -> bool {
        let mark = Cell::from(player);
        LINES.iter().any(|line| line.iter().all(|&i| self.cells[i] == mark))
    }

    pub fn winner(&self) -> Option<Player> {
        if self.has_line(Player::X) {
            Some(Player::X)
        } else if self.has_line(Player::O) {
            Some(Player::O)
        } else {
            None
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.winner().is_some() || self.is_full()
    }

    /// Empty cells in ascending order, or nothing once the game is decided.
    pub fn legal_actions(&self) -> Vec<ActionId> {
        if self.winner().is_some() {
            return Vec::new();
        }
        (0..9).filter(|&i| self.cells[i] == Cell::Empty).map(ActionId).collect()
    }

    pub fn apply(&self, action: ActionId) -> Result<GameState> {
        if self.is_terminal() || !self.is_empty_cell(action.0) {
            return Err(Error::IllegalMove { action });
        }
        let mut next = *self;
        next.cells[action.0] = self.to_move.into();
        next.to_move = self.to_move.opponent();
        Ok(next)
    }

    /// 1.0 win, 0.5 draw, 0.0 loss for `perspective`; `None` while the game is on.
    pub fn terminal_value(&self, perspective: Player) -> Option<Reward> {
        match self.winner() {
            Some(w) if w == perspective => Some(1.0),
            Some(_) => Some(0.0),
            None if self.is_full() => Some(0.5),
            None => None,
        }
    }
}

impl fmt::Display for GameState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in 0..3 {
            let cells: Vec<&str> = (0..3)
                .map(|col| match self.cells[row * 3 + col] {
                    Cell::Empty => ".",
                    Cell::X => "X",
                    Cell::O => "O",
                })
                .collect();
            write!(f, "{}", cells.join("|"))?;
            if row < 2 {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TicTacToe;

impl Environment for TicTacToe {
    type State = GameState;

    fn legal_actions(&self, state: &GameState) -> Vec<ActionId> {
        state.legal_actions()
    }

    fn is_terminal(&self, state: &GameState) -> bool {
        state.is_terminal()
    }

    fn seat(&self, state: &GameState) -> Seat {
        state.to_move().seat()
    }

    fn terminal_value(&self, state: &GameState, perspective: Seat) -> Option<Reward> {
        state.terminal_value(Player::from_seat(perspective))
    }

    fn zero_sum(&self) -> bool {
        true
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: &GameState,
        action: ActionId,
        perspective: Seat,
        _rng: &mut R,
    ) -> Result<(GameState, Reward)> {
        let next = state.apply(action)?;
        let reward = next.terminal_value(Player::from_seat(perspective)).unwrap_or(0.0);
        Ok((next, reward))
    }

    fn default_rollout_depth(&self) -> usize {
        9
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acts(v: &[usize]) -> Vec<ActionId> {
        v.iter().copied().map(ActionId).collect()
    }

    #[test]
    fn legal_actions_cover_empty_cells() {
        assert_eq!(GameState::new().legal_actions(), acts(&[0, 1, 2, 3, 4, 5, 6, 7, 8]));
        let s = GameState::new().apply(ActionId(4)).unwrap();
        assert_eq!(s.legal_actions(), acts(&[0, 1, 2, 3, 5, 6, 7, 8]));
        let full = GameState::parse("XOX XOO OXX").unwrap();
        assert!(full.legal_actions().is_empty());
    }

    #[test]
    fn apply_places_mark_and_flips_turn() {
        let s0 = GameState::new();
        let s1 = s0.apply(ActionId(4)).unwrap();
        assert_eq!(s1.cells()[4], Cell::X);
        assert_eq!(s1.to_move(), Player::O);
        // value semantics
        assert_eq!(s0, GameState::new());
        assert_eq!(s1.apply(ActionId(4)), Err(Error::IllegalMove { action: ActionId(4) }));
    }

    #[test]
    fn last_empty_cell_fills_board() {
        let s = GameState::parse("XOX XOO OX.").unwrap();
        assert_eq!(s.legal_actions(), acts(&[8]));
        let done = s.apply(ActionId(8)).unwrap();
        assert!(done.is_full());
        assert!(done.is_terminal());
    }

    #[test]
    fn moves_after_a_win_are_illegal() {
        let s = GameState::parse("XXX OO. ...").unwrap();
        assert!(s.legal_actions().is_empty());
        assert!(matches!(s.apply(ActionId(5)), Err(Error::IllegalMove { .. })));
    }

    #[test]
    fn terminal_values() {
        let s = GameState::parse("XXX OO. ...").unwrap();
        assert_eq!(s.terminal_value(Player::X), Some(1.0));
        assert_eq!(s.terminal_value(Player::O), Some(0.0));
        let draw = GameState::parse("XOX XOO OXX").unwrap();
        assert_eq!(draw.terminal_value(Player::X), Some(0.5));
        assert_eq!(draw.terminal_value(Player::O), Some(0.5));
        assert_eq!(GameState::new().terminal_value(Player::X), None);
    }

    #[test]
    fn parse_rejects_unreachable_boards() {
        assert!(GameState::parse("XX. ... ...").is_err());
        assert!(GameState::parse("OO. ... ...").is_err());
        assert!(GameState::parse("XXX OOO ...").is_err());
        assert!(GameState::parse("XX").is_err());
    }

    #[test]
    fn display_round_trips() {
        let s = GameState::parse("X.O .X. ..O").unwrap();
        assert_eq!(s.to_string(), "X|.|O\n.|X|.\n.|.|O");
        assert_eq!(GameState::parse(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn step_reports_reward_for_perspective() {
        let env = TicTacToe;
        let s = GameState::parse("XX. OO. ...").unwrap();
        let mut rng = rand::thread_rng();
        let (_, r) = env.step(&s, ActionId(2), Player::X.seat(), &mut rng).unwrap();
        assert_eq!(r, 1.0);
        let (_, r) = env.step(&s, ActionId(2), Player::O.seat(), &mut rng).unwrap();
        assert_eq!(r, 0.0);
        let (_, r) = env.step(&s, ActionId(8), Player::X.seat(), &mut rng).unwrap();
        assert_eq!(r, 0.0);
    }
}
