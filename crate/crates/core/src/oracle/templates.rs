//! One-move tactical positions, one per winning line.

use crate::env::tictactoe::LINES;
use crate::env::{ActionId, Cell, GameState};

use super::minimax::minimax_value;

/// A position together with the single move that answers it.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub line: [usize; 3],
    pub state: GameState,
    pub answer: ActionId,
}

fn immediate_wins(state: &GameState, mover: Cell) -> Vec<usize> {
    LINES
        .iter()
        .filter_map(|line| {
            let mine = line.iter().filter(|&&i| state.cells()[i] == mover).count();
            let empty: Vec<usize> = line
                .iter()
                .copied()
                .filter(|&i| state.cells()[i] == Cell::Empty)
                .collect();
            (mine == 2 && empty.len() == 1).then(|| empty[0])
        })
        .collect()
}

fn pairs(cells: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    cells
        .iter()
        .enumerate()
        .flat_map(move |(i, &a)| cells[i + 1..].iter().map(move |&b| (a, b)))
}

/// X to move with two on `line`; the open cell is X's only immediate win.
/// O's two stones are the first pair (in index order) off the line that
/// leaves exactly that win and no O line.
fn win_template(line: [usize; 3]) -> Option<Template> {
    let [p, q, target] = line;
    let others: Vec<usize> = (0..9).filter(|i| !line.contains(i)).collect();
    let found = pairs(&others).find_map(|(o1, o2)| {
        let mut cells = [Cell::Empty; 9];
        cells[p] = Cell::X;
        cells[q] = Cell::X;
        cells[o1] = Cell::O;
        cells[o2] = Cell::O;
        let state = GameState::from_cells(cells).ok()?;
        if state.is_terminal() || immediate_wins(&state, Cell::X) != vec![target] {
            return None;
        }
        let solved = minimax_value(&state);
        (solved.value == 1.0 && solved.best_actions.contains(&ActionId(target))).then_some(Template {
            line,
            state,
            answer: ActionId(target),
        })
    });
    found
}

/// X to move, O has two on `line`, and blocking the open cell is X's only
/// move that does not lose.
fn block_template(line: [usize; 3]) -> Option<Template> {
    let [p, q, target] = line;
    let others: Vec<usize> = (0..9).filter(|i| !line.contains(i)).collect();
    let found = pairs(&others).find_map(|(x1, x2)| {
        let mut cells = [Cell::Empty; 9];
        cells[p] = Cell::O;
        cells[q] = Cell::O;
        cells[x1] = Cell::X;
        cells[x2] = Cell::X;
        let state = GameState::from_cells(cells).ok()?;
        if state.is_terminal() || !immediate_wins(&state, Cell::X).is_empty() {
            return None;
        }
        if immediate_wins(&state, Cell::O) != vec![target] {
            return None;
        }
        (minimax_value(&state).best_actions == vec![ActionId(target)]).then_some(Template {
            line,
            state,
            answer: ActionId(target),
        })
    });
    found
}

/// For each of the eight lines, a position where completing the line wins.
pub fn one_move_win_templates() -> Vec<Template> {
    LINES
        .iter()
        .map(|&l| win_template(l).expect("every line has a win template"))
        .collect()
}

/// For each of the eight lines, a position where the opponent threatens to
/// complete it and only the block survives.
pub fn one_move_block_templates() -> Vec<Template> {
    LINES
        .iter()
        .map(|&l| block_template(l).expect("every line has a block template"))
        .collect()
}
