//! Markov Soccer on a 4x5 pitch as an explicit game.
//!
//! Two players occupy distinct cells; one of them holds the ball. Both pick
//! one of five moves and the moves are executed in a uniformly random order.
//! A move into the other player's cell is cancelled and hands the ball to the
//! player who stood still. Moves off the pitch are cancelled, except that the
//! ball carrier stepping through the goal rows of its scoring edge ends the
//! episode with +1 for the scorer and -1 for the opponent.

use crate::error::{Error, Result};
use crate::game::{ExplicitGame, Player, Transition};

pub const ROWS: usize = 4;
pub const COLS: usize = 5;
pub const NUM_CELLS: usize = ROWS * COLS;
pub const NUM_STATES: usize = NUM_CELLS * (NUM_CELLS - 1) * 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    fn index(self) -> usize {
        self.row * COLS + self.col
    }

    fn from_index(i: usize) -> Self {
        Cell::new(i / COLS, i % COLS)
    }

    /// Left-right reflection of the pitch.
    pub fn mirrored(self) -> Self {
        Cell::new(self.row, COLS - 1 - self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SoccerAction {
    Up,
    Left,
    Down,
    Right,
    Stand,
}

impl SoccerAction {
    pub const ALL: [SoccerAction; 5] =
        [SoccerAction::Up, SoccerAction::Left, SoccerAction::Down, SoccerAction::Right, SoccerAction::Stand];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn mirrored(self) -> Self {
        match self {
            SoccerAction::Left => SoccerAction::Right,
            SoccerAction::Right => SoccerAction::Left,
            other => other,
        }
    }

    fn delta(self) -> (isize, isize) {
        match self {
            SoccerAction::Up => (-1, 0),
            SoccerAction::Left => (0, -1),
            SoccerAction::Down => (1, 0),
            SoccerAction::Right => (0, 1),
            SoccerAction::Stand => (0, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SoccerState {
    pub pos1: Cell,
    pub pos2: Cell,
    pub ball: Player,
}

impl SoccerState {
    pub fn new(pos1: Cell, pos2: Cell, ball: Player) -> Self {
        SoccerState { pos1, pos2, ball }
    }

    pub fn pos(&self, player: Player) -> Cell {
        match player {
            Player::One => self.pos1,
            Player::Two => self.pos2,
        }
    }

    fn pos_mut(&mut self, player: Player) -> &mut Cell {
        match player {
            Player::One => &mut self.pos1,
            Player::Two => &mut self.pos2,
        }
    }

    /// Index in [`enumerate_states`] order.
    pub fn index(&self) -> usize {
        let p1 = self.pos1.index();
        let mut p2 = self.pos2.index();
        if p2 > p1 {
            p2 -= 1;
        }
        let ball = match self.ball {
            Player::One => 0,
            Player::Two => 1,
        };
        (p1 * (NUM_CELLS - 1) + p2) * 2 + ball
    }

    pub fn from_index(idx: usize) -> Self {
        let ball = if idx.is_multiple_of(2) { Player::One } else { Player::Two };
        let pair = idx / 2;
        let p1 = pair / (NUM_CELLS - 1);
        let mut p2 = pair % (NUM_CELLS - 1);
        if p2 >= p1 {
            p2 += 1;
        }
        SoccerState::new(Cell::from_index(p1), Cell::from_index(p2), ball)
    }

    /// Reflects the pitch left-right and exchanges the players' roles.
    pub fn mirrored(&self) -> Self {
        SoccerState::new(self.pos2.mirrored(), self.pos1.mirrored(), self.ball.other())
    }

    /// `(r1,c1,r2,c2,ball)` with ball in `{1, 2}`.
    pub fn label(&self) -> String {
        let ball = match self.ball {
            Player::One => 1,
            Player::Two => 2,
        };
        format!("({},{},{},{},{})", self.pos1.row, self.pos1.col, self.pos2.row, self.pos2.col, ball)
    }
}

/// All 760 states, lexicographic in `(pos1, pos2, ball)`.
pub fn enumerate_states() -> Vec<SoccerState> {
    let mut out = Vec::with_capacity(NUM_STATES);
    for p1 in 0..NUM_CELLS {
        for p2 in 0..NUM_CELLS {
            if p1 == p2 {
                continue;
            }
            for ball in [Player::One, Player::Two] {
                out.push(SoccerState::new(Cell::from_index(p1), Cell::from_index(p2), ball));
            }
        }
    }
    out
}

/// Result of one action profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Next(SoccerState),
    /// The named player scored.
    Goal(Player),
}

impl Outcome {
    pub fn reward(&self) -> f64 {
        match self {
            Outcome::Next(_) => 0.0,
            Outcome::Goal(Player::One) => 1.0,
            Outcome::Goal(Player::Two) => -1.0,
        }
    }
}

/// Pitch geometry and the start configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SoccerConfig {
    /// Rows (inclusive range) of both goal mouths.
    pub goal_rows: (usize, usize),
    pub start1: Cell,
    pub start2: Cell,
}

impl Default for SoccerConfig {
    fn default() -> Self {
        SoccerConfig { goal_rows: (1, 2), start1: Cell::new(2, 1), start2: Cell::new(1, 3) }
    }
}

impl SoccerConfig {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.goal_rows;
        if lo > hi || hi >= ROWS {
            return Err(Error::Config(format!("goal rows {lo}..={hi} not on the pitch")));
        }
        for c in [self.start1, self.start2] {
            if c.row >= ROWS || c.col >= COLS {
                return Err(Error::Config(format!("start cell {c:?} not on the pitch")));
            }
        }
        if self.start1 == self.start2 {
            return Err(Error::Config("start cells must differ".into()));
        }
        Ok(())
    }

    fn is_goal_row(&self, row: usize) -> bool {
        (self.goal_rows.0..=self.goal_rows.1).contains(&row)
    }

    /// Applies one player's move to `state`; the other player stands still.
    fn apply(&self, mut state: SoccerState, mover: Player, action: SoccerAction) -> Outcome {
        let here = state.pos(mover);
        let (dr, dc) = action.delta();
        let row = here.row as isize + dr;
        let col = here.col as isize + dc;
        if row < 0 || row >= ROWS as isize || col < 0 || col >= COLS as isize {
            let scoring_edge = match mover {
                Player::One => col >= COLS as isize,
                Player::Two => col < 0,
            };
            if scoring_edge && state.ball == mover && self.is_goal_row(here.row) {
                return Outcome::Goal(mover);
            }
            return Outcome::Next(state);
        }
        let target = Cell::new(row as usize, col as usize);
        if target == state.pos(mover.other()) {
            state.ball = mover.other();
            return Outcome::Next(state);
        }
        *state.pos_mut(mover) = target;
        Outcome::Next(state)
    }

    /// Exact outcome distribution of `(a1, a2)` in `state`, averaging both
    /// execution orders. Outcomes are sorted and merged.
    pub fn step_distribution(&self, state: SoccerState, a1: SoccerAction, a2: SoccerAction) -> Vec<(Outcome, f64)> {
        let mut out: Vec<(Outcome, f64)> = Vec::with_capacity(2);
        for (first, second) in [(Player::One, Player::Two), (Player::Two, Player::One)] {
            let action = |p: Player| if p == Player::One { a1 } else { a2 };
            let outcome = match self.apply(state, first, action(first)) {
                Outcome::Next(mid) => self.apply(mid, second, action(second)),
                goal => goal,
            };
            out.push((outcome, 0.5));
        }
        out.sort_by_key(|x| x.0);
        out.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        out
    }

    /// Initial distribution: fixed start cells, ball owner drawn uniformly.
    pub fn initial_distribution(&self) -> Vec<(usize, f64)> {
        vec![
            (SoccerState::new(self.start1, self.start2, Player::One).index(), 0.5),
            (SoccerState::new(self.start1, self.start2, Player::Two).index(), 0.5),
        ]
    }

    pub fn build(&self, gamma: f64) -> Result<(ExplicitGame, Vec<(usize, f64)>)> {
        self.validate()?;
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Config(format!("discount {gamma} not in [0, 1)")));
        }
        let states = enumerate_states();
        let mut rows = Vec::with_capacity(states.len() * 25);
        for &state in &states {
            for a1 in SoccerAction::ALL {
                for a2 in SoccerAction::ALL {
                    let mut reward = 0.0;
                    let mut terminal = 0.0;
                    let mut successors = Vec::new();
                    for (outcome, p) in self.step_distribution(state, a1, a2) {
                        match outcome {
                            Outcome::Next(next) => successors.push((next.index(), p)),
                            goal => {
                                reward += p * goal.reward();
                                terminal += p;
                            }
                        }
                    }
                    rows.push(Transition::new(reward, terminal, successors));
                }
            }
        }
        let game = ExplicitGame::new(states.len(), 5, 5, gamma, (-1.0, 1.0), rows)?
            .with_labels(states.iter().map(SoccerState::label).collect())?;
        Ok((game, self.initial_distribution()))
    }
}

/// Outcome distribution under the default pitch geometry.
pub fn step_distribution(state: SoccerState, a1: SoccerAction, a2: SoccerAction) -> Vec<(Outcome, f64)> {
    SoccerConfig::default().step_distribution(state, a1, a2)
}

/// The default soccer game and its initial distribution.
pub fn build_soccer_game(gamma: f64) -> Result<(ExplicitGame, Vec<(usize, f64)>)> {
    SoccerConfig::default().build(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::validate_game;
    use SoccerAction::*;

    fn st(r1: usize, c1: usize, r2: usize, c2: usize, ball: Player) -> SoccerState {
        SoccerState::new(Cell::new(r1, c1), Cell::new(r2, c2), ball)
    }

    /// Runs one execution order by hand, independent of `apply`.
    fn order_oracle(state: SoccerState, first: Player, a1: SoccerAction, a2: SoccerAction) -> Outcome {
        let goal_rows = [1usize, 2];
        let mut s = state;
        for mover in [first, first.other()] {
            let act = if mover == Player::One { a1 } else { a2 };
            let (r, c) = (s.pos(mover).row as i32, s.pos(mover).col as i32);
            let (nr, nc) = match act {
                Up => (r - 1, c),
                Down => (r + 1, c),
                Left => (r, c - 1),
                Right => (r, c + 1),
                Stand => (r, c),
            };
            let off = !(0..=3).contains(&nr) || !(0..=4).contains(&nc);
            if off {
                let goal_side = (mover == Player::One && nc == 5) || (mover == Player::Two && nc == -1);
                if goal_side && s.ball == mover && goal_rows.contains(&(r as usize)) {
                    return Outcome::Goal(mover);
                }
                continue;
            }
            let other = s.pos(mover.other());
            if (nr as usize, nc as usize) == (other.row, other.col) {
                s.ball = mover.other();
                continue;
            }
            if mover == Player::One {
                s.pos1 = Cell::new(nr as usize, nc as usize);
            } else {
                s.pos2 = Cell::new(nr as usize, nc as usize);
            }
        }
        Outcome::Next(s)
    }

    #[test]
    fn there_are_760_distinct_states() {
        let states = enumerate_states();
        assert_eq!(states.len(), 760);
        assert!(states.iter().all(|s| s.pos1 != s.pos2));
        let mut sorted = states.clone();
        sorted.sort();
        assert_eq!(sorted, states);
        for (i, s) in states.iter().enumerate() {
            assert_eq!(s.index(), i);
            assert_eq!(SoccerState::from_index(i), *s);
        }
    }

    #[test]
    fn initial_state_index_is_stable() {
        let init = SoccerConfig::default().initial_distribution();
        assert_eq!(init, vec![(st(2, 1, 1, 3, Player::One).index(), 0.5), (st(2, 1, 1, 3, Player::Two).index(), 0.5)]);
        assert_eq!(init[0].0, (11 * 19 + 8) * 2);
    }

    #[test]
    fn standing_still_keeps_the_state() {
        let s = st(0, 0, 3, 4, Player::Two);
        assert_eq!(step_distribution(s, Stand, Stand), vec![(Outcome::Next(s), 1.0)]);
    }

    #[test]
    fn running_into_the_carrier_is_blocked_in_both_orders() {
        // Player 2 at (1,2) moves Left into player 1 at (1,1), who holds the
        // ball and stands. Order 1->2: p1 stands, p2 blocked, ball to p1.
        // Order 2->1: p2 blocked, ball to p1, p1 stands.
        let s = st(1, 1, 1, 2, Player::One);
        assert_eq!(order_oracle(s, Player::One, Stand, Left), Outcome::Next(s));
        assert_eq!(order_oracle(s, Player::Two, Stand, Left), Outcome::Next(s));
        assert_eq!(step_distribution(s, Stand, Left), vec![(Outcome::Next(s), 1.0)]);
    }

    #[test]
    fn carrier_running_into_opponent_loses_the_ball() {
        let s = st(1, 1, 1, 2, Player::One);
        let expected = st(1, 1, 1, 2, Player::Two);
        assert_eq!(step_distribution(s, Right, Stand), vec![(Outcome::Next(expected), 1.0)]);
    }

    #[test]
    fn carrier_at_goal_mouth_scores() {
        let s = st(1, 4, 3, 0, Player::One);
        assert_eq!(order_oracle(s, Player::One, Right, Stand), Outcome::Goal(Player::One));
        assert_eq!(order_oracle(s, Player::Two, Right, Stand), Outcome::Goal(Player::One));
        assert_eq!(step_distribution(s, Right, Stand), vec![(Outcome::Goal(Player::One), 1.0)]);
    }

    #[test]
    fn off_pitch_and_own_goal_moves_are_blocked() {
        // Non-goal row on the scoring edge.
        let s = st(0, 4, 3, 0, Player::One);
        assert_eq!(step_distribution(s, Right, Stand), vec![(Outcome::Next(s), 1.0)]);
        // Carrier walking out through the opponent's goal.
        let s = st(1, 0, 3, 4, Player::One);
        assert_eq!(step_distribution(s, Left, Stand), vec![(Outcome::Next(s), 1.0)]);
        // Non-carrier cannot score.
        let s = st(1, 4, 3, 0, Player::Two);
        assert_eq!(step_distribution(s, Right, Stand), vec![(Outcome::Next(s), 1.0)]);
    }

    #[test]
    fn order_matters_when_both_target_the_same_cell() {
        let s = st(0, 0, 0, 2, Player::One);
        let dist = step_distribution(s, Right, Left);
        // 1 first: p1 -> (0,1), then p2 bumps into p1, ball stays with p1.
        // 2 first: p2 -> (0,1), then p1 bumps into p2, ball goes to p2.
        let mut expected =
            vec![(Outcome::Next(st(0, 1, 0, 2, Player::One)), 0.5), (Outcome::Next(st(0, 0, 0, 1, Player::Two)), 0.5)];
        expected.sort_by_key(|x| x.0);
        assert_eq!(dist, expected);
    }

    #[test]
    fn step_distribution_matches_order_oracle_everywhere() {
        for s in enumerate_states() {
            for a1 in SoccerAction::ALL {
                for a2 in SoccerAction::ALL {
                    let mut expected =
                        vec![(order_oracle(s, Player::One, a1, a2), 0.5), (order_oracle(s, Player::Two, a1, a2), 0.5)];
                    expected.sort_by_key(|x| x.0);
                    if expected[0].0 == expected[1].0 {
                        expected = vec![(expected[0].0, 1.0)];
                    }
                    assert_eq!(step_distribution(s, a1, a2), expected, "{s:?} {a1:?} {a2:?}");
                }
            }
        }
    }

    #[test]
    fn built_game_is_valid_with_unit_reward_range() {
        let (game, init) = build_soccer_game(0.9).unwrap();
        assert!(validate_game(&game).is_empty());
        assert_eq!(game.reward_range(), (-1.0, 1.0));
        assert_eq!(game.num_states(), 760);
        assert_eq!(init.len(), 2);
        assert!(init.iter().all(|&(_, p)| p == 0.5));
        for t in game.rows() {
            assert!((t.total_mass() - 1.0).abs() <= 1e-12);
            if t.reward != 0.0 {
                assert!(t.terminal > 0.0);
            }
        }
    }

    #[test]
    fn mirror_maps_dynamics_onto_themselves() {
        let states = enumerate_states();
        for &s in &states {
            let m = s.mirrored();
            assert_eq!(m.mirrored(), s);
            for a1 in SoccerAction::ALL {
                for a2 in SoccerAction::ALL {
                    let lhs: Vec<_> = step_distribution(s, a1, a2)
                        .into_iter()
                        .map(|(o, p)| {
                            let o = match o {
                                Outcome::Next(n) => Outcome::Next(n.mirrored()),
                                Outcome::Goal(pl) => Outcome::Goal(pl.other()),
                            };
                            (o, p)
                        })
                        .collect();
                    let mut lhs = lhs;
                    lhs.sort_by_key(|x| x.0);
                    assert_eq!(lhs, step_distribution(m, a2.mirrored(), a1.mirrored()));
                }
            }
        }
    }
}
