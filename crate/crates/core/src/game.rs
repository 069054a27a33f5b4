//! Explicit tabular representation of a two-player zero-sum Markov game.
//!
//! Player 1 maximizes the reward stored in the table and player 2 receives
//! its negation. Episodes end through a per-row absorption probability; the
//! absorbing terminal state is not stored and has value zero.

use crate::error::{Error, Result};

/// Tolerance on probability vectors (transition rows and policies).
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

/// Outcome of playing one action profile in one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Expected immediate reward to player 1.
    pub reward: f64,
    /// Probability of absorbing into the terminal state.
    pub terminal: f64,
    /// Sparse successor distribution, sorted by state id, no duplicates.
    pub successors: Vec<(usize, f64)>,
}

impl Transition {
    pub fn new(reward: f64, terminal: f64, mut successors: Vec<(usize, f64)>) -> Self {
        successors.sort_by_key(|&(s, _)| s);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(successors.len());
        for (s, p) in successors {
            match merged.last_mut() {
                Some(last) if last.0 == s => last.1 += p,
                _ => merged.push((s, p)),
            }
        }
        merged.retain(|&(_, p)| p != 0.0);
        Transition { reward, terminal, successors: merged }
    }

    /// Expected value of `values` at the successor, with zero at the terminal.
    #[inline]
    pub fn expect(&self, values: &[f64]) -> f64 {
        self.successors.iter().map(|&(s, p)| p * values[s]).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.terminal + self.successors.iter().map(|&(_, p)| p).sum::<f64>()
    }
}

/// A full tabular game `<S, A1, A2, P, R, gamma>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitGame {
    num_states: usize,
    actions_p1: usize,
    actions_p2: usize,
    gamma: f64,
    reward_range: (f64, f64),
    rows: Vec<Transition>,
    labels: Option<Vec<String>>,
}

impl ExplicitGame {
    /// Builds a game from rows ordered lexicographically by `(s, a1, a2)`.
    ///
    /// Only the table shape is checked here; use [`validate_game`] for the
    /// probabilistic invariants.
    pub fn new(
        num_states: usize,
        actions_p1: usize,
        actions_p2: usize,
        gamma: f64,
        reward_range: (f64, f64),
        rows: Vec<Transition>,
    ) -> Result<Self> {
        if actions_p1 == 0 || actions_p2 == 0 {
            return Err(Error::Dimension("action sets must be non-empty".into()));
        }
        let expected = num_states * actions_p1 * actions_p2;
        if rows.len() != expected {
            return Err(Error::Dimension(format!("expected {expected} transition rows, got {}", rows.len())));
        }
        for (idx, row) in rows.iter().enumerate() {
            if let Some(&(s, _)) = row.successors.iter().find(|&&(s, _)| s >= num_states) {
                return Err(Error::Dimension(format!("row {idx} references successor {s} outside 0..{num_states}")));
            }
        }
        Ok(ExplicitGame { num_states, actions_p1, actions_p2, gamma, reward_range, rows, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.num_states {
            return Err(Error::Dimension(format!("{} labels for {} states", labels.len(), self.num_states)));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn actions_p1(&self) -> usize {
        self.actions_p1
    }

    pub fn actions_p2(&self) -> usize {
        self.actions_p2
    }

    pub fn actions(&self, player: Player) -> usize {
        match player {
            Player::One => self.actions_p1,
            Player::Two => self.actions_p2,
        }
    }

    pub fn num_profiles(&self) -> usize {
        self.actions_p1 * self.actions_p2
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn reward_range(&self) -> (f64, f64) {
        self.reward_range
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, s: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[s].as_str())
    }

    #[inline]
    pub fn row_index(&self, s: usize, a1: usize, a2: usize) -> usize {
        (s * self.actions_p1 + a1) * self.actions_p2 + a2
    }

    #[inline]
    pub fn transition(&self, s: usize, a1: usize, a2: usize) -> &Transition {
        &self.rows[self.row_index(s, a1, a2)]
    }

    #[inline]
    pub fn reward(&self, s: usize, a1: usize, a2: usize) -> f64 {
        self.transition(s, a1, a2).reward
    }

    /// All `|A1|*|A2|` rows of state `s`, row-major in `(a1, a2)`.
    pub fn state_rows(&self, s: usize) -> &[Transition] {
        let n = self.num_profiles();
        &self.rows[s * n..(s + 1) * n]
    }

    pub fn rows(&self) -> &[Transition] {
        &self.rows
    }

    /// The one-step lookahead matrix `R(s,a) + gamma * E[values(s')]`,
    /// row-major over `(a1, a2)`.
    pub fn lookahead(&self, s: usize, values: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.state_rows(s).iter().map(|t| t.reward + self.gamma * t.expect(values)));
    }

    /// Full Q table implied by a state-value vector.
    pub fn q_from_v(&self, values: &VTable) -> QTable {
        let q = self.rows.iter().map(|t| t.reward + self.gamma * t.expect(values.as_slice())).collect();
        QTable::from_vec(self.num_states, self.actions_p1, self.actions_p2, q)
    }

    /// Exchanges the roles of the players: rewards are negated and the
    /// action axes transposed.
    pub fn swap_players(&self) -> ExplicitGame {
        let (n1, n2) = (self.actions_p1, self.actions_p2);
        let mut rows = Vec::with_capacity(self.rows.len());
        for s in 0..self.num_states {
            for b in 0..n2 {
                for a in 0..n1 {
                    let t = self.transition(s, a, b);
                    rows.push(Transition { reward: -t.reward, terminal: t.terminal, successors: t.successors.clone() });
                }
            }
        }
        ExplicitGame {
            num_states: self.num_states,
            actions_p1: n2,
            actions_p2: n1,
            gamma: self.gamma,
            reward_range: (-self.reward_range.1, -self.reward_range.0),
            rows,
            labels: self.labels.clone(),
        }
    }

    /// Bounds every value function of this game must satisfy.
    pub fn value_bounds(&self) -> (f64, f64) {
        let scale = 1.0 / (1.0 - self.gamma);
        (self.reward_range.0.min(0.0) * scale, self.reward_range.1.max(0.0) * scale)
    }
}

/// One invariant violation found by [`validate_game`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DiscountOutOfRange(f64),
    RewardRangeInverted { r_min: f64, r_max: f64 },
    RewardOutOfRange { state: usize, a1: usize, a2: usize, reward: f64 },
    NegativeProbability { state: usize, a1: usize, a2: usize },
    RowSum { state: usize, a1: usize, a2: usize, sum: f64 },
    NonFinite { state: usize, a1: usize, a2: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::DiscountOutOfRange(g) => write!(f, "discount out of range: gamma = {g}"),
            Violation::RewardRangeInverted { r_min, r_max } => {
                write!(f, "reward range inverted: [{r_min}, {r_max}]")
            }
            Violation::RewardOutOfRange { state, a1, a2, reward } => {
                write!(f, "reward {reward} at ({state}, {a1}, {a2}) outside declared range")
            }
            Violation::NegativeProbability { state, a1, a2 } => {
                write!(f, "negative probability at ({state}, {a1}, {a2})")
            }
            Violation::RowSum { state, a1, a2, sum } => {
                write!(f, "transition row ({state}, {a1}, {a2}) sums to {sum}")
            }
            Violation::NonFinite { state, a1, a2 } => {
                write!(f, "non-finite entry at ({state}, {a1}, {a2})")
            }
        }
    }
}

/// Checks every structural invariant of `game`. An empty report means valid.
pub fn validate_game(game: &ExplicitGame) -> Vec<Violation> {
    let mut report = Vec::new();
    let gamma = game.gamma();
    if !(0.0..1.0).contains(&gamma) {
        report.push(Violation::DiscountOutOfRange(gamma));
    }
    let (r_min, r_max) = game.reward_range();
    if !(r_min <= r_max) {
        report.push(Violation::RewardRangeInverted { r_min, r_max });
    }
    for s in 0..game.num_states() {
        for a1 in 0..game.actions_p1() {
            for a2 in 0..game.actions_p2() {
                let t = game.transition(s, a1, a2);
                let finite =
                    t.reward.is_finite() && t.terminal.is_finite() && t.successors.iter().all(|&(_, p)| p.is_finite());
                if !finite {
                    report.push(Violation::NonFinite { state: s, a1, a2 });
                    continue;
                }
                if t.reward < r_min || t.reward > r_max {
                    report.push(Violation::RewardOutOfRange { state: s, a1, a2, reward: t.reward });
                }
                if t.terminal < 0.0 || t.successors.iter().any(|&(_, p)| p < 0.0) {
                    report.push(Violation::NegativeProbability { state: s, a1, a2 });
                }
                let sum = t.total_mass();
                if (sum - 1.0).abs() > PROB_TOL {
                    report.push(Violation::RowSum { state: s, a1, a2, sum });
                }
            }
        }
    }
    report
}

/// Per-state values.
#[derive(Debug, Clone, PartialEq)]
pub struct VTable(Vec<f64>);

impl VTable {
    pub fn zeros(num_states: usize) -> Self {
        VTable(vec![0.0; num_states])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        VTable(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Sup-norm distance to another table of the same length.
    pub fn sup_distance(&self, other: &VTable) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for VTable {
    type Output = f64;
    fn index(&self, s: usize) -> &f64 {
        &self.0[s]
    }
}

impl std::ops::IndexMut<usize> for VTable {
    fn index_mut(&mut self, s: usize) -> &mut f64 {
        &mut self.0[s]
    }
}

/// State/action-profile values, row-major over `(s, a1, a2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    actions_p1: usize,
    actions_p2: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(num_states: usize, actions_p1: usize, actions_p2: usize) -> Self {
        QTable { num_states, actions_p1, actions_p2, values: vec![0.0; num_states * actions_p1 * actions_p2] }
    }

    pub fn from_vec(num_states: usize, actions_p1: usize, actions_p2: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), num_states * actions_p1 * actions_p2);
        QTable { num_states, actions_p1, actions_p2, values }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn actions_p1(&self) -> usize {
        self.actions_p1
    }

    pub fn actions_p2(&self) -> usize {
        self.actions_p2
    }

    pub fn num_profiles(&self) -> usize {
        self.actions_p1 * self.actions_p2
    }

    /// The `|A1| x |A2|` block of state `s`, row-major.
    pub fn state(&self, s: usize) -> &[f64] {
        let n = self.num_profiles();
        &self.values[s * n..(s + 1) * n]
    }

    pub fn state_mut(&mut self, s: usize) -> &mut [f64] {
        let n = self.num_profiles();
        &mut self.values[s * n..(s + 1) * n]
    }

    pub fn get(&self, s: usize, a1: usize, a2: usize) -> f64 {
        self.values[(s * self.actions_p1 + a1) * self.actions_p2 + a2]
    }

    pub fn set(&mut self, s: usize, a1: usize, a2: usize, value: f64) {
        self.values[(s * self.actions_p1 + a1) * self.actions_p2 + a2] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Mixed strategies of one player in every state, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    actions: usize,
    probs: Vec<f64>,
}

impl PolicyTable {
    pub fn uniform(num_states: usize, actions: usize) -> Self {
        PolicyTable { actions, probs: vec![1.0 / actions as f64; num_states * actions] }
    }

    pub fn from_rows(actions: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut probs = Vec::with_capacity(rows.len() * actions);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != actions {
                return Err(Error::Dimension(format!("policy row {s} has {} entries, expected {actions}", row.len())));
            }
            probs.extend_from_slice(row);
        }
        Ok(PolicyTable { actions, probs })
    }

    pub fn from_flat(actions: usize, probs: Vec<f64>) -> Result<Self> {
        if actions == 0 || !probs.len().is_multiple_of(actions) {
            return Err(Error::Dimension(format!("{} probabilities do not split into rows of {actions}", probs.len())));
        }
        Ok(PolicyTable { actions, probs })
    }

    /// Deterministic policy playing `choice[s]` in state `s`.
    pub fn deterministic(actions: usize, choice: &[usize]) -> Self {
        let mut probs = vec![0.0; choice.len() * actions];
        for (s, &a) in choice.iter().enumerate() {
            probs[s * actions + a] = 1.0;
        }
        PolicyTable { actions, probs }
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn num_states(&self) -> usize {
        self.probs.len() / self.actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.actions..(s + 1) * self.actions]
    }

    pub fn row_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.probs[s * self.actions..(s + 1) * self.actions]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

/// A pair of Markov policies `(pi1, pi2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyProfile {
    pub pi1: PolicyTable,
    pub pi2: PolicyTable,
}

impl PolicyProfile {
    pub fn uniform(num_states: usize, actions_p1: usize, actions_p2: usize) -> Self {
        PolicyProfile {
            pi1: PolicyTable::uniform(num_states, actions_p1),
            pi2: PolicyTable::uniform(num_states, actions_p2),
        }
    }

    pub fn num_states(&self) -> usize {
        self.pi1.num_states()
    }

    pub fn policy(&self, player: Player) -> &PolicyTable {
        match player {
            Player::One => &self.pi1,
            Player::Two => &self.pi2,
        }
    }

    /// Checks shape against `game` and that every row is a distribution.
    pub fn check(&self, game: &ExplicitGame) -> Result<()> {
        for (player, table) in [(Player::One, &self.pi1), (Player::Two, &self.pi2)] {
            check_policy(game, table, player)?;
        }
        Ok(())
    }
}

pub(crate) fn check_policy(game: &ExplicitGame, table: &PolicyTable, player: Player) -> Result<()> {
    if table.actions() != game.actions(player) || table.num_states() != game.num_states() {
        return Err(Error::Dimension(format!(
            "policy of {player:?} is {}x{}, game needs {}x{}",
            table.num_states(),
            table.actions(),
            game.num_states(),
            game.actions(player)
        )));
    }
    for s in 0..table.num_states() {
        if !is_distribution(table.row(s), PROB_TOL) {
            return Err(Error::Input(format!("policy of {player:?} at state {s} is not a distribution")));
        }
    }
    Ok(())
}

pub fn is_distribution(p: &[f64], tol: f64) -> bool {
    p.iter().all(|&x| x >= 0.0 && x.is_finite()) && (p.iter().sum::<f64>() - 1.0).abs() <= tol
}

/// `pi1^T Q pi2` for a row-major `|A1| x |A2|` block.
pub fn bilinear(q: &[f64], pi1: &[f64], pi2: &[f64]) -> f64 {
    let n2 = pi2.len();
    let mut total = 0.0;
    for (i, &p) in pi1.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let row = &q[i * n2..(i + 1) * n2];
        total += p * row.iter().zip(pi2).map(|(q, w)| q * w).sum::<f64>();
    }
    total
}
