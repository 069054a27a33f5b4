//! State aggregation, abstract game construction and policy lifting.
//!
//! An [`Abstraction`] maps every ground state to a block id and carries a
//! weight per ground state; weights inside each block sum to one. Four
//! aggregation criteria are provided:
//!
//! * `minimax_q`: `|Q*(s1,a) - Q*(s2,a)| <= eps` for every profile `a`;
//! * `model`: rewards within `eps` and block transition masses within `eps`,
//!   measured against the partition itself;
//! * `boltzmann`: softmax of `Q*` rows within `eps`, partition functions
//!   within `k * eps`;
//! * `multinomial`: sum-normalized `Q*` rows within `eps`, row sums within
//!   `k * eps`.
//!
//! The Q-based criteria are pairwise: two states may share a block only if
//! they are compatible at `eps`. Blocks are grown greedily, by default with
//! complete linkage so that raising `eps` only ever merges blocks; a
//! single first-fit pass in state order is available through [`Grouping`].
//! The model criterion is built by partition refinement.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::game::{validate_game, ExplicitGame, PolicyProfile, PolicyTable, QTable, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    MinimaxQ,
    Model,
    Boltzmann,
    Multinomial,
    /// Hand-made partitions (identity, single block, imported files).
    Custom,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::MinimaxQ => "minimax_q",
            Criterion::Model => "model",
            Criterion::Boltzmann => "boltzmann",
            Criterion::Multinomial => "multinomial",
            Criterion::Custom => "custom",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimax_q" => Ok(Criterion::MinimaxQ),
            "model" => Ok(Criterion::Model),
            "boltzmann" => Ok(Criterion::Boltzmann),
            "multinomial" => Ok(Criterion::Multinomial),
            "custom" => Ok(Criterion::Custom),
            other => Err(Error::Config(format!("unknown criterion {other:?}"))),
        }
    }
}

/// A partition of the ground states with per-state weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Abstraction {
    phi: Vec<usize>,
    weights: Vec<f64>,
    num_blocks: usize,
    pub criterion: Criterion,
    pub epsilon: f64,
    pub k: f64,
    /// States excluded from merging because a criterion precondition fails
    /// for them (multinomial rows with a near-zero sum).
    pub degenerate: Vec<usize>,
}

impl Abstraction {
    /// Builds an abstraction from block ids with uniform in-block weights.
    ///
    /// Block ids must be exactly `0..m` for some `m`.
    pub fn from_partition(phi: Vec<usize>, criterion: Criterion, epsilon: f64, k: f64) -> Result<Self> {
        let num_blocks = phi.iter().map(|&b| b + 1).max().unwrap_or(0);
        let mut sizes = vec![0usize; num_blocks];
        for &b in &phi {
            sizes[b] += 1;
        }
        if sizes.contains(&0) {
            return Err(Error::Input("abstract state ids are not contiguous".into()));
        }
        let weights = phi.iter().map(|&b| 1.0 / sizes[b] as f64).collect();
        Ok(Abstraction { phi, weights, num_blocks, criterion, epsilon, k, degenerate: Vec::new() })
    }

    pub fn identity(num_states: usize) -> Self {
        Abstraction::from_partition((0..num_states).collect(), Criterion::Custom, 0.0, 0.0)
            .expect("identity partition is contiguous")
    }

    pub fn single_block(num_states: usize) -> Self {
        Abstraction::from_partition(vec![0; num_states], Criterion::Custom, 0.0, 0.0)
            .expect("single block is contiguous")
    }

    /// Replaces the weight function; weights must lie in `[0, 1]` and sum to
    /// one inside every block.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.phi.len() {
            return Err(Error::Dimension(format!("{} weights for {} ground states", weights.len(), self.phi.len())));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::Input("weights must lie in [0, 1]".into()));
        }
        self.weights = weights;
        self.check_weights()?;
        Ok(self)
    }

    pub fn check_weights(&self) -> Result<()> {
        let mut sums = vec![0.0; self.num_blocks];
        for (s, &b) in self.phi.iter().enumerate() {
            sums[b] += self.weights[s];
        }
        match sums.iter().position(|&t| (t - 1.0).abs() > 1e-12) {
            Some(b) => Err(Error::Input(format!("weights of block {b} sum to {}", sums[b]))),
            None => Ok(()),
        }
    }

    pub fn num_ground(&self) -> usize {
        self.phi.len()
    }

    pub fn num_abstract(&self) -> usize {
        self.num_blocks
    }

    pub fn phi(&self) -> &[usize] {
        &self.phi
    }

    pub fn block_of(&self, s: usize) -> usize {
        self.phi[s]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Members of every block, in ascending state order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.num_blocks];
        for (s, &b) in self.phi.iter().enumerate() {
            blocks[b].push(s);
        }
        blocks
    }

    /// Image of a ground distribution under `phi`.
    pub fn push_forward(&self, dist: &[(usize, f64)]) -> Vec<(usize, f64)> {
        let t = Transition::new(0.0, 0.0, dist.iter().map(|&(s, p)| (self.phi[s], p)).collect());
        t.successors
    }
}

/// How the pairwise Q-based criteria are turned into a partition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Grouping {
    /// Complete-linkage agglomeration: repeatedly merge the two blocks whose
    /// farthest cross pair is closest, ties broken by smallest member, until
    /// the closest pair exceeds `eps`. Partitions are nested in `eps`.
    #[default]
    Linkage,
    /// Single pass in state order; a state joins the first block whose every
    /// member is compatible with it.
    FirstFit,
}

impl Grouping {
    pub fn name(self) -> &'static str {
        match self {
            Grouping::Linkage => "linkage",
            Grouping::FirstFit => "first-fit",
        }
    }
}

impl FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linkage" => Ok(Grouping::Linkage),
            "first-fit" | "first_fit" => Ok(Grouping::FirstFit),
            other => Err(Error::Config(format!("unknown grouping `{other}`"))),
        }
    }
}

/// Partition `0..n` so that every intra-block pair has `dist <= epsilon`.
/// `dist` is the smallest epsilon at which a pair is compatible; infinity
/// keeps a pair apart for good.
fn pairwise_partition(n: usize, epsilon: f64, grouping: Grouping, dist: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    match grouping {
        Grouping::FirstFit => first_fit(n, |a, b| dist(a, b) <= epsilon),
        Grouping::Linkage => complete_linkage(n, epsilon, dist),
    }
}

fn first_fit(n: usize, compatible: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut phi = vec![0; n];
    for s in 0..n {
        match blocks.iter().position(|members| members.iter().all(|&m| compatible(m, s))) {
            Some(b) => {
                blocks[b].push(s);
                phi[s] = b;
            }
            None => {
                phi[s] = blocks.len();
                blocks.push(vec![s]);
            }
        }
    }
    phi
}

fn complete_linkage(n: usize, epsilon: f64, dist: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    // Blocks are named by their smallest member; d is the upper triangle.
    let mut d = vec![f64::INFINITY; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let v = dist(a, b);
            d[a * n + b] = if v.is_nan() { f64::INFINITY } else { v };
        }
    }
    let mut owner: Vec<usize> = (0..n).collect();
    let mut active: Vec<usize> = (0..n).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, &a) in active.iter().enumerate() {
            for &b in &active[i + 1..] {
                let v = d[a * n + b];
                if v <= epsilon && best.is_none_or(|(bv, _, _)| v < bv) {
                    best = Some((v, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        for &c in &active {
            if c == a || c == b {
                continue;
            }
            let merged = d[a.min(c) * n + a.max(c)].max(d[b.min(c) * n + b.max(c)]);
            d[a.min(c) * n + a.max(c)] = merged;
        }
        active.retain(|&c| c != b);
        for o in owner.iter_mut().filter(|o| **o == b) {
            *o = a;
        }
    }
    canonical_ids(&owner)
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Smallest epsilon at which a row pair with sup distance `rows` and
/// normalizer gap `norm` passes a `rows <= eps && norm <= k * eps` test.
fn scaled_distance(rows: f64, norm: f64, k: f64) -> f64 {
    let scaled = if norm == 0.0 {
        0.0
    } else if k > 0.0 {
        norm / k
    } else {
        f64::INFINITY
    };
    rows.max(scaled)
}

/// Smallest epsilon at which two states are minimax-Q compatible.
pub fn minimax_q_distance(q: &QTable, s1: usize, s2: usize) -> f64 {
    sup_distance(q.state(s1), q.state(s2))
}

pub fn minimax_q_compatible(q: &QTable, s1: usize, s2: usize, epsilon: f64) -> bool {
    minimax_q_distance(q, s1, s2) <= epsilon
}

/// Aggregation under the minimax-Q criterion with the default grouping.
pub fn aggregate_minimax_q(q_star: &QTable, epsilon: f64) -> Abstraction {
    aggregate_minimax_q_with(q_star, epsilon, Grouping::default())
}

pub fn aggregate_minimax_q_with(q_star: &QTable, epsilon: f64, grouping: Grouping) -> Abstraction {
    let phi = pairwise_partition(q_star.num_states(), epsilon, grouping, |a, b| minimax_q_distance(q_star, a, b));
    Abstraction::from_partition(phi, Criterion::MinimaxQ, epsilon, 0.0).expect("partition ids are contiguous")
}

/// Softmax of a Q row and its partition function.
fn boltzmann_row(row: &[f64]) -> (Vec<f64>, f64) {
    let exps: Vec<f64> = row.iter().map(|q| q.exp()).collect();
    let z: f64 = exps.iter().sum();
    (exps.iter().map(|e| e / z).collect(), z)
}

fn row_pair_distance(a: &(Vec<f64>, f64), b: &(Vec<f64>, f64), k: f64) -> f64 {
    scaled_distance(sup_distance(&a.0, &b.0), (a.1 - b.1).abs(), k)
}

pub fn boltzmann_distance(q: &QTable, s1: usize, s2: usize, k: f64) -> f64 {
    row_pair_distance(&boltzmann_row(q.state(s1)), &boltzmann_row(q.state(s2)), k)
}

pub fn boltzmann_compatible(q: &QTable, s1: usize, s2: usize, epsilon: f64, k: f64) -> bool {
    boltzmann_distance(q, s1, s2, k) <= epsilon
}

/// Aggregation under the Boltzmann criterion with the default grouping.
pub fn aggregate_boltzmann(q_star: &QTable, epsilon: f64, k: f64) -> Abstraction {
    aggregate_boltzmann_with(q_star, epsilon, k, Grouping::default())
}

pub fn aggregate_boltzmann_with(q_star: &QTable, epsilon: f64, k: f64, grouping: Grouping) -> Abstraction {
    let rows: Vec<(Vec<f64>, f64)> = (0..q_star.num_states()).map(|s| boltzmann_row(q_star.state(s))).collect();
    let phi =
        pairwise_partition(q_star.num_states(), epsilon, grouping, |a, b| row_pair_distance(&rows[a], &rows[b], k));
    Abstraction::from_partition(phi, Criterion::Boltzmann, epsilon, k).expect("partition ids are contiguous")
}

fn multinomial_row(row: &[f64]) -> (Vec<f64>, f64) {
    let total: f64 = row.iter().sum();
    (row.iter().map(|q| q / total).collect(), total)
}

pub fn multinomial_distance(q: &QTable, s1: usize, s2: usize, k: f64) -> f64 {
    row_pair_distance(&multinomial_row(q.state(s1)), &multinomial_row(q.state(s2)), k)
}

pub fn multinomial_compatible(q: &QTable, s1: usize, s2: usize, epsilon: f64, k: f64) -> bool {
    multinomial_distance(q, s1, s2, k) <= epsilon
}

/// Aggregation under the multinomial criterion with the default grouping.
/// States whose row sum has magnitude below `delta_floor` stay singletons
/// and are listed in [`Abstraction::degenerate`].
pub fn aggregate_multinomial(q_star: &QTable, epsilon: f64, k: f64, delta_floor: f64) -> Abstraction {
    aggregate_multinomial_with(q_star, epsilon, k, delta_floor, Grouping::default())
}

pub fn aggregate_multinomial_with(
    q_star: &QTable,
    epsilon: f64,
    k: f64,
    delta_floor: f64,
    grouping: Grouping,
) -> Abstraction {
    let rows: Vec<(Vec<f64>, f64)> = (0..q_star.num_states()).map(|s| multinomial_row(q_star.state(s))).collect();
    let degenerate = |s: usize| !(rows[s].1.abs() >= delta_floor);
    let phi = pairwise_partition(q_star.num_states(), epsilon, grouping, |a, b| {
        if degenerate(a) || degenerate(b) {
            f64::INFINITY
        } else {
            row_pair_distance(&rows[a], &rows[b], k)
        }
    });
    let mut abs =
        Abstraction::from_partition(phi, Criterion::Multinomial, epsilon, k).expect("partition ids are contiguous");
    abs.degenerate = (0..q_star.num_states()).filter(|&s| degenerate(s)).collect();
    abs
}

/// Transition mass of `t` into each block of `phi`, sorted by block.
fn block_masses(t: &Transition, phi: &[usize]) -> Vec<(usize, f64)> {
    Transition::new(0.0, 0.0, t.successors.iter().map(|&(s, p)| (phi[s], p)).collect()).successors
}

fn sparse_within(a: &[(usize, f64)], b: &[(usize, f64)], epsilon: f64) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let diff = match (a.get(i), b.get(j)) {
            (Some(&(ka, va)), Some(&(kb, vb))) => {
                if ka == kb {
                    i += 1;
                    j += 1;
                    va - vb
                } else if ka < kb {
                    i += 1;
                    va
                } else {
                    j += 1;
                    vb
                }
            }
            (Some(&(_, va)), None) => {
                i += 1;
                va
            }
            (None, Some(&(_, vb))) => {
                j += 1;
                vb
            }
            (None, None) => unreachable!(),
        };
        if diff.abs() > epsilon {
            return false;
        }
    }
    true
}

/// Whether `s1` and `s2` satisfy the model-similarity conditions relative
/// to the partition `phi`.
pub fn model_compatible(game: &ExplicitGame, phi: &[usize], s1: usize, s2: usize, epsilon: f64) -> bool {
    game.state_rows(s1).iter().zip(game.state_rows(s2)).all(|(t1, t2)| {
        (t1.reward - t2.reward).abs() <= epsilon
            && sparse_within(&block_masses(t1, phi), &block_masses(t2, phi), epsilon)
    })
}

/// Model-similarity aggregation by partition refinement.
///
/// Starting from a single block, every block holding a violating pair is
/// split at its first violating pair `(u, v)`: members compatible with `u`
/// stay, the rest form a new block. Rounds repeat until no block changes,
/// so the result satisfies the criterion against itself.
pub fn aggregate_model(game: &ExplicitGame, epsilon: f64) -> Abstraction {
    let n = game.num_states();
    let profiles = game.num_profiles();
    let mut phi = vec![0usize; n];
    loop {
        let masses: Vec<Vec<(usize, f64)>> = game.rows().iter().map(|t| block_masses(t, &phi)).collect();
        let compatible = |u: usize, v: usize| {
            (0..profiles).all(|a| {
                let (t1, t2) = (&game.rows()[u * profiles + a], &game.rows()[v * profiles + a]);
                (t1.reward - t2.reward).abs() <= epsilon
                    && sparse_within(&masses[u * profiles + a], &masses[v * profiles + a], epsilon)
            })
        };
        let num_blocks = phi.iter().map(|&b| b + 1).max().unwrap_or(0);
        let mut blocks = vec![Vec::new(); num_blocks];
        for (s, &b) in phi.iter().enumerate() {
            blocks[b].push(s);
        }
        let mut next_id = num_blocks;
        let mut split = false;
        for members in &blocks {
            let violating = members
                .iter()
                .enumerate()
                .find_map(|(i, &u)| members[i + 1..].iter().find(|&&v| !compatible(u, v)).map(|_| u));
            if let Some(u) = violating {
                for &x in members {
                    if !compatible(u, x) {
                        phi[x] = next_id;
                    }
                }
                next_id += 1;
                split = true;
            }
        }
        phi = canonical_ids(&phi);
        if !split {
            break;
        }
    }
    Abstraction::from_partition(phi, Criterion::Model, epsilon, 0.0).expect("canonical ids are contiguous")
}

/// Renumbers blocks in order of their smallest member.
fn canonical_ids(phi: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    phi.iter()
        .map(|&b| {
            let next = map.len();
            *map.entry(b).or_insert(next)
        })
        .collect()
}

/// Abstract game together with the abstraction that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractGame {
    pub game: ExplicitGame,
    pub abstraction: Abstraction,
}

/// Weighted block averages of rewards and transitions:
/// `P_A(b'|b,a) = sum_{s in b} w(s) sum_{s' in b'} P(s'|s,a)` and
/// `R_A(b,a) = sum_{s in b} w(s) R(s,a)`; absorption mass aggregates the
/// same way.
pub fn build_abstract_game(game: &ExplicitGame, abstraction: &Abstraction) -> Result<AbstractGame> {
    if abstraction.num_ground() != game.num_states() {
        return Err(Error::Dimension(format!(
            "abstraction covers {} states, game has {}",
            abstraction.num_ground(),
            game.num_states()
        )));
    }
    abstraction.check_weights()?;
    let (n1, n2) = (game.actions_p1(), game.actions_p2());
    let phi = abstraction.phi();
    let weights = abstraction.weights();
    let mut rows = Vec::with_capacity(abstraction.num_abstract() * n1 * n2);
    for members in abstraction.blocks() {
        for a in 0..n1 * n2 {
            let mut reward = 0.0;
            let mut terminal = 0.0;
            let mut successors = Vec::new();
            for &s in &members {
                let w = weights[s];
                let t = &game.state_rows(s)[a];
                reward += w * t.reward;
                terminal += w * t.terminal;
                successors.extend(t.successors.iter().map(|&(s2, p)| (phi[s2], w * p)));
            }
            rows.push(Transition::new(reward, terminal, successors));
        }
    }
    let labels = (0..abstraction.num_abstract()).map(|b| format!("block{b}")).collect();
    let abstract_game = ExplicitGame::new(abstraction.num_abstract(), n1, n2, game.gamma(), game.reward_range(), rows)?
        .with_labels(labels)?;
    let report = validate_game(&abstract_game);
    if let Some(v) = report.first() {
        return Err(Error::Input(format!("abstract game is invalid: {v}")));
    }
    Ok(AbstractGame { game: abstract_game, abstraction: abstraction.clone() })
}

/// Ground profile playing, in each state, its block's abstract policy.
pub fn lift_policy(abstraction: &Abstraction, abstract_profile: &PolicyProfile) -> Result<PolicyProfile> {
    if abstract_profile.num_states() != abstraction.num_abstract() {
        return Err(Error::Dimension(format!(
            "profile has {} states, abstraction has {} blocks",
            abstract_profile.num_states(),
            abstraction.num_abstract()
        )));
    }
    let lift = |table: &PolicyTable| {
        let probs: Vec<f64> = abstraction.phi().iter().flat_map(|&b| table.row(b).iter().copied()).collect();
        PolicyTable::from_flat(table.actions(), probs)
    };
    Ok(PolicyProfile { pi1: lift(&abstract_profile.pi1)?, pi2: lift(&abstract_profile.pi2)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q_rows(rows: &[&[f64]], n1: usize, n2: usize) -> QTable {
        QTable::from_vec(rows.len(), n1, n2, rows.concat())
    }

    #[test]
    fn identical_rows_merge_at_zero() {
        let q = q_rows(&[&[0.1, 0.2], &[0.3, 0.4], &[0.1, 0.2]], 1, 2);
        let abs = aggregate_minimax_q(&q, 0.0);
        assert_eq!(abs.phi(), &[0, 1, 0]);
        assert_eq!(abs.weights(), &[0.5, 1.0, 0.5]);
    }

    #[test]
    fn greedy_membership_checks_every_member() {
        // 0 ~ 1 and 1 ~ 2 but 0 !~ 2 at eps = 0.15.
        let q = q_rows(&[&[0.0], &[0.1], &[0.2]], 1, 1);
        let abs = aggregate_minimax_q(&q, 0.15);
        assert_eq!(abs.phi(), &[0, 0, 1]);
    }

    #[test]
    fn first_fit_and_linkage_can_differ() {
        // First-fit puts 1 with 0; linkage pairs the closer 1 and 2.
        let q = q_rows(&[&[0.0], &[0.1], &[0.15]], 1, 1);
        assert_eq!(aggregate_minimax_q_with(&q, 0.12, Grouping::FirstFit).phi(), &[0, 0, 1]);
        assert_eq!(aggregate_minimax_q_with(&q, 0.12, Grouping::Linkage).phi(), &[0, 1, 1]);
    }

    #[test]
    fn zero_k_requires_equal_normalizers() {
        assert_eq!(scaled_distance(0.1, 0.0, 0.0), 0.1);
        assert_eq!(scaled_distance(0.1, 1e-3, 0.0), f64::INFINITY);
        assert!((scaled_distance(0.1, 0.6, 2.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn boltzmann_merges_identical_rows() {
        let q = q_rows(&[&[0.5, 0.1], &[0.9, -0.3], &[0.5, 0.1]], 1, 2);
        assert_eq!(aggregate_boltzmann(&q, 0.0, 3.0).phi(), &[0, 1, 0]);
    }

    #[test]
    fn multinomial_isolates_zero_sum_rows() {
        let q = q_rows(&[&[0.3, 0.3], &[0.5, -0.5], &[0.3, 0.3], &[0.5, -0.5]], 1, 2);
        let abs = aggregate_multinomial(&q, 0.0, 1.0, 1e-9);
        assert_eq!(abs.phi(), &[0, 1, 0, 2]);
        assert_eq!(abs.degenerate, vec![1, 3]);
    }

    #[test]
    fn criterion_names_round_trip() {
        for c in [Criterion::MinimaxQ, Criterion::Model, Criterion::Boltzmann, Criterion::Multinomial] {
            assert_eq!(c.name().parse::<Criterion>().unwrap(), c);
        }
        assert!("bisim".parse::<Criterion>().is_err());
    }

    #[test]
    fn bad_weights_are_rejected() {
        let abs = Abstraction::from_partition(vec![0, 0, 1], Criterion::Custom, 0.0, 0.0).unwrap();
        assert!(abs.clone().with_weights(vec![0.3, 0.7, 1.0]).is_ok());
        assert!(abs.clone().with_weights(vec![0.3, 0.6, 1.0]).is_err());
        assert!(abs.with_weights(vec![0.5, 0.5]).is_err());
        assert!(Abstraction::from_partition(vec![0, 2], Criterion::Custom, 0.0, 0.0).is_err());
    }

    #[test]
    fn sparse_comparison_counts_one_sided_entries() {
        assert!(sparse_within(&[(0, 0.5), (2, 0.5)], &[(0, 0.5), (2, 0.5)], 0.0));
        assert!(!sparse_within(&[(0, 0.5), (2, 0.5)], &[(0, 0.5), (1, 0.5)], 0.4));
        assert!(sparse_within(&[(0, 0.5), (2, 0.5)], &[(0, 0.5), (1, 0.5)], 0.5));
        assert!(!sparse_within(&[], &[(3, 0.2)], 0.1));
    }

    #[test]
    fn push_forward_merges_block_mass() {
        let abs = Abstraction::from_partition(vec![0, 1, 0], Criterion::Custom, 0.0, 0.0).unwrap();
        assert_eq!(abs.push_forward(&[(0, 0.25), (2, 0.5), (1, 0.25)]), vec![(0, 0.75), (1, 0.25)]);
    }
}
