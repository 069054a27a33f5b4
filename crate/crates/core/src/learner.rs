//! Tabular Minimax Q-learning.
//!
//! Each iteration mixes both policies with uniform exploration, samples an
//! action profile and a successor, applies a discounted TD update to the
//! visited entry, re-solves the visited state's matrix game and refreshes its
//! value with the new policies. Terminal transitions restart the episode from
//! the initial distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{bilinear, ExplicitGame, PolicyProfile, QTable, VTable};
use crate::lp::solve_matrix_game;
use crate::solve::stage_game;

/// Step-size schedule `t -> alpha_t` for a run of `total` iterations.
#[derive(Debug, Clone, Copy)]
pub enum LearningRate {
    /// `alpha_t = 10^(-2t/T)`, decaying from 1 to 0.01.
    Exponential,
    Constant(f64),
    Custom(fn(u64, u64) -> f64),
}

impl LearningRate {
    pub fn at(&self, t: u64, total: u64) -> f64 {
        match *self {
            LearningRate::Exponential => 10f64.powf(-2.0 * t as f64 / total as f64),
            LearningRate::Constant(alpha) => alpha,
            LearningRate::Custom(f) => f(t, total),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub total_iters: u64,
    pub gamma: f64,
    /// Probability of replacing the policy by a uniform draw.
    pub beta: f64,
    pub lr: LearningRate,
    pub checkpoint_every: u64,
    pub seed: u64,
}

impl LearnerConfig {
    /// Defaults: `beta = 0.2`, exponential step sizes, 50 checkpoints.
    pub fn new(total_iters: u64, gamma: f64) -> Self {
        LearnerConfig {
            total_iters,
            gamma,
            beta: 0.2,
            lr: LearningRate::Exponential,
            checkpoint_every: (total_iters / 50).max(1),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_lr(mut self, lr: LearningRate) -> Self {
        self.lr = lr;
        self
    }

    pub fn with_checkpoint_every(mut self, every: u64) -> Self {
        self.checkpoint_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_iters < 1 {
            return Err(Error::Config("total_iters must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta {} not in [0, 1]", self.beta)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} not in [0, 1)", self.gamma)));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::Config("checkpoint_every must be positive".into()));
        }
        // Spot-check the schedule, including both ends.
        let samples = [0, self.total_iters / 2, self.total_iters - 1];
        for t in samples {
            let alpha = self.lr.at(t, self.total_iters);
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::Config(format!("learning rate {alpha} at t={t} not in (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Mutable learner tables.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub q: QTable,
    pub v: VTable,
    pub profile: PolicyProfile,
    pub iter: u64,
    pub current_state: usize,
    pub visits: Vec<u64>,
}

impl LearnerState {
    /// Zero tables, uniform policies and a start state drawn from `initial`.
    pub fn new<R: Rng>(game: &ExplicitGame, initial: &[(usize, f64)], rng: &mut R) -> Self {
        let (n, n1, n2) = (game.num_states(), game.actions_p1(), game.actions_p2());
        LearnerState {
            q: QTable::zeros(n, n1, n2),
            v: VTable::zeros(n),
            profile: PolicyProfile::uniform(n, n1, n2),
            iter: 0,
            current_state: sample_sparse(initial, rng),
            visits: vec![0; n],
        }
    }
}

/// What happened during one learner iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub state: usize,
    pub a1: usize,
    pub a2: usize,
    pub terminal: bool,
    pub next_state: usize,
    pub alpha: f64,
}

/// Performs one Minimax Q-learning iteration in place.
pub fn minimax_q_step<R: Rng>(
    game: &ExplicitGame,
    initial: &[(usize, f64)],
    state: &mut LearnerState,
    config: &LearnerConfig,
    rng: &mut R,
) -> StepRecord {
    let s = state.current_state;
    let (n1, n2) = (game.actions_p1(), game.actions_p2());
    let beta = config.beta;

    let a1 = sample_mixed(state.profile.pi1.row(s), beta, rng);
    let a2 = sample_mixed(state.profile.pi2.row(s), beta, rng);

    let t = game.transition(s, a1, a2);
    let u: f64 = rng.gen();
    let next = if u < t.terminal {
        None
    } else {
        Some(sample_successor(&t.successors, u - t.terminal, t.total_mass() - t.terminal))
    };

    let alpha = config.lr.at(state.iter, config.total_iters);
    let continuation = next.map_or(0.0, |s2| state.v[s2]);
    let target = t.reward + config.gamma * continuation;
    let old = state.q.get(s, a1, a2);
    state.q.set(s, a1, a2, (1.0 - alpha) * old + alpha * target);
    debug_assert!({
        let (lo, hi) = game.value_bounds();
        let q = state.q.get(s, a1, a2);
        q >= lo - 1e-9 && q <= hi + 1e-9
    });

    let sol = solve_matrix_game(&stage_game(n1, n2, state.q.state(s)));
    state.profile.pi1.row_mut(s).copy_from_slice(&sol.row_strategy);
    state.profile.pi2.row_mut(s).copy_from_slice(&sol.col_strategy);
    state.v[s] = bilinear(state.q.state(s), state.profile.pi1.row(s), state.profile.pi2.row(s));

    state.visits[s] += 1;
    state.iter += 1;
    let next_state = match next {
        Some(s2) => s2,
        None => sample_sparse(initial, rng),
    };
    state.current_state = next_state;
    StepRecord { state: s, a1, a2, terminal: next.is_none(), next_state, alpha }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub iter: u64,
    pub profile: PolicyProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub checkpoints: Vec<Checkpoint>,
    pub final_state: LearnerState,
}

/// Runs `config.total_iters` iterations from scratch.
///
/// Checkpoints are taken at iteration 0, every `checkpoint_every`
/// iterations and at the end. Output is a pure function of the inputs.
pub fn train(game: &ExplicitGame, initial: &[(usize, f64)], config: &LearnerConfig) -> Result<TrainOutput> {
    config.validate()?;
    check_initial(game, initial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = LearnerState::new(game, initial, &mut rng);
    let mut checkpoints = vec![Checkpoint { iter: 0, profile: state.profile.clone() }];
    while state.iter < config.total_iters {
        minimax_q_step(game, initial, &mut state, config, &mut rng);
        if state.iter.is_multiple_of(config.checkpoint_every) || state.iter == config.total_iters {
            checkpoints.push(Checkpoint { iter: state.iter, profile: state.profile.clone() });
        }
    }
    Ok(TrainOutput { checkpoints, final_state: state })
}

pub(crate) fn check_initial(game: &ExplicitGame, initial: &[(usize, f64)]) -> Result<()> {
    if initial.is_empty() {
        return Err(Error::Config("initial distribution is empty".into()));
    }
    if initial.iter().any(|&(s, p)| s >= game.num_states() || !(p >= 0.0)) {
        return Err(Error::Config("initial distribution outside the state space".into()));
    }
    let total: f64 = initial.iter().map(|&(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!("initial distribution sums to {total}")));
    }
    Ok(())
}

fn sample_mixed<R: Rng>(policy: &[f64], beta: f64, rng: &mut R) -> usize {
    let uniform = beta / policy.len() as f64;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (a, &p) in policy.iter().enumerate() {
        let w = (1.0 - beta) * p + uniform;
        if w > 0.0 {
            last = a;
        }
        acc += w;
        if u < acc {
            return a;
        }
    }
    last
}

fn sample_successor(successors: &[(usize, f64)], u: f64, total: f64) -> usize {
    // `u` is uniform on [0, total) up to rounding.
    let mut acc = 0.0;
    for &(s, p) in successors {
        acc += p;
        if u < acc {
            return s;
        }
    }
    debug_assert!(u <= total + 1e-9);
    successors.last().expect("non-terminal mass needs a successor").0
}

pub(crate) fn sample_sparse<R: Rng>(dist: &[(usize, f64)], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    sample_successor(dist, u, 1.0)
}
