//! Tabular two-player zero-sum Markov games.
//!
//! * [`game`]: the explicit game model, policy and value tables;
//! * [`lp`]: exact matrix-game solver;
//! * [`solve`]: policy evaluation and Shapley value iteration;
//! * [`soccer`]: the 4x5 Markov Soccer game;
//! * [`learner`]: Minimax Q-learning;
//! * [`abstraction`]: state aggregation, abstract games and policy lifting;
//! * [`evaluation`]: best responses, duality gaps and gap bounds;
//! * [`format`]: text persistence.

pub mod abstraction;
pub mod error;
pub mod evaluation;
pub mod format;
pub mod game;
pub mod learner;
pub mod lp;
pub mod soccer;
pub mod solve;

pub use abstraction::{
    aggregate_boltzmann, aggregate_boltzmann_with, aggregate_minimax_q, aggregate_minimax_q_with, aggregate_model,
    aggregate_multinomial, aggregate_multinomial_with, build_abstract_game, lift_policy, AbstractGame, Abstraction,
    Criterion, Grouping,
};
pub use error::{Error, Result};
pub use evaluation::{best_response, duality_gap, theorem_bound, GapReport};
pub use game::{validate_game, ExplicitGame, Player, PolicyProfile, PolicyTable, QTable, Transition, VTable};
pub use learner::{minimax_q_step, train, LearnerConfig, LearnerState, LearningRate};
pub use lp::{solve_matrix_game, MatrixGame, MatrixGameSolution};
pub use solve::{evaluate_policy, shapley_solve, Equilibrium};
