//! Policy evaluation and exact equilibrium computation by Shapley value
//! iteration.

use crate::error::{Error, Result};
use crate::game::{bilinear, ExplicitGame, PolicyProfile, PolicyTable, QTable, VTable};
use crate::lp::{solve_matrix_game, MatrixGame};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Evaluates `profile` by iterating its Bellman operator until successive
/// iterates differ by less than `tol` in sup norm.
///
/// The returned `V` satisfies `|V(s) - sum_a pi(a|s) Q(s,a)| < tol` where
/// `Q = R + gamma P V` is the returned Q table.
pub fn evaluate_policy(game: &ExplicitGame, profile: &PolicyProfile, tol: f64) -> Result<(VTable, QTable)> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    profile.check(game)?;
    let n = game.num_states();
    // Collapse the profile into a Markov chain once.
    let mut reward = vec![0.0; n];
    let mut chain: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut dense = vec![0.0; n];
    for s in 0..n {
        let (p1, p2) = (profile.pi1.row(s), profile.pi2.row(s));
        let mut touched = Vec::new();
        for (a1, &w1) in p1.iter().enumerate() {
            for (a2, &w2) in p2.iter().enumerate() {
                let w = w1 * w2;
                if w == 0.0 {
                    continue;
                }
                let t = game.transition(s, a1, a2);
                reward[s] += w * t.reward;
                for &(next, p) in &t.successors {
                    if dense[next] == 0.0 {
                        touched.push(next);
                    }
                    dense[next] += w * p;
                }
            }
        }
        touched.sort_unstable();
        chain.push(touched.iter().map(|&t| (t, std::mem::replace(&mut dense[t], 0.0))).collect());
    }

    let gamma = game.gamma();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let max_iters = iteration_cap(gamma, tol);
    let mut converged = false;
    let mut last_delta = f64::INFINITY;
    for _ in 0..max_iters {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            let ev: f64 = chain[s].iter().map(|&(t, p)| p * v[t]).sum();
            next[s] = reward[s] + gamma * ev;
            delta = delta.max((next[s] - v[s]).abs());
        }
        std::mem::swap(&mut v, &mut next);
        last_delta = delta;
        // Stopping here bounds both the Bellman residual and the distance
        // to the fixed point by `tol`.
        if delta < tol * (1.0 - gamma).max(f64::EPSILON) / gamma.max(f64::EPSILON) || delta == 0.0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: max_iters, residual: last_delta });
    }
    let v = VTable::from_vec(v);
    let q = game.q_from_v(&v);
    Ok((v, q))
}

/// Generous iteration cap for a `gamma`-contraction reaching `tol`.
fn iteration_cap(gamma: f64, tol: f64) -> usize {
    if gamma <= 0.0 {
        return 2;
    }
    let needed = (tol * (1.0 - gamma) / 1e6).ln() / gamma.ln();
    (needed.ceil() as usize).saturating_mul(4).clamp(64, 50_000_000)
}

/// Output of [`shapley_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub v: VTable,
    pub q: QTable,
    pub profile: PolicyProfile,
    pub iterations: usize,
    /// Sup-norm change of every value-iteration sweep, in order.
    pub residuals: Vec<f64>,
}

/// Value iteration stopped at `max_iters` before reaching the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct NotConverged {
    pub last: Equilibrium,
    pub residual: f64,
}

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Shapley iteration stopped after {} sweeps with residual {:e}", self.last.iterations, self.residual)
    }
}

impl std::error::Error for NotConverged {}

/// Computes the minimax values `V*`, `Q*` and an equilibrium profile.
///
/// Iterates `V(s) <- val[R(s,.) + gamma P(.|s,.) V]` until the sup-norm change
/// drops below `tol`, then reads off maximin/minimax strategies of the final
/// one-step matrices.
pub fn shapley_solve(
    game: &ExplicitGame,
    tol: f64,
    max_iters: usize,
) -> std::result::Result<Equilibrium, Box<NotConverged>> {
    let n = game.num_states();
    let (n1, n2) = (game.actions_p1(), game.actions_p2());
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut block = Vec::with_capacity(n1 * n2);
    let mut residuals = Vec::new();
    let mut converged = false;

    for _ in 0..max_iters {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            game.lookahead(s, &v, &mut block);
            next[s] = stage_value(n1, n2, &block);
            delta = delta.max((next[s] - v[s]).abs());
        }
        std::mem::swap(&mut v, &mut next);
        residuals.push(delta);
        if delta < tol {
            converged = true;
            break;
        }
    }

    let v = VTable::from_vec(v);
    let q = game.q_from_v(&v);
    let mut pi1 = PolicyTable::uniform(n, n1);
    let mut pi2 = PolicyTable::uniform(n, n2);
    for s in 0..n {
        let sol = solve_matrix_game(&stage_game(n1, n2, q.state(s)));
        pi1.row_mut(s).copy_from_slice(&sol.row_strategy);
        pi2.row_mut(s).copy_from_slice(&sol.col_strategy);
    }
    let residual = residuals.last().copied().unwrap_or(f64::INFINITY);
    let eq = Equilibrium { v, q, profile: PolicyProfile { pi1, pi2 }, iterations: residuals.len(), residuals };
    if converged {
        Ok(eq)
    } else {
        Err(Box::new(NotConverged { last: eq, residual }))
    }
}

pub(crate) fn stage_game(n1: usize, n2: usize, block: &[f64]) -> MatrixGame {
    MatrixGame::new(n1, n2, block.to_vec()).expect("finite stage payoffs")
}

pub(crate) fn stage_value(n1: usize, n2: usize, block: &[f64]) -> f64 {
    solve_matrix_game(&stage_game(n1, n2, block)).value
}

/// Largest violation of `V(s) = sum_a pi(a|s) Q(s,a)` over states.
pub fn consistency_residual(v: &VTable, q: &QTable, profile: &PolicyProfile) -> f64 {
    (0..v.len())
        .map(|s| (v[s] - bilinear(q.state(s), profile.pi1.row(s), profile.pi2.row(s))).abs())
        .fold(0.0, f64::max)
}
