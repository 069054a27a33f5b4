//! Best responses, duality gaps and the closed-form gap bounds of the four
//! aggregation criteria.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abstraction::Criterion;
use crate::error::{Error, Result};
use crate::game::{check_policy, ExplicitGame, Player, PolicyProfile, PolicyTable, Transition, VTable};
use crate::solve::evaluate_policy;

/// Single-agent decision problem faced by `responder` when the opponent's
/// policy is fixed.
#[derive(Debug, Clone)]
pub struct InducedMdp {
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    /// Row `s * num_actions + b`; rewards stay in player-1 units.
    pub rows: Vec<Transition>,
    pub responder: Player,
}

impl InducedMdp {
    pub fn new(game: &ExplicitGame, opponent: &PolicyTable, responder: Player) -> Result<Self> {
        check_policy(game, opponent, responder.other())?;
        let n = game.num_states();
        let nb = game.actions(responder);
        let mut rows = Vec::with_capacity(n * nb);
        for s in 0..n {
            let opp = opponent.row(s);
            for b in 0..nb {
                let mut reward = 0.0;
                let mut terminal = 0.0;
                let mut successors = Vec::new();
                for (o, &w) in opp.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let t = match responder {
                        Player::One => game.transition(s, b, o),
                        Player::Two => game.transition(s, o, b),
                    };
                    reward += w * t.reward;
                    terminal += w * t.terminal;
                    successors.extend(t.successors.iter().map(|&(s2, p)| (s2, w * p)));
                }
                rows.push(Transition::new(reward, terminal, successors));
            }
        }
        Ok(InducedMdp { num_states: n, num_actions: nb, gamma: game.gamma(), rows, responder })
    }

    fn better(&self, a: f64, b: f64) -> bool {
        match self.responder {
            Player::One => a > b,
            Player::Two => a < b,
        }
    }

    fn backup(&self, s: usize, v: &[f64]) -> (usize, f64) {
        let row = &self.rows[s * self.num_actions..(s + 1) * self.num_actions];
        let mut best = (0, row[0].reward + self.gamma * row[0].expect(v));
        for (b, t) in row.iter().enumerate().skip(1) {
            let q = t.reward + self.gamma * t.expect(v);
            if self.better(q, best.1) {
                best = (b, q);
            }
        }
        best
    }

    /// Value iteration to within `tol` of the optimal value.
    pub fn solve(&self, tol: f64) -> Result<(VTable, Vec<usize>)> {
        if !(tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
        }
        let n = self.num_states;
        let gamma = self.gamma;
        let threshold = if gamma > 0.0 { tol * (1.0 - gamma) / gamma } else { f64::INFINITY };
        let mut v = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut delta = f64::INFINITY;
        let mut sweeps = 0usize;
        while delta >= threshold {
            if sweeps > 50_000_000 / n.max(1) + 100_000 {
                return Err(Error::NoConvergence { iterations: sweeps, residual: delta });
            }
            delta = 0.0;
            for s in 0..n {
                next[s] = self.backup(s, &v).1;
                delta = delta.max((next[s] - v[s]).abs());
            }
            std::mem::swap(&mut v, &mut next);
            sweeps += 1;
            if delta == 0.0 {
                break;
            }
        }
        let policy = (0..n).map(|s| self.backup(s, &v).0).collect();
        Ok((VTable::from_vec(v), policy))
    }
}

/// Optimal value and a greedy deterministic policy of `responder` against
/// `opponent`. Player 2 minimizes player 1's payoff.
pub fn best_response(
    game: &ExplicitGame,
    opponent: &PolicyTable,
    responder: Player,
    tol: f64,
) -> Result<(VTable, PolicyTable)> {
    let mdp = InducedMdp::new(game, opponent, responder)?;
    let (v, choice) = mdp.solve(tol)?;
    Ok((v, PolicyTable::deterministic(mdp.num_actions, &choice)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// `max_s (v_br1(s) - v_br2(s))`, clamped to zero within `2 * tol`.
    pub gap: f64,
    pub raw_gap: f64,
    pub argmax_state: usize,
    /// Player 1's best-response value against `pi2`.
    pub v_br1: VTable,
    /// Value when player 2 best-responds to `pi1`.
    pub v_br2: VTable,
    pub bound: Option<f64>,
    pub bound_formula: Option<Criterion>,
}

impl GapReport {
    pub fn with_bound(mut self, criterion: Criterion, bound: f64) -> Self {
        self.bound = Some(bound);
        self.bound_formula = Some(criterion);
        self
    }

    /// Gap restricted to a subset of states, e.g. an initial distribution's
    /// support.
    pub fn gap_over(&self, states: &[usize]) -> (f64, usize) {
        max_difference(&self.v_br1, &self.v_br2, states.iter().copied())
    }
}

fn max_difference(hi: &VTable, lo: &VTable, states: impl Iterator<Item = usize>) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for s in states {
        let d = hi[s] - lo[s];
        if d > best.0 {
            best = (d, s);
        }
    }
    best
}

/// Exact duality gap of `profile`, maximized over all states.
pub fn duality_gap(game: &ExplicitGame, profile: &PolicyProfile, tol: f64) -> Result<GapReport> {
    profile.check(game)?;
    let (v_br1, _) = best_response(game, &profile.pi2, Player::One, tol)?;
    let (v_br2, _) = best_response(game, &profile.pi1, Player::Two, tol)?;
    let (raw_gap, argmax_state) = max_difference(&v_br1, &v_br2, 0..game.num_states());
    debug_assert!(raw_gap >= -2.0 * tol - 1e-12, "negative duality gap {raw_gap}");
    let gap = if raw_gap.abs() <= 2.0 * tol { 0.0 } else { raw_gap.max(0.0) };
    Ok(GapReport { gap, raw_gap, argmax_state, v_br1, v_br2, bound: None, bound_formula: None })
}

/// The two one-sided terms `max_s (V^{BR1,pi2} - V^pi)` and
/// `max_s (V^pi - V^{pi1,BR2})` whose sum bounds the gap.
pub fn gap_decomposition(
    game: &ExplicitGame,
    profile: &PolicyProfile,
    report: &GapReport,
    tol: f64,
) -> Result<(f64, f64)> {
    let (v, _) = evaluate_policy(game, profile, tol)?;
    let states = 0..game.num_states();
    let up = max_difference(&report.v_br1, &v, states.clone()).0;
    let down = max_difference(&v, &report.v_br2, states).0;
    Ok((up, down))
}

/// Closed-form upper bound on the gap of a lifted abstract equilibrium.
///
/// `sizes` is `(|S|, |A1|, |A2|)` of the ground game; `delta` is the lower
/// bound on `|sum_b Q*(s,b)|` required by the multinomial bound.
pub fn theorem_bound(
    criterion: Criterion,
    epsilon: f64,
    k: f64,
    gamma: f64,
    sizes: (usize, usize, usize),
    delta: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Config(format!("gamma {gamma} not in [0, 1)")));
    }
    if !(epsilon >= 0.0) || !(k >= 0.0) {
        return Err(Error::Config("epsilon and k must be non-negative".into()));
    }
    let h = 1.0 - gamma;
    let (s, a1, a2) = sizes;
    let joint = (a1 * a2) as f64;
    match criterion {
        Criterion::MinimaxQ => Ok(12.0 * epsilon / h.powi(3)),
        Criterion::Model => Ok(4.0 * (1.0 + gamma * (s as f64 - 1.0)) * epsilon / h.powi(3)),
        Criterion::Boltzmann => {
            let lead = 12.0 * (2.0 / h).exp();
            Ok(lead * (joint + k * (1.0 / h).exp() / joint) * epsilon / h.powi(3))
        }
        Criterion::Multinomial => {
            if !(delta > 0.0) {
                return Err(Error::Config(format!("multinomial bound needs delta > 0, got {delta}")));
            }
            Ok(12.0 * (joint + k / delta) * epsilon / h.powi(4))
        }
        Criterion::Custom => Err(Error::Config("no bound for a custom partition".into())),
    }
}

/// Best-response value estimated by tabular Q-learning from sampled
/// transitions rather than by dynamic programming.
///
/// Every step draws a state uniformly, a responder action uniformly and an
/// opponent action from its policy; step sizes are `1 / n(s,b)^0.6`.
pub fn learned_best_response(
    game: &ExplicitGame,
    opponent: &PolicyTable,
    responder: Player,
    iters: u64,
    seed: u64,
) -> Result<VTable> {
    check_policy(game, opponent, responder.other())?;
    let n = game.num_states();
    let nb = game.actions(responder);
    let gamma = game.gamma();
    let sign = match responder {
        Player::One => 1.0,
        Player::Two => -1.0,
    };
    // Values are stored from the responder's point of view.
    let mut q = vec![0.0; n * nb];
    let mut visits = vec![0u64; n * nb];
    let mut v = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..iters {
        let s = rng.gen_range(0..n);
        let b = rng.gen_range(0..nb);
        let o = sample_row(opponent.row(s), &mut rng);
        let t = match responder {
            Player::One => game.transition(s, b, o),
            Player::Two => game.transition(s, o, b),
        };
        let u: f64 = rng.gen();
        let continuation = if u < t.terminal {
            0.0
        } else {
            let mut acc = t.terminal;
            let mut next = t.successors.last().map_or(0, |x| x.0);
            for &(s2, p) in &t.successors {
                acc += p;
                if u < acc {
                    next = s2;
                    break;
                }
            }
            v[next]
        };
        let idx = s * nb + b;
        visits[idx] += 1;
        let alpha = (visits[idx] as f64).powf(-0.6);
        q[idx] += alpha * (sign * t.reward + gamma * continuation - q[idx]);
        v[s] = q[s * nb..(s + 1) * nb].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    Ok(VTable::from_vec(v.into_iter().map(|x| sign * x).collect()))
}

/// Duality gap with both best responses replaced by their Q-learning
/// estimates.
pub fn learned_duality_gap(game: &ExplicitGame, profile: &PolicyProfile, iters: u64, seed: u64) -> Result<GapReport> {
    profile.check(game)?;
    let v_br1 = learned_best_response(game, &profile.pi2, Player::One, iters, seed)?;
    let v_br2 = learned_best_response(game, &profile.pi1, Player::Two, iters, seed.wrapping_add(1))?;
    let (raw_gap, argmax_state) = max_difference(&v_br1, &v_br2, 0..game.num_states());
    Ok(GapReport { gap: raw_gap.max(0.0), raw_gap, argmax_state, v_br1, v_br2, bound: None, bound_formula: None })
}

fn sample_row<R: Rng>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (a, &w) in p.iter().enumerate() {
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
