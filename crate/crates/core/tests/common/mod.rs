#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tzmg_core::{ExplicitGame, PolicyProfile, PolicyTable, Transition};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random distribution over `n` outcomes, with some exact zeros.
pub fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen::<f64>() }).collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..n)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Random game with rewards in [-1, 1] and some terminal mass.
pub fn random_game<R: Rng>(rng: &mut R, n: usize, n1: usize, n2: usize, gamma: f64) -> ExplicitGame {
    let mut rows = Vec::with_capacity(n * n1 * n2);
    for _ in 0..n * n1 * n2 {
        let reward = rng.gen_range(-1.0..=1.0);
        let terminal = if rng.gen_bool(0.3) { rng.gen_range(0.0..0.5) } else { 0.0 };
        let dist = random_simplex(rng, n);
        let successors = dist.iter().enumerate().map(|(s, p)| (s, p * (1.0 - terminal))).collect();
        rows.push(Transition::new(reward, terminal, successors));
    }
    ExplicitGame::new(n, n1, n2, gamma, (-1.0, 1.0), rows).unwrap()
}

pub fn random_policy<R: Rng>(rng: &mut R, n: usize, actions: usize) -> PolicyTable {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(rng, actions)).collect();
    PolicyTable::from_rows(actions, &rows).unwrap()
}

pub fn random_profile<R: Rng>(rng: &mut R, game: &ExplicitGame) -> PolicyProfile {
    PolicyProfile {
        pi1: random_policy(rng, game.num_states(), game.actions_p1()),
        pi2: random_policy(rng, game.num_states(), game.actions_p2()),
    }
}

/// Dense transition matrix (without terminal mass) and reward vector of the
/// Markov chain a profile induces.
pub fn induced_chain(game: &ExplicitGame, profile: &PolicyProfile) -> (DMatrix<f64>, DVector<f64>) {
    let n = game.num_states();
    let mut p = DMatrix::zeros(n, n);
    let mut r = DVector::zeros(n);
    for s in 0..n {
        for a1 in 0..game.actions_p1() {
            for a2 in 0..game.actions_p2() {
                let w = profile.pi1.row(s)[a1] * profile.pi2.row(s)[a2];
                let t = game.transition(s, a1, a2);
                r[s] += w * t.reward;
                for &(s2, q) in &t.successors {
                    p[(s, s2)] += w * q;
                }
            }
        }
    }
    (p, r)
}

/// `(I - gamma P)^{-1} r` by LU.
pub fn dense_policy_value(game: &ExplicitGame, profile: &PolicyProfile) -> Vec<f64> {
    let (p, r) = induced_chain(game, profile);
    let n = game.num_states();
    let a = DMatrix::identity(n, n) - p * game.gamma();
    a.lu().solve(&r).unwrap().iter().copied().collect()
}

/// Value of a matrix game by enumerating equal-size supports and keeping
/// every candidate that is a verified equilibrium. Rows maximize.
pub fn support_enumeration_value(m: &[Vec<f64>]) -> f64 {
    let rows = m.len();
    let cols = m[0].len();
    let mut found: Option<f64> = None;
    for k in 1..=rows.min(cols) {
        for ri in combinations(rows, k) {
            for ci in combinations(cols, k) {
                // Unknowns: p on ri and v; equations: column payoffs on ci equal v, sum p = 1.
                let Some((p, v)) = indifference(k, |a, b| m[ri[a]][ci[b]]) else { continue };
                let Some((q, w)) = indifference(k, |a, b| m[ri[b]][ci[a]]) else { continue };
                if (v - w).abs() > 1e-9 || p.iter().chain(&q).any(|&x| x < -1e-12) {
                    continue;
                }
                let mut full_p = vec![0.0; rows];
                for (a, &i) in ri.iter().enumerate() {
                    full_p[i] = p[a];
                }
                let mut full_q = vec![0.0; cols];
                for (b, &j) in ci.iter().enumerate() {
                    full_q[j] = q[b];
                }
                let floor = (0..cols)
                    .map(|j| (0..rows).map(|i| full_p[i] * m[i][j]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                let ceil = (0..rows)
                    .map(|i| (0..cols).map(|j| full_q[j] * m[i][j]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                if ceil - floor <= 1e-9 {
                    found = Some(v);
                    break;
                }
            }
            if let Some(v) = found {
                return v;
            }
        }
    }
    found.expect("every finite matrix game has an equilibrium on a square support")
}

/// Solves `sum_a x_a g(a, b) = v` for all `b` with `sum_a x_a = 1`.
fn indifference(k: usize, g: impl Fn(usize, usize) -> f64) -> Option<(Vec<f64>, f64)> {
    let mut a = DMatrix::zeros(k + 1, k + 1);
    let mut rhs = DVector::zeros(k + 1);
    for b in 0..k {
        for x in 0..k {
            a[(b, x)] = g(x, b);
        }
        a[(b, k)] = -1.0;
    }
    for x in 0..k {
        a[(k, x)] = 1.0;
    }
    rhs[k] = 1.0;
    let sol = a.lu().solve(&rhs)?;
    if sol.iter().any(|x| !x.is_finite()) {
        return None;
    }
    Some((sol.iter().take(k).copied().collect(), sol[k]))
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut with_last = combinations(n - 1, k - 1);
    for c in &mut with_last {
        c.push(n - 1);
    }
    let mut out = combinations(n - 1, k);
    out.extend(with_last);
    out.sort();
    out
}

/// Maximin value by scanning a grid over the row player's simplex
/// (`rows <= 3`); accurate to about the grid step.
pub fn grid_search_value(m: &[Vec<f64>], steps: usize) -> f64 {
    let rows = m.len();
    let cols = m[0].len();
    let guaranteed =
        |p: &[f64]| (0..cols).map(|j| (0..rows).map(|i| p[i] * m[i][j]).sum::<f64>()).fold(f64::INFINITY, f64::min);
    let h = 1.0 / steps as f64;
    let mut best = f64::NEG_INFINITY;
    match rows {
        1 => best = guaranteed(&[1.0]),
        2 => {
            for i in 0..=steps {
                let x = i as f64 * h;
                best = best.max(guaranteed(&[x, 1.0 - x]));
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let (x, y) = (i as f64 * h, j as f64 * h);
                    best = best.max(guaranteed(&[x, y, (1.0 - x - y).max(0.0)]));
                }
            }
        }
        _ => panic!("grid search supports at most three rows"),
    }
    best
}

/// Stage matrix `R(s,.) + gamma P(.|s,.) V` as nested rows.
pub fn stage_matrix(game: &ExplicitGame, s: usize, v: &[f64]) -> Vec<Vec<f64>> {
    (0..game.actions_p1())
        .map(|a1| {
            (0..game.actions_p2())
                .map(|a2| {
                    let t = game.transition(s, a1, a2);
                    t.reward + game.gamma() * t.successors.iter().map(|&(s2, p)| p * v[s2]).sum::<f64>()
                })
                .collect()
        })
        .collect()
}
