//! Exact solutions of finite two-player zero-sum matrix games.
//!
//! The row player maximizes. After shifting every payoff to be at least one,
//! the column player's program `max 1'y  s.t.  M y <= 1, y >= 0` is solved
//! with a dense tableau simplex using Bland's rule. The optimal `y` scaled by
//! the game value gives the column strategy and the slack reduced costs give
//! the row strategy. Every answer is certified against both players' best
//! responses; when rounding leaves a visible certificate gap (nearly repeated
//! rows or columns) square kernels are enumerated as a fallback.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Smallest admissible pivot element; shifted payoffs are at least one.
const PIVOT_EPS: f64 = 1e-9;
/// Reduced costs above `-COST_EPS` count as optimal.
const COST_EPS: f64 = 1e-12;
/// Ratios closer than this are ties for Bland's rule.
const RATIO_EPS: f64 = 1e-12;
/// Certificate gap, relative to the payoff span, accepted without a
/// kernel search.
const CERTIFY_EPS: f64 = 1e-11;
/// Bland's rule cannot cycle, so this only guards against rounding.
const MAX_PIVOTS: usize = 10_000;

/// Payoff matrix of a zero-sum game, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    rows: usize,
    cols: usize,
    payoff: Vec<f64>,
}

impl MatrixGame {
    pub fn new(rows: usize, cols: usize, payoff: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Input("matrix game needs at least one row and one column".into()));
        }
        if payoff.len() != rows * cols {
            return Err(Error::Dimension(format!("{} payoffs for a {rows}x{cols} game", payoff.len())));
        }
        if let Some(pos) = payoff.iter().position(|x| !x.is_finite()) {
            return Err(Error::Input(format!("non-finite payoff at ({}, {})", pos / cols, pos % cols)));
        }
        Ok(MatrixGame { rows, cols, payoff })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("ragged payoff matrix".into()));
        }
        MatrixGame::new(m, n, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn payoff(&self) -> &[f64] {
        &self.payoff
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.payoff[i * self.cols + j]
    }

    /// Worst column payoff the row strategy `p` can guarantee.
    pub fn guaranteed_by_row(&self, p: &[f64]) -> f64 {
        (0..self.cols).map(|j| (0..self.rows).map(|i| p[i] * self.at(i, j)).sum::<f64>()).fold(f64::INFINITY, f64::min)
    }

    /// Largest row payoff the column player concedes with strategy `q`.
    pub fn conceded_by_col(&self, q: &[f64]) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| q[j] * self.at(i, j)).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGameSolution {
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
}

/// Solves `game` for its value and a pair of optimal mixed strategies.
pub fn solve_matrix_game(game: &MatrixGame) -> MatrixGameSolution {
    let (m, n) = (game.rows, game.cols);
    let payoff = &game.payoff;
    let lo = payoff.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = payoff.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    if lo == hi {
        return MatrixGameSolution {
            value: lo,
            row_strategy: vec![1.0 / m as f64; m],
            col_strategy: vec![1.0 / n as f64; n],
        };
    }
    if m == 1 {
        let j = argbest(payoff, |a, b| a < b);
        return MatrixGameSolution { value: payoff[j], row_strategy: vec![1.0], col_strategy: unit(n, j) };
    }
    if n == 1 {
        let i = argbest(payoff, |a, b| a > b);
        return MatrixGameSolution { value: payoff[i], row_strategy: unit(m, i), col_strategy: vec![1.0] };
    }

    let shift = 1.0 - lo;
    let mut tab = Tableau::new(game, shift);
    tab.run();
    let total = tab.objective();
    let scaled_value = 1.0 / total;

    let mut col = vec![0.0; n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            col[b] = tab.rhs(r) * scaled_value;
        }
    }
    let mut row: Vec<f64> = (0..m).map(|i| tab.reduced_cost(n + i) * scaled_value).collect();
    normalize(&mut col);
    normalize(&mut row);
    let simplex = MatrixGameSolution { value: scaled_value - shift, row_strategy: row, col_strategy: col };

    let tol = CERTIFY_EPS * (1.0 + hi - lo);
    if certificate_gap(game, &simplex) <= tol {
        return simplex;
    }
    // Nearly repeated rows or columns can leave the tableau ill-conditioned.
    match kernel_search(game, shift, tol) {
        Some(kernel) if certificate_gap(game, &kernel) < certificate_gap(game, &simplex) => kernel,
        _ => simplex,
    }
}

/// How far a strategy pair is from certifying its own optimality.
fn certificate_gap(game: &MatrixGame, sol: &MatrixGameSolution) -> f64 {
    game.conceded_by_col(&sol.col_strategy) - game.guaranteed_by_row(&sol.row_strategy)
}

/// Enumerates square submatrices of the shifted game and keeps the
/// candidate equilibrium with the smallest certificate gap. Every extreme
/// optimal pair arises from such a kernel, so the search is complete.
fn kernel_search(game: &MatrixGame, shift: f64, tol: f64) -> Option<MatrixGameSolution> {
    let (m, n) = (game.rows, game.cols);
    let mut best: Option<(f64, MatrixGameSolution)> = None;
    for k in 1..=m.min(n) {
        for rows in subsets(m, k) {
            for cols in subsets(n, k) {
                let b = DMatrix::from_fn(k, k, |r, c| game.at(rows[r], cols[c]) + shift);
                let lu = b.clone().lu();
                let ones = DVector::from_element(k, 1.0);
                let (Some(y), Some(x)) = (lu.solve(&ones), b.transpose().lu().solve(&ones)) else {
                    continue;
                };
                let total = y.sum();
                if !(total > 0.0) || y.iter().chain(x.iter()).any(|&v| v < -PIVOT_EPS) {
                    continue;
                }
                let mut col = vec![0.0; n];
                for (c, &j) in cols.iter().enumerate() {
                    col[j] = y[c];
                }
                let mut row = vec![0.0; m];
                for (r, &i) in rows.iter().enumerate() {
                    row[i] = x[r];
                }
                normalize(&mut col);
                normalize(&mut row);
                let mut cand = MatrixGameSolution { value: 1.0 / total - shift, row_strategy: row, col_strategy: col };
                let floor = game.guaranteed_by_row(&cand.row_strategy);
                let ceil = game.conceded_by_col(&cand.col_strategy);
                cand.value = cand.value.clamp(floor.min(ceil), ceil.max(floor));
                let gap = ceil - floor;
                if best.as_ref().is_none_or(|(g, _)| gap < *g) {
                    let done = gap <= tol;
                    best = Some((gap, cand));
                    if done {
                        return best.map(|(_, s)| s);
                    }
                }
            }
        }
    }
    best.map(|(_, s)| s)
}

/// All `k`-element subsets of `0..n` in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Value of the matrix game only.
pub fn matrix_game_value(game: &MatrixGame) -> f64 {
    solve_matrix_game(game).value
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; each row has
    /// `n + m` variable columns then the right-hand side.
    cells: Vec<f64>,
    width: usize,
    m: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(game: &MatrixGame, shift: f64) -> Self {
        let (m, n) = (game.rows, game.cols);
        let width = n + m + 1;
        let mut cells = vec![0.0; (m + 1) * width];
        for i in 0..m {
            let row = &mut cells[i * width..(i + 1) * width];
            for j in 0..n {
                row[j] = game.at(i, j) + shift;
            }
            row[n + i] = 1.0;
            row[n + m] = 1.0;
        }
        for j in 0..n {
            cells[m * width + j] = -1.0;
        }
        Tableau { cells, width, m, basis: (n..n + m).collect() }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn objective(&self) -> f64 {
        self.rhs(self.m)
    }

    fn reduced_cost(&self, c: usize) -> f64 {
        self.at(self.m, c)
    }

    fn run(&mut self) {
        let vars = self.width - 1;
        // Bland's rule: lowest-index improving column, lowest-index basic
        // variable among tied ratios.
        for _ in 0..MAX_PIVOTS {
            let Some(enter) = (0..vars).find(|&c| self.reduced_cost(c) < -COST_EPS) else {
                return;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.at(r, enter);
                if a <= PIVOT_EPS {
                    continue;
                }
                // Rounding can push a degenerate right-hand side just below zero.
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((best, best_ratio)) => {
                        if ratio < best_ratio - RATIO_EPS
                            || (ratio <= best_ratio + RATIO_EPS && self.basis[r] < self.basis[best])
                        {
                            Some((r, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
            // Shifted payoffs are positive, so a column without a leaving row
            // only appears through rounding; stop and let the caller certify.
            let Some((pivot_row, _)) = leave else {
                return;
            };

            self.pivot(pivot_row, enter);
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        for c in 0..w {
            self.cells[pr * w + c] *= inv;
        }
        self.cells[pr * w + pc] = 1.0;
        for r in 0..=self.m {
            if r == pr {
                continue;
            }
            let factor = self.at(r, pc);
            if factor == 0.0 {
                continue;
            }
            for c in 0..w {
                let delta = factor * self.cells[pr * w + c];
                self.cells[r * w + c] -= delta;
            }
            self.cells[r * w + pc] = 0.0;
        }
        self.basis[pr] = pc;
    }
}

fn argbest(xs: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if better(x, xs[best]) {
            best = i;
        }
    }
    best
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

fn normalize(p: &mut [f64]) {
    for x in p.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let sum: f64 = p.iter().sum();
    for x in p.iter_mut() {
        *x /= sum;
    }
}
