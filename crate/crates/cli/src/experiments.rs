//! Experiment drivers behind the subcommands.
//!
//! Every driver writes its artifacts under the configured output directory
//! and records invariant failures in a [`Checks`] instead of aborting, so a
//! run always leaves its files behind and the exit code reports the verdict.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tzmg_core::abstraction::{
    aggregate_boltzmann_with, aggregate_minimax_q_with, aggregate_multinomial_with, boltzmann_compatible,
    minimax_q_compatible, model_compatible, multinomial_compatible,
};
use tzmg_core::evaluation::learned_duality_gap;
use tzmg_core::format::{read_game, read_policy, write_abstraction, write_game, write_policy, PolicyFile};
use tzmg_core::{
    aggregate_model, build_abstract_game, duality_gap, lift_policy, shapley_solve, theorem_bound, train, Abstraction,
    Criterion, Equilibrium, ExplicitGame, GapReport, PolicyProfile, QTable,
};

use crate::config::{ExperimentConfig, GameSource, GapMode};
use crate::plot;

/// Invariant assertions collected over a run.
#[derive(Debug, Default)]
pub struct Checks {
    failures: Vec<String>,
}

impl Checks {
    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn failures(&self) -> &[String] {
        &self.failures
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// The ground game with its start distribution.
pub struct Ground {
    pub game: ExplicitGame,
    pub initial: Vec<(usize, f64)>,
}

impl Ground {
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        match &config.game {
            GameSource::Soccer => {
                let (game, initial) = config.soccer.build(config.gamma)?;
                Ok(Ground { game, initial })
            }
            GameSource::File(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let game = read_game(&text).with_context(|| format!("parsing {}", path.display()))?;
                let support: Vec<usize> = match &config.initial_states {
                    Some(states) => states.clone(),
                    None => (0..game.num_states()).collect(),
                };
                if support.is_empty() || support.iter().any(|&s| s >= game.num_states()) {
                    return Err(anyhow!("initial states outside 0..{}", game.num_states()));
                }
                let p = 1.0 / support.len() as f64;
                let initial = support.into_iter().map(|s| (s, p)).collect();
                Ok(Ground { game, initial })
            }
        }
    }

    pub fn start_states(&self) -> Vec<usize> {
        self.initial.iter().map(|&(s, _)| s).collect()
    }

    pub fn solve(&self, tol: f64) -> Result<Equilibrium> {
        shapley_solve(&self.game, tol, tzmg_core::solve::DEFAULT_MAX_ITERS).map_err(|e| anyhow!("{e}"))
    }
}

/// Builds the configured criterion's abstraction at `epsilon`.
pub fn abstraction_for(config: &ExperimentConfig, game: &ExplicitGame, q_star: &QTable, epsilon: f64) -> Abstraction {
    match config.criterion {
        Criterion::MinimaxQ => aggregate_minimax_q_with(q_star, epsilon, config.grouping),
        Criterion::Model => aggregate_model(game, epsilon),
        Criterion::Boltzmann => aggregate_boltzmann_with(q_star, epsilon, config.k, config.grouping),
        Criterion::Multinomial => aggregate_multinomial_with(q_star, epsilon, config.k, config.delta, config.grouping),
        Criterion::Custom => unreachable!("rejected when the config is resolved"),
    }
}

pub fn bound_for(config: &ExperimentConfig, game: &ExplicitGame, epsilon: f64) -> Result<f64> {
    let sizes = (game.num_states(), game.actions_p1(), game.actions_p2());
    Ok(theorem_bound(config.criterion, epsilon, config.k, config.gamma, sizes, config.delta)?)
}

/// First intra-block pair violating the abstraction's own criterion.
pub fn unsound_pair(abs: &Abstraction, game: &ExplicitGame, q_star: &QTable) -> Option<(usize, usize)> {
    let (eps, k) = (abs.epsilon, abs.k);
    for block in abs.blocks() {
        for (i, &s1) in block.iter().enumerate() {
            for &s2 in &block[i + 1..] {
                let ok = match abs.criterion {
                    Criterion::MinimaxQ => minimax_q_compatible(q_star, s1, s2, eps),
                    Criterion::Boltzmann => boltzmann_compatible(q_star, s1, s2, eps, k),
                    Criterion::Multinomial => multinomial_compatible(q_star, s1, s2, eps, k),
                    Criterion::Model => model_compatible(game, abs.phi(), s1, s2, eps),
                    Criterion::Custom => true,
                };
                if !ok {
                    return Some((s1, s2));
                }
            }
        }
    }
    None
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row).with_context(|| format!("writing {}", path.display()))?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize().collect::<std::result::Result<Vec<T>, _>>().with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub epsilon: f64,
    pub num_abstract_states: usize,
}

/// Block count per epsilon; writes `state_sizes.csv` and `state_sizes.svg`.
pub fn run_state_size_sweep(config: &ExperimentConfig, checks: &mut Checks) -> Result<Vec<SizeRow>> {
    let ground = Ground::load(config)?;
    let eq = ground.solve(config.tol)?;
    let built: Vec<Abstraction> =
        config.epsilons.par_iter().map(|&eps| abstraction_for(config, &ground.game, &eq.q, eps)).collect();
    let rows: Vec<SizeRow> = built
        .iter()
        .zip(&config.epsilons)
        .map(|(abs, &epsilon)| SizeRow { epsilon, num_abstract_states: abs.num_abstract() })
        .collect();

    for abs in &built {
        let bad = unsound_pair(abs, &ground.game, &eq.q);
        checks.check(bad.is_none(), || {
            format!("{} abstraction at eps {} merges incompatible states {:?}", abs.criterion, abs.epsilon, bad)
        });
    }
    if config.criterion != Criterion::Model {
        for w in rows.windows(2) {
            checks.check(w[1].num_abstract_states <= w[0].num_abstract_states, || {
                format!(
                    "block count grows from {} at eps {} to {} at eps {}",
                    w[0].num_abstract_states, w[0].epsilon, w[1].num_abstract_states, w[1].epsilon
                )
            });
        }
    }

    create_dir(&config.out_dir)?;
    let csv_path = config.out_dir.join("state_sizes.csv");
    write_csv(&csv_path, &rows)?;
    plot::plot_sizes(&csv_path, &config.out_dir.join("state_sizes.svg"))?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub epsilon: f64,
    pub criterion: String,
    pub iter: u64,
    pub gap: f64,
    pub bound: f64,
    pub argmax_state: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRow {
    pub epsilon: f64,
    pub criterion: String,
    pub num_abstract_states: usize,
    pub gap: f64,
    pub gap_initial: f64,
    pub bound: f64,
}

/// Everything one gap sweep produced for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct GapOutcome {
    pub seed: u64,
    pub dir: PathBuf,
    pub rows: Vec<GapRow>,
    pub rows_initial: Vec<GapRow>,
    pub equilibria: Vec<EquilibriumRow>,
}

/// The abstraction a gap run trains in; epsilon 0 is the ground game itself.
fn training_abstraction(config: &ExperimentConfig, ground: &Ground, q_star: &QTable, epsilon: f64) -> Abstraction {
    if epsilon == 0.0 {
        Abstraction::identity(ground.game.num_states())
    } else {
        abstraction_for(config, &ground.game, q_star, epsilon)
    }
}

fn evaluate(config: &ExperimentConfig, game: &ExplicitGame, profile: &PolicyProfile, seed: u64) -> Result<GapReport> {
    Ok(match config.gap_mode {
        GapMode::Exact => duality_gap(game, profile, config.tol)?,
        GapMode::Learned => learned_duality_gap(game, profile, config.learned_gap_iters, seed)?,
    })
}

struct SeriesResult {
    rows: Vec<GapRow>,
    rows_initial: Vec<GapRow>,
    /// Lifted final profile and its iteration count.
    last: (u64, PolicyProfile),
}

fn run_series(
    config: &ExperimentConfig,
    ground: &Ground,
    q_star: &QTable,
    epsilon: f64,
    seed: u64,
) -> Result<SeriesResult> {
    let abs = training_abstraction(config, ground, q_star, epsilon);
    let ag = build_abstract_game(&ground.game, &abs)?;
    let initial = abs.push_forward(&ground.initial);
    let out = train(&ag.game, &initial, &config.learner(seed))?;
    let bound = bound_for(config, &ground.game, epsilon)?;
    let starts = ground.start_states();
    let reports: Vec<(u64, GapReport)> = out
        .checkpoints
        .par_iter()
        .map(|c| {
            let lifted = lift_policy(&abs, &c.profile)?;
            Ok((c.iter, evaluate(config, &ground.game, &lifted, seed)?))
        })
        .collect::<Result<_>>()?;
    let criterion = config.criterion.name().to_string();
    let mut rows = Vec::new();
    let mut rows_initial = Vec::new();
    for (iter, report) in reports {
        rows.push(GapRow {
            epsilon,
            criterion: criterion.clone(),
            iter,
            gap: report.gap,
            bound,
            argmax_state: report.argmax_state,
        });
        let (g, s) = report.gap_over(&starts);
        rows_initial.push(GapRow {
            epsilon,
            criterion: criterion.clone(),
            iter,
            gap: if g.abs() <= 2.0 * config.tol { 0.0 } else { g.max(0.0) },
            bound,
            argmax_state: s,
        });
    }
    let last = (out.final_state.iter, lift_policy(&abs, &out.final_state.profile)?);
    Ok(SeriesResult { rows, rows_initial, last })
}

/// Gap of the lifted exact abstract equilibrium for every epsilon.
pub fn equilibrium_gaps(config: &ExperimentConfig, ground: &Ground, q_star: &QTable) -> Result<Vec<EquilibriumRow>> {
    let starts = ground.start_states();
    config
        .epsilons
        .par_iter()
        .map(|&epsilon| {
            let abs = abstraction_for(config, &ground.game, q_star, epsilon);
            let ag = build_abstract_game(&ground.game, &abs)?;
            let eq =
                shapley_solve(&ag.game, config.tol, tzmg_core::solve::DEFAULT_MAX_ITERS).map_err(|e| anyhow!("{e}"))?;
            let lifted = lift_policy(&abs, &eq.profile)?;
            let report = duality_gap(&ground.game, &lifted, config.tol)?;
            Ok(EquilibriumRow {
                epsilon,
                criterion: config.criterion.name().to_string(),
                num_abstract_states: abs.num_abstract(),
                gap: report.gap,
                gap_initial: report.gap_over(&starts).0.max(0.0),
                bound: bound_for(config, &ground.game, epsilon)?,
            })
        })
        .collect()
}

/// Output directory for one seed: the root itself for single-seed runs.
pub fn seed_dir(config: &ExperimentConfig, seed: u64) -> PathBuf {
    if config.seeds.len() == 1 {
        config.out_dir.clone()
    } else {
        config.out_dir.join(format!("seed-{seed}"))
    }
}

/// Trains in every abstract game of the grid, lifts every checkpoint and
/// evaluates it in the ground game. Writes `gaps.csv`, `gaps_initial.csv`,
/// `equilibrium_gaps.csv` and plots per seed.
pub fn run_gap_experiment(config: &ExperimentConfig, checks: &mut Checks) -> Result<Vec<GapOutcome>> {
    let ground = Ground::load(config)?;
    let eq = ground.solve(config.tol)?;
    let equilibria = equilibrium_gaps(config, &ground, &eq.q)?;
    for row in &equilibria {
        checks.check(row.gap <= row.bound + 1e-6, || {
            format!("abstract equilibrium at eps {} has gap {} above bound {}", row.epsilon, row.gap, row.bound)
        });
    }

    let jobs: Vec<(u64, f64)> =
        config.seeds.iter().flat_map(|&seed| config.epsilons.iter().map(move |&eps| (seed, eps))).collect();
    let series: Vec<SeriesResult> =
        jobs.par_iter().map(|&(seed, eps)| run_series(config, &ground, &eq.q, eps, seed)).collect::<Result<_>>()?;

    let mut outcomes = Vec::new();
    for &seed in &config.seeds {
        let mut rows = Vec::new();
        let mut rows_initial = Vec::new();
        for (job, result) in jobs.iter().zip(&series) {
            if job.0 == seed {
                rows.extend(result.rows.iter().cloned());
                rows_initial.extend(result.rows_initial.iter().cloned());
            }
        }
        for row in rows.iter().chain(&rows_initial) {
            checks
                .check(row.gap >= 0.0, || format!("negative gap {} at eps {} iter {}", row.gap, row.epsilon, row.iter));
        }
        if config.criterion == Criterion::MinimaxQ {
            // The bound covers abstract equilibria; at eps 0 it is zero and
            // only an exact equilibrium meets it, so learned ground rows are
            // reported without assertion.
            for row in rows.iter().filter(|r| r.epsilon > 0.0) {
                checks.check(row.gap <= row.bound, || {
                    format!("gap {} above bound {} at eps {} iter {}", row.gap, row.bound, row.epsilon, row.iter)
                });
            }
        }
        let dir = seed_dir(config, seed);
        create_dir(&dir)?;
        let gaps = dir.join("gaps.csv");
        let gaps_initial = dir.join("gaps_initial.csv");
        write_csv(&gaps, &rows)?;
        write_csv(&gaps_initial, &rows_initial)?;
        write_csv(&dir.join("equilibrium_gaps.csv"), &equilibria)?;
        plot::plot_gaps(&gaps, &dir.join("gaps.svg"), "Duality gap (max over states)")?;
        plot::plot_gaps(&gaps_initial, &dir.join("gaps_initial.svg"), "Duality gap (start states)")?;
        outcomes.push(GapOutcome { seed, dir, rows, rows_initial, equilibria: equilibria.clone() });
    }
    Ok(outcomes)
}

/// Summary of [`solve_and_export`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveSummary {
    pub iterations: usize,
    pub gap: f64,
    pub start_values: Vec<(usize, f64)>,
}

/// Solves the ground game and writes `game.tzmg` and `equilibrium.qpolicy`,
/// then reloads both to confirm they reproduce the tables.
pub fn solve_and_export(config: &ExperimentConfig, checks: &mut Checks) -> Result<SolveSummary> {
    let ground = Ground::load(config)?;
    let eq = ground.solve(config.tol)?;
    create_dir(&config.out_dir)?;

    let game_text = export_game(&ground.game, &config.out_dir.join("game.tzmg"), checks)?;
    let policy = PolicyFile {
        iter: eq.iterations as u64,
        profile: eq.profile.clone(),
        v: Some(eq.v.clone()),
        q: Some(eq.q.clone()),
    };
    let policy_text = write_policy(&policy);
    let policy_path = config.out_dir.join("equilibrium.qpolicy");
    write_file(&policy_path, &policy_text)?;

    let reloaded = read_policy(&fs::read_to_string(&policy_path)?)?;
    checks.check(reloaded == policy, || "equilibrium.qpolicy does not reload to the same tables".into());
    checks.check(write_policy(&reloaded) == policy_text, || "equilibrium.qpolicy is not byte-stable".into());
    let reloaded_game = read_game(&game_text)?;
    let report = duality_gap(&reloaded_game, &reloaded.profile, config.tol)?;
    checks.check(report.raw_gap <= 1e-6, || format!("reloaded equilibrium has gap {}", report.raw_gap));

    let start_values: Vec<(usize, f64)> = ground.start_states().into_iter().map(|s| (s, eq.v[s])).collect();
    if config.game == GameSource::Soccer {
        let (a, b) = (start_values[0].1, start_values[1].1);
        checks.check((a + b).abs() <= 2.0 * config.tol, || format!("start-state values {a} and {b} are not opposite"));
    }
    Ok(SolveSummary { iterations: eq.iterations, gap: report.gap, start_values })
}

/// Writes `game` to `path` and checks that export, import, export is
/// byte-identical. Returns the text.
pub fn export_game(game: &ExplicitGame, path: &Path, checks: &mut Checks) -> Result<String> {
    let text = write_game(game);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_file(path, &text)?;
    let back = read_game(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)?;
    checks.check(write_game(&back) == text, || format!("{} does not round-trip byte-identically", path.display()));
    checks.check(&back == game, || format!("{} does not reload to the same game", path.display()));
    Ok(text)
}

/// Builds one abstraction and writes `abstraction.phi` and `abstract.tzmg`.
pub fn run_abstract(config: &ExperimentConfig, epsilon: f64, checks: &mut Checks) -> Result<Abstraction> {
    let ground = Ground::load(config)?;
    let eq = ground.solve(config.tol)?;
    let abs = abstraction_for(config, &ground.game, &eq.q, epsilon);
    let bad = unsound_pair(&abs, &ground.game, &eq.q);
    checks.check(bad.is_none(), || format!("incompatible states {bad:?} share a block"));
    let ag = build_abstract_game(&ground.game, &abs)?;
    create_dir(&config.out_dir)?;
    write_file(&config.out_dir.join("abstraction.phi"), &write_abstraction(&abs))?;
    write_file(&config.out_dir.join("abstract.tzmg"), &write_game(&ag.game))?;
    Ok(abs)
}

/// One training run at `epsilon`: writes `curve.csv` and the lifted final
/// profile as `policy.qpolicy`.
pub fn run_train(config: &ExperimentConfig, epsilon: f64, seed: u64, checks: &mut Checks) -> Result<Vec<GapRow>> {
    let ground = Ground::load(config)?;
    let eq = ground.solve(config.tol)?;
    let series = run_series(config, &ground, &eq.q, epsilon, seed)?;
    for row in &series.rows {
        checks.check(row.gap >= 0.0, || format!("negative gap at iter {}", row.iter));
    }
    create_dir(&config.out_dir)?;
    write_csv(&config.out_dir.join("curve.csv"), &series.rows)?;
    let (iter, profile) = series.last;
    let file = PolicyFile { iter, profile, v: None, q: None };
    write_file(&config.out_dir.join("policy.qpolicy"), &write_policy(&file))?;
    Ok(series.rows)
}

/// Gap of a stored ground profile.
pub fn run_gap(config: &ExperimentConfig, policy: &Path) -> Result<(GapReport, Vec<usize>)> {
    let ground = Ground::load(config)?;
    let text = fs::read_to_string(policy).with_context(|| format!("reading {}", policy.display()))?;
    let file = read_policy(&text).with_context(|| format!("parsing {}", policy.display()))?;
    let report = evaluate(config, &ground.game, &file.profile, config.seeds[0])?;
    Ok((report, ground.start_states()))
}
