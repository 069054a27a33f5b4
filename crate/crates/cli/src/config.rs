//! Experiment configuration.
//!
//! A config file is TOML; every key is optional:
//!
//! ```toml
//! game = "soccer"            # or a path to a tzmg v1 file
//! gamma = 0.9
//! criterion = "minimax_q"    # model | boltzmann | multinomial
//! grouping = "linkage"       # or "first-fit"
//! epsilons = [0.0, 0.2, 0.6, 1.0, 1.4, 1.8]
//! k = 1.0
//! delta = 0.1                # multinomial degeneracy floor
//! iters = 200000
//! beta = 0.2
//! lr = "exponential"         # or "constant:<alpha>"
//! checkpoint_every = 4000    # default: iters / 50
//! seeds = [0]
//! out_dir = "results"
//! gap_mode = "exact"         # or "learned"
//! learned_gap_iters = 2000000
//! tol = 1e-9
//! initial_states = [0, 1]    # file games only; default: all states
//! start1 = [2, 1]            # soccer only: player 1 start (row, col)
//! start2 = [1, 3]            # soccer only: player 2 start (row, col)
//! goal_rows = [1, 2]         # soccer only: inclusive goal-mouth rows
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use tzmg_core::soccer::{Cell, SoccerConfig};
use tzmg_core::{Criterion, Grouping, LearningRate};

pub const DESK_ITERS: u64 = 200_000;
pub const PAPER_ITERS: u64 = 1_000_000;
pub const DESK_EPSILONS: [f64; 6] = [0.0, 0.2, 0.6, 1.0, 1.4, 1.8];

/// `0.0, 0.1, ..., 2.0`.
pub fn full_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameSource {
    Soccer,
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMode {
    Exact,
    Learned,
}

/// File representation; everything optional so flags can fill the rest.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub game: Option<String>,
    pub gamma: Option<f64>,
    pub criterion: Option<String>,
    pub grouping: Option<String>,
    pub epsilons: Option<Vec<f64>>,
    pub k: Option<f64>,
    pub delta: Option<f64>,
    pub iters: Option<u64>,
    pub beta: Option<f64>,
    pub lr: Option<String>,
    pub checkpoint_every: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub out_dir: Option<PathBuf>,
    pub gap_mode: Option<String>,
    pub learned_gap_iters: Option<u64>,
    pub tol: Option<f64>,
    pub initial_states: Option<Vec<usize>>,
    pub start1: Option<[usize; 2]>,
    pub start2: Option<[usize; 2]>,
    pub goal_rows: Option<[usize; 2]>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: ConfigFile) -> ConfigFile {
        ConfigFile {
            game: over.game.or(self.game),
            gamma: over.gamma.or(self.gamma),
            criterion: over.criterion.or(self.criterion),
            grouping: over.grouping.or(self.grouping),
            epsilons: over.epsilons.or(self.epsilons),
            k: over.k.or(self.k),
            delta: over.delta.or(self.delta),
            iters: over.iters.or(self.iters),
            beta: over.beta.or(self.beta),
            lr: over.lr.or(self.lr),
            checkpoint_every: over.checkpoint_every.or(self.checkpoint_every),
            seeds: over.seeds.or(self.seeds),
            out_dir: over.out_dir.or(self.out_dir),
            gap_mode: over.gap_mode.or(self.gap_mode),
            learned_gap_iters: over.learned_gap_iters.or(self.learned_gap_iters),
            tol: over.tol.or(self.tol),
            initial_states: over.initial_states.or(self.initial_states),
            start1: over.start1.or(self.start1),
            start2: over.start2.or(self.start2),
            goal_rows: over.goal_rows.or(self.goal_rows),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub game: GameSource,
    pub gamma: f64,
    pub criterion: Criterion,
    pub grouping: Grouping,
    pub epsilons: Vec<f64>,
    pub k: f64,
    pub delta: f64,
    pub iters: u64,
    pub beta: f64,
    pub lr: LearningRate,
    pub checkpoint_every: u64,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub gap_mode: GapMode,
    pub learned_gap_iters: u64,
    pub tol: f64,
    pub initial_states: Option<Vec<usize>>,
    pub soccer: SoccerConfig,
}

impl ExperimentConfig {
    /// Resolves a merged file against the defaults. `default_grid` is used
    /// when no epsilons were given.
    pub fn resolve(file: ConfigFile, default_grid: Vec<f64>, default_iters: u64) -> Result<Self> {
        let game = match file.game.as_deref() {
            None | Some("soccer") => GameSource::Soccer,
            Some(path) => GameSource::File(PathBuf::from(path)),
        };
        let criterion: Criterion = file.criterion.as_deref().unwrap_or("minimax_q").parse()?;
        if criterion == Criterion::Custom {
            bail!("criterion `custom` cannot be swept");
        }
        let grouping: Grouping = file.grouping.as_deref().unwrap_or("linkage").parse()?;
        let iters = file.iters.unwrap_or(default_iters);
        let mut soccer = SoccerConfig::default();
        if let Some([r, c]) = file.start1 {
            soccer.start1 = Cell::new(r, c);
        }
        if let Some([r, c]) = file.start2 {
            soccer.start2 = Cell::new(r, c);
        }
        if let Some([lo, hi]) = file.goal_rows {
            soccer.goal_rows = (lo, hi);
        }
        let config = ExperimentConfig {
            game,
            gamma: file.gamma.unwrap_or(0.9),
            criterion,
            grouping,
            epsilons: file.epsilons.unwrap_or(default_grid),
            k: file.k.unwrap_or(1.0),
            delta: file.delta.unwrap_or(0.1),
            iters,
            beta: file.beta.unwrap_or(0.2),
            lr: parse_lr(file.lr.as_deref().unwrap_or("exponential"))?,
            checkpoint_every: file.checkpoint_every.unwrap_or((iters / 50).max(1)),
            seeds: file.seeds.unwrap_or_else(|| vec![0]),
            out_dir: file.out_dir.unwrap_or_else(|| PathBuf::from("results")),
            gap_mode: match file.gap_mode.as_deref().unwrap_or("exact") {
                "exact" => GapMode::Exact,
                "learned" => GapMode::Learned,
                other => bail!("unknown gap mode `{other}`"),
            },
            learned_gap_iters: file.learned_gap_iters.unwrap_or(2_000_000),
            tol: file.tol.unwrap_or(1e-9),
            initial_states: file.initial_states,
            soccer,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            bail!("gamma {} not in [0, 1)", self.gamma);
        }
        if self.epsilons.is_empty() {
            bail!("epsilon grid is empty");
        }
        if self.epsilons.iter().any(|e| !(*e >= 0.0)) {
            bail!("epsilons must be non-negative");
        }
        if self.epsilons.windows(2).any(|w| w[1] < w[0]) {
            bail!("epsilon grid must be sorted ascending");
        }
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        if !(self.k >= 0.0) || !(self.delta > 0.0) {
            bail!("k must be non-negative and delta positive");
        }
        if !(self.tol > 0.0) {
            bail!("tolerance must be positive");
        }
        Ok(())
    }

    pub fn learner(&self, seed: u64) -> tzmg_core::LearnerConfig {
        tzmg_core::LearnerConfig::new(self.iters, self.gamma)
            .with_beta(self.beta)
            .with_lr(self.lr)
            .with_checkpoint_every(self.checkpoint_every)
            .with_seed(seed)
    }
}

pub fn parse_lr(id: &str) -> Result<LearningRate> {
    if id == "exponential" {
        return Ok(LearningRate::Exponential);
    }
    if let Some(alpha) = id.strip_prefix("constant:") {
        let alpha: f64 = alpha.parse().with_context(|| format!("bad learning rate `{id}`"))?;
        return Ok(LearningRate::Constant(alpha));
    }
    bail!("unknown learning-rate schedule `{id}`")
}
