use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tzmg_cli::config::{self, ConfigFile, ExperimentConfig};
use tzmg_cli::experiments::{self, Checks};
use tzmg_cli::plot;

#[derive(Parser)]
#[command(name = "soccer", version, about = "Abstraction experiments on zero-sum Markov games")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Overrides {
    /// Output root directory.
    #[arg(long, global = true, env = "TZMG_OUT")]
    out_dir: Option<PathBuf>,
    /// `soccer` or a path to a tzmg v1 file.
    #[arg(long, global = true)]
    game: Option<String>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// minimax_q | model | boltzmann | multinomial
    #[arg(long, global = true)]
    criterion: Option<String>,
    /// linkage | first-fit
    #[arg(long, global = true)]
    grouping: Option<String>,
    /// Comma-separated epsilon grid.
    #[arg(long, global = true, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long, global = true)]
    k: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Learner iterations T.
    #[arg(long, global = true)]
    iters: Option<u64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// `exponential` or `constant:<alpha>`.
    #[arg(long, global = true)]
    lr: Option<String>,
    #[arg(long, global = true)]
    checkpoint_every: Option<u64>,
    /// Comma-separated seeds.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// exact | learned
    #[arg(long, global = true)]
    gap_mode: Option<String>,
    #[arg(long, global = true)]
    learned_gap_iters: Option<u64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Start states of a file game, comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    initial_states: Option<Vec<usize>>,
    /// Player 1 soccer start cell as `row,col`.
    #[arg(long, global = true, value_parser = parse_pair)]
    start1: Option<[usize; 2]>,
    /// Player 2 soccer start cell as `row,col`.
    #[arg(long, global = true, value_parser = parse_pair)]
    start2: Option<[usize; 2]>,
    /// Inclusive goal-mouth rows as `lo,hi`.
    #[arg(long, global = true, value_parser = parse_pair)]
    goal_rows: Option<[usize; 2]>,
}

impl Overrides {
    fn into_file(self) -> ConfigFile {
        ConfigFile {
            game: self.game,
            gamma: self.gamma,
            criterion: self.criterion,
            grouping: self.grouping,
            epsilons: self.epsilons,
            k: self.k,
            delta: self.delta,
            iters: self.iters,
            beta: self.beta,
            lr: self.lr,
            checkpoint_every: self.checkpoint_every,
            seeds: self.seeds,
            out_dir: self.out_dir,
            gap_mode: self.gap_mode,
            learned_gap_iters: self.learned_gap_iters,
            tol: self.tol,
            initial_states: self.initial_states,
            start1: self.start1,
            start2: self.start2,
            goal_rows: self.goal_rows,
        }
    }
}

fn parse_pair(text: &str) -> std::result::Result<[usize; 2], String> {
    let (a, b) = text.split_once(',').ok_or_else(|| format!("expected `a,b`, got `{text}`"))?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("`{x}`: {e}"));
    Ok([parse(a)?, parse(b)?])
}

#[derive(Subcommand)]
enum Command {
    /// Solve the ground game; write game.tzmg and equilibrium.qpolicy.
    Solve,
    /// Write the ground game in tzmg v1 format.
    Export {
        #[arg(long)]
        out: PathBuf,
    },
    /// Build one abstraction; write abstraction.phi and abstract.tzmg.
    Abstract {
        #[arg(long)]
        epsilon: f64,
    },
    /// Train at one epsilon; write curve.csv and policy.qpolicy.
    Train {
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Duality gap of a stored ground policy.
    Gap {
        #[arg(long)]
        policy: PathBuf,
    },
    /// Abstract state count over the epsilon grid.
    SweepSizes,
    /// Learned-policy gaps over the epsilon grid.
    SweepGaps {
        /// T = 1e6 and the full 0.0..2.0 grid unless set explicitly.
        #[arg(long)]
        paper_scale: bool,
    },
    /// Regenerate the SVG plots of a result directory from its CSVs.
    Plot {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn resolve(cli_config: Option<&PathBuf>, overrides: Overrides, grid: Vec<f64>, iters: u64) -> Result<ExperimentConfig> {
    let file = match cli_config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    ExperimentConfig::resolve(file.merge(overrides.into_file()), grid, iters)
}

fn run(cli: Cli) -> Result<Checks> {
    let mut checks = Checks::default();
    let desk = || config::DESK_EPSILONS.to_vec();
    let cfg_path = cli.config.as_ref();
    match cli.command {
        Command::Solve => {
            let config = resolve(cfg_path, cli.overrides, desk(), config::DESK_ITERS)?;
            let summary = experiments::solve_and_export(&config, &mut checks)?;
            println!("solved in {} sweeps, gap {:e}", summary.iterations, summary.gap);
            for (s, v) in summary.start_values {
                println!("V*({s}) = {v:.9}");
            }
        }
        Command::Export { out } => {
            let config = resolve(cfg_path, cli.overrides, desk(), config::DESK_ITERS)?;
            let ground = experiments::Ground::load(&config)?;
            experiments::export_game(&ground.game, &out, &mut checks)?;
            println!("wrote {}", out.display());
        }
        Command::Abstract { epsilon } => {
            let config = resolve(cfg_path, cli.overrides, desk(), config::DESK_ITERS)?;
            let abs = experiments::run_abstract(&config, epsilon, &mut checks)?;
            println!("{} blocks from {} states", abs.num_abstract(), abs.num_ground());
            if !abs.degenerate.is_empty() {
                println!("degenerate states kept as singletons: {:?}", abs.degenerate);
            }
        }
        Command::Train { epsilon, seed } => {
            let config = resolve(cfg_path, cli.overrides, desk(), config::DESK_ITERS)?;
            let seed = seed.unwrap_or(config.seeds[0]);
            let rows = experiments::run_train(&config, epsilon, seed, &mut checks)?;
            if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
                println!("gap {:.6} at iter {} -> {:.6} at iter {}", first.gap, first.iter, last.gap, last.iter);
            }
        }
        Command::Gap { policy } => {
            let config = resolve(cfg_path, cli.overrides, desk(), config::DESK_ITERS)?;
            let (report, starts) = experiments::run_gap(&config, &policy)?;
            checks.check(report.gap >= 0.0, || format!("negative gap {}", report.gap));
            let (g0, s0) = report.gap_over(&starts);
            println!("gap {:.9} at state {}", report.gap, report.argmax_state);
            let g0 = if g0.abs() <= 2.0 * config.tol { 0.0 } else { g0.max(0.0) };
            println!("start-state gap {:.9} at state {}", g0, s0);
        }
        Command::SweepSizes => {
            let config = resolve(cfg_path, cli.overrides, config::full_grid(), config::DESK_ITERS)?;
            for row in experiments::run_state_size_sweep(&config, &mut checks)? {
                println!("{:>5} {}", row.epsilon, row.num_abstract_states);
            }
        }
        Command::SweepGaps { paper_scale } => {
            let (grid, iters) =
                if paper_scale { (config::full_grid(), config::PAPER_ITERS) } else { (desk(), config::DESK_ITERS) };
            let config = resolve(cfg_path, cli.overrides, grid, iters)?;
            for outcome in experiments::run_gap_experiment(&config, &mut checks)? {
                println!("seed {} -> {}", outcome.seed, outcome.dir.display());
                for eq in &outcome.equilibria {
                    let last = outcome.rows.iter().rfind(|r| r.epsilon == eq.epsilon);
                    println!(
                        "  eps {:>4}: {:>3} blocks, equilibrium gap {:.6} (bound {:.3}), final learned gap {:.6}",
                        eq.epsilon,
                        eq.num_abstract_states,
                        eq.gap,
                        eq.bound,
                        last.map_or(f64::NAN, |r| r.gap)
                    );
                }
            }
        }
        Command::Plot { dir } => {
            let mut any = false;
            let sizes = dir.join("state_sizes.csv");
            if sizes.exists() {
                plot::plot_sizes(&sizes, &dir.join("state_sizes.svg"))?;
                any = true;
            }
            for (name, title) in
                [("gaps", "Duality gap (max over states)"), ("gaps_initial", "Duality gap (start states)")]
            {
                let csv = dir.join(format!("{name}.csv"));
                if csv.exists() {
                    plot::plot_gaps(&csv, &dir.join(format!("{name}.svg")), title)?;
                    any = true;
                }
            }
            if !any {
                return Err(anyhow::anyhow!("no result CSVs in {}", dir.display())).context("plot");
            }
        }
    }
    Ok(checks)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(checks) if checks.passed() => ExitCode::SUCCESS,
        Ok(checks) => {
            for failure in checks.failures() {
                eprintln!("invariant failed: {failure}");
            }
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
