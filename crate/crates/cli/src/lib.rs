//! Command-line front end: experiment files, replicated runs, baseline and
//! benchmark tables.

pub mod baseline;
pub mod error;
pub mod experiment;
pub mod output;
pub mod runner;
pub mod table;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use gpnash::problems::registry;
use gpnash::sequential::Acquisition;

pub use error::{CliError, CliResult};
pub use experiment::Experiment;
pub use table::{run_table, PaperTable, TableOptions, TableReport};

const DEFAULT_OUT: &str = "gpnash-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Pe,
    Sur,
}

impl From<Mode> for Acquisition {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Pe => Acquisition::ProbEquilibrium,
            Mode::Sur => Acquisition::Sur,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gpnash", version, about = "Nash equilibria of expensive black-box games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Base seed (overrides GPNASH_SEED and the experiment file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Replicates run at once.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory (overrides GPNASH_OUT and the experiment file).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Acquisition function.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
    /// Only print errors and final results.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sequential design for every replicate of an experiment.
    Solve { experiment: PathBuf },
    /// Run the fixed-point baseline of an experiment.
    Baseline { experiment: PathBuf },
    /// Reproduce a benchmark table.
    Table {
        table: PaperTable,
        /// Fraction of the published budget.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 5)]
        replicates: usize,
        /// Spline coefficients per control for table 2.
        #[arg(long, default_value_t = 1)]
        kappa: usize,
    },
    /// List registered problems.
    Problems,
}

impl Cli {
    /// Loads an experiment and applies overrides: flag, then environment,
    /// then file.
    pub fn experiment(&self, path: &Path) -> CliResult<Experiment> {
        let mut exp = Experiment::load(path)?;
        exp.apply_env()?;
        if let Some(seed) = self.seed {
            exp.set_seed(seed);
        }
        if let Some(out) = &self.out {
            exp.out = Some(out.clone());
        }
        if let Some(mode) = self.mode {
            exp.run.acquisition = mode.into();
        }
        Ok(exp)
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    if cli.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    match &cli.command {
        Command::Solve { experiment } => solve(cli, &cli.experiment(experiment)?),
        Command::Baseline { experiment } => baseline(cli, &cli.experiment(experiment)?),
        Command::Table {
            table,
            scale,
            replicates,
            kappa,
        } => {
            let seed = match cli.seed {
                Some(s) => s,
                None => env_seed()?.unwrap_or(0),
            };
            let out = cli.out.clone().or_else(|| std::env::var_os(experiment::OUT_ENV).map(PathBuf::from));
            let opts = TableOptions {
                scale: *scale,
                replicates: *replicates,
                seed,
                jobs: cli.jobs,
                quiet: cli.quiet,
                kappa: *kappa,
                out,
            };
            let report = run_table(*table, &opts)?;
            print!("{report}");
            Ok(())
        }
        Command::Problems => {
            for (name, about) in registry() {
                println!("{name:<10} {about}");
            }
            Ok(())
        }
    }
}

fn env_seed() -> CliResult<Option<u64>> {
    std::env::var(experiment::SEED_ENV)
        .ok()
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{}={s:?} is not an unsigned integer", experiment::SEED_ENV)))
        })
        .transpose()
}

fn out_dir(exp: &Experiment) -> CliResult<PathBuf> {
    let dir = exp.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn solve(cli: &Cli, exp: &Experiment) -> CliResult<()> {
    let (problem, grid) = exp.build()?;
    let dir = out_dir(exp)?;
    let reps = runner::run_replicates(
        problem.as_ref(),
        &grid,
        &exp.run,
        exp.replicates,
        cli.jobs,
        Some(&dir),
        cli.quiet,
    )?;
    output::write_logs(&dir, &reps)?;
    output::write_summary(&dir.join(output::SUMMARY_FILE), &reps)?;
    output::write_convergence(&dir.join(output::CONVERGENCE_FILE), &reps)?;
    output::write_timings(&dir.join(output::TIMINGS_FILE), &reps)?;
    if !cli.quiet {
        eprintln!("wrote {} replicate(s) to {}", reps.len(), dir.display());
    }
    Ok(())
}

fn baseline(cli: &Cli, exp: &Experiment) -> CliResult<()> {
    let problem = exp.problem.build().map_err(|e| CliError::Usage(e.to_string()))?;
    let dir = out_dir(exp)?;
    let runs = baseline::run_baseline(problem.as_ref(), &exp.baseline, cli.jobs)?;
    output::write_baseline(&dir.join(output::BASELINE_FILE), &runs)?;
    output::write_baseline_jsonl(&dir.join("baseline.jsonl"), &runs)?;
    if !cli.quiet {
        for (k, r) in runs.iter().enumerate() {
            eprintln!(
                "start {k}: converged {} after {} evaluations, equilibrium check {}",
                r.result.converged,
                r.result.evaluations,
                if r.check.is_equilibrium { "passed" } else { "failed" }
            );
        }
    }
    Ok(())
}
