//! Replicated benchmark tables: P1 and the differential game.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use gpnash::acquisition::AcquisitionConfig;
use gpnash::game::{nash_extract, PayoffTensor, StrategyGrid};
use gpnash::problems::{GameProblem, GridScheme, ProblemSpec};
use gpnash::sequential::{Acquisition, RunConfig};

use crate::baseline::{run_baseline, BaselineRun};
use crate::error::{CliError, CliResult};
use crate::experiment::{BaselineSpec, Experiment, GridSpec};
use crate::output;
use crate::runner::{run_replicates, Replicate};

const P1_TARGET: [f64; 2] = [-3.786, 15.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaperTable {
    /// P1 on a 31 x 31 grid.
    One,
    /// The differential game.
    Two,
}

impl FromStr for PaperTable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" => Ok(Self::One),
            "2" => Ok(Self::Two),
            other => Err(format!("unknown table {other:?}; expected 1 or 2")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableOptions {
    /// Fraction of the published budget, in `(0, 1]`.
    pub scale: f64,
    pub replicates: usize,
    pub seed: u64,
    pub jobs: usize,
    pub quiet: bool,
    /// Spline coefficients per control (table 2 only).
    pub kappa: usize,
    pub out: Option<PathBuf>,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            scale: 1.0,
            replicates: 5,
            seed: 0,
            jobs: 1,
            quiet: true,
            kappa: 1,
            out: None,
        }
    }
}

impl TableOptions {
    pub fn full_scale(&self) -> bool {
        self.scale == 1.0
    }

    fn validate(&self) -> CliResult<()> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(CliError::Usage(format!("scale {} must lie in (0, 1]", self.scale)));
        }
        if self.replicates == 0 {
            return Err(CliError::Usage("at least one replicate is needed".into()));
        }
        if !(1..=2).contains(&self.kappa) {
            return Err(CliError::Usage(format!("kappa {} must be 1 or 2", self.kappa)));
        }
        Ok(())
    }
}

/// Experiment behind a table at the requested scale, in P_E mode.
pub fn table_experiment(table: PaperTable, opts: &TableOptions) -> CliResult<Experiment> {
    opts.validate()?;
    let root = opts.scale.sqrt();
    let scaled = |n: f64| (n * root).round() as usize;
    let mut exp = match table {
        PaperTable::One => Experiment {
            problem: ProblemSpec::P1 {},
            grid: GridSpec {
                scheme: GridScheme::Regular,
                counts: vec![1 + scaled(30.0); 2],
                seed: 0,
            },
            run: RunConfig {
                n0: 6,
                n_max: 30,
                ..RunConfig::default()
            },
            replicates: opts.replicates,
            out: opts.out.clone(),
            baseline: BaselineSpec::default(),
        },
        PaperTable::Two => {
            let (n0, n_max) = if opts.kappa == 1 { (80.0, 160.0) } else { (160.0, 320.0) };
            let (n_sim, n_cand) = if opts.full_scale() { (1296, 256) } else { (625, 81) };
            Experiment {
                problem: ProblemSpec::DifferentialGame {
                    kappa: Some(opts.kappa),
                    z0: None,
                    thetas: None,
                    steps: None,
                },
                grid: GridSpec {
                    scheme: GridScheme::LhdPerPlayer,
                    counts: vec![1 + scaled(16.0); 4],
                    seed: 0,
                },
                run: RunConfig {
                    n0: scaled(n0),
                    n_max: scaled(n_max),
                    stop_eps: 0.02,
                    cfg: AcquisitionConfig {
                        n_sim,
                        n_cand,
                        ..AcquisitionConfig::default()
                    },
                    ..RunConfig::default()
                },
                replicates: opts.replicates,
                out: opts.out.clone(),
                baseline: BaselineSpec::default(),
            }
        }
    };
    exp.set_seed(opts.seed);
    exp.validate()?;
    Ok(exp)
}

/// Published figures: evaluations and success rate.
type Published = (&'static str, &'static str);

fn published(table: PaperTable, kappa: usize, method: &str) -> Option<Published> {
    Some(match (table, kappa, method) {
        (PaperTable::One, _, "P_E") => ("9--10", "5/5"),
        (PaperTable::One, _, "SUR") => ("8--14", "5/5"),
        (PaperTable::One, _, "fixed point") => ("200--1000", "3/5"),
        (PaperTable::Two, 1, "P_E") => ("83--95", "5/5"),
        (PaperTable::Two, 1, "SUR") => ("81--88", "5/5"),
        (PaperTable::Two, 1, "fixed point") => ("3000--5000", "5/5"),
        (PaperTable::Two, 2, "P_E") => ("196--221", "5/5"),
        (PaperTable::Two, 2, "SUR") => ("208--232", "5/5"),
        (PaperTable::Two, 2, "fixed point") => ("5000--7000", "5/5"),
        _ => return None,
    })
}

#[derive(Debug, Clone)]
pub struct MethodRow {
    pub method: &'static str,
    /// Evaluations of each successful run.
    pub evaluations: Vec<usize>,
    pub successes: usize,
    pub runs: usize,
    pub published: Option<Published>,
}

impl MethodRow {
    pub fn range(&self) -> Option<(usize, usize)> {
        Some((*self.evaluations.iter().min()?, *self.evaluations.iter().max()?))
    }

    pub fn median(&self) -> Option<f64> {
        let mut v = self.evaluations.clone();
        v.sort_unstable();
        let n = v.len();
        match n {
            0 => None,
            _ if n % 2 == 1 => Some(v[n / 2] as f64),
            _ => Some((v[n / 2 - 1] + v[n / 2]) as f64 / 2.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableReport {
    pub title: String,
    /// Grid index every method is expected to find.
    pub reference: Option<usize>,
    pub reference_x: Option<Vec<f64>>,
    pub rows: Vec<MethodRow>,
    pub full_scale: bool,
    pub runs: Vec<(Acquisition, Vec<Replicate>)>,
    pub baseline: Vec<BaselineRun>,
}

impl fmt::Display for TableReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.title)?;
        match (&self.reference, &self.reference_x) {
            (Some(k), Some(x)) => writeln!(f, "reference: grid index {k} at {x:?}")?,
            _ => writeln!(f, "reference: none (no baseline start reached an equilibrium)")?,
        }
        write!(f, "{:<12} {:>12} {:>8} {:>8}", "method", "evaluations", "median", "success")?;
        if self.full_scale {
            write!(f, " {:>12} {:>8}", "published", "success")?;
        }
        writeln!(f)?;
        for row in &self.rows {
            let range = row.range().map_or("-".into(), |(a, b)| format!("{a}--{b}"));
            let median = row.median().map_or("-".into(), |m| format!("{m}"));
            write!(
                f,
                "{:<12} {:>12} {:>8} {:>8}",
                row.method,
                range,
                median,
                format!("{}/{}", row.successes, row.runs)
            )?;
            if let (true, Some((evals, rate))) = (self.full_scale, row.published) {
                write!(f, " {evals:>12} {rate:>8}")?;
            }
            writeln!(f)?;
        }
        if !self.full_scale {
            writeln!(f, "scaled run: no comparison with published figures")?;
        }
        Ok(())
    }
}

fn method_name(mode: Acquisition) -> &'static str {
    match mode {
        Acquisition::ProbEquilibrium => "P_E",
        Acquisition::Sur => "SUR",
    }
}

fn mode_dir(mode: Acquisition) -> &'static str {
    match mode {
        Acquisition::ProbEquilibrium => "pe",
        Acquisition::Sur => "sur",
    }
}

/// The grid equilibrium closest to `x`, from exhaustive evaluation.
fn nearest_grid_equilibrium(problem: &dyn GameProblem, grid: &StrategyGrid, x: &[f64]) -> CliResult<Option<usize>> {
    let tensor = PayoffTensor::evaluate(grid, |p| problem.evaluate(p)).map_err(|e| CliError::Runtime(e.to_string()))?;
    let dist = |k: usize| grid.point(k).iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    Ok(nash_extract(&tensor)
        .indices
        .into_iter()
        .min_by(|&a, &b| dist(a).total_cmp(&dist(b))))
}

/// Runs both acquisition modes and the baseline behind a table.
pub fn run_table(table: PaperTable, opts: &TableOptions) -> CliResult<TableReport> {
    let exp = table_experiment(table, opts)?;
    if table == PaperTable::Two && opts.full_scale() {
        eprintln!(
            "warning: full-scale table 2 evaluates the game on all {} grid points and runs {} replicates \
             per mode with a 1296-point simulation set; expect many hours of wall time",
            exp.grid.counts.iter().product::<usize>(),
            opts.replicates
        );
    }
    let (problem, grid) = exp.build()?;
    let out = exp.out.clone();
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir)?;
    }

    let baseline = run_baseline(problem.as_ref(), &exp.baseline, opts.jobs)?;
    let good = |r: &BaselineRun| r.result.converged && r.check.is_equilibrium;
    let (reference, reference_x) = match table {
        PaperTable::One => {
            let k = grid.nearest_point(&P1_TARGET);
            (Some(k), Some(grid.point(k)))
        }
        PaperTable::Two => match baseline.iter().find(|r| good(r)) {
            Some(r) => {
                let k = nearest_grid_equilibrium(problem.as_ref(), &grid, &r.result.x)?;
                (k, k.map(|k| grid.point(k)))
            }
            None => (None, None),
        },
    };
    if let Some(dir) = &out {
        output::write_baseline(&dir.join(output::BASELINE_FILE), &baseline)?;
    }

    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for mode in [Acquisition::ProbEquilibrium, Acquisition::Sur] {
        let config = RunConfig {
            acquisition: mode,
            stop_eps: if mode == Acquisition::Sur { 0.0 } else { exp.run.stop_eps },
            ..exp.run.clone()
        };
        let dir = out.as_ref().map(|d| d.join(mode_dir(mode)));
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
        }
        let reps = run_replicates(
            problem.as_ref(),
            &grid,
            &config,
            exp.replicates,
            opts.jobs,
            dir.as_deref(),
            opts.quiet,
        )?;
        if let Some(d) = &dir {
            output::write_summary(&d.join(output::SUMMARY_FILE), &reps)?;
            output::write_convergence(&d.join(output::CONVERGENCE_FILE), &reps)?;
            output::write_timings(&d.join(output::TIMINGS_FILE), &reps)?;
        }
        let evaluations: Vec<usize> = reps
            .iter()
            .filter_map(|r| r.log.outcome.as_ref())
            .filter(|f| Some(f.index) == reference)
            .map(|f| f.evaluations_to_convergence)
            .collect();
        let name = method_name(mode);
        rows.push(MethodRow {
            method: name,
            successes: evaluations.len(),
            evaluations,
            runs: reps.len(),
            published: published(table, opts.kappa, name),
        });
        runs.push((mode, reps));
    }
    let evaluations: Vec<usize> = baseline.iter().filter(|r| good(r)).map(|r| r.result.evaluations).collect();
    rows.push(MethodRow {
        method: "fixed point",
        successes: evaluations.len(),
        evaluations,
        runs: baseline.len(),
        published: published(table, opts.kappa, "fixed point"),
    });

    let title = match table {
        PaperTable::One => format!(
            "Table 1: P1, {} grid points, {} replicates",
            grid.size(),
            opts.replicates
        ),
        PaperTable::Two => format!(
            "Table 2: differential game (kappa = {}), {} grid points, n0 = {}, {} replicates",
            opts.kappa,
            grid.size(),
            exp.run.n0,
            opts.replicates
        ),
    };
    Ok(TableReport {
        title,
        reference,
        reference_x,
        rows,
        full_scale: opts.full_scale(),
        runs,
        baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_ids() {
        assert_eq!("1".parse::<PaperTable>(), Ok(PaperTable::One));
        assert_eq!("2".parse::<PaperTable>(), Ok(PaperTable::Two));
        assert!("3".parse::<PaperTable>().is_err());
    }

    #[test]
    fn quarter_scale_matches_the_desk_setup() {
        let opts = TableOptions {
            scale: 0.25,
            ..TableOptions::default()
        };
        let exp = table_experiment(PaperTable::Two, &opts).unwrap();
        assert_eq!(exp.grid.counts, vec![9; 4]);
        assert_eq!((exp.run.n0, exp.run.n_max), (40, 80));
        let full = table_experiment(PaperTable::Two, &TableOptions::default()).unwrap();
        assert_eq!(full.grid.counts, vec![17; 4]);
        assert_eq!((full.run.n0, full.run.n_max), (80, 160));
        let p1 = table_experiment(PaperTable::One, &TableOptions::default()).unwrap();
        assert_eq!(p1.grid.counts, vec![31, 31]);
    }

    #[test]
    fn scale_out_of_range_is_rejected() {
        for scale in [0.0, 1.5, f64::NAN] {
            let opts = TableOptions {
                scale,
                ..TableOptions::default()
            };
            assert!(matches!(table_experiment(PaperTable::One, &opts), Err(CliError::Usage(_))));
        }
    }

    #[test]
    fn median_and_range() {
        let row = MethodRow {
            method: "P_E",
            evaluations: vec![14, 9, 12, 10],
            successes: 4,
            runs: 5,
            published: None,
        };
        assert_eq!(row.range(), Some((9, 14)));
        assert_eq!(row.median(), Some(11.0));
    }
}
