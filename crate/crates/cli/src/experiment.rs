//! Declarative experiment files (TOML).

use std::path::{Path, PathBuf};

use gpnash::game::{FixedPointConfig, StrategyGrid};
use gpnash::problems::{build_factorial_grid, GameProblem, GridScheme, ProblemSpec};
use gpnash::sequential::RunConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "GPNASH_SEED";
pub const OUT_ENV: &str = "GPNASH_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub scheme: GridScheme,
    /// Actions per player.
    pub counts: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSpec {
    /// Number of random starting points, ignored when `start_points` is set.
    pub starts: usize,
    pub start_points: Option<Vec<Vec<f64>>>,
    pub seed: u64,
    pub solver: FixedPointConfig,
    /// Deviation patch used to flag non-equilibrium end points.
    pub check_points: usize,
    pub check_tol: f64,
}

impl Default for BaselineSpec {
    fn default() -> Self {
        Self {
            starts: 5,
            start_points: None,
            seed: 0,
            solver: FixedPointConfig::default(),
            check_points: 11,
            check_tol: 1e-3,
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub problem: ProblemSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub baseline: BaselineSpec,
}

impl Experiment {
    pub fn parse(text: &str) -> CliResult<Self> {
        let exp: Self = toml::from_str(text).map_err(|e| CliError::Usage(e.to_string()))?;
        exp.validate()?;
        Ok(exp)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.replicates == 0 {
            return Err(CliError::Usage("replicates must be at least 1".into()));
        }
        self.run.validate().map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Applies environment overrides for the seed and output directory.
    pub fn apply_env(&mut self) -> CliResult<()> {
        if let Ok(seed) = std::env::var(SEED_ENV) {
            let seed = seed
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV}={seed:?} is not an unsigned integer")))?;
            self.set_seed(seed);
        }
        if let Ok(out) = std::env::var(OUT_ENV) {
            self.out = Some(PathBuf::from(out));
        }
        Ok(())
    }

    /// Seeds both the sequential runs and the baseline starts.
    pub fn set_seed(&mut self, seed: u64) {
        self.run.seed = seed;
        self.baseline.seed = seed;
    }

    pub fn build(&self) -> CliResult<(Box<dyn GameProblem>, StrategyGrid)> {
        let problem = self.problem.build().map_err(|e| CliError::Usage(e.to_string()))?;
        let grid = build_factorial_grid(
            &problem.block_dims(),
            &problem.bounds(),
            &self.grid.counts,
            self.grid.scheme,
            self.grid.seed,
        )
        .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok((problem, grid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P1: &str = r#"
replicates = 2

[problem]
name = "p1"

[grid]
counts = [31, 31]

[run]
n0 = 6
n_max = 12
acquisition = "sur"

[run.cfg]
paths = 10
"#;

    #[test]
    fn parses_and_builds() {
        let exp = Experiment::parse(P1).unwrap();
        assert_eq!(exp.replicates, 2);
        assert_eq!(exp.run.cfg.paths, 10);
        assert_eq!(exp.run.cfg.obs_draws, 20);
        let (problem, grid) = exp.build().unwrap();
        assert_eq!(problem.name(), "p1");
        assert_eq!(grid.size(), 961);
    }

    #[test]
    fn unknown_key_is_named_with_its_line() {
        let text = P1.replace("n0 = 6", "n_0 = 6");
        let CliError::Usage(msg) = Experiment::parse(&text).unwrap_err() else {
            panic!("expected a usage error");
        };
        assert!(msg.contains("n_0"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn invalid_budget_is_a_usage_error() {
        let text = P1.replace("n_max = 12", "n_max = 6");
        assert!(matches!(Experiment::parse(&text), Err(CliError::Usage(_))));
    }
}
