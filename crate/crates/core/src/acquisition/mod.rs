//! Acquisition criteria: probability of equilibrium, the SUR criterion, and
//! the cheap scores used to pick simulation and candidate subsets.

mod pe;
mod scores;
mod sur;

pub use pe::{prob_equilibrium, PeEvaluator};
pub use scores::{box_score, score_box, score_target, select_subset, target_score, EquilibriumTarget};
pub use sur::{gamma_hat, simulated_equilibria, sur_criterion, SimulatedEquilibria, SurEvaluator};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionConfig {
    /// Posterior draws `M` used for `Γ̂`.
    pub paths: usize,
    /// Observation draws `K` averaged in `Ĵ`.
    pub obs_draws: usize,
    /// Samples `R` of the Monte-Carlo estimate of `P_i`.
    pub mc_samples: usize,
    /// Largest `m_i − 1` for which `P_i` uses the exact Gaussian CDF.
    pub cdf_switch: usize,
    pub cdf_accuracy: f64,
    pub n_sim: usize,
    pub n_cand: usize,
    pub seed: u64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            paths: 20,
            obs_draws: 20,
            mc_samples: 512,
            cdf_switch: 20,
            cdf_accuracy: 1e-3,
            n_sim: 1296,
            n_cand: 256,
            seed: 0,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 || self.obs_draws == 0 || self.mc_samples == 0 {
            return Err(invalid("draw counts must be positive"));
        }
        if self.n_sim == 0 || self.n_cand == 0 {
            return Err(invalid("subset sizes must be positive"));
        }
        if self.n_cand > self.n_sim {
            return Err(invalid("n_cand must not exceed n_sim"));
        }
        if !(self.cdf_accuracy > 0.0) {
            return Err(invalid("cdf_accuracy must be positive"));
        }
        Ok(())
    }
}
