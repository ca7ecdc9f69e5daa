//! Run configuration shared by every experiment.

use std::path::PathBuf;
use std::time::Duration;

use legible_core::lmdp::{UctConfig, DEFAULT_OBSERVER_ETA};
use legible_core::mdp::{DEFAULT_DISCOUNT, DEFAULT_TOLERANCE};

use crate::error::BenchError;

pub const DESK_SAMPLES: usize = 10;
pub const DESK_TIMEOUT_SECS: f64 = 300.0;
pub const DESK_QUOTA: usize = 5;
pub const DESK_IRL_SCENARIOS: usize = 50;

pub const PAPER_SAMPLES: usize = 250;
pub const PAPER_TIMEOUT_SECS: f64 = 7200.0;
pub const PAPER_QUOTA: usize = 100;
pub const PAPER_IRL_SCENARIOS: usize = 250;

pub const DEFAULT_LEARNER_ETA: f64 = 10.0;
pub const DEFAULT_POOL_SIZE: usize = 37;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub seed: u64,
    pub beta: f64,
    pub gamma: f64,
    /// Observer rationality used by the belief model and the Miura metric.
    pub eta: f64,
    /// Learner rationality used by goal inference in the IRL curves.
    pub learner_eta: f64,
    pub timeout: Duration,
    pub samples: usize,
    pub quota: usize,
    pub irl_scenarios: usize,
    pub solver_tolerance: f64,
    pub uct: UctConfig,
    pub out_dir: PathBuf,
}

impl BenchConfig {
    pub fn desk() -> Self {
        Self {
            seed: 0,
            beta: 1.0,
            gamma: DEFAULT_DISCOUNT,
            eta: DEFAULT_OBSERVER_ETA,
            learner_eta: DEFAULT_LEARNER_ETA,
            timeout: Duration::from_secs_f64(DESK_TIMEOUT_SECS),
            samples: DESK_SAMPLES,
            quota: DESK_QUOTA,
            irl_scenarios: DESK_IRL_SCENARIOS,
            solver_tolerance: DEFAULT_TOLERANCE,
            uct: UctConfig::default(),
            out_dir: PathBuf::from("results"),
        }
    }

    pub fn paper_scale() -> Self {
        Self {
            timeout: Duration::from_secs_f64(PAPER_TIMEOUT_SECS),
            samples: PAPER_SAMPLES,
            quota: PAPER_QUOTA,
            irl_scenarios: PAPER_IRL_SCENARIOS,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: &str| Err(BenchError::Config(msg.to_string()));
        if self.timeout.is_zero() {
            return bad("timeout must be positive");
        }
        if self.samples == 0 {
            return bad("sample count must be at least 1");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return bad("beta must be finite and non-negative");
        }
        if !(self.eta >= 0.0) || !(self.learner_eta > 0.0) {
            return bad("eta must be non-negative and learner eta positive");
        }
        self.uct.validate().map_err(|e| BenchError::Config(e.to_string()))
    }

    /// Seed for one (configuration, sample) pair.
    pub fn sample_seed(&self, config_index: usize, sample_id: usize) -> u64 {
        self.seed
            .wrapping_mul(1_000_003)
            .wrapping_add((config_index as u64) << 20)
            .wrapping_add(sample_id as u64)
    }
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self::desk()
    }
}
