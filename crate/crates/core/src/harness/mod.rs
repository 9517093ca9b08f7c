//! Meta-trials: run a scenario many times from a root seed, count failures,
//! and test the failure rate against the promised bound with an exact
//! one-sided binomial test.

mod binomial;
mod scenarios;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::coinlab::Seed;
use crate::estimator::EstimateError;
use crate::machines::MachineError;
use crate::numeric::{as_string, Rational};
use crate::oracle::OracleError;

pub use crate::estimator::chebyshev_bound;
pub use binomial::{binomial_p_value, binomial_upper_tail};
pub use scenarios::{find_scenario, registry, Scenario, ScenarioKind, MEMBER_MACHINE};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_ALPHA: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("scenario misconfigured: {0}")]
    Misconfigured(String),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TossTotals {
    pub total: u64,
    pub min_per_trial: u64,
    pub max_per_trial: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaTrialReport {
    pub schema_version: u32,
    pub experiment_id: String,
    pub trials: u64,
    pub failures: u64,
    #[serde(with = "as_string")]
    pub bound: Rational,
    pub alpha: f64,
    pub p_value: f64,
    pub pass: bool,
    pub root_seed: u64,
    pub toss_totals: TossTotals,
    pub slack_note: String,
    pub config: Value,
    pub wall_time_secs: f64,
}

impl MetaTrialReport {
    /// The report as JSON with `wall_time_secs` removed; equal runs give
    /// byte-identical strings.
    pub fn reproducible_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut value {
            map.remove("wall_time_secs");
        }
        serde_json::to_string(&value).expect("report serializes")
    }
}

/// Runs `trials` independent instances of `scenario`. Trial `t` draws its
/// randomness from `root_seed / scenario name / t`, so results do not depend
/// on scheduling.
pub fn run_meta_trials(
    scenario: &Scenario,
    trials: u64,
    alpha: f64,
    root_seed: u64,
) -> Result<MetaTrialReport, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::Misconfigured("at least one trial is needed".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(HarnessError::Misconfigured(format!("alpha {alpha} outside (0, 1)")));
    }
    let started = Instant::now();
    let prepared = scenario.prepare()?;
    let base = Seed(root_seed).split_named(&scenario.name);
    let outcomes = (0..trials).into_par_iter().map(|t| prepared.trial(base.split(t))).collect::<Result<Vec<_>, _>>()?;
    let failures = outcomes.iter().filter(|o| o.failed).count() as u64;
    let tosses = outcomes.iter().map(|o| o.tosses);
    let toss_totals = TossTotals {
        total: tosses.clone().sum(),
        min_per_trial: tosses.clone().min().unwrap_or(0),
        max_per_trial: tosses.max().unwrap_or(0),
    };
    let p_value = binomial_p_value(trials, failures, &scenario.bound);
    Ok(MetaTrialReport {
        schema_version: REPORT_SCHEMA_VERSION,
        experiment_id: scenario.name.clone(),
        trials,
        failures,
        bound: scenario.bound.clone(),
        alpha,
        p_value,
        pass: p_value > alpha,
        root_seed,
        toss_totals,
        slack_note: scenario.slack_note.to_string(),
        config: scenario.config(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Runs a registered scenario with its default trial count and alpha.
pub fn run_named(name: &str, root_seed: u64) -> Result<MetaTrialReport, HarnessError> {
    let scenario = find_scenario(name)?;
    run_meta_trials(&scenario, scenario.default_trials, scenario.default_alpha, root_seed)
}
