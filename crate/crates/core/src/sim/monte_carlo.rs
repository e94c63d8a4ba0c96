use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::reward::stream_seed;

use super::closed_loop::{run_closed_loop, Policy, RunOptions, RunResult};
use super::scenario::{init_search_set, sample_truth, Scenario, SearchSet, TruthModel};

const TRUTH_STREAM: u64 = 1;
const RUN_STREAM: u64 = 2;

/// Quantile with linear interpolation between order statistics.
///
/// Infinite values sort last; a quantile landing on or between two infinite
/// values is infinite.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    let frac = pos - lo as f64;
    if lo == hi || frac == 0.0 || v[lo] == v[hi] {
        return v[lo];
    }
    v[lo] + frac * (v[hi] - v[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileBand {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

impl QuantileBand {
    pub fn of(values: &[f64]) -> Self {
        Self { q25: quantile(values, 0.25), median: quantile(values, 0.5), q75: quantile(values, 0.75) }
    }
}

/// Per-scan quantiles across trials for one policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyAggregate {
    pub policy: Policy,
    pub divergence: Vec<QuantileBand>,
    pub cardinality_error: Vec<QuantileBand>,
    /// Trials whose final scan has no track outside the truth gates.
    pub trials_without_false_tracks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McAggregate {
    pub n_trials: usize,
    pub policies: Vec<PolicyAggregate>,
}

/// Aggregate plus every individual run, indexed `[trial][policy]`.
#[derive(Debug, Clone)]
pub struct McOutcome {
    pub aggregate: McAggregate,
    pub runs: Vec<Vec<RunResult>>,
}

/// Truth realization of Monte-Carlo trial `trial`.
pub fn trial_truth(s: &Scenario, search: &SearchSet, trial: usize) -> Result<TruthModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(s.seed, trial as u64, TRUTH_STREAM));
    sample_truth(s, search, &mut rng)
}

/// Measurement and reward seed of Monte-Carlo trial `trial`.
pub fn trial_seed(s: &Scenario, trial: usize) -> u64 {
    stream_seed(s.seed, trial as u64, RUN_STREAM)
}

/// Runs every policy on `n_trials` independent truth realizations.
///
/// Trial `t` draws its truth and measurement streams from `(s.seed, t)`, so
/// all policies see the same objects and the same noise.
pub fn monte_carlo(s: &Scenario, policies: &[Policy], n_trials: usize) -> Result<McOutcome> {
    if n_trials == 0 || policies.is_empty() {
        return Err(Error::InvalidArgument("Monte-Carlo needs at least one trial and one policy".into()));
    }
    let search = init_search_set(s)?;
    let runs: Vec<Vec<RunResult>> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let truth = trial_truth(s, &search, trial)?;
            let seed = trial_seed(s, trial);
            policies
                .iter()
                .map(|&p| run_closed_loop(s, &search, &truth, p, seed, RunOptions::default()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let policies = policies
        .iter()
        .enumerate()
        .map(|(k, &policy)| {
            let column = |f: &dyn Fn(&super::ScanRecord) -> f64| -> Vec<QuantileBand> {
                (0..s.n_scans).map(|scan| QuantileBand::of(&runs.iter().map(|r| f(&r[k].records[scan])).collect::<Vec<_>>())).collect()
            };
            PolicyAggregate {
                policy,
                divergence: column(&|r| r.divergence),
                cardinality_error: column(&|r| r.cardinality_error),
                trials_without_false_tracks: runs
                    .iter()
                    .filter(|r| r[k].records.last().is_some_and(|x| x.false_tracks == 0))
                    .count(),
            }
        })
        .collect();
    Ok(McOutcome { aggregate: McAggregate { n_trials, policies }, runs })
}
