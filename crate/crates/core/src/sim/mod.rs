//! Scenarios, truth models, closed-loop tasking runs and Monte-Carlo
//! comparison of the information-driven policy against a scanning baseline.

mod closed_loop;
mod grid;
mod metrics;
mod monte_carlo;
mod scenario;

pub use closed_loop::{
    robust_predict, robust_update, run_closed_loop, truth_measurements, Policy, RunOptions, RunResult, ScanRecord, ScanSnapshot,
    TruthReturns, TRACK_WEIGHT,
};
pub use grid::{order_by_mass, scan_order, ActionGrid};
pub use metrics::{cardinality_error, divergence_metric, false_tracks, gate_99};
pub use monte_carlo::{monte_carlo, quantile, trial_seed, trial_truth, McAggregate, McOutcome, PolicyAggregate, QuantileBand};
pub use scenario::{
    init_scenario, init_search_set, make_attributable, project_state, sample_admissible, sample_truth, CardinalityPrior,
    Initialized, Scenario, SearchSet, TruthModel, ARCSEC,
};
