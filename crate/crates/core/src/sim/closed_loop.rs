use std::time::Instant;

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::astro::{wrap_two_pi, AngleMeasurement, TwoBody};
use crate::cphd::{
    angle_residual, clutter_in_fov, clutter_intensity, log_sum_exp, predict, update, ClutterModel, CphdState,
    DetectionModel, MeasurementSet,
};
use crate::error::{Error, Result};
use crate::gmm::{prune_and_merge, project_to_for, recursive_fov_split, GaussianMixture, MeasurementMap, RaDecSensor};
use crate::linalg::log_gaussian;
use crate::reward::{select_action, stream_seed, Action, RewardConfig, RewardContext};

use super::metrics::{cardinality_error, divergence_metric, false_tracks};
use super::scenario::{Scenario, SearchSet, TruthModel};

const MEASUREMENT_STREAM: u64 = u64::MAX - 1;

/// Weight above which a posterior component counts as a track.
pub const TRACK_WEIGHT: f64 = 0.5;

/// Sensor-tasking policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Maximize the expected Rényi divergence.
    Information,
    /// Cycle through cells in order of decreasing prior intensity.
    Scanning,
}

impl Policy {
    pub fn label(self) -> &'static str {
        match self {
            Policy::Information => "info",
            Policy::Scanning => "scan",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "info" | "information" => Ok(Policy::Information),
            "scan" | "scanning" => Ok(Policy::Scanning),
            other => Err(Error::InvalidArgument(format!("unknown policy `{other}`, expected info or scan"))),
        }
    }
}

/// Diagnostics kept beyond the per-scan metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Evaluate and keep the full reward map every scan, whatever the policy.
    pub record_rewards: bool,
    /// Keep the projected intensity and cardinality PMF of every scan.
    pub record_snapshots: bool,
}

/// Metrics of one scan, taken after the measurement update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRecord {
    pub scan: usize,
    pub epoch_s: f64,
    pub action: usize,
    pub pointing_ra: f64,
    pub pointing_dec: f64,
    pub n_measurements: usize,
    pub n_target_returns: usize,
    pub n_clutter_returns: usize,
    /// Measurements discarded because no model component could explain them.
    pub n_dropped: usize,
    pub divergence: f64,
    pub expected_cardinality: f64,
    pub map_cardinality: usize,
    pub cardinality_error: f64,
    pub components: usize,
    pub false_tracks: usize,
    pub wall_time_s: f64,
}

/// Per-scan data products for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSnapshot {
    pub rewards: Option<Vec<f64>>,
    /// Posterior intensity mass per grid cell.
    pub projected_mass: Vec<f64>,
    pub cardinality: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub policy: Policy,
    pub records: Vec<ScanRecord>,
    pub snapshots: Vec<ScanSnapshot>,
    pub final_state: CphdState<6>,
}

/// Returns generated by the truth objects during one scan.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthReturns {
    pub set: MeasurementSet,
    pub n_target: usize,
    pub n_clutter: usize,
}

/// One Bernoulli trial per object; objects whose projection is in the FOV
/// return h(x) plus Gaussian noise on success.
///
/// Every object consumes the same random draws whether or not it is seen, so
/// a fixed stream yields the same realization for any pointing.
pub fn truth_measurements<R: Rng + ?Sized>(
    truth: &TruthModel,
    action: &Action,
    p_d: f64,
    noise: &Matrix2<f64>,
    sensor: &RaDecSensor,
    epoch: crate::astro::Epoch,
    rng: &mut R,
) -> Result<TruthReturns> {
    let chol = noise.cholesky().ok_or(Error::IllConditioned("measurement noise"))?;
    let mut measurements = Vec::new();
    let mut counts = [0usize; 2];
    for (kind, objects) in [&truth.targets, &truth.clutter].into_iter().enumerate() {
        for x in objects {
            let u: f64 = rng.random();
            let e = Vector2::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            let z = sensor.eval(&x.to_vector())?;
            if u < p_d && action.fov.contains(&z) {
                let zn = z + chol.l() * e;
                measurements.push(AngleMeasurement { ra: wrap_two_pi(zn.x), dec: zn.y });
                counts[kind] += 1;
            }
        }
    }
    Ok(TruthReturns {
        set: MeasurementSet { measurements, epoch, noise: *noise },
        n_target: counts[0],
        n_clutter: counts[1],
    })
}

/// Log-density of the best explanations of `z`: detectable components with
/// their projected covariance plus noise, and catalog objects.
fn explanation_score(
    z: &Vector2<f64>,
    mix: &GaussianMixture<6>,
    det: &DetectionModel<RaDecSensor>,
    kappa_fov: &GaussianMixture<2>,
    noise: &Matrix2<f64>,
) -> f64 {
    let density = |mean: &Vector2<f64>, cov: &Matrix2<f64>| log_gaussian(&(mean + angle_residual(z, mean)), mean, cov).ok();
    let mut terms: Vec<f64> = mix
        .components
        .iter()
        .filter(|c| c.weight > 0.0)
        .filter_map(|c| {
            let (mu, p) = project_to_for(c, &det.sensor).ok()?;
            det.fov.contains(&mu).then(|| density(&mu, &(p + noise)).map(|d| c.weight.ln() + d))?
        })
        .collect();
    terms.extend(kappa_fov.components.iter().filter_map(|c| density(&c.mean, &c.cov)));
    log_sum_exp(&terms)
}

/// CPHD update that discards, one at a time, the measurements least
/// explained by the model whenever the update is inconsistent.
pub fn robust_update(
    state: &CphdState<6>,
    z: &MeasurementSet,
    det: &DetectionModel<RaDecSensor>,
    clutter: &ClutterModel,
) -> Result<(CphdState<6>, usize)> {
    let mut z = z.clone();
    let mut dropped = 0;
    loop {
        match update(state, &z, det, clutter) {
            Err(Error::InconsistentModel) if !z.is_empty() => {
                let kappa = clutter_in_fov(&clutter_intensity(clutter, &det.sensor.observer, &z.noise)?, &det.fov);
                let scores: Vec<f64> = z
                    .measurements
                    .iter()
                    .map(|m| explanation_score(&m.to_vector(), &state.intensity, det, &kappa, &z.noise))
                    .collect();
                let worst = (0..scores.len()).min_by(|&a, &b| scores[a].total_cmp(&scores[b])).expect("nonempty set");
                log::warn!("dropping measurement {worst}: neither the intensity nor the catalog explains it");
                z.measurements.remove(worst);
                dropped += 1;
            }
            other => return other.map(|s| (s, dropped)),
        }
    }
}

/// Prediction that discards components whose sigma points leave bound
/// orbits; the surviving weights are rescaled to the input total.
///
/// Returns the predicted state and the number of discarded components.
pub fn robust_predict(state: &CphdState<6>, dt: f64, propagator: &TwoBody) -> Result<(CphdState<6>, usize)> {
    let total = state.intensity.total_weight();
    let mut current = state.clone();
    let mut dropped = 0;
    loop {
        match predict(&current, dt, propagator) {
            Err(Error::ComponentPropagation { index, source }) if matches!(*source, Error::NonElliptical { .. }) => {
                log::warn!("dropping component {index} (weight {:e}): {source}", current.intensity.components[index].weight);
                current.intensity.components.remove(index);
                let left = current.intensity.total_weight();
                if left > 0.0 {
                    current.intensity.scale_weights(total / left);
                }
                dropped += 1;
            }
            other => return other.map(|s| (s, dropped)),
        }
    }
}

fn choose_action(
    policy: Policy,
    scan: usize,
    search: &SearchSet,
    actions: &[Action],
    ctx: Option<&RewardContext>,
    cfg: &RewardConfig,
) -> Result<(usize, Option<Vec<f64>>)> {
    let scanning = search.scan_order[scan % search.scan_order.len()];
    let rewards = match ctx {
        Some(ctx) => Some(select_action(actions, ctx, cfg)?),
        None => None,
    };
    Ok(match (policy, rewards) {
        (Policy::Information, Some((best, r))) => (best, Some(r)),
        (_, r) => (scanning, r.map(|x| x.1)),
    })
}

/// Runs `s.n_scans` scans of select, observe, split, update, prune, record
/// and predict.
///
/// `truth` holds the objects at the first follow-up scan. `trial_seed` fixes
/// the measurement and reward random streams, which do not depend on the
/// policy.
pub fn run_closed_loop(
    s: &Scenario,
    search: &SearchSet,
    truth: &TruthModel,
    policy: Policy,
    trial_seed: u64,
    opts: RunOptions,
) -> Result<RunResult> {
    let propagator = TwoBody::default();
    let actions = search.grid.actions();
    let noise = s.noise();
    let cfg = RewardConfig { seed: stream_seed(s.reward.seed, trial_seed, 0), ..s.reward };
    let mut state = search.initial.clone();
    let mut clutter = truth.catalog(s);
    let mut records = Vec::with_capacity(s.n_scans);
    let mut snapshots = Vec::new();

    for scan in 0..s.n_scans {
        let started = Instant::now();
        let wrap = |e: Error| Error::Scan { scan, source: Box::new(e) };
        let epoch = s.scan_epoch(scan);
        let sensor = s.followup_sensor(scan);
        let truth_now = truth.propagated(epoch.seconds() - s.followup_start().seconds()).map_err(wrap)?;

        let wants_rewards = policy == Policy::Information || opts.record_rewards;
        let ctx = if wants_rewards && state.intensity.total_weight() > 0.0 {
            let kappa = clutter_intensity(&clutter, &sensor.observer, &noise).map_err(wrap)?;
            Some(
                RewardContext::prepare(&state.intensity, &state.cardinality, &sensor, kappa, s.p_d, s.p_d, noise, &cfg, scan as u64)
                    .map_err(wrap)?,
            )
        } else {
            None
        };
        let (action_index, rewards) = choose_action(policy, scan, search, &actions, ctx.as_ref(), &cfg).map_err(wrap)?;
        drop(ctx);
        let action = actions[action_index];

        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(trial_seed, scan as u64, MEASUREMENT_STREAM));
        let returns = truth_measurements(&truth_now, &action, s.p_d, &noise, &sensor, epoch, &mut rng).map_err(wrap)?;

        let det = DetectionModel { p_d: s.p_d, fov: action.fov, sensor };
        let split = recursive_fov_split(&state.intensity, &action.fov, &sensor, &s.split).map_err(wrap)?;
        let (posterior, n_dropped) =
            robust_update(&CphdState::new(split, state.cardinality.clone()), &returns.set, &det, &clutter).map_err(wrap)?;
        state = posterior;
        state.intensity = prune_and_merge(&state.intensity, &s.prune);

        let n_star = truth_now.targets.len();
        records.push(ScanRecord {
            scan,
            epoch_s: epoch.seconds(),
            action: action_index,
            pointing_ra: action.pointing.x,
            pointing_dec: action.pointing.y,
            n_measurements: returns.set.len(),
            n_target_returns: returns.n_target,
            n_clutter_returns: returns.n_clutter,
            n_dropped,
            divergence: divergence_metric(&state, &truth_now.targets),
            expected_cardinality: state.expected_cardinality(),
            map_cardinality: state.map_cardinality(),
            cardinality_error: cardinality_error(&state.cardinality, n_star),
            components: state.intensity.len(),
            false_tracks: false_tracks(&state, &truth_now.targets, &sensor, &noise, TRACK_WEIGHT).map_err(wrap)?,
            wall_time_s: 0.0,
        });
        if opts.record_snapshots || opts.record_rewards {
            snapshots.push(ScanSnapshot {
                rewards,
                projected_mass: if opts.record_snapshots {
                    search.grid.projected_mass(&state.intensity, &sensor).map_err(wrap)?
                } else {
                    Vec::new()
                },
                cardinality: state.cardinality.probs().to_vec(),
            });
        }

        if scan + 1 < s.n_scans {
            state = robust_predict(&state, s.scan_dt_s, &propagator).map_err(wrap)?.0;
            clutter = clutter.propagate(s.scan_dt_s, &propagator).map_err(wrap)?;
        }
        records.last_mut().expect("just pushed").wall_time_s = started.elapsed().as_secs_f64();
        log::debug!("{} scan {scan}: action {action_index}, {} returns, {} components", policy.label(), returns.set.len(), state.intensity.len());
    }
    Ok(RunResult { policy, records, snapshots, final_state: state })
}
