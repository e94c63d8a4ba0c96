use nalgebra::{Matrix2, Matrix4, SMatrix, SVector, Vector2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::admissible::{build_ar_gmm, ArConstraints, ArGridSpec, AttributableVector};
use crate::astro::{
    kepler_to_cartesian, measure_radec, propagate_two_body, site_state, wrap_pi, wrap_two_pi, Epoch, KeplerianElements,
    ObserverSite, StateVector, TwoBody, MU_EARTH, OMEGA_EARTH,
};
use crate::cphd::{predict, CardinalityPmf, ClutterModel, CphdState};
use crate::error::{Error, Result};
use crate::gmm::{prune_and_merge, GaussianMixture, MeasurementMap, PruneConfig, RaDecSensor, SplitConfig};
use crate::reward::{sample_gaussian, stream_seed, RewardConfig};

use super::grid::{scan_order, ActionGrid};

pub const ARCSEC: f64 = std::f64::consts::PI / (180.0 * 3600.0);

/// Prior distribution of the number of targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CardinalityPrior {
    Poisson { mean: f64 },
    Uniform { min: usize, max: usize },
}

impl CardinalityPrior {
    pub fn pmf(&self, n_max: usize) -> Result<CardinalityPmf> {
        match *self {
            Self::Poisson { mean } => CardinalityPmf::poisson(mean, n_max),
            Self::Uniform { min, max } => CardinalityPmf::uniform(min, max, n_max),
        }
    }
}

/// Complete description of one test case.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub initial_site: ObserverSite,
    pub followup_site: ObserverSite,
    /// Sidereal angle of the prime meridian at the reference epoch, degrees.
    pub earth_rotation_deg: f64,
    pub detection_epoch: Epoch,
    /// Delay from detection to the first follow-up scan.
    pub cutout_hours: f64,
    pub fov_deg: f64,
    pub meas_noise_arcsec: f64,
    pub p_d: f64,
    pub n_scans: usize,
    pub scan_dt_s: f64,
    pub ar: ArConstraints,
    pub ar_n_rho: usize,
    pub ar_n_rho_rate: usize,
    /// Time between the two detections differenced into angle rates, seconds.
    pub rate_span_s: f64,
    pub truth_elements: KeplerianElements,
    pub n_targets: usize,
    pub n_clutter: usize,
    pub cardinality_prior: CardinalityPrior,
    pub n_max: usize,
    /// Catalog position and velocity standard deviations (km, km/s).
    pub catalog_sigma_km: f64,
    pub catalog_sigma_kms: f64,
    /// Standard deviations added around projected means when sizing the action grid.
    pub grid_margin_sigma: f64,
    pub split: SplitConfig,
    pub prune: PruneConfig,
    pub reward: RewardConfig,
    pub seed: u64,
}

/// Split settings for the closed loop. Two levels bound a pruned mixture of
/// `closed_loop_prune().max_components` to nine times that size.
fn closed_loop_split() -> SplitConfig {
    SplitConfig { max_depth: 2, ..SplitConfig::default() }
}

/// Merging at one sigma folds back siblings that received the same update.
fn closed_loop_prune() -> PruneConfig {
    PruneConfig { weight_floor: 1e-6, merge_distance: 1.0, max_components: 1000 }
}

impl Scenario {
    /// GTO target seen from Socorro, followed up from Maui two hours later.
    pub fn case1() -> Self {
        Self {
            name: "case1".into(),
            initial_site: ObserverSite { latitude: 34.0584, longitude: -106.8914, altitude: 0.0 },
            followup_site: ObserverSite { latitude: 20.7, longitude: -156.3, altitude: 0.0 },
            earth_rotation_deg: 272.937_063,
            detection_epoch: Epoch(0.0),
            cutout_hours: 2.0,
            fov_deg: 6.0,
            meas_noise_arcsec: 3.0,
            p_d: 0.75,
            n_scans: 30,
            scan_dt_s: 15.0,
            ar: ArConstraints { e_min: 0.0, e_max: 0.7, a_min: 20_000.0, a_max: 42_000.0, r_periapsis_min: 6578.137 },
            ar_n_rho: 200,
            ar_n_rho_rate: 100,
            rate_span_s: 60.0,
            truth_elements: KeplerianElements::from_degrees(25_447.5, 0.66, 1.0, 0.001, 0.001, 240.0),
            n_targets: 2,
            n_clutter: 10,
            cardinality_prior: CardinalityPrior::Poisson { mean: 3.0 },
            n_max: 40,
            catalog_sigma_km: 0.5,
            catalog_sigma_kms: 0.5e-3,
            grid_margin_sigma: 4.0,
            split: closed_loop_split(),
            prune: closed_loop_prune(),
            reward: RewardConfig::default(),
            seed: 1,
        }
    }

    /// GEO target seen from Diego Garcia, followed up from Ascension five hours later.
    pub fn case2() -> Self {
        Self {
            name: "case2".into(),
            initial_site: ObserverSite { latitude: -7.3195, longitude: 72.4229, altitude: 0.0 },
            followup_site: ObserverSite { latitude: -7.90663, longitude: -14.40258, altitude: 0.0 },
            earth_rotation_deg: 138.553_093,
            cutout_hours: 5.0,
            n_scans: 80,
            ar: ArConstraints { e_min: 0.0, e_max: 0.35, a_min: 10_000.0, a_max: 45_000.0, r_periapsis_min: 6578.137 },
            truth_elements: KeplerianElements::from_degrees(42_259.0, 0.001, 5.0, 0.001, 0.001, 135.0),
            n_targets: 10,
            n_clutter: 15,
            cardinality_prior: CardinalityPrior::Uniform { min: 0, max: 19 },
            ..Self::case1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.n_scans == 0 {
            return bad("n_scans must be positive");
        }
        if !(self.scan_dt_s > 0.0) {
            return bad("scan_dt_s must be positive");
        }
        if !(self.p_d > 0.0 && self.p_d <= 1.0) {
            return bad("p_d must lie in (0, 1]");
        }
        if !(self.fov_deg > 0.0 && self.fov_deg <= 360.0) {
            return bad("fov_deg must lie in (0, 360]");
        }
        if !(self.meas_noise_arcsec > 0.0) || !(self.rate_span_s > 0.0) || !(self.cutout_hours >= 0.0) {
            return bad("noise, rate span and cutout must be positive");
        }
        if !(self.catalog_sigma_km > 0.0 && self.catalog_sigma_kms > 0.0) {
            return bad("catalog sigmas must be positive");
        }
        let c = &self.ar;
        if !(0.0 <= c.e_min && c.e_min < c.e_max && c.e_max < 1.0 && 0.0 < c.a_min && c.a_min < c.a_max) {
            return bad("admissible-region bounds must satisfy 0 <= e_min < e_max < 1 and 0 < a_min < a_max");
        }
        for site in [&self.initial_site, &self.followup_site] {
            ObserverSite::new(site.latitude, site.longitude, site.altitude)?;
        }
        if self.n_max < self.n_targets {
            return bad("n_max must be at least n_targets");
        }
        self.cardinality_prior.pmf(self.n_max)?;
        self.reward.validate()
    }

    pub fn followup_start(&self) -> Epoch {
        self.detection_epoch.offset(self.cutout_hours * 3600.0)
    }

    pub fn scan_epoch(&self, scan: usize) -> Epoch {
        self.followup_start().offset(scan as f64 * self.scan_dt_s)
    }

    pub fn fov_rad(&self) -> f64 {
        self.fov_deg.to_radians()
    }

    pub fn noise(&self) -> Matrix2<f64> {
        Matrix2::identity() * (self.meas_noise_arcsec * ARCSEC).powi(2)
    }

    /// Inertial state of `site` at scenario time `t`.
    pub fn site_at(&self, site: &ObserverSite, t: Epoch) -> StateVector {
        site_state(site, t.offset(self.earth_rotation_deg.to_radians() / OMEGA_EARTH))
    }

    pub fn followup_sensor(&self, scan: usize) -> RaDecSensor {
        RaDecSensor { observer: self.site_at(&self.followup_site, self.scan_epoch(scan)) }
    }

    pub fn truth_state(&self) -> Result<StateVector> {
        let sv = kepler_to_cartesian(&self.truth_elements, MU_EARTH)?;
        propagate_two_body(&sv, self.detection_epoch.seconds(), MU_EARTH)
    }

    fn catalog_covariance(&self) -> SMatrix<f64, 6, 6> {
        let p = self.catalog_sigma_km.powi(2);
        let v = self.catalog_sigma_kms.powi(2);
        SMatrix::from_diagonal(&SVector::from_column_slice(&[p, p, p, v, v, v]))
    }
}

fn noisy_angles<R: Rng + ?Sized>(target: &StateVector, observer: &StateVector, sigma: f64, rng: &mut R) -> Result<Vector2<f64>> {
    let z = measure_radec(target, observer)?;
    let e: Vector2<f64> = Vector2::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal) * sigma);
    Ok(Vector2::new(wrap_two_pi(z.ra + e.x), z.dec + e.y))
}

/// Attributable of the truth object from two noisy detections `rate_span_s`
/// apart at the initial site; rates are their finite difference.
pub fn make_attributable<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> Result<AttributableVector> {
    let sigma = s.meas_noise_arcsec * ARCSEC;
    let span = s.rate_span_s;
    let t0 = s.detection_epoch;
    let truth = s.truth_state()?;
    let observer = s.site_at(&s.initial_site, t0);
    let z0 = noisy_angles(&truth, &observer, sigma, rng)?;
    let later = propagate_two_body(&truth, span, MU_EARTH)?;
    let z1 = noisy_angles(&later, &s.site_at(&s.initial_site, t0.offset(span)), sigma, rng)?;
    let rate_var = (2.0 * sigma / span).powi(2);
    Ok(AttributableVector {
        ra: z0.x,
        dec: z0.y,
        ra_rate: wrap_pi(z1.x - z0.x) / span,
        dec_rate: (z1.y - z0.y) / span,
        epoch: t0,
        observer,
        noise: Matrix4::from_diagonal(&nalgebra::Vector4::new(sigma * sigma, sigma * sigma, rate_var, rate_var)),
    })
}

/// Search set shared by every trial of a scenario.
#[derive(Debug, Clone)]
pub struct SearchSet {
    pub attributable: AttributableVector,
    /// Admissible-region mixture at the detection epoch.
    pub ar_gmm: GaussianMixture<6>,
    /// Filter state at the first follow-up scan.
    pub initial: CphdState<6>,
    pub grid: ActionGrid,
    /// Scanning-baseline visiting order over `grid`.
    pub scan_order: Vec<usize>,
}

/// Builds the admissible-region mixture, predicts it to the follow-up start
/// and lays the action grid over its projection.
pub fn init_search_set(s: &Scenario) -> Result<SearchSet> {
    s.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(s.seed, u64::MAX, 0));
    let attributable = make_attributable(s, &mut rng)?;
    let cardinality = s.cardinality_prior.pmf(s.n_max)?;
    let grid_spec = ArGridSpec::default_for(&attributable, &s.ar, s.ar_n_rho, s.ar_n_rho_rate);
    let ar_gmm = build_ar_gmm(&attributable, &s.ar, &grid_spec, cardinality.mean())?;
    let at_detection = CphdState::new(ar_gmm.clone(), cardinality);
    let dt = s.followup_start().seconds() - s.detection_epoch.seconds();
    let mut initial = predict(&at_detection, dt, &TwoBody::default())?;
    initial.intensity = prune_and_merge(&initial.intensity, &s.prune);
    let sensor = s.followup_sensor(0);
    let grid = ActionGrid::covering(&initial.intensity, &sensor, s.fov_rad(), s.grid_margin_sigma)?;
    let scan_order = scan_order(&grid, &initial.intensity, &sensor)?;
    Ok(SearchSet { attributable, ar_gmm, initial, grid, scan_order })
}

/// Ground-truth targets and catalog objects at the first follow-up scan.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthModel {
    pub targets: Vec<StateVector>,
    pub clutter: Vec<StateVector>,
}

impl TruthModel {
    /// Truth states `dt` seconds after the first follow-up scan.
    pub fn propagated(&self, dt: f64) -> Result<TruthModel> {
        let prop = |v: &Vec<StateVector>| v.iter().map(|x| propagate_two_body(x, dt, MU_EARTH)).collect::<Result<Vec<_>>>();
        Ok(TruthModel { targets: prop(&self.targets)?, clutter: prop(&self.clutter)? })
    }

    /// Known-object catalog built from the clutter states.
    pub fn catalog(&self, s: &Scenario) -> ClutterModel {
        let cov = s.catalog_covariance();
        ClutterModel::new(self.clutter.iter().map(|x| (x.to_vector(), cov)), s.p_d)
    }
}

const MAX_REJECTIONS: usize = 10_000;

/// Draws `n` states from `mix` that satisfy the admissible-region constraints.
pub fn sample_admissible<R: Rng + ?Sized>(
    mix: &GaussianMixture<6>,
    c: &ArConstraints,
    n: usize,
    rng: &mut R,
) -> Result<Vec<StateVector>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let picker = WeightedIndex::new(mix.components.iter().map(|c| c.weight.max(0.0))).map_err(|_| Error::ZeroWeight)?;
    let chols = mix
        .components
        .iter()
        .map(|c| c.cov.cholesky().ok_or(Error::IllConditioned("admissible-region component covariance")))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n {
        let k = picker.sample(rng);
        let sv = StateVector::from_vector(&sample_gaussian(&mix.components[k].mean, &chols[k], rng));
        if c.accepts_state(&sv) {
            out.push(sv);
        } else {
            tries += 1;
            if tries > MAX_REJECTIONS * n {
                return Err(Error::EmptyAdmissibleRegion);
            }
        }
    }
    Ok(out)
}

/// Samples a truth realization from the admissible-region mixture at the
/// detection epoch and carries it to the first follow-up scan.
pub fn sample_truth<R: Rng + ?Sized>(s: &Scenario, search: &SearchSet, rng: &mut R) -> Result<TruthModel> {
    let targets = sample_admissible(&search.ar_gmm, &s.ar, s.n_targets, rng)?;
    let clutter = sample_admissible(&search.ar_gmm, &s.ar, s.n_clutter, rng)?;
    let at_detection = TruthModel { targets, clutter };
    at_detection.propagated(s.followup_start().seconds() - s.detection_epoch.seconds())
}

/// One trial's starting point.
#[derive(Debug, Clone)]
pub struct Initialized {
    pub state: CphdState<6>,
    pub clutter: ClutterModel,
    pub truth: TruthModel,
    pub grid: ActionGrid,
    pub scan_order: Vec<usize>,
}

/// Search set plus a truth realization drawn from `rng`.
pub fn init_scenario<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> Result<Initialized> {
    let search = init_search_set(s)?;
    let truth = sample_truth(s, &search, rng)?;
    Ok(Initialized {
        state: search.initial,
        clutter: truth.catalog(s),
        grid: search.grid,
        scan_order: search.scan_order,
        truth,
    })
}

/// Projection of a state into the follow-up sensor's (ra, dec).
pub fn project_state(sensor: &RaDecSensor, sv: &StateVector) -> Result<Vector2<f64>> {
    sensor.eval(&sv.to_vector())
}
