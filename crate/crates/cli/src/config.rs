//! TOML scenario files.
//!
//! Every key is required and unknown keys are rejected. Errors carry the
//! dotted key path.

use acquire_core::admissible::ArConstraints;
use acquire_core::astro::{Epoch, KeplerianElements, ObserverSite};
use acquire_core::gmm::{PruneConfig, SplitConfig};
use acquire_core::reward::RewardConfig;
use acquire_core::sim::{CardinalityPrior, Scenario};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub seed: u64,
    pub sites: Sites,
    pub timing: Timing,
    pub sensor: Sensor,
    pub admissible_region: AdmissibleRegion,
    pub truth: Truth,
    pub cardinality: Cardinality,
    pub search: Search,
    pub reward: RewardConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sites {
    pub initial: ObserverSite,
    pub followup: ObserverSite,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub earth_rotation_deg: f64,
    pub detection_epoch_s: f64,
    pub cutout_hours: f64,
    pub n_scans: usize,
    pub scan_dt_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensor {
    pub fov_deg: f64,
    pub meas_noise_arcsec: f64,
    pub p_d: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibleRegion {
    pub e_min: f64,
    pub e_max: f64,
    pub a_min_km: f64,
    pub a_max_km: f64,
    pub r_periapsis_min_km: f64,
    pub n_rho: usize,
    pub n_rho_rate: usize,
    pub rate_span_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Elements {
    pub a_km: f64,
    pub e: f64,
    pub i_deg: f64,
    pub raan_deg: f64,
    pub argp_deg: f64,
    pub true_anomaly_deg: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    pub elements: Elements,
    pub n_targets: usize,
    pub n_clutter: usize,
    pub catalog_sigma_km: f64,
    pub catalog_sigma_kms: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cardinality {
    pub prior: CardinalityPrior,
    pub n_max: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Search {
    pub grid_margin_sigma: f64,
    pub split_d_m: f64,
    pub split_max_depth: usize,
    pub split_max_components: usize,
    pub prune_weight_floor: f64,
    pub prune_merge_distance: f64,
    pub prune_max_components: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(#[from] acquire_core::Error),
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Scenario {
        let (t, r, a, e) = (self.timing, self.sensor, self.admissible_region, self.truth.elements);
        Scenario {
            name: self.name,
            initial_site: self.sites.initial,
            followup_site: self.sites.followup,
            earth_rotation_deg: t.earth_rotation_deg,
            detection_epoch: Epoch(t.detection_epoch_s),
            cutout_hours: t.cutout_hours,
            fov_deg: r.fov_deg,
            meas_noise_arcsec: r.meas_noise_arcsec,
            p_d: r.p_d,
            n_scans: t.n_scans,
            scan_dt_s: t.scan_dt_s,
            ar: ArConstraints {
                e_min: a.e_min,
                e_max: a.e_max,
                a_min: a.a_min_km,
                a_max: a.a_max_km,
                r_periapsis_min: a.r_periapsis_min_km,
            },
            ar_n_rho: a.n_rho,
            ar_n_rho_rate: a.n_rho_rate,
            rate_span_s: a.rate_span_s,
            truth_elements: KeplerianElements::from_degrees(e.a_km, e.e, e.i_deg, e.raan_deg, e.argp_deg, e.true_anomaly_deg),
            n_targets: self.truth.n_targets,
            n_clutter: self.truth.n_clutter,
            cardinality_prior: self.cardinality.prior,
            n_max: self.cardinality.n_max,
            catalog_sigma_km: self.truth.catalog_sigma_km,
            catalog_sigma_kms: self.truth.catalog_sigma_kms,
            grid_margin_sigma: self.search.grid_margin_sigma,
            split: SplitConfig {
                d_m: self.search.split_d_m,
                max_depth: self.search.split_max_depth,
                max_components: self.search.split_max_components,
                ..SplitConfig::default()
            },
            prune: PruneConfig {
                weight_floor: self.search.prune_weight_floor,
                merge_distance: self.search.prune_merge_distance,
                max_components: self.search.prune_max_components,
            },
            reward: self.reward,
            seed: self.seed,
        }
    }
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<Scenario, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Schema { path: "<document>".into(), message: e.to_string() })?;
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Schema { path, message: e.into_inner().message().trim().to_string() }
    })?;
    let s = file.into_scenario();
    s.validate()?;
    Ok(s)
}
