//! Expected Rényi-divergence rewards for candidate pointings.
//!
//! The predicted intensity is sampled once per scan into an equally weighted
//! particle cloud with a nearest-neighbor index. For every candidate action,
//! hypothetical measurement sets are drawn, the particle CPHD update is
//! applied, and the divergence between posterior and prior is estimated with
//! kNN plug-in densities. The action with the largest average wins.

mod knn;

use nalgebra::{Cholesky, Matrix2, SVector, Vector2, U2};
use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::astro::wrap_two_pi;
use crate::cphd::terms::{update_terms, LogEvidence};
use crate::cphd::{
    angle_residual, clutter_cardinality, clutter_factors, ln_normalized_clutter, log_sum_exp, pair_polynomial,
    CardinalityPmf,
};
use crate::error::{Error, Result};
use crate::gmm::{require_positive_weight, FovRect, GaussianComponent, GaussianMixture, MeasurementMap};
use crate::linalg::{log_gaussian_residual, repair_spd};

pub use knn::{build_knn, build_knn_euclidean, KnnIndex};

/// Largest target count kept when forming the target-return count distribution.
pub const MAX_TARGET_RETURNS: usize = 60;
const Q_CEILING: f64 = 1.0 - 1e-9;

/// Reward estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    /// Rényi order.
    pub alpha: f64,
    /// Neighborhood size of the kNN density estimate.
    pub ell: usize,
    pub n_samp: usize,
    /// Simulated measurement sets per action.
    pub n_trials: usize,
    pub seed: u64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { alpha: 0.5, ell: 10, n_samp: 5000, n_trials: 8, seed: 0 }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha != 1.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha = {} must be positive and not 1", self.alpha)));
        }
        if self.ell < 2 || self.n_samp <= self.ell || self.n_trials == 0 {
            return Err(Error::InvalidArgument("need ell >= 2, n_samp > ell and n_trials >= 1".into()));
        }
        Ok(())
    }
}

/// A candidate pointing and the field of view it induces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action {
    pub pointing: Vector2<f64>,
    pub fov: FovRect,
}

impl Action {
    pub fn new(pointing: Vector2<f64>, fov_side: f64) -> Self {
        Self { pointing, fov: FovRect::square(pointing, fov_side) }
    }
}

/// Equally weighted samples of a normalized intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud<const N: usize = 6> {
    pub states: Vec<SVector<f64, N>>,
    /// Measurement-space images of `states`; empty until projected.
    pub projected: Vec<Vector2<f64>>,
    /// Total intensity mass the cloud stands for.
    pub n_hat: f64,
}

impl<const N: usize> ParticleCloud<N> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn prior_weights(&self) -> Vec<f64> {
        vec![1.0 / self.len() as f64; self.len()]
    }

    pub fn project(&mut self, map: &impl MeasurementMap<N>) -> Result<()> {
        self.projected = self
            .states
            .iter()
            .map(|x| map.eval(x).map(|z| Vector2::new(wrap_two_pi(z.x), z.y)))
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// Indices of particles whose projection lies in `fov`.
    pub fn inside(&self, fov: &FovRect) -> Vec<usize> {
        self.projected.iter().enumerate().filter(|(_, z)| fov.contains(z)).map(|(i, _)| i).collect()
    }
}

pub(crate) fn sample_gaussian<const N: usize, R: Rng + ?Sized>(
    mean: &SVector<f64, N>,
    chol: &Cholesky<f64, nalgebra::Const<N>>,
    rng: &mut R,
) -> SVector<f64, N> {
    let eps = SVector::<f64, N>::from_fn(|_, _| rng.sample(StandardNormal));
    mean + chol.l() * eps
}

/// Draws `n_samp` particles: a component by weight, then a Gaussian draw.
pub fn sample_particles<const N: usize, R: Rng + ?Sized>(
    intensity: &GaussianMixture<N>,
    n_samp: usize,
    rng: &mut R,
) -> Result<ParticleCloud<N>> {
    let total = require_positive_weight(intensity)?;
    let chols: Vec<Cholesky<f64, nalgebra::Const<N>>> = intensity
        .components
        .iter()
        .map(|c| {
            c.cov
                .cholesky()
                .or_else(|| repair_spd(&c.cov).ok().and_then(|p| p.cholesky()))
                .ok_or(Error::IllConditioned("particle sampling covariance"))
        })
        .collect::<Result<_>>()?;
    let picker = rand::distr::weighted::WeightedIndex::new(intensity.components.iter().map(|c| c.weight.max(0.0)))
        .map_err(|_| Error::ZeroWeight)?;
    let states = (0..n_samp)
        .map(|_| {
            let k = picker.sample(rng);
            sample_gaussian(&intensity.components[k].mean, &chols[k], rng)
        })
        .collect();
    Ok(ParticleCloud { states, projected: Vec::new(), n_hat: total })
}

/// Measurement-space clutter: unit-weight Gaussians (z_kappa, S_kappa) with
/// Cholesky factors, restricted to one field of view.
#[derive(Debug, Clone)]
pub struct ClutterView {
    pub components: Vec<(Vector2<f64>, Cholesky<f64, U2>)>,
    pub p_d: f64,
}

impl ClutterView {
    pub fn new(kappa_fov: &GaussianMixture<2>, p_d: f64) -> Result<Self> {
        Ok(Self { components: clutter_factors(kappa_fov)?, p_d })
    }

    pub fn none() -> Self {
        Self { components: Vec::new(), p_d: 0.0 }
    }
}

/// Particle CPHD update restricted to the particles that can be detected.
#[derive(Debug, Clone)]
pub struct ParticlePosterior {
    /// Unnormalized posterior intensity weight of each in-FOV particle, in
    /// units of the prior per-particle weight n_hat / N.
    pub inside: Vec<f64>,
    /// The same quantity for every particle outside the FOV.
    pub outside: f64,
    pub cardinality: CardinalityPmf,
}

fn particle_update_sparse(
    projected: &[Vector2<f64>],
    inside: &[usize],
    n_total: usize,
    n_hat: f64,
    z: &[Vector2<f64>],
    noise_chol: &Cholesky<f64, U2>,
    p_d: f64,
    clutter: &ClutterView,
    prior: &CardinalityPmf,
) -> Result<ParticlePosterior> {
    let v = n_hat / n_total as f64;
    let ln_v = v.ln();
    let ln_pd = p_d.ln();
    let ln_lik: Vec<Vec<f64>> = z
        .iter()
        .map(|zk| inside.iter().map(|&i| log_gaussian_residual(&angle_residual(zk, &projected[i]), noise_chol)).collect())
        .collect();
    let evidence: Vec<LogEvidence> = ln_lik
        .iter()
        .zip(z)
        .map(|(l, zk)| LogEvidence {
            ln_target: if inside.is_empty() || p_d == 0.0 { f64::NEG_INFINITY } else { ln_pd + ln_v + log_sum_exp(l) },
            ln_clutter: ln_normalized_clutter(&clutter.components, zk),
        })
        .collect();
    let q_missed = 1.0 - p_d * inside.len() as f64 / n_total as f64;
    let clutter_card = clutter_cardinality(clutter.components.len(), clutter.p_d)?;
    let t = update_terms(prior, &clutter_card, n_hat, q_missed, &evidence)?;
    let inside_w = (0..inside.len())
        .map(|k| {
            let detect: f64 = (0..z.len()).map(|m| (ln_lik[m][k] + ln_pd + t.ln_detect[m]).exp()).sum();
            (1.0 - p_d) * t.missed + detect
        })
        .collect();
    Ok(ParticlePosterior { inside: inside_w, outside: t.missed, cardinality: t.posterior })
}

/// Posterior particle weights (normalized to one) and cardinality after the
/// measurement set `z`.
///
/// A particle is detectable with probability `p_d` when its projection is in
/// `fov`. `clutter` holds the in-FOV catalog returns' measurement densities.
pub fn particle_update_weights<const N: usize>(
    cloud: &ParticleCloud<N>,
    z: &[Vector2<f64>],
    noise: &Matrix2<f64>,
    p_d: f64,
    fov: &FovRect,
    clutter: &ClutterView,
    prior: &CardinalityPmf,
) -> Result<(Vec<f64>, CardinalityPmf)> {
    let inside = cloud.inside(fov);
    let chol = noise.cholesky().ok_or(Error::IllConditioned("measurement noise"))?;
    let post = particle_update_sparse(&cloud.projected, &inside, cloud.len(), cloud.n_hat, z, &chol, p_d, clutter, prior)?;
    let mut w = vec![post.outside; cloud.len()];
    for (k, &i) in inside.iter().enumerate() {
        w[i] = post.inside[k];
    }
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    } else {
        w = cloud.prior_weights();
    }
    Ok((w, post.cardinality))
}

/// (1 / (alpha - 1)) ln sum_n rho_post^alpha rho_prior^(1 - alpha).
pub fn cardinality_divergence(prior: &CardinalityPmf, posterior: &CardinalityPmf, alpha: f64) -> f64 {
    if prior == posterior {
        return 0.0;
    }
    let n = prior.n_max().max(posterior.n_max());
    let s: f64 = (0..=n).map(|k| posterior.prob(k).powf(alpha) * prior.prob(k).powf(1.0 - alpha)).sum();
    s.ln() / (alpha - 1.0)
}

/// kNN estimate of the multi-target Rényi divergence between the posterior
/// and the prior cloud.
///
/// Each neighborhood's posterior mass is compared with its prior mass ell / N
/// and the bracket is averaged over particles, so identical weights give 0.
pub fn renyi_reward(
    knn: &KnnIndex,
    posterior_weights: &[f64],
    prior_cardinality: &CardinalityPmf,
    posterior_cardinality: &CardinalityPmf,
    alpha: f64,
) -> f64 {
    let n = posterior_weights.len();
    let card = cardinality_divergence(prior_cardinality, posterior_cardinality, alpha);
    let first = posterior_weights[0];
    if posterior_weights.iter().all(|w| *w == first) {
        return card;
    }
    let scale = n as f64 / knn.ell as f64;
    let bracket: f64 = (0..n)
        .map(|i| {
            let mass: f64 = knn.neighbors(i).iter().map(|&j| posterior_weights[j as usize]).sum();
            (mass * scale).powf(alpha)
        })
        .sum::<f64>()
        / n as f64;
    card + bracket.ln() / (alpha - 1.0)
}

/// Distribution of the number of target returns: each in-FOV particle is an
/// independent Bernoulli trial with success probability `q`.
///
/// Probabilities at or above one are clamped just below one. Counts beyond
/// `max_count` are dropped and the rest renormalized.
pub fn target_count_pmf(q: &[f64], max_count: usize) -> Vec<f64> {
    let pairs: Vec<(f64, f64)> = q
        .iter()
        .map(|&p| {
            let p = if p >= 1.0 {
                log::debug!("detection odds {p} clamped below one");
                Q_CEILING
            } else {
                p.max(0.0)
            };
            (1.0 - p, p)
        })
        .collect();
    let mut c = pair_polynomial(&pairs, max_count);
    let total: f64 = c.iter().sum();
    if total > 0.0 {
        c.iter_mut().for_each(|x| *x /= total);
    }
    c
}

/// Inverse-CDF draw from `pmf` at the uniform variate `u`.
fn draw_index(pmf: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    pmf.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Per-action quantities shared by all of its simulated measurement sets.
struct ActionView {
    inside: Vec<usize>,
    count_pmf: Vec<f64>,
    clutter: ClutterView,
}

/// One hypothetical scan: binomial clutter returns from the in-FOV catalog
/// and multi-Bernoulli target returns from in-FOV particles, each perturbed by
/// the measurement noise. The number of target returns is the inverse-CDF
/// draw at `count_u`.
fn sample_scan<R: Rng + ?Sized>(
    projected: &[Vector2<f64>],
    view: &ActionView,
    noise_chol: &Cholesky<f64, U2>,
    count_u: f64,
    rng: &mut R,
) -> Vec<Vector2<f64>> {
    let mut z = Vec::new();
    for (mean, chol) in &view.clutter.components {
        if rng.random::<f64>() < view.clutter.p_d {
            z.push(sample_gaussian(mean, chol, rng));
        }
    }
    if !view.inside.is_empty() {
        let targets = draw_index(&view.count_pmf, count_u);
        let pick = Uniform::new(0, view.inside.len()).expect("nonempty range");
        for _ in 0..targets {
            let i = view.inside[pick.sample(rng)];
            z.push(sample_gaussian(&projected[i], noise_chol, rng));
        }
    }
    z.iter().map(|v| Vector2::new(wrap_two_pi(v.x), v.y)).collect()
}

/// Draws one measurement set for `action` from the cloud and catalog.
pub fn sample_measurement_set<const N: usize, R: Rng + ?Sized>(
    action: &Action,
    cloud: &ParticleCloud<N>,
    prior_n_hat: f64,
    clutter: &ClutterView,
    p_d: f64,
    noise: &Matrix2<f64>,
    rng: &mut R,
) -> Result<Vec<Vector2<f64>>> {
    let chol = noise.cholesky().ok_or(Error::IllConditioned("measurement noise"))?;
    let inside = cloud.inside(&action.fov);
    let q = vec![p_d * prior_n_hat / cloud.len() as f64; inside.len()];
    let view = ActionView { count_pmf: target_count_pmf(&q, MAX_TARGET_RETURNS), inside, clutter: clutter.clone() };
    let u = rng.random();
    Ok(sample_scan(&cloud.projected, &view, &chol, u, rng))
}

/// Stream seed for a (master seed, scan, action) triple.
pub fn stream_seed(seed: u64, scan: u64, action: u64) -> u64 {
    // splitmix64 finalizer over a combined key
    let mut x = seed ^ scan.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ action.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Everything the action sweep of one scan shares: the cloud, its kNN index,
/// the prior cardinality and the measurement-space catalog.
#[derive(Debug, Clone)]
pub struct RewardContext {
    pub cloud: ParticleCloud<6>,
    pub knn: KnnIndex,
    pub prior: CardinalityPmf,
    /// Full measurement-space clutter intensity at the scan epoch.
    pub kappa: GaussianMixture<2>,
    pub clutter_p_d: f64,
    pub p_d: f64,
    pub noise: Matrix2<f64>,
    pub scan: u64,
}

impl RewardContext {
    /// Samples and projects the cloud and builds the kNN index.
    #[allow(clippy::too_many_arguments)]
    pub fn prepare(
        intensity: &GaussianMixture<6>,
        prior: &CardinalityPmf,
        map: &impl MeasurementMap<6>,
        kappa: GaussianMixture<2>,
        clutter_p_d: f64,
        p_d: f64,
        noise: Matrix2<f64>,
        cfg: &RewardConfig,
        scan: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, scan, u64::MAX));
        let mut cloud = sample_particles(intensity, cfg.n_samp, &mut rng)?;
        cloud.project(map)?;
        let knn = build_knn(&cloud.states, cfg.ell)?;
        Ok(Self { cloud, knn, prior: prior.clone(), kappa, clutter_p_d, p_d, noise, scan })
    }
}

fn in_fov_clutter(kappa: &GaussianMixture<2>, fov: &FovRect, p_d: f64) -> Result<ClutterView> {
    let sub: Vec<GaussianComponent<2>> = kappa.components.iter().filter(|c| fov.contains(&c.mean)).cloned().collect();
    ClutterView::new(&GaussianMixture::new(sub), p_d)
}

/// Average divergence over `cfg.n_trials` simulated measurement sets.
///
/// Zero when neither particles nor catalog objects fall inside the FOV.
pub fn expected_reward(action: &Action, action_index: usize, ctx: &RewardContext, cfg: &RewardConfig) -> Result<f64> {
    let cloud = &ctx.cloud;
    let n = cloud.len();
    let inside = cloud.inside(&action.fov);
    let clutter = in_fov_clutter(&ctx.kappa, &action.fov, ctx.clutter_p_d)?;
    if inside.is_empty() {
        // No particle can be detected, so every posterior equals the prior.
        return Ok(0.0);
    }
    let noise_chol = ctx.noise.cholesky().ok_or(Error::IllConditioned("measurement noise"))?;

    // Neighborhoods that contain a detectable particle; all others keep the
    // common outside weight.
    let mut touched_mark = vec![false; n];
    for &j in &inside {
        for &i in ctx.knn.reverse(j) {
            touched_mark[i as usize] = true;
        }
    }
    let touched: Vec<usize> = (0..n).filter(|&i| touched_mark[i]).collect();
    let mut slot = vec![usize::MAX; n];
    for (k, &i) in inside.iter().enumerate() {
        slot[i] = k;
    }

    let q = vec![ctx.p_d * cloud.n_hat / n as f64; inside.len()];
    let view = ActionView { count_pmf: target_count_pmf(&q, MAX_TARGET_RETURNS), inside, clutter };
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, ctx.scan, action_index as u64));
    let alpha = cfg.alpha;
    let scale = n as f64 / ctx.knn.ell as f64;

    // Target-return counts are stratified over the trials: trial t draws its
    // count at the quantile (t + u0) / n_trials.
    let u0: f64 = rng.random();
    let mut total = 0.0;
    for t in 0..cfg.n_trials {
        let u = (t as f64 + u0) / cfg.n_trials as f64;
        let z = sample_scan(&cloud.projected, &view, &noise_chol, u, &mut rng);
        let post = match particle_update_sparse(
            &cloud.projected,
            &view.inside,
            n,
            cloud.n_hat,
            &z,
            &noise_chol,
            ctx.p_d,
            &view.clutter,
            &ctx.prior,
        ) {
            Ok(p) => p,
            Err(Error::InconsistentModel) => continue,
            Err(e) => return Err(e),
        };
        let sum_w = post.outside * (n - view.inside.len()) as f64 + post.inside.iter().sum::<f64>();
        let card = cardinality_divergence(&ctx.prior, &post.cardinality, alpha);
        if !(sum_w > 0.0) {
            total += card;
            continue;
        }
        // Relative weights N * w_i, equal to one under the prior.
        let rel = |i: usize| -> f64 {
            let raw = if slot[i] == usize::MAX { post.outside } else { post.inside[slot[i]] };
            raw * n as f64 / sum_w
        };
        let out_rel = post.outside * n as f64 / sum_w;
        let mut bracket = (n - touched.len()) as f64 * out_rel.powf(alpha);
        for &i in &touched {
            let mass: f64 = ctx.knn.neighbors(i).iter().map(|&j| rel(j as usize)).sum();
            bracket += (mass / n as f64 * scale).powf(alpha);
        }
        bracket /= n as f64;
        total += card + bracket.ln() / (alpha - 1.0);
    }
    Ok(total / cfg.n_trials as f64)
}

/// Evaluates every action in parallel and returns the best index (lowest
/// index on ties) with the full reward vector.
pub fn select_action(actions: &[Action], ctx: &RewardContext, cfg: &RewardConfig) -> Result<(usize, Vec<f64>)> {
    if actions.is_empty() {
        return Err(Error::InvalidArgument("empty action set".into()));
    }
    let rewards: Vec<f64> =
        actions.par_iter().enumerate().map(|(k, a)| expected_reward(a, k, ctx, cfg)).collect::<Result<_>>()?;
    let mut best = 0;
    for (k, r) in rewards.iter().enumerate() {
        if *r > rewards[best] {
            best = k;
        }
    }
    Ok((best, rewards))
}
