use nalgebra::{SMatrix, SVector};

use super::{GaussianComponent, GaussianMixture};

/// Thresholds for mixture pruning and merging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneConfig {
    /// Components lighter than this are dropped.
    pub weight_floor: f64,
    /// Mahalanobis radius, in the pivot's metric, within which components merge.
    pub merge_distance: f64,
    /// Maximum number of retained components (heaviest kept).
    pub max_components: usize,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self { weight_floor: 1e-6, merge_distance: 0.1, max_components: 10_000 }
    }
}

/// Drops light components, merges close ones by moment matching and caps the
/// count. Surviving weights are rescaled to the input total.
pub fn prune_and_merge<const N: usize>(mix: &GaussianMixture<N>, cfg: &PruneConfig) -> GaussianMixture<N> {
    let total_in = mix.total_weight();
    let mut pool: Vec<&GaussianComponent<N>> =
        mix.components.iter().filter(|c| c.weight >= cfg.weight_floor && c.weight > 0.0).collect();
    if pool.is_empty() {
        return GaussianMixture::default();
    }
    // Heaviest first; stable so equal weights keep input order.
    pool.sort_by(|a, b| b.weight.total_cmp(&a.weight));

    let gate2 = cfg.merge_distance * cfg.merge_distance;
    let mut used = vec![false; pool.len()];
    let mut merged = Vec::with_capacity(pool.len());
    for i in 0..pool.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let pivot = pool[i];
        let chol = if gate2 > 0.0 { pivot.cov.cholesky() } else { None };
        let mut group = vec![pivot];
        if let Some(chol) = &chol {
            // Each coordinate offset bounds the Mahalanobis distance from below.
            let sd: SVector<f64, N> = pivot.cov.diagonal().map(f64::sqrt);
            for j in (i + 1)..pool.len() {
                if used[j] {
                    continue;
                }
                let d = pool[j].mean - pivot.mean;
                if (0..N).any(|k| d[k].abs() > cfg.merge_distance * sd[k]) {
                    continue;
                }
                if d.dot(&chol.solve(&d)) <= gate2 {
                    used[j] = true;
                    group.push(pool[j]);
                }
            }
        }
        merged.push(moment_match(&group));
    }

    merged.truncate(cfg.max_components);
    let total_out: f64 = merged.iter().map(|c| c.weight).sum();
    let mut out = GaussianMixture::new(merged);
    if total_out > 0.0 && total_in.is_finite() {
        out.scale_weights(total_in / total_out);
    }
    out
}

fn moment_match<const N: usize>(group: &[&GaussianComponent<N>]) -> GaussianComponent<N> {
    if group.len() == 1 {
        return group[0].clone();
    }
    let w: f64 = group.iter().map(|c| c.weight).sum();
    let mean: SVector<f64, N> = group.iter().fold(SVector::zeros(), |acc, c| acc + c.mean * c.weight) / w;
    let cov: SMatrix<f64, N, N> = group.iter().fold(SMatrix::zeros(), |acc, c| {
        let d = c.mean - mean;
        acc + (c.cov + d * d.transpose()) * c.weight
    }) / w;
    GaussianComponent::new(w, mean, (cov + cov.transpose()) * 0.5)
}
