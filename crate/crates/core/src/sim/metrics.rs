use nalgebra::Vector2;

use crate::astro::StateVector;
use crate::cphd::{angle_residual, log_sum_exp, CardinalityPmf, CphdState};
use crate::error::Result;
use crate::gmm::{project_to_for, MeasurementMap};
use crate::linalg::log_gaussian;

/// 99% gate of a two-dimensional chi-square statistic.
pub fn gate_99() -> f64 {
    -2.0 * 0.01_f64.ln()
}

/// Rényi (alpha = 1/2) divergence of the filter from the true target set:
/// N ln N - 2 N ln(sum_i sum_j w_j N(x_i; mu_j, P_j)) - ln rho(N), with the
/// intensity weights normalized to one.
///
/// Returns +inf when the cardinality distribution gives N no mass or the
/// truth has zero likelihood.
pub fn divergence_metric(state: &CphdState<6>, truth: &[StateVector]) -> f64 {
    let n_star = truth.len();
    let rho = state.cardinality.prob(n_star);
    if !(rho > 0.0) {
        return f64::INFINITY;
    }
    if n_star == 0 {
        return -rho.ln();
    }
    let n = n_star as f64;
    let total = state.intensity.total_weight();
    if !(total > 0.0) {
        return f64::INFINITY;
    }
    // ln of the summed likelihood, kept in log space: 6D densities of well
    // localized components easily overflow or underflow.
    let per_target: Vec<f64> = truth
        .iter()
        .map(|x| {
            let v = x.to_vector();
            let terms: Vec<f64> = state
                .intensity
                .components
                .iter()
                .filter(|c| c.weight > 0.0)
                .map(|c| (c.weight / total).ln() + log_gaussian(&v, &c.mean, &c.cov).unwrap_or(f64::NEG_INFINITY))
                .collect();
            log_sum_exp(&terms)
        })
        .collect();
    let ln_likelihood = log_sum_exp(&per_target);
    if ln_likelihood == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    n * n.ln() - 2.0 * n * ln_likelihood - rho.ln()
}

/// Expected absolute cardinality error sum_n rho(n) |n - N|.
pub fn cardinality_error(card: &CardinalityPmf, n_star: usize) -> f64 {
    card.probs().iter().enumerate().map(|(n, p)| p * (n as f64 - n_star as f64).abs()).sum()
}

/// Components heavier than `min_weight` whose projection is farther than the
/// 99% gate from every truth target's projection.
///
/// The gate statistic uses the component's projected covariance plus the
/// measurement noise.
pub fn false_tracks(
    state: &CphdState<6>,
    truth: &[StateVector],
    sensor: &impl MeasurementMap<6>,
    noise: &nalgebra::Matrix2<f64>,
    min_weight: f64,
) -> Result<usize> {
    let z_truth: Vec<Vector2<f64>> = truth.iter().map(|x| sensor.eval(&x.to_vector())).collect::<Result<_>>()?;
    let gate = gate_99();
    let mut count = 0;
    for c in state.intensity.components.iter().filter(|c| c.weight > min_weight) {
        let (mu, p) = project_to_for(c, sensor)?;
        let s_inv = (p + noise).try_inverse();
        let inside = s_inv.is_some_and(|s_inv| {
            z_truth.iter().any(|z| {
                let r = angle_residual(z, &mu);
                (r.transpose() * s_inv * r)[(0, 0)] <= gate
            })
        });
        if !inside {
            count += 1;
        }
    }
    Ok(count)
}
