//! Cardinality-coupled weighting terms shared by the Gaussian-mixture and
//! particle CPHD updates.
//!
//! Each measurement z contributes a pair (b_z, a_z): b_z = kappa(z) / <1, kappa>
//! is the normalized clutter density and a_z = P_D <D, g(z|.)> restricted to
//! the detectable region is the target evidence. The ratio a_z / b_z is the
//! usual Xi term. Working with the pair, scaled by s_z = max(a_z, b_z), keeps
//! the elementary symmetric functions finite when a_z / b_z is enormous.

use super::esf::pair_polynomial;
use super::CardinalityPmf;
use crate::error::{Error, Result};

/// Per-measurement evidence in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LogEvidence {
    /// ln(P_D * sum_i w_i g_i(z)) over detectable mass.
    pub ln_target: f64,
    /// ln(kappa(z) / <1, kappa>); ignored when no clutter can be present.
    pub ln_clutter: f64,
}

/// Everything the intensity and cardinality updates need.
#[derive(Debug, Clone)]
pub(crate) struct UpdateTerms {
    /// Multiplier of (1 - p_D(x)) D(x).
    pub missed: f64,
    /// For each measurement: ln of the multiplier of g(z|x) p_D(x) D(x).
    pub ln_detect: Vec<f64>,
    pub posterior: CardinalityPmf,
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

struct Context<'a> {
    prior: &'a CardinalityPmf,
    clutter: &'a CardinalityPmf,
    ln_q: f64,
    ln_n_hat: f64,
    lf: Vec<f64>,
}

impl Context<'_> {
    /// ln Upsilon^u(n) for a measurement set of size m with scaled coefficients `ln_e`.
    fn ln_upsilon(&self, u: usize, n: usize, m: usize, ln_e: &[f64]) -> f64 {
        if n < u {
            return f64::NEG_INFINITY;
        }
        let top = m.min(n - u);
        log_sum_exp((0..=top).filter_map(|j| {
            let ln_clutter = self.clutter.prob(m - j).ln();
            if ln_e[j] == f64::NEG_INFINITY || ln_clutter == f64::NEG_INFINITY {
                return None;
            }
            let miss_power = n - j - u;
            let miss = if miss_power == 0 { 0.0 } else { miss_power as f64 * self.ln_q };
            let perm = self.lf[n] - self.lf[n - j - u];
            Some(self.lf[m - j] + ln_clutter + perm + miss - (j + u) as f64 * self.ln_n_hat + ln_e[j])
        }))
    }

    /// ln <Upsilon^u, rho>.
    fn ln_inner(&self, u: usize, m: usize, ln_e: &[f64]) -> f64 {
        log_sum_exp(
            self.prior
                .probs()
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(n, p)| p.ln() + self.ln_upsilon(u, n, m, ln_e)),
        )
    }
}

/// Missed-detection and detection multipliers and the posterior cardinality.
///
/// `n_hat` is the prior intensity mass, `q_missed` = <1 - p_D, D> / <1, D>.
pub(crate) fn update_terms(
    prior: &CardinalityPmf,
    clutter: &CardinalityPmf,
    n_hat: f64,
    q_missed: f64,
    evidence: &[LogEvidence],
) -> Result<UpdateTerms> {
    let m = evidence.len();
    if !(n_hat > 0.0) {
        // No intensity: the prior cannot change and no measurement can be a target.
        return Ok(UpdateTerms { missed: 1.0, ln_detect: vec![f64::NEG_INFINITY; m], posterior: prior.clone() });
    }
    if m == 0 && q_missed >= 1.0 {
        return Ok(UpdateTerms { missed: 1.0, ln_detect: Vec::new(), posterior: prior.clone() });
    }
    let clutter_possible = clutter.n_max() > 0 || clutter.prob(0) < 1.0;
    let pairs: Vec<(f64, f64)> = evidence
        .iter()
        .map(|ev| {
            let ln_b = if clutter_possible { ev.ln_clutter } else { 0.0 };
            let s = ev.ln_target.max(ln_b);
            if s == f64::NEG_INFINITY {
                (0.0, 0.0)
            } else {
                ((ln_b - s).exp(), (ev.ln_target - s).exp())
            }
        })
        .collect();
    let scale: Vec<f64> = evidence
        .iter()
        .map(|ev| ev.ln_target.max(if clutter_possible { ev.ln_clutter } else { 0.0 }))
        .collect();

    let ctx = Context {
        prior,
        clutter,
        ln_q: q_missed.clamp(0.0, 1.0).ln(),
        ln_n_hat: n_hat.ln(),
        lf: ln_factorials(prior.n_max().max(m) + 1),
    };
    let ln_poly = |ps: &[(f64, f64)]| -> Vec<f64> { pair_polynomial(ps, ps.len()).iter().map(|c| c.ln()).collect() };

    let ln_e = ln_poly(&pairs);
    let ln_den = ctx.ln_inner(0, m, &ln_e);
    if !ln_den.is_finite() {
        return Err(Error::InconsistentModel);
    }
    let missed = (ctx.ln_inner(1, m, &ln_e) - ln_den).exp();

    let ln_detect = (0..m)
        .map(|k| {
            if evidence[k].ln_target == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            let rest: Vec<(f64, f64)> = pairs.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, p)| *p).collect();
            ctx.ln_inner(1, m - 1, &ln_poly(&rest)) - ln_den - scale[k]
        })
        .collect();

    let masses = prior
        .probs()
        .iter()
        .enumerate()
        .map(|(n, p)| if *p > 0.0 { (p.ln() + ctx.ln_upsilon(0, n, m, &ln_e) - ln_den).exp() } else { 0.0 })
        .collect();
    let posterior = CardinalityPmf::from_masses(masses)?;
    Ok(UpdateTerms { missed, ln_detect, posterior })
}
