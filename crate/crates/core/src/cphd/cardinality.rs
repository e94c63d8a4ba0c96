use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest target count carried by a cardinality distribution unless stated.
pub const DEFAULT_N_MAX: usize = 40;

/// Probability mass over the number of targets, n = 0..=n_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardinalityPmf {
    probs: Vec<f64>,
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

impl CardinalityPmf {
    /// Normalizes nonnegative masses. Rejects negative, non-finite or all-zero input.
    pub fn from_masses(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() || masses.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidArgument("cardinality masses must be finite and nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroWeight);
        }
        Ok(Self { probs: masses.into_iter().map(|p| p / total).collect() })
    }

    /// Poisson with the given mean, truncated at `n_max` and renormalized.
    pub fn poisson(mean: f64, n_max: usize) -> Result<Self> {
        if !(mean >= 0.0 && mean.is_finite()) {
            return Err(Error::InvalidArgument(format!("Poisson mean {mean} must be nonnegative")));
        }
        if mean == 0.0 {
            return Self::point_mass(0, n_max);
        }
        let masses = (0..=n_max).map(|n| (n as f64 * mean.ln() - mean - ln_factorial(n)).exp()).collect();
        Self::from_masses(masses)
    }

    /// Equal mass on lo..=hi, zero elsewhere up to `n_max`.
    pub fn uniform(lo: usize, hi: usize, n_max: usize) -> Result<Self> {
        if lo > hi || hi > n_max {
            return Err(Error::InvalidArgument(format!("uniform support {lo}..={hi} outside 0..={n_max}")));
        }
        Self::from_masses((0..=n_max).map(|n| if (lo..=hi).contains(&n) { 1.0 } else { 0.0 }).collect())
    }

    pub fn point_mass(n: usize, n_max: usize) -> Result<Self> {
        Self::uniform(n, n, n_max)
    }

    /// Binomial(trials, p) over 0..=trials.
    pub fn binomial(trials: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("success probability {p} outside [0, 1]")));
        }
        let mut probs = vec![0.0; trials + 1];
        if p == 0.0 {
            probs[0] = 1.0;
        } else if p == 1.0 {
            probs[trials] = 1.0;
        } else if trials <= 60 {
            let mut coeff = 1.0;
            for (n, q) in probs.iter_mut().enumerate() {
                *q = coeff * p.powi(n as i32) * (1.0 - p).powi((trials - n) as i32);
                coeff = coeff * (trials - n) as f64 / (n + 1) as f64;
            }
        } else {
            let lf = ln_factorial(trials);
            for (n, q) in probs.iter_mut().enumerate() {
                let ln_c = lf - ln_factorial(n) - ln_factorial(trials - n);
                *q = (ln_c + n as f64 * p.ln() + (trials - n) as f64 * (-p).ln_1p()).exp();
            }
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Mass at `n`; zero beyond the support.
    pub fn prob(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.probs.iter().enumerate().map(|(n, p)| (n as f64 - m).powi(2) * p).sum()
    }

    /// Most probable count; the smallest n wins ties.
    pub fn map(&self) -> usize {
        let mut best = 0;
        for (n, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = n;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn point_mass_moments() {
        let p = CardinalityPmf::point_mass(3, 40).unwrap();
        assert_eq!(p.mean(), 3.0);
        assert_eq!(p.map(), 3);
    }

    #[test]
    fn uniform_zero_to_nineteen() {
        let p = CardinalityPmf::uniform(0, 19, 40).unwrap();
        assert_relative_eq!(p.mean(), 9.5, epsilon = 1e-12);
        assert_eq!(p.map(), 0);
    }

    #[test]
    fn truncated_poisson_mean() {
        let p = CardinalityPmf::poisson(3.0, 30).unwrap();
        // direct series with the recursion p_n = p_{n-1} * 3 / n
        let mut term = (-3.0f64).exp();
        let (mut mass, mut first) = (term, 0.0);
        for n in 1..=30 {
            term *= 3.0 / n as f64;
            mass += term;
            first += n as f64 * term;
        }
        assert_relative_eq!(p.mean(), first / mass, epsilon = 1e-12);
        assert!((p.mean() - 3.0).abs() < 1e-6);
        assert_relative_eq!(p.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn binomial_two_trials() {
        let p = CardinalityPmf::binomial(2, 0.75).unwrap();
        assert_eq!(p.probs(), &[0.0625, 0.375, 0.5625]);
        assert_eq!(CardinalityPmf::binomial(4, 1.0).unwrap().probs(), &[0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(CardinalityPmf::binomial(4, 0.0).unwrap().probs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(CardinalityPmf::from_masses(vec![0.0, 0.0]).is_err());
        assert!(CardinalityPmf::from_masses(vec![-1.0, 2.0]).is_err());
    }
}
