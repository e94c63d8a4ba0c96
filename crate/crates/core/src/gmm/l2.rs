use super::GaussianMixture;
use crate::error::Result;
use crate::linalg::gaussian;

/// Closed-form squared L2 distance `∫ (p - q)^2 dx` between two mixtures.
///
/// Uses the Gaussian product identity `∫ N(x; a, A) N(x; b, B) dx = N(a; b, A + B)`.
pub fn gmm_l2_distance<const N: usize>(p: &GaussianMixture<N>, q: &GaussianMixture<N>) -> Result<f64> {
    let cross = |x: &GaussianMixture<N>, y: &GaussianMixture<N>| -> Result<f64> {
        let mut acc = 0.0;
        for a in &x.components {
            for b in &y.components {
                acc += a.weight * b.weight * gaussian(&a.mean, &b.mean, &(a.cov + b.cov))?;
            }
        }
        Ok(acc)
    };
    let d = cross(p, p)? - 2.0 * cross(p, q)? + cross(q, q)?;
    Ok(d.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::{GaussianComponent, SplitLibrary};
    use approx::assert_relative_eq;
    use nalgebra::{SMatrix, SVector};
    use std::f64::consts::PI;

    fn g1(w: f64, m: f64, var: f64) -> GaussianComponent<1> {
        GaussianComponent::new(w, SVector::<f64, 1>::new(m), SMatrix::<f64, 1, 1>::new(var))
    }

    fn pdf(x: f64, m: f64, var: f64) -> f64 {
        (-(x - m) * (x - m) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    }

    /// Composite Simpson quadrature of (p - q)^2 over [-12, 12].
    fn quadrature(p: &GaussianMixture<1>, q: &GaussianMixture<1>) -> f64 {
        let eval = |m: &GaussianMixture<1>, x: f64| -> f64 {
            m.components.iter().map(|c| c.weight * pdf(x, c.mean[0], c.cov[(0, 0)])).sum()
        };
        let n = 20_000;
        let (a, b) = (-12.0, 12.0);
        let h = (b - a) / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let x = a + k as f64 * h;
            let f = (eval(p, x) - eval(q, x)).powi(2);
            let c = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += c * f;
        }
        acc * h / 3.0
    }

    #[test]
    fn identical_mixtures_have_zero_distance() {
        let p = GaussianMixture::new(vec![g1(0.3, -1.0, 0.5), g1(0.7, 2.0, 1.5)]);
        assert!(gmm_l2_distance(&p, &p).unwrap() <= 1e-14);
        let permuted = GaussianMixture::new(vec![p.components[1].clone(), p.components[0].clone()]);
        assert!(gmm_l2_distance(&p, &permuted).unwrap() <= 1e-14);
    }

    #[test]
    fn shifted_unit_gaussians() {
        let dm = 1.3;
        let p = GaussianMixture::new(vec![g1(1.0, 0.0, 1.0)]);
        let q = GaussianMixture::new(vec![g1(1.0, dm, 1.0)]);
        let closed = 2.0 * pdf(0.0, 0.0, 2.0) - 2.0 * pdf(dm, 0.0, 2.0);
        let d = gmm_l2_distance(&p, &q).unwrap();
        assert_relative_eq!(d, closed, max_relative = 1e-12);
        assert_relative_eq!(d, quadrature(&p, &q), max_relative = 1e-8);
        assert_relative_eq!(d, gmm_l2_distance(&q, &p).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn split_library_approximates_standard_normal() {
        let lib = SplitLibrary::default();
        let q = GaussianMixture::new(
            (0..lib.len()).map(|i| g1(lib.alphas[i], lib.means[i], lib.sigmas[i].powi(2))).collect(),
        );
        let p = GaussianMixture::new(vec![g1(1.0, 0.0, 1.0)]);
        let d = gmm_l2_distance(&p, &q).unwrap();
        assert!(d <= 1e-3, "{d}");
        assert_relative_eq!(d, quadrature(&p, &q), max_relative = 1e-6);
    }
}
