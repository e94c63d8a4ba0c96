use acquire_core::astro::{AngleMeasurement, Epoch};
use acquire_core::cphd::{esf, update_with_map, CardinalityPmf, CphdState, DetectionModel, MeasurementSet};
use acquire_core::gmm::{FovRect, GaussianComponent, GaussianMixture, LinearMap};
use acquire_core::Error;
use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2, Vector3};
use proptest::prelude::*;

fn xy() -> LinearMap<3> {
    LinearMap { h: Matrix2x3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0) }
}

fn noise() -> Matrix2<f64> {
    Matrix2::identity() * 0.01
}

/// Intensity consistent with a Poisson cardinality of the same mean.
fn state() -> impl Strategy<Value = CphdState<3>> {
    let comp = (prop::array::uniform3(-1.0..1.0f64), prop::array::uniform3(0.02..0.3f64), 0.1..1.0f64);
    (prop::collection::vec(comp, 1..6), 0.3..6.0f64).prop_map(|(comps, mean)| {
        let card = CardinalityPmf::poisson(mean, 30).unwrap();
        let mean = card.mean();
        let raw: f64 = comps.iter().map(|c| c.2).sum();
        let mix = comps
            .into_iter()
            .map(|(m, d, w)| GaussianComponent::new(w * mean / raw, Vector3::from(m), Matrix3::from_diagonal(&Vector3::from(d))))
            .collect();
        CphdState::new(GaussianMixture::new(mix), card)
    })
}

fn measurements() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-0.8..0.8f64, -0.8..0.8f64), 0..5)
}

fn clutter() -> impl Strategy<Value = GaussianMixture<2>> {
    prop::collection::vec((-0.8..0.8f64, -0.8..0.8f64), 0..4).prop_map(|v| {
        GaussianMixture::new(
            v.into_iter().map(|(x, y)| GaussianComponent::new(1.0, Vector2::new(x, y), Matrix2::identity() * 0.02)).collect(),
        )
    })
}

fn set(z: &[(f64, f64)]) -> MeasurementSet {
    MeasurementSet {
        measurements: z.iter().map(|&(ra, dec)| AngleMeasurement { ra, dec }).collect(),
        epoch: Epoch(0.0),
        noise: noise(),
    }
}

fn detection(p_d: f64, cx: f64, side: f64) -> DetectionModel<LinearMap<3>> {
    DetectionModel { p_d, fov: FovRect::square(Vector2::new(cx, 0.0), side), sensor: xy() }
}

fn is_pmf(p: &CardinalityPmf) -> bool {
    p.probs().iter().all(|&x| x >= 0.0) && (p.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn update_keeps_weight_and_cardinality_consistent(
        s in state(), z in measurements(), kappa in clutter(),
        p_d in 0.05..0.99f64, cx in -0.5..0.5f64, side in 0.4..2.0f64, cpd in 0.1..1.0f64,
    ) {
        match update_with_map(&s, &set(&z), &detection(p_d, cx, side), &kappa, cpd) {
            Ok(post) => {
                prop_assert!(post.consistency_error() <= 1e-6, "{}", post.consistency_error());
                prop_assert!(is_pmf(&post.cardinality));
            }
            Err(Error::InconsistentModel) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn blind_sensor_leaves_the_state_unchanged(s in state(), cx in -0.5..0.5f64, side in 0.4..2.0f64) {
        let post = update_with_map(&s, &set(&[]), &detection(0.0, cx, side), &GaussianMixture::default(), 0.0).unwrap();
        prop_assert_eq!(post.intensity.len(), s.intensity.len());
        for (a, b) in post.intensity.components.iter().zip(&s.intensity.components) {
            prop_assert!((a.weight - b.weight).abs() <= 1e-12 * b.weight.max(1.0));
            prop_assert_eq!(a.mean, b.mean);
            prop_assert_eq!(a.cov, b.cov);
        }
        for (a, b) in post.cardinality.probs().iter().zip(s.cardinality.probs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn empty_scan_never_raises_the_expected_count(
        s in state(), kappa in clutter(), p_d in 0.05..1.0f64, cx in -0.5..0.5f64, side in 0.4..2.0f64, cpd in 0.0..1.0f64,
    ) {
        let post = update_with_map(&s, &set(&[]), &detection(p_d, cx, side), &kappa, cpd).unwrap();
        prop_assert!(post.expected_cardinality() <= s.expected_cardinality() + 1e-12);
        prop_assert!(is_pmf(&post.cardinality));
    }

    #[test]
    fn measurement_order_does_not_matter(
        s in state(), z in measurements(), kappa in clutter(), p_d in 0.05..0.99f64, cpd in 0.1..1.0f64,
    ) {
        let det = detection(p_d, 0.0, 1.6);
        let mut rev = z.clone();
        rev.reverse();
        let (a, b) = match (update_with_map(&s, &set(&z), &det, &kappa, cpd), update_with_map(&s, &set(&rev), &det, &kappa, cpd)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(x), Err(y)) => { prop_assert_eq!(x, y); return Ok(()); }
            (x, y) => { prop_assert!(false, "{:?} vs {:?}", x.err(), y.err()); unreachable!() }
        };
        for (x, y) in a.cardinality.probs().iter().zip(b.cardinality.probs()) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        // Compare the component lists as multisets.
        prop_assert_eq!(a.intensity.len(), b.intensity.len());
        let mut used = vec![false; b.intensity.len()];
        for c in &a.intensity.components {
            let hit = b.intensity.components.iter().enumerate().position(|(k, d)| {
                !used[k] && (c.weight - d.weight).abs() <= 1e-10 * c.weight.max(1e-300) + 1e-300
                    && (c.mean - d.mean).norm() <= 1e-10 && (c.cov - d.cov).norm() <= 1e-10
            });
            prop_assert!(hit.is_some());
            used[hit.unwrap()] = true;
        }
    }

    #[test]
    fn esf_matches_subset_enumeration(values in prop::collection::vec(0.01..10.0f64, 0..=10)) {
        let e = esf(&values);
        let n = values.len();
        let mut brute = vec![0.0; n + 1];
        for mask in 0u32..(1 << n) {
            let prod: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| values[i]).product();
            brute[mask.count_ones() as usize] += prod;
        }
        for (j, (x, y)) in e.iter().zip(&brute).enumerate() {
            prop_assert!((x - y).abs() <= 1e-12 * y.abs(), "e_{j}: {x} vs {y}");
        }
    }
}
