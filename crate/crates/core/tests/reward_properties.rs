use acquire_core::astro::StateVector;
use acquire_core::cphd::CardinalityPmf;
use acquire_core::gmm::{GaussianComponent, GaussianMixture, LinearMap, RaDecSensor};
use acquire_core::reward::{
    build_knn, cardinality_divergence, renyi_reward, sample_measurement_set, select_action, Action, ClutterView,
    ParticleCloud, RewardConfig, RewardContext,
};
use nalgebra::{Matrix2, Matrix2x3, SMatrix, SVector, Vector2, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cloud() -> impl Strategy<Value = Vec<SVector<f64, 3>>> {
    prop::collection::vec(prop::array::uniform3(-2.0..2.0f64), 20..200).prop_map(|v| v.into_iter().map(Vector3::from).collect())
}

fn pmf() -> impl Strategy<Value = CardinalityPmf> {
    prop::collection::vec(0.0..1.0f64, 2..12)
        .prop_filter("some mass", |m| m.iter().sum::<f64>() > 1e-3)
        .prop_map(|m| CardinalityPmf::from_masses(m).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prior_against_itself_scores_zero(points in cloud(), card in pmf(), ell in 2usize..10, alpha in 0.1..0.9f64) {
        prop_assume!(points.len() > ell);
        let knn = build_knn(&points, ell).unwrap();
        let w = vec![1.0 / points.len() as f64; points.len()];
        prop_assert_eq!(renyi_reward(&knn, &w, &card, &card, alpha), 0.0);
    }

    #[test]
    fn cardinality_divergence_is_nonnegative(a in pmf(), b in pmf(), alpha in 0.1..0.9f64) {
        prop_assert!(cardinality_divergence(&a, &b, alpha) >= -1e-12);
    }

    #[test]
    fn simulated_scans_are_bounded_by_their_sources(
        points in cloud(),
        clutter in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 0..6),
        n_hat in 0.1..10.0f64, p_d in 0.05..1.0f64, cx in -1.0..1.0f64, side in 0.2..3.0f64, seed in 0u64..1000,
    ) {
        let mut c = ParticleCloud { states: points, projected: Vec::new(), n_hat };
        c.project(&LinearMap { h: Matrix2x3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0) }).unwrap();
        let action = Action::new(Vector2::new(cx, 0.0), side);
        let kappa: Vec<GaussianComponent<2>> = clutter
            .iter()
            .map(|&(x, y)| GaussianComponent::new(1.0, Vector2::new(x, y), Matrix2::identity() * 1e-3))
            .filter(|k| action.fov.contains(&k.mean))
            .collect();
        let n_kappa = kappa.len();
        let view = ClutterView::new(&GaussianMixture::new(kappa), 0.8).unwrap();
        let inside = c.inside(&action.fov).len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let z = sample_measurement_set(&action, &c, n_hat, &view, p_d, &(Matrix2::identity() * 1e-4), &mut rng).unwrap();
            prop_assert!(z.len() <= n_kappa + inside);
        }
    }
}

#[test]
fn identical_seeds_give_identical_choices() {
    let sensor = RaDecSensor {
        observer: StateVector::new(Vector3::new(6378.137, 0.0, 0.0), Vector3::new(0.0, 0.465, 0.0)),
    };
    let cov = SMatrix::<f64, 6, 6>::from_diagonal(&SVector::from_column_slice(&[400.0, 400.0, 400.0, 1e-4, 1e-4, 1e-4]));
    let mean = |y: f64| SVector::<f64, 6>::from_column_slice(&[42_164.0, y, 0.0, 0.0, 3.07, 0.0]);
    let intensity = GaussianMixture::new(vec![
        GaussianComponent::new(0.7, mean(0.0), cov),
        GaussianComponent::new(0.5, mean(800.0), cov),
    ]);
    let prior = CardinalityPmf::poisson(1.2, 10).unwrap();
    let cfg = RewardConfig { n_samp: 800, n_trials: 4, seed: 17, ..RewardConfig::default() };
    let actions: Vec<Action> = (-3..=3)
        .flat_map(|i| (-1..=1).map(move |j| Action::new(Vector2::new(0.01 * i as f64, 0.01 * j as f64), 0.02)))
        .collect();
    let run = || {
        let ctx = RewardContext::prepare(&intensity, &prior, &sensor, GaussianMixture::default(), 0.0, 0.9, Matrix2::identity() * 1e-10, &cfg, 3)
            .unwrap();
        select_action(&actions, &ctx, &cfg).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.0, b.0);
    assert_eq!(a.1.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.1.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    assert!(a.1.iter().any(|&r| r > 0.0));
}
