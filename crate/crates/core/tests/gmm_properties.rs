use acquire_core::gmm::{
    gmm_l2_distance, mahalanobis_to_fov, project_to_for, recursive_fov_split, select_split_direction, split_component,
    unscented_transform, FovRect, GaussianComponent, GaussianMixture, LinearMap, SplitConfig, SplitDirection,
    SplitLibrary, UnscentedParams,
};
use nalgebra::{Matrix2x3, Matrix3, SMatrix, Vector2, Vector3};
use proptest::prelude::*;

fn spd3() -> impl Strategy<Value = Matrix3<f64>> {
    (prop::array::uniform9(-1.0..1.0f64), prop::array::uniform3(0.05..2.0f64)).prop_map(|(a, d)| {
        let a = Matrix3::from_row_slice(&a);
        a * a.transpose() + Matrix3::from_diagonal(&Vector3::from(d))
    })
}

fn component() -> impl Strategy<Value = GaussianComponent<3>> {
    (0.01..5.0f64, prop::array::uniform3(-3.0..3.0f64), spd3())
        .prop_map(|(w, m, p)| GaussianComponent::new(w, Vector3::from(m), p))
}

fn mixture() -> impl Strategy<Value = GaussianMixture<3>> {
    prop::collection::vec(component(), 1..5).prop_map(GaussianMixture::new)
}

fn xy() -> LinearMap<3> {
    LinearMap { h: Matrix2x3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0) }
}

fn close(a: &Vector3<f64>, b: &Vector3<f64>, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

/// Depth-annotated leaves of the split tree, expanded by hand.
fn leaf_depths(c: &GaussianComponent<3>, depth: usize, fov: &FovRect, cfg: &SplitConfig, out: &mut Vec<(GaussianComponent<3>, usize)>) {
    let (mu, p) = project_to_for(c, &xy()).unwrap();
    if depth == cfg.max_depth || mahalanobis_to_fov(&mu, &p, fov).0 > cfg.d_m {
        out.push((c.clone(), depth));
        return;
    }
    let dir = select_split_direction(&c.cov, &xy().h);
    for child in split_component(c, &dir, &cfg.library).components {
        leaf_depths(&child, depth + 1, fov, cfg, out);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn single_split_conserves_weight_and_mean(c in component()) {
        let h = xy().h;
        let dir = select_split_direction(&c.cov, &h);
        let out = split_component(&c, &dir, &SplitLibrary::default());
        prop_assert!((out.total_weight() - c.weight).abs() <= 1e-12 * c.weight);
        prop_assert!(close(&out.mean(), &c.mean, 1e-10));
        for child in &out.components {
            prop_assert!(child.cov.cholesky().is_some());
        }
    }

    #[test]
    fn recursive_split_conserves_weight_and_mean(mix in mixture(), cx in -2.0..2.0f64, side in 0.5..3.0f64) {
        let fov = FovRect::square(Vector2::new(cx, 0.0), side);
        let cfg = SplitConfig { max_depth: 3, ..SplitConfig::default() };
        let out = recursive_fov_split(&mix, &fov, &xy(), &cfg).unwrap();
        let (w0, w1) = (mix.total_weight(), out.total_weight());
        prop_assert!((w1 - w0).abs() <= 1e-10 * w0);
        prop_assert!(close(&out.mean(), &mix.mean(), 1e-10));
    }

    #[test]
    fn split_leaves_are_resolved_or_at_the_depth_cap(c in component(), side in 0.5..3.0f64) {
        let fov = FovRect::square(Vector2::zeros(), side);
        let cfg = SplitConfig { max_depth: 3, ..SplitConfig::default() };
        let out = recursive_fov_split(&GaussianMixture::new(vec![c.clone()]), &fov, &xy(), &cfg).unwrap();
        let mut leaves = Vec::new();
        leaf_depths(&c, 0, &fov, &cfg, &mut leaves);
        prop_assert_eq!(out.len(), leaves.len());
        for (got, (leaf, depth)) in out.components.iter().zip(&leaves) {
            prop_assert_eq!(got, leaf);
            let (mu, p) = project_to_for(leaf, &xy()).unwrap();
            let triggers = mahalanobis_to_fov(&mu, &p, &fov).0 <= cfg.d_m;
            prop_assert!(!triggers || *depth == cfg.max_depth);
        }
    }

    #[test]
    fn unscented_transform_is_exact_for_affine_maps(c in component(), a in prop::array::uniform9(-2.0..2.0f64), b in prop::array::uniform3(-5.0..5.0f64)) {
        let a = Matrix3::from_row_slice(&a);
        let b = Vector3::from(b);
        let (m, p) = unscented_transform(&c, &UnscentedParams::default(), |x| Ok(a * x + b)).unwrap();
        prop_assert!(close(&m, &(a * c.mean + b), 1e-10));
        let expected = a * c.cov * a.transpose();
        prop_assert!((p - expected).norm() <= 1e-10 * expected.norm().max(1.0));
    }

    #[test]
    fn l2_distance_is_nonnegative_and_blind_to_order(p in mixture(), q in mixture()) {
        let d = gmm_l2_distance(&p, &q).unwrap();
        prop_assert!(d >= -1e-12);
        let mut rev = p.clone();
        rev.components.reverse();
        prop_assert!(gmm_l2_distance(&p, &rev).unwrap().abs() <= 1e-12);
        let back = gmm_l2_distance(&q, &p).unwrap();
        prop_assert!((d - back).abs() <= 1e-12 * d.abs().max(1.0));
    }

    #[test]
    fn split_direction_ignores_eigenvector_sign(c in component()) {
        let h = xy().h;
        let dir = select_split_direction(&c.cov, &h);
        let flipped = SplitDirection { vector: -dir.vector, ..dir };
        let lib = SplitLibrary::default();
        let a = split_component(&c, &dir, &lib);
        let b = split_component(&c, &flipped, &lib);
        // Flipping the axis mirrors the children: the outer pair swaps.
        let n = lib.len();
        for i in 0..n {
            let (x, y) = (&a.components[i], &b.components[n - 1 - i]);
            prop_assert!((x.weight - y.weight).abs() <= 1e-15);
            prop_assert!(close(&x.mean, &y.mean, 1e-12));
            prop_assert!((x.cov - y.cov).norm() <= 1e-12 * x.cov.norm());
        }
    }

    #[test]
    fn projected_covariance_is_the_selected_block(c in component()) {
        let (mu, p) = project_to_for(&c, &xy()).unwrap();
        prop_assert_eq!(mu, Vector2::new(c.mean.x, c.mean.y));
        let block: SMatrix<f64, 2, 2> = c.cov.fixed_view::<2, 2>(0, 0).into_owned();
        prop_assert!((p - block).norm() <= 1e-14 * block.norm());
    }
}
