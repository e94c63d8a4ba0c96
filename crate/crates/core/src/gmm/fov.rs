use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::astro::wrap_pi;
use crate::linalg::sym_eigen;

/// Rectangular field of view in (ra, dec), radians.
///
/// Right ascension differences are taken modulo 2π; no spherical correction
/// is applied to the footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovRect {
    pub center: Vector2<f64>,
    pub half_width: f64,
    pub half_height: f64,
}

impl FovRect {
    pub fn new(center: Vector2<f64>, half_width: f64, half_height: f64) -> Self {
        assert!(half_width > 0.0 && half_height > 0.0, "FOV extents must be positive");
        Self { center, half_width, half_height }
    }

    /// Square FOV with full side `side` (radians).
    pub fn square(center: Vector2<f64>, side: f64) -> Self {
        Self::new(center, 0.5 * side, 0.5 * side)
    }

    /// True when every direction on the sphere lies inside.
    pub fn covers_sky(&self) -> bool {
        self.half_width >= std::f64::consts::PI && self.half_height >= std::f64::consts::PI
    }

    /// Counterclockwise vertices with the center unwrapped to within π of `ra_ref`.
    pub fn vertices_near(&self, ra_ref: f64) -> [Vector2<f64>; 4] {
        let cx = ra_ref + wrap_pi(self.center.x - ra_ref);
        let cy = self.center.y;
        let (hw, hh) = (self.half_width, self.half_height);
        [
            Vector2::new(cx - hw, cy - hh),
            Vector2::new(cx + hw, cy - hh),
            Vector2::new(cx + hw, cy + hh),
            Vector2::new(cx - hw, cy + hh),
        ]
    }

    pub fn vertices(&self) -> [Vector2<f64>; 4] {
        self.vertices_near(self.center.x)
    }

    pub fn contains(&self, z: &Vector2<f64>) -> bool {
        wrap_pi(z.x - self.center.x).abs() <= self.half_width && (z.y - self.center.y).abs() <= self.half_height
    }
}

/// Minimum whitened distance from a projected mean to the FOV boundary.
///
/// Returns the distance and whether the mean lies inside the rectangle. The
/// FOV vertices are whitened by the projected covariance and the closest
/// point of each edge segment is found in the whitened frame.
pub fn mahalanobis_to_fov(mu: &Vector2<f64>, cov: &Matrix2<f64>, fov: &FovRect) -> (f64, bool) {
    let (values, vectors) = sym_eigen(cov);
    let inv_sqrt = Matrix2::from_diagonal(&values.map(|l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt()));
    let whiten = inv_sqrt * vectors.transpose();
    let b: Vec<Vector2<f64>> = fov.vertices_near(mu.x).iter().map(|a| whiten * (a - mu)).collect();

    let mut best = f64::INFINITY;
    for k in 0..4 {
        let (bi, bj) = (b[k], b[(k + 1) % 4]);
        let bij = bj - bi;
        let t = bi.dot(&bij) / bij.dot(&bij);
        let foot = bi - t * bij;
        let o = if (bi - foot).dot(&(bj - foot)) <= 0.0 {
            foot
        } else if bi.norm() < bj.norm() {
            bi
        } else {
            bj
        };
        best = best.min(o.norm());
    }
    (best, fov.contains(mu))
}
