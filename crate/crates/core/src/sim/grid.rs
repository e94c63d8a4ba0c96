use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix2, Vector2};

use crate::astro::{wrap_pi, wrap_two_pi};
use crate::error::{Error, Result};
use crate::gmm::{project_to_for, GaussianMixture, MeasurementMap};
use crate::reward::Action;

/// Rectangular field of regard tiled with pointing directions at half-FOV
/// spacing. Cells are stored row-major: rows run over declination, columns
/// over right ascension.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGrid {
    /// Center of the first column; may lie outside [0, 2π).
    pub ra_start: f64,
    pub dec_start: f64,
    pub step: f64,
    pub n_ra: usize,
    pub n_dec: usize,
    pub fov_side: f64,
}

impl ActionGrid {
    /// Smallest centered grid of spacing `fov_side / 2` whose cell centers
    /// span the box [ra_min, ra_max] x [dec_min, dec_max].
    pub fn from_bounds(ra_min: f64, ra_max: f64, dec_min: f64, dec_max: f64, fov_side: f64) -> Result<Self> {
        if !(fov_side > 0.0) || !(ra_max >= ra_min) || !(dec_max >= dec_min) {
            return Err(Error::InvalidArgument("action grid needs ordered bounds and a positive FOV".into()));
        }
        let step = 0.5 * fov_side;
        let count = |w: f64| (w / step - 1e-9).ceil().max(0.0) as usize + 1;
        let (n_ra, n_dec) = (count(ra_max - ra_min), count(dec_max - dec_min));
        let ra_start = 0.5 * (ra_min + ra_max) - 0.5 * (n_ra - 1) as f64 * step;
        let dec_start = 0.5 * (dec_min + dec_max) - 0.5 * (n_dec - 1) as f64 * step;
        Ok(Self { ra_start, dec_start, step, n_ra, n_dec, fov_side })
    }

    /// Grid over the bounding box of the projected intensity: every
    /// component's projected mean widened by `margin` marginal standard
    /// deviations of its projected covariance.
    ///
    /// Right ascensions are unwrapped around the weighted circular mean so a
    /// search set straddling ra = 0 yields a compact box.
    pub fn covering(
        intensity: &GaussianMixture<6>,
        map: &impl MeasurementMap<6>,
        fov_side: f64,
        margin: f64,
    ) -> Result<Self> {
        if intensity.is_empty() {
            return Err(Error::ZeroWeight);
        }
        let z: Vec<(f64, Vector2<f64>, Matrix2<f64>)> = intensity
            .components
            .iter()
            .map(|c| project_to_for(c, map).map(|(m, p)| (c.weight, m, p)))
            .collect::<Result<_>>()?;
        let (s, c) = z.iter().fold((0.0, 0.0), |(s, c), (w, p, _)| (s + w * p.x.sin(), c + w * p.x.cos()));
        let ra_ref = s.atan2(c);
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for (_, p, cov) in &z {
            let ra = ra_ref + wrap_pi(p.x - ra_ref);
            let (sr, sd) = (margin * cov[(0, 0)].sqrt(), margin * cov[(1, 1)].sqrt());
            b = [b[0].min(ra - sr), b[1].max(ra + sr), b[2].min(p.y - sd), b[3].max(p.y + sd)];
        }
        Self::from_bounds(b[0], b[1], b[2].max(-FRAC_PI_2), b[3].min(FRAC_PI_2), fov_side)
    }

    pub fn len(&self) -> usize {
        self.n_ra * self.n_dec
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pointing of cell `index`, ra wrapped to [0, 2π).
    pub fn center(&self, index: usize) -> Vector2<f64> {
        let (row, col) = (index / self.n_ra, index % self.n_ra);
        Vector2::new(wrap_two_pi(self.ra_start + col as f64 * self.step), self.dec_start + row as f64 * self.step)
    }

    pub fn action(&self, index: usize) -> Action {
        Action::new(self.center(index), self.fov_side)
    }

    pub fn actions(&self) -> Vec<Action> {
        (0..self.len()).map(|k| self.action(k)).collect()
    }

    /// (ra_min, ra_max, dec_min, dec_max) of the cell centers, ra unwrapped.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        (
            self.ra_start,
            self.ra_start + (self.n_ra - 1) as f64 * self.step,
            self.dec_start,
            self.dec_start + (self.n_dec - 1) as f64 * self.step,
        )
    }

    /// Cell whose center is nearest to `z`, if `z` falls within half a step of the grid.
    pub fn locate(&self, z: &Vector2<f64>) -> Option<usize> {
        let ra = self.ra_start + wrap_two_pi(z.x - self.ra_start + 0.5 * self.step) - 0.5 * self.step;
        let col = ((ra - self.ra_start) / self.step).round();
        let row = ((z.y - self.dec_start) / self.step).round();
        if col < 0.0 || row < 0.0 || col >= self.n_ra as f64 || row >= self.n_dec as f64 {
            return None;
        }
        Some(row as usize * self.n_ra + col as usize)
    }

    /// Intensity mass per cell, assigning each component to the cell nearest
    /// its projected mean.
    pub fn projected_mass(&self, intensity: &GaussianMixture<6>, map: &impl MeasurementMap<6>) -> Result<Vec<f64>> {
        let mut mass = vec![0.0; self.len()];
        for c in &intensity.components {
            if let Some(k) = self.locate(&map.eval(&c.mean)?) {
                mass[k] += c.weight;
            }
        }
        Ok(mass)
    }

    /// Weight whose projected mean falls inside each action's FOV.
    pub fn fov_mass(&self, intensity: &GaussianMixture<6>, map: &impl MeasurementMap<6>) -> Result<Vec<f64>> {
        let z: Vec<Vector2<f64>> = intensity.components.iter().map(|c| map.eval(&c.mean)).collect::<Result<_>>()?;
        Ok((0..self.len())
            .map(|k| {
                let fov = self.action(k).fov;
                intensity.components.iter().zip(&z).filter(|(_, p)| fov.contains(p)).map(|(c, _)| c.weight).sum()
            })
            .collect())
    }

    /// Whether cells `a` and `b` are the same or touch, diagonals included.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        let (ra, ca) = ((a / self.n_ra) as i64, (a % self.n_ra) as i64);
        let (rb, cb) = ((b / self.n_ra) as i64, (b % self.n_ra) as i64);
        (ra - rb).abs() <= 1 && (ca - cb).abs() <= 1
    }
}

/// Scanning-baseline order: cells by decreasing in-FOV intensity mass, ties
/// broken by index.
pub fn scan_order(grid: &ActionGrid, intensity: &GaussianMixture<6>, map: &impl MeasurementMap<6>) -> Result<Vec<usize>> {
    Ok(order_by_mass(&grid.fov_mass(intensity, map)?))
}

pub fn order_by_mass(mass: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..mass.len()).collect();
    order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
    order
}
