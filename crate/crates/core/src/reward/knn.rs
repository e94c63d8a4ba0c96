use nalgebra::SVector;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Exact nearest-neighbor sets of a particle cloud.
///
/// `neighbors(i)` holds i itself followed by its `ell - 1` nearest other
/// particles; `radius[i]` is the distance to the `ell`-th nearest other
/// particle. `reverse(j)` lists every i whose set contains j.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnIndex {
    pub ell: usize,
    sets: Vec<u32>,
    pub radius: Vec<f64>,
    reverse_start: Vec<usize>,
    reverse: Vec<u32>,
    /// True when some radius was zero and has been replaced.
    pub had_duplicates: bool,
}

impl KnnIndex {
    pub fn len(&self) -> usize {
        self.radius.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radius.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.sets[i * self.ell..(i + 1) * self.ell]
    }

    pub fn reverse(&self, j: usize) -> &[u32] {
        &self.reverse[self.reverse_start[j]..self.reverse_start[j + 1]]
    }
}

fn marginal_scales<const N: usize>(points: &[SVector<f64, N>]) -> SVector<f64, N> {
    let n = points.len() as f64;
    let mean = points.iter().fold(SVector::<f64, N>::zeros(), |a, p| a + p) / n;
    let var = points.iter().fold(SVector::<f64, N>::zeros(), |a, p| a + (p - mean).component_mul(&(p - mean))) / n;
    var.map(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 })
}

/// Nearest neighbors in coordinates standardized by each dimension's
/// standard deviation over the cloud.
pub fn build_knn<const N: usize>(points: &[SVector<f64, N>], ell: usize) -> Result<KnnIndex> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("nearest-neighbor index of an empty cloud".into()));
    }
    let scale = marginal_scales(points);
    let scaled: Vec<SVector<f64, N>> = points.iter().map(|p| p.component_mul(&scale)).collect();
    build_knn_euclidean(&scaled, ell)
}

/// Nearest neighbors under the plain Euclidean metric. Ties go to the lower index.
pub fn build_knn_euclidean<const N: usize>(points: &[SVector<f64, N>], ell: usize) -> Result<KnnIndex> {
    let n = points.len();
    if ell < 2 || n <= ell {
        return Err(Error::InvalidArgument(format!("need 2 <= ell < cloud size, got ell = {ell}, size = {n}")));
    }
    let rows: Vec<(Vec<u32>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<(f64, u32)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| ((points[i] - points[j]).norm_squared(), j as u32))
                .collect();
            let cmp = |a: &(f64, u32), b: &(f64, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            d.select_nth_unstable_by(ell - 1, cmp);
            let head = &mut d[..ell];
            head.sort_unstable_by(cmp);
            let mut set = Vec::with_capacity(ell);
            set.push(i as u32);
            set.extend(head[..ell - 1].iter().map(|x| x.1));
            (set, head[ell - 1].0.sqrt())
        })
        .collect();

    let mut sets = Vec::with_capacity(n * ell);
    let mut radius = Vec::with_capacity(n);
    for (s, r) in rows {
        sets.extend(s);
        radius.push(r);
    }
    let min_positive = radius.iter().copied().filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min);
    let had_duplicates = radius.iter().any(|r| *r == 0.0);
    if had_duplicates {
        log::warn!("nearest-neighbor radius of zero from duplicate particles");
        let fill = if min_positive.is_finite() { min_positive } else { f64::MIN_POSITIVE };
        radius.iter_mut().filter(|r| **r == 0.0).for_each(|r| *r = fill);
    }

    let mut counts = vec![0usize; n + 1];
    for &j in &sets {
        counts[j as usize + 1] += 1;
    }
    for k in 0..n {
        counts[k + 1] += counts[k];
    }
    let reverse_start = counts.clone();
    let mut fill = counts;
    let mut reverse = vec![0u32; sets.len()];
    for i in 0..n {
        for &j in &sets[i * ell..(i + 1) * ell] {
            reverse[fill[j as usize]] = i as u32;
            fill[j as usize] += 1;
        }
    }
    Ok(KnnIndex { ell, sets, radius, reverse_start, reverse, had_duplicates })
}
