/// Elementary symmetric functions e_0..e_m of `values`.
///
/// Built by multiplying out the polynomial prod (1 + v x) one factor at a
/// time, O(m^2).
pub fn esf(values: &[f64]) -> Vec<f64> {
    let mut e = Vec::with_capacity(values.len() + 1);
    e.push(1.0);
    for &v in values {
        e.push(0.0);
        for j in (1..e.len()).rev() {
            e[j] += v * e[j - 1];
        }
    }
    e
}

/// Coefficients of prod (b_k + a_k x) for the pairs (b_k, a_k), dropping
/// powers above `max_degree`.
///
/// Coefficient j equals e_j(a/b) * prod b. With each pair scaled so that
/// max(a, b) = 1 the expansion cannot overflow however many factors it has.
pub fn pair_polynomial(pairs: &[(f64, f64)], max_degree: usize) -> Vec<f64> {
    let mut c = vec![0.0; max_degree.min(pairs.len()) + 1];
    c[0] = 1.0;
    let mut deg = 0;
    for &(b, a) in pairs {
        if deg < max_degree {
            deg += 1;
        }
        for j in (1..=deg).rev() {
            c[j] = b * c[j] + a * c[j - 1];
        }
        c[0] *= b;
    }
    c
}

/// Elementary symmetric functions up to order `max_order`.
pub fn esf_truncated(values: &[f64], max_order: usize) -> Vec<f64> {
    let pairs: Vec<(f64, f64)> = values.iter().map(|&v| (1.0, v)).collect();
    pair_polynomial(&pairs, max_order)
}
