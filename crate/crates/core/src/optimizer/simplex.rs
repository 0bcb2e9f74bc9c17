/// Euclidean projection onto the probability simplex `{x ≥ 0, Σx = 1}` by the
/// sort-and-threshold method.
///
/// Returns an empty vector for empty input.
pub fn project_simplex(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    values.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Projects each block of `weights` onto its own simplex in place.
pub fn project_blocks(weights: &mut [f64], blocks: &[std::ops::Range<usize>]) {
    for b in blocks {
        let p = project_simplex(&weights[b.clone()]);
        weights[b.clone()].copy_from_slice(&p);
    }
}
