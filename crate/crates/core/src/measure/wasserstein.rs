use crate::error::{Error, Result};
use crate::measure::pairwise_sum;

/// Same-index coupling estimate `((1/N) sum_j |a_j - b_j|^2)^(1/2)`.
///
/// Both clouds are `N x dim` row-major. This is an upper bound on the
/// Wasserstein-2 distance between the two empirical measures. The squared
/// distances are summed in ascending order, so couplings with the same
/// multiset of distances give bitwise-equal results.
pub fn w2_coupled(a: &[f64], b: &[f64], dim: usize) -> Result<f64> {
    if dim == 0 || a.len() != b.len() || a.is_empty() || a.len() % dim != 0 {
        return Err(Error::ShapeMismatch(format!(
            "coupled W2 needs equal non-empty N x {dim} clouds, got {} and {} values",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() / dim;
    let mut terms: Vec<f64> = a
        .chunks(dim)
        .zip(b.chunks(dim))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum())
        .collect();
    terms.sort_by(f64::total_cmp);
    Ok((pairwise_sum(&terms) / n as f64).sqrt())
}

/// Exact Wasserstein-2 distance between two equal-size 1-D empirical
/// measures via the sorted (quantile) coupling.
pub fn w2_exact_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "exact 1-D W2 needs equal non-empty samples, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    w2_coupled(&a, &b, 1)
}
