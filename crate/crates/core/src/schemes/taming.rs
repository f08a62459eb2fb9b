/// Euclidean norm, rescaled when the plain sum of squares would overflow or
/// underflow.
pub fn euclidean_norm(v: &[f64]) -> f64 {
    let sum: f64 = v.iter().map(|x| x * x).sum();
    if sum.is_finite() && sum > 1e-280 {
        return sum.sqrt();
    }
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return if v.iter().any(|x| x.is_nan()) { f64::NAN } else { scale };
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// `M^(-alpha)`, the taming strength for a run with `M` steps.
pub fn taming_factor(n_steps: usize, alpha: f64) -> f64 {
    (n_steps as f64).powf(-alpha)
}

/// Tamed drift `b / (1 + M^(-alpha) |b|)` in place, given `M^(-alpha)`.
///
/// The result has norm at most `min(M^alpha, |b|)` and points along `b`.
pub fn tame_in_place(b: &mut [f64], factor: f64) {
    let norm = euclidean_norm(b);
    if norm == 0.0 {
        return;
    }
    let scale = 1.0 / (1.0 + factor * norm);
    b.iter_mut().for_each(|x| *x *= scale);
}

/// Tamed drift `b_M = b / (1 + M^(-alpha) |b|)`.
pub fn tame_drift(b: &[f64], n_steps: usize, alpha: f64) -> Vec<f64> {
    let mut out = b.to_vec();
    tame_in_place(&mut out, taming_factor(n_steps, alpha));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_is_fixed() {
        for (m, a) in [(1, 0.5), (1024, 0.1), (7, 0.5)] {
            assert_eq!(tame_drift(&[0.0, 0.0], m, a), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn drift_at_taming_level_is_halved() {
        // |b| = M^alpha = 4^(1/2) = 2.
        let out = tame_drift(&[2.0], 4, 0.5);
        assert!((euclidean_norm(&out) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_four_five() {
        let out = tame_drift(&[3.0, 4.0], 4, 0.5);
        assert!((out[0] - 6.0 / 7.0).abs() < 1e-15);
        assert!((out[1] - 8.0 / 7.0).abs() < 1e-15);
        let norm = euclidean_norm(&out);
        assert!((norm - 10.0 / 7.0).abs() < 1e-15);
        assert!(norm <= 2.0f64.min(5.0));
    }

    #[test]
    fn extreme_magnitudes() {
        let out = tame_drift(&[1e200, -1e200], 100, 0.5);
        assert!(euclidean_norm(&out) <= 10.0);
        assert!(out[0] > 0.0 && out[1] < 0.0);
        let tiny = tame_drift(&[1e-300], 100, 0.5);
        assert!(tiny[0] > 0.0 && tiny[0] <= 1e-300);
    }

    #[test]
    fn norm_is_scaled() {
        assert!((euclidean_norm(&[3e200, 4e200]) / 5e200 - 1.0).abs() < 1e-15);
        assert!((euclidean_norm(&[3e-200, 4e-200]) / 5e-200 - 1.0).abs() < 1e-15);
        assert_eq!(euclidean_norm(&[]), 0.0);
        assert!(euclidean_norm(&[f64::NAN, 1.0]).is_nan());
        assert_eq!(euclidean_norm(&[f64::INFINITY, 1.0]), f64::INFINITY);
    }
}
