use rand::Rng;

/// Effective sample size `1 / Σ w²` of normalized weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().map(|w| w * w).sum();
    if s > 0.0 {
        1.0 / s
    } else {
        0.0
    }
}

/// Systematic resampling: `n` parent indices from normalized `weights` with
/// one uniform offset. Parents come out in nondecreasing order.
pub fn systematic_indices<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    if weights.is_empty() || n == 0 {
        return out;
    }
    let total: f64 = weights.iter().sum();
    let step = total / n as f64;
    let mut u = rng.random::<f64>() * step;
    let mut cum = weights[0];
    let mut i = 0;
    for _ in 0..n {
        while u > cum && i + 1 < weights.len() {
            i += 1;
            cum += weights[i];
        }
        out.push(i);
        u += step;
    }
    out
}

/// Turns log weights into normalized weights in place and returns the log
/// normalizer. An all `-inf` input leaves uniform weights.
pub fn normalize_log_weights(log_w: &[f64], out: &mut Vec<f64>) -> f64 {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    if !max.is_finite() {
        let n = log_w.len();
        out.extend(std::iter::repeat_n(1.0 / n as f64, n));
        return max;
    }
    out.extend(log_w.iter().map(|&l| (l - max).exp()));
    let s: f64 = out.iter().sum();
    for w in out.iter_mut() {
        *w /= s;
    }
    max + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ess_bounds() {
        assert_eq!(effective_sample_size(&[0.25; 4]), 4.0);
        assert_eq!(effective_sample_size(&[1.0, 0.0, 0.0]), 1.0);
    }

    #[test]
    fn degenerate_weight_takes_all() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let idx = systematic_indices(&[0.0, 1.0, 0.0], 5, &mut rng);
        assert_eq!(idx, vec![1; 5]);
    }

    #[test]
    fn log_normalization() {
        let mut w = Vec::new();
        let z = normalize_log_weights(&[1000.0, 1000.0 + 2f64.ln()], &mut w);
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((z - (1000.0 + 3f64.ln())).abs() < 1e-12);
        normalize_log_weights(&[f64::NEG_INFINITY; 2], &mut w);
        assert_eq!(w, vec![0.5, 0.5]);
    }

    proptest! {
        // Each parent is copied floor(n w) or ceil(n w) times.
        #[test]
        fn systematic_counts(raw in prop::collection::vec(0.0f64..1.0, 1..20), seed in 0u64..1000) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let n = 64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let idx = systematic_indices(&w, n, &mut rng);
            prop_assert_eq!(idx.len(), n);
            prop_assert!(idx.windows(2).all(|p| p[0] <= p[1]));
            for (i, wi) in w.iter().enumerate() {
                let c = idx.iter().filter(|&&k| k == i).count() as f64;
                let e = wi * n as f64;
                prop_assert!(c >= e.floor() - 1.0 && c <= e.ceil() + 1.0, "{} {} {}", i, c, e);
            }
        }
    }
}
