//! Special functions for the Rician amplitude model.
//!
//! Amplitudes are normalized so that the complex noise has variance 1/2 per
//! component. A path with normalized amplitude `u` then produces an amplitude
//! estimate with Rician density `2z exp(-(z^2+u^2)) I0(2zu)`, and the
//! probability of exceeding the detection threshold `u_de` is the Marcum
//! Q-function `Q1(sqrt(2) u, sqrt(2) u_de)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Exponentially scaled modified Bessel function `I0(x) exp(-|x|)`.
pub fn bessel_i0e(x: f64) -> f64 {
    let x = x.abs();
    if x <= 30.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // Asymptotic expansion; coefficients ((2k-1)!!)^2 / (k! 8^k).
        let inv = 1.0 / (8.0 * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..=16 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            term *= odd * odd * inv / kf;
            sum += term;
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

/// Natural log of the Rician amplitude density (noise variance 1/2).
pub fn rician_log_pdf(z: f64, u: f64) -> f64 {
    if z <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let d = z - u;
    (2.0 * z).ln() - d * d + bessel_i0e(2.0 * z * u).ln()
}

pub fn rician_pdf(z: f64, u: f64) -> f64 {
    rician_log_pdf(z, u).exp()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl48() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(48))
}

/// Probability that the Rician amplitude of a path with normalized
/// amplitude `u` exceeds `threshold`, i.e. `Q1(sqrt(2) u, sqrt(2) threshold)`.
pub fn rician_exceedance(u: f64, threshold: f64) -> f64 {
    if threshold <= 0.0 {
        return 1.0;
    }
    let u = u.max(0.0);
    // The CDF mass below the threshold is below 1e-18 here.
    if u - threshold > 6.5 {
        return 1.0;
    }
    let (nodes, weights) = gl48();
    let half = 0.5 * threshold;
    let cdf: f64 = nodes
        .iter()
        .zip(weights)
        .map(|(&t, &w)| w * rician_pdf(half * (t + 1.0), u))
        .sum::<f64>()
        * half;
    (1.0 - cdf).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: Poisson mixture representation of the Marcum Q
    // function, Q1(a, b) = sum_k Pois(k; a^2/2) * P(Gamma(k+1) > b^2/2).
    fn marcum_q1_series(a: f64, b: f64) -> f64 {
        let lam = 0.5 * a * a;
        let x = 0.5 * b * b;
        let mut pois = (-lam).exp();
        let mut total = 0.0;
        // upper regularized gamma for integer k+1: e^-x sum_{i<=k} x^i/i!
        let mut partial = 0.0;
        let mut xi = (-x).exp();
        for k in 0..4000 {
            partial += xi;
            total += pois * partial;
            xi *= x / (k as f64 + 1.0);
            pois *= lam / (k as f64 + 1.0);
            if k as f64 > lam + 50.0 && pois < 1e-300 {
                break;
            }
        }
        total
    }

    #[test]
    fn i0e_matches_reference_values() {
        // I0(1) = 1.2660658777520082, I0(10) = 2815.716628466254
        assert!((bessel_i0e(1.0) * 1f64.exp() - 1.2660658777520082).abs() < 1e-14);
        assert!((bessel_i0e(10.0) * 10f64.exp() / 2815.716628466254 - 1.0).abs() < 1e-13);
        // continuity across the series/asymptotic switch
        let a = bessel_i0e(30.0);
        let b = bessel_i0e(30.0 + 1e-12);
        assert!((a - b).abs() < 1e-12);
        // I0(50) e^-50 = 0.056561626647...
        assert!((bessel_i0e(50.0) - 0.056_561_626_647_454_19).abs() < 1e-14);
    }

    #[test]
    fn exceedance_at_zero_amplitude_is_rayleigh_tail() {
        for t in [0.5, 1.0, 1.995, 3.0] {
            let p = rician_exceedance(0.0, t);
            assert!((p - (-t * t as f64).exp()).abs() < 1e-12, "t={t}: {p}");
        }
    }

    #[test]
    fn exceedance_matches_series_oracle() {
        let t = crate::math::db_to_amplitude(6.0);
        for u in [0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0] {
            let p = rician_exceedance(u, t);
            let q = marcum_q1_series(2f64.sqrt() * u, 2f64.sqrt() * t);
            assert!((p - q).abs() < 1e-10, "u={u}: {p} vs {q}");
        }
    }

    #[test]
    fn exceedance_saturates_for_strong_paths() {
        let t = crate::math::db_to_amplitude(6.0);
        assert!(rician_exceedance(10.0 * t, t) > 0.999);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }
}
