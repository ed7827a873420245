use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{detection_probability, Measurement, PathGeometry, RadioConstants, Variances};
use crate::math::wrap_angle;
use crate::special::rician_log_pdf;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Support of the measurement space: distances in `(0, d_max]`, angles on
/// the full circle, amplitudes above the detection threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub d_max: f64,
}

/// Log density of a normal wrapped onto the circle. For narrow distributions
/// only the principal term is kept; the others then stay below 1e-23 of the
/// peak density.
pub fn log_wrapped_normal(x: f64, mean: f64, var: f64) -> f64 {
    let r = wrap_angle(x - mean);
    let base = -0.5 * (LN_2PI + var.ln());
    if var < 0.09 {
        return base - r * r / (2.0 * var);
    }
    let terms = (-4..=4).map(|k| {
        let e = r + 2.0 * PI * k as f64;
        -e * e / (2.0 * var)
    });
    base + crate::math::log_sum_exp(terms)
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    let e = x - mean;
    -0.5 * (LN_2PI + var.ln()) - e * e / (2.0 * var)
}

/// `ln(f(z | path) p_d(u))` for a path with distance `d`, angles `aod`,
/// `aoa` (relative) and amplitude `u`. The detection probability cancels
/// against the normalization of the truncated amplitude density, which
/// keeps this finite for small `u`.
#[inline]
pub fn log_detected_likelihood(
    z: &Measurement,
    d: f64,
    aod: f64,
    aoa: f64,
    u: f64,
    rc: &RadioConstants,
) -> f64 {
    let v = rc.variances(u);
    log_normal(z.z_d, d, v.d)
        + log_wrapped_normal(z.z_aod, aod, v.aod)
        + log_wrapped_normal(z.z_aoa, aoa, v.aoa)
        + rician_log_pdf(z.z_u, u)
}

/// Likelihood of `z` given that `path` with amplitude `u` was detected.
/// The amplitude factor is the Rician density truncated to `[u_de, inf)`.
pub fn evaluate_lhf(
    z: &Measurement,
    path: &PathGeometry,
    u: f64,
    var: &Variances,
    rc: &RadioConstants,
) -> f64 {
    if z.z_u < rc.u_de {
        return 0.0;
    }
    let pd = detection_probability(u, rc);
    if pd <= 0.0 {
        return 0.0;
    }
    let log = log_normal(z.z_d, path.length, var.d)
        + log_wrapped_normal(z.z_aod, path.aod, var.aod)
        + log_wrapped_normal(z.z_aoa, path.aoa, var.aoa)
        + rician_log_pdf(z.z_u, u);
    log.exp() / pd
}

/// `ln f_fa(z)`: uniform in distance and both angles, Rayleigh tail above
/// the threshold in amplitude.
pub fn log_false_alarm_density(z: &Measurement, roi: &Roi, rc: &RadioConstants) -> f64 {
    if !(z.z_d > 0.0 && z.z_d <= roi.d_max) || z.z_u < rc.u_de {
        return f64::NEG_INFINITY;
    }
    let u_de = rc.u_de;
    -roi.d_max.ln() - 2.0 * (2.0 * PI).ln() + (2.0 * z.z_u).ln() - (z.z_u * z.z_u - u_de * u_de)
}

pub fn false_alarm_density(z: &Measurement, roi: &Roi, rc: &RadioConstants) -> f64 {
    log_false_alarm_density(z, roi, rc).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec2;
    use crate::propagation::solve_path;
    use crate::special::gauss_legendre;

    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
        let (x, w) = gauss_legendre(32);
        let h = (b - a) / pieces as f64;
        (0..pieces)
            .map(|p| {
                let lo = a + p as f64 * h;
                x.iter()
                    .zip(&w)
                    .map(|(xi, wi)| wi * f(lo + 0.5 * h * (xi + 1.0)))
                    .sum::<f64>()
                    * 0.5
                    * h
            })
            .sum()
    }

    fn setup() -> (RadioConstants, PathGeometry, f64, Variances) {
        let rc = RadioConstants::default();
        let path = solve_path(Vec2::new(3.0, 4.0), 0.2, Vec2::ZERO, &[]).unwrap();
        let u = rc.amplitude(1.0, path.length);
        (rc, path, u, rc.variances(u))
    }

    #[test]
    fn peak_value() {
        let (rc, path, u, v) = setup();
        let z = Measurement {
            z_d: path.length,
            z_aod: path.aod,
            z_aoa: path.aoa,
            z_u: u,
        };
        let peak = (2.0 * PI * v.d).sqrt().recip()
            * (2.0 * PI * v.aod).sqrt().recip()
            * (2.0 * PI * v.aoa).sqrt().recip()
            * crate::special::rician_pdf(u, u)
            / detection_probability(u, &rc);
        let got = evaluate_lhf(&z, &path, u, &v, &rc);
        assert!((got / peak - 1.0).abs() < 1e-12);

        let off = Measurement {
            z_d: path.length + 5.0 * v.d.sqrt(),
            ..z
        };
        let ratio = evaluate_lhf(&off, &path, u, &v, &rc) / got;
        assert!((ratio / (-12.5f64).exp() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn truncated_amplitude_integrates_to_one() {
        let rc = RadioConstants::default();
        for u in [0.0, 0.5, 2.0, 3.0, 10.0, 31.6] {
            let pd = detection_probability(u, &rc);
            let hi = rc.u_de.max(u) + 12.0;
            let total = quad(|z| crate::special::rician_pdf(z, u) / pd, rc.u_de, hi, 64);
            assert!((total - 1.0).abs() < 1e-6, "u={u}: {total}");
        }
    }

    #[test]
    fn wrapped_normal_integrates_to_one() {
        for var in [0.01, 0.5, 3.0] {
            let total = quad(|x| log_wrapped_normal(x, 2.9, var).exp(), -PI, PI, 64);
            assert!((total - 1.0).abs() < 1e-9, "var={var}: {total}");
        }
    }

    #[test]
    fn false_alarm_density_integrates_to_one() {
        let rc = RadioConstants::default();
        let roi = Roi { d_max: 20.0 };
        // Separable: the distance and angle factors are uniform.
        let z0 = Measurement {
            z_d: 1.0,
            z_aod: 0.0,
            z_aoa: 0.0,
            z_u: rc.u_de,
        };
        let amp = quad(
            |u| false_alarm_density(&Measurement { z_u: u, ..z0 }, &roi, &rc),
            rc.u_de,
            rc.u_de + 12.0,
            64,
        );
        let total = amp * roi.d_max * (2.0 * PI) * (2.0 * PI);
        assert!((total - 1.0).abs() < 1e-9);
        let outside = Measurement { z_d: 25.0, ..z0 };
        assert_eq!(false_alarm_density(&outside, &roi, &rc), 0.0);
    }
}
