use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::db_to_amplitude;
use crate::special::rician_exceedance;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Link-budget and array constants shared by the generator and the filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConstants {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub p_tx: f64,
    pub h_rx: f64,
    pub sigma_n: f64,
    /// Detection threshold on the normalized amplitude.
    pub u_de: f64,
    pub k_array_pa: f64,
    pub k_array_agent: f64,
}

impl Default for RadioConstants {
    fn default() -> Self {
        RadioConstants::calibrated(30.0, 6.0, 6e9, 1e9)
    }
}

impl RadioConstants {
    /// Unit transmit power and gain, with the noise level chosen so that a
    /// reflection-free path of 1 m has amplitude `10^(snr_1m_db / 20)`. Both
    /// arrays are 5x5 with quarter-wavelength spacing.
    pub fn calibrated(snr_1m_db: f64, u_de_db: f64, carrier_hz: f64, bandwidth_hz: f64) -> Self {
        let lambda = SPEED_OF_LIGHT / carrier_hz;
        let k = array_constant(5, 0.25);
        RadioConstants {
            carrier_hz,
            bandwidth_hz,
            p_tx: 1.0,
            h_rx: 1.0,
            sigma_n: lambda / (4.0 * PI * db_to_amplitude(snr_1m_db)),
            u_de: db_to_amplitude(u_de_db),
            k_array_pa: k,
            k_array_agent: k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.carrier_hz,
            self.bandwidth_hz,
            self.p_tx,
            self.h_rx,
            self.sigma_n,
            self.u_de,
            self.k_array_pa,
            self.k_array_agent,
        ];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config("radio constants must be positive".into()))
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Amplitude of a reflection-free path at 1 m.
    pub fn gain(&self) -> f64 {
        (self.h_rx * self.p_tx).sqrt() * self.wavelength() / (4.0 * PI * self.sigma_n)
    }

    /// Unchecked amplitude for hot loops; `d` must be positive.
    #[inline]
    pub fn amplitude(&self, beta: f64, d: f64) -> f64 {
        beta * self.gain() / d
    }

    /// RMS bandwidth of a flat spectrum of width `bandwidth_hz`.
    pub fn effective_bandwidth(&self) -> f64 {
        self.bandwidth_hz / 12f64.sqrt()
    }

    /// Variances for amplitude `u`, with `u` floored at a tiny positive value.
    pub fn variances(&self, u: f64) -> Variances {
        let u2 = u.max(1e-9).powi(2);
        let b = self.effective_bandwidth();
        Variances {
            d: SPEED_OF_LIGHT * SPEED_OF_LIGHT / (8.0 * PI * PI * b * b * u2),
            aod: self.k_array_pa / u2,
            aoa: self.k_array_agent / u2,
            u: 0.5,
        }
    }
}

/// Angle variance times `u^2` for a square array of `n x n` elements with
/// spacing given in wavelengths, from the aperture second moment.
pub fn array_constant(n: usize, spacing_wavelengths: f64) -> f64 {
    let nf = n as f64;
    let moment = spacing_wavelengths * spacing_wavelengths * (nf * nf - 1.0) / 12.0;
    1.0 / (8.0 * PI * PI * moment)
}

/// Measurement variances `(d, aod, aoa, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variances {
    pub d: f64,
    pub aod: f64,
    pub aoa: f64,
    pub u: f64,
}

/// Normalized amplitude of a path of length `d` with attenuation `beta`.
pub fn normalized_amplitude(beta: f64, d: f64, rc: &RadioConstants) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "path length must be positive, got {d}"
        )));
    }
    Ok(rc.amplitude(beta, d))
}

/// Probability that a path with amplitude `u` is detected.
pub fn detection_probability(u: f64, rc: &RadioConstants) -> f64 {
    rician_exceedance(u, rc.u_de)
}

pub fn measurement_variances(u: f64, rc: &RadioConstants) -> Result<Variances> {
    if !(u > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "variances need a positive amplitude, got {u}"
        )));
    }
    Ok(rc.variances(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn calibration() {
        let rc = RadioConstants::default();
        assert!((normalized_amplitude(1.0, 1.0, &rc).unwrap() - 1000f64.sqrt()).abs() < 1e-10);
        assert!((normalized_amplitude(1.0, 10.0, &rc).unwrap() - 3.16228).abs() < 1e-5);
        assert!((normalized_amplitude(0.5, 1.0, &rc).unwrap() - 15.8114).abs() < 1e-4);
        assert_eq!(normalized_amplitude(0.0, 3.0, &rc).unwrap(), 0.0);
        assert!(normalized_amplitude(1.0, 0.0, &rc).is_err());
    }

    #[test]
    fn quarter_wave_five_by_five() {
        assert!((array_constant(5, 0.25) - 1.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn detection_limits() {
        let rc = RadioConstants::default();
        let u_de: f64 = rc.u_de;
        assert!((detection_probability(0.0, &rc) - (-u_de * u_de).exp()).abs() < 1e-10);
        assert!(detection_probability(10.0 * u_de, &rc) > 0.999);
    }

    proptest! {
        #[test]
        fn detection_monotone(a in 0.0f64..20.0, b in 0.0f64..20.0) {
            let rc = RadioConstants::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(detection_probability(hi, &rc) >= detection_probability(lo, &rc) - 1e-12);
        }

        #[test]
        fn amplitude_homogeneous(beta in 0.0f64..1.0, d in 0.1f64..50.0) {
            let rc = RadioConstants::default();
            let u = rc.amplitude(1.0, d);
            prop_assert!((rc.amplitude(beta, d) - beta * u).abs() <= 1e-12 * u);
            prop_assert!((rc.amplitude(1.0, 2.0 * d) - u / 2.0).abs() <= 1e-12 * u);
        }
    }

    #[test]
    fn variance_scaling() {
        let rc = RadioConstants::default();
        let u = 1000f64.sqrt();
        let a = measurement_variances(u, &rc).unwrap();
        let b = measurement_variances(2.0 * u, &rc).unwrap();
        assert_eq!(b.d.sqrt(), a.d.sqrt() / 2.0);
        assert!((a.aoa * u * u - b.aoa * 4.0 * u * u).abs() < 1e-15);
        assert!(measurement_variances(0.0, &rc).is_err());
    }

    #[test]
    fn distance_variance_matches_numeric_pulse_fim() {
        // Discretized flat spectrum; delay Fisher information is
        // 8 pi^2 u^2 times the spectral second moment.
        let rc = RadioConstants::default();
        let n = 200_001;
        let b = rc.bandwidth_hz;
        let (mut m0, mut m2) = (0.0, 0.0);
        for k in 0..n {
            let f = -b / 2.0 + b * k as f64 / (n - 1) as f64;
            m0 += 1.0;
            m2 += f * f;
        }
        let beta2 = m2 / m0;
        let u = 1000f64.sqrt();
        let fim = 8.0 * PI * PI * beta2 * u * u / (SPEED_OF_LIGHT * SPEED_OF_LIGHT);
        let v = measurement_variances(u, &rc).unwrap();
        assert!((v.d * fim - 1.0).abs() < 1e-4);
    }
}
