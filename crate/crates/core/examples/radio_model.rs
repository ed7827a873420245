//! Amplitude calibration, detection probability and measurement spread
//! against distance.
//!
//!     cargo run --example radio_model [snr_1m_db]

use mpslam::propagation::{detection_probability, RadioConstants};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let snr: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(30.0);
    let rc = RadioConstants::calibrated(snr, 6.0, 6e9, 1e9);
    rc.validate()?;
    println!("u(1 m) = {:.4}, detection threshold u_de = {:.4}", rc.amplitude(1.0, 1.0), rc.u_de);
    println!("{:>6} {:>6} {:>8} {:>7} {:>10} {:>9} {:>9}", "d [m]", "rho", "u", "p_d", "sd_d [mm]", "sd_aod", "sd_aoa");
    for d in [1.0, 2.0, 4.0, 8.0, 16.0] {
        for rho in [1.0, 0.5, 0.1] {
            let u = rc.amplitude(rho, d);
            let v = rc.variances(u);
            println!(
                "{d:>6.1} {rho:>6.1} {u:>8.3} {:>7.4} {:>10.2} {:>8.2}° {:>8.2}°",
                detection_probability(u, &rc),
                1e3 * v.d.sqrt(),
                v.aod.sqrt().to_degrees(),
                v.aoa.sqrt().to_degrees()
            );
        }
    }
    Ok(())
}
