//! Data association by loopy belief propagation next to exhaustive
//! enumeration, on a small problem with two close measurements.
//!
//!     cargo run --example association

use mpslam::association::{enumerate_association, solve_association, AssociationProblem, BpOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Rows are paths; column 0 is "missed", column m is measurement m.
    let omega = [[0.2, 8.0, 6.0, 0.1], [0.5, 3.0, 4.0, 0.1], [0.9, 0.1, 0.1, 2.0]];
    // Weight of a measurement being new or clutter.
    let xi = [1.0, 1.0, 1.5];
    let problem = AssociationProblem {
        log_omega: omega.iter().map(|r| r.iter().map(|x: &f64| x.ln()).collect()).collect(),
        log_xi: xi.iter().map(|x: &f64| x.ln()).collect(),
    };
    let bp = solve_association(&problem, &BpOptions::default())?;
    let exact = enumerate_association(&problem)?;
    println!("converged after {} iterations: {}", bp.iterations, bp.converged);
    for (i, (b, e)) in bp.eta.iter().zip(&exact.eta).enumerate() {
        let fmt = |row: &[f64]| row.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(" ");
        println!("path {i}: bp [{}]  exact [{}]", fmt(b), fmt(e));
    }
    println!("bp argmax {:?}, exact argmax {:?}", bp.argmax(), exact.argmax());
    let unclaimed: Vec<String> = bp.eta_meas.iter().map(|p| format!("{p:.3}")).collect();
    println!("measurements left unclaimed: {}", unclaimed.join(" "));
    Ok(())
}
