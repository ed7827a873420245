//! Probabilistic data association by loopy belief propagation.
//!
//! Each legacy path `i` takes a value `a_i ∈ {0, 1..M}` (0: missed) and each
//! measurement may be claimed by at most one path. Path-side evidence is
//! `ω_i(a)`; a measurement not claimed by any path carries weight `ξ_m`
//! (false alarm plus new feature, relative to the false-alarm intensity).
//! All evidence is passed as natural logarithms because amplitude
//! likelihood ratios routinely exceed the `f64` range.

use crate::error::{Error, Result};
use crate::math::log_add;

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationProblem {
    /// `log_omega[i][a]` for `a = 0..=M`.
    pub log_omega: Vec<Vec<f64>>,
    /// `log_xi[m - 1]` for `m = 1..=M`.
    pub log_xi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMarginals {
    /// Posterior association probabilities per path, over `0..=M`.
    pub eta: Vec<Vec<f64>>,
    /// Probability that measurement `m` is claimed by no legacy path.
    pub eta_meas: Vec<f64>,
    /// Extrinsic messages into each path, `log ν_i(a)`, with `ν_i(0) = 1`.
    pub log_nu: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for BpOptions {
    fn default() -> Self {
        BpOptions {
            max_iters: 200,
            tol: 1e-6,
        }
    }
}

impl AssociationProblem {
    pub fn num_paths(&self) -> usize {
        self.log_omega.len()
    }

    pub fn num_measurements(&self) -> usize {
        self.log_xi.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.num_measurements();
        for (i, row) in self.log_omega.iter().enumerate() {
            if row.len() != m + 1 {
                return Err(Error::InvalidArgument(format!(
                    "path {i}: {} evidence entries for {m} measurements",
                    row.len()
                )));
            }
            if row[0] == f64::NEG_INFINITY || row.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
                return Err(Error::InvalidArgument(format!(
                    "path {i}: miss evidence must be positive and all entries finite"
                )));
            }
        }
        if self.log_xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("measurement weights must be finite and positive".into()));
        }
        Ok(())
    }
}

/// `out[k] = ln(exp(base) + Σ_{j≠k} exp(x[j]))`, computed with prefix and
/// suffix sums so no term is subtracted.
fn leave_one_out(base: f64, x: &[f64], out: &mut Vec<f64>) {
    let n = x.len();
    out.clear();
    out.resize(n, 0.0);
    let mut acc = base;
    for k in 0..n {
        out[k] = acc;
        acc = log_add(acc, x[k]);
    }
    let mut acc = f64::NEG_INFINITY;
    for k in (0..n).rev() {
        out[k] = log_add(out[k], acc);
        acc = log_add(acc, x[k]);
    }
}

pub fn solve_association(problem: &AssociationProblem, opts: &BpOptions) -> Result<AssociationMarginals> {
    problem.validate()?;
    let ni = problem.num_paths();
    let nm = problem.num_measurements();

    // log β_i(m) = log ω_i(m) - log ω_i(0)
    let log_beta: Vec<Vec<f64>> = problem
        .log_omega
        .iter()
        .map(|row| row[1..].iter().map(|x| x - row[0]).collect())
        .collect();

    // log ν_{m→i}, stored per path; initial value 1.
    let mut log_nu = vec![vec![0.0; nm]; ni];
    let mut log_mu = vec![vec![f64::NEG_INFINITY; ni]; nm];
    let mut buf = Vec::new();
    let mut col = Vec::new();
    let mut iterations = 0;
    let mut converged = nm == 0 || ni == 0;

    while !converged && iterations < opts.max_iters {
        iterations += 1;
        for i in 0..ni {
            let x: Vec<f64> = (0..nm).map(|m| log_beta[i][m] + log_nu[i][m]).collect();
            leave_one_out(0.0, &x, &mut buf);
            for m in 0..nm {
                log_mu[m][i] = log_beta[i][m] - buf[m];
            }
        }
        let mut delta: f64 = 0.0;
        for m in 0..nm {
            col.clear();
            col.extend_from_slice(&log_mu[m]);
            leave_one_out(problem.log_xi[m], &col, &mut buf);
            for i in 0..ni {
                let new = -buf[i];
                let old = log_nu[i][m];
                delta = delta.max((new.exp() - old.exp()).abs());
                log_nu[i][m] = new;
            }
        }
        converged = delta < opts.tol;
    }

    let eta = (0..ni)
        .map(|i| {
            let logs: Vec<f64> = std::iter::once(0.0)
                .chain((0..nm).map(|m| log_beta[i][m] + log_nu[i][m]))
                .collect();
            normalize_logs(&logs)
        })
        .collect();

    // Final path-to-measurement messages from the converged ν.
    for i in 0..ni {
        let x: Vec<f64> = (0..nm).map(|m| log_beta[i][m] + log_nu[i][m]).collect();
        leave_one_out(0.0, &x, &mut buf);
        for m in 0..nm {
            log_mu[m][i] = log_beta[i][m] - buf[m];
        }
    }
    let eta_meas = (0..nm)
        .map(|m| {
            let claimed = log_mu[m]
                .iter()
                .fold(f64::NEG_INFINITY, |acc, &x| log_add(acc, x));
            let xi = problem.log_xi[m];
            (xi - log_add(xi, claimed)).exp()
        })
        .collect();

    let log_nu = log_nu
        .into_iter()
        .map(|row| std::iter::once(0.0).chain(row).collect())
        .collect();

    Ok(AssociationMarginals {
        eta,
        eta_meas,
        log_nu,
        iterations,
        converged,
    })
}

fn normalize_logs(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|x| (x - max).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

impl AssociationMarginals {
    /// Most probable value of each path's association; ties go to the lower
    /// index.
    pub fn argmax(&self) -> Vec<usize> {
        self.eta
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (a, &p)| {
                        if p > best.1 {
                            (a, p)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect()
    }
}

/// Exact association marginals by enumerating every one-to-one map. Only
/// practical for a handful of paths and measurements.
pub fn enumerate_association(problem: &AssociationProblem) -> Result<AssociationMarginals> {
    problem.validate()?;
    let ni = problem.num_paths();
    let nm = problem.num_measurements();
    let mut log_w = Vec::new();
    let mut maps = Vec::new();
    let mut a = vec![0usize; ni];
    let mut used = vec![false; nm + 1];
    fn rec(
        i: usize,
        a: &mut Vec<usize>,
        used: &mut Vec<bool>,
        p: &AssociationProblem,
        log_w: &mut Vec<f64>,
        maps: &mut Vec<Vec<usize>>,
    ) {
        if i == a.len() {
            let mut w: f64 = a.iter().enumerate().map(|(i, &ai)| p.log_omega[i][ai]).sum();
            for m in 1..used.len() {
                if !used[m] {
                    w += p.log_xi[m - 1];
                }
            }
            log_w.push(w);
            maps.push(a.clone());
            return;
        }
        for v in 0..used.len() {
            if v > 0 && used[v] {
                continue;
            }
            a[i] = v;
            if v > 0 {
                used[v] = true;
            }
            rec(i + 1, a, used, p, log_w, maps);
            if v > 0 {
                used[v] = false;
            }
        }
    }
    rec(0, &mut a, &mut used, problem, &mut log_w, &mut maps);
    let w = normalize_logs(&log_w);
    let mut eta = vec![vec![0.0; nm + 1]; ni];
    let mut eta_meas = vec![1.0; nm];
    for (map, &wk) in maps.iter().zip(&w) {
        for (i, &ai) in map.iter().enumerate() {
            eta[i][ai] += wk;
            if ai > 0 {
                eta_meas[ai - 1] -= wk;
            }
        }
    }
    Ok(AssociationMarginals {
        eta,
        eta_meas,
        log_nu: Vec::new(),
        iterations: 0,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(omega: &[&[f64]], xi: &[f64]) -> AssociationProblem {
        AssociationProblem {
            log_omega: omega.iter().map(|r| r.iter().map(|x| x.ln()).collect()).collect(),
            log_xi: xi.iter().map(|x| x.ln()).collect(),
        }
    }

    #[test]
    fn two_hypotheses() {
        let p = problem(&[&[1.0, 9.0]], &[1.0]);
        let m = solve_association(&p, &BpOptions::default()).unwrap();
        assert!((m.eta[0][1] - 0.9).abs() < 1e-12);
        assert!((m.eta[0][0] - 0.1).abs() < 1e-12);
        assert!((m.eta_meas[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn no_measurements() {
        let p = problem(&[&[0.3], &[2.0]], &[]);
        let m = solve_association(&p, &BpOptions::default()).unwrap();
        assert_eq!(m.eta, vec![vec![1.0], vec![1.0]]);
    }

    #[test]
    fn rejects_zero_miss_evidence() {
        let p = problem(&[&[0.0, 1.0]], &[1.0]);
        assert!(solve_association(&p, &BpOptions::default()).is_err());
    }

    #[test]
    fn two_by_two_matches_enumeration() {
        let p = problem(&[&[1.0, 5.0, 0.5], &[0.7, 4.0, 2.0]], &[1.2, 0.8]);
        let bp = solve_association(&p, &BpOptions { max_iters: 1000, tol: 1e-12 }).unwrap();
        let ex = enumerate_association(&p).unwrap();
        for (a, b) in bp.eta.iter().flatten().zip(ex.eta.iter().flatten()) {
            assert!((a - b).abs() < 0.05, "{a} vs {b}");
        }
        assert_eq!(bp.argmax(), ex.argmax());
    }

    #[test]
    fn huge_evidence_is_handled() {
        let p = AssociationProblem {
            log_omega: vec![vec![0.0, 900.0, -50.0], vec![0.0, 850.0, 800.0]],
            log_xi: vec![0.0, 10.0],
        };
        let m = solve_association(&p, &BpOptions::default()).unwrap();
        assert!(m.eta.iter().flatten().all(|x| x.is_finite()));
        assert_eq!(m.argmax(), vec![1, 2]);
    }

    #[test]
    fn marginals_are_consistent_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let ni = rng.random_range(1..5);
            let nm = rng.random_range(0..5);
            let p = AssociationProblem {
                log_omega: (0..ni)
                    .map(|_| (0..=nm).map(|_| rng.random_range(-3.0..3.0)).collect())
                    .collect(),
                log_xi: (0..nm).map(|_| rng.random_range(-1.0..1.0)).collect(),
            };
            let m = solve_association(&p, &BpOptions::default()).unwrap();
            for row in &m.eta {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            for k in 0..nm {
                let claimed: f64 = m.eta.iter().map(|r| r[k + 1]).sum();
                assert!(claimed <= 1.0 + 1e-3);
            }
        }
    }

    #[test]
    fn residual_settles_on_fixed_seeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let p = AssociationProblem {
                log_omega: (0..4)
                    .map(|_| (0..=4).map(|_| rng.random_range(-2.0..2.0)).collect())
                    .collect(),
                log_xi: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
            };
            let m = solve_association(&p, &BpOptions::default()).unwrap();
            assert!(m.converged, "no convergence in {} iterations", m.iterations);
        }
    }

    proptest! {
        #[test]
        fn row_scaling_is_invariant(
            row in proptest::collection::vec(-5.0f64..5.0, 4),
            other in proptest::collection::vec(-5.0f64..5.0, 4),
            xi in proptest::collection::vec(-1.0f64..1.0, 3),
            shift in -50.0f64..50.0,
        ) {
            let p = AssociationProblem { log_omega: vec![row.clone(), other.clone()], log_xi: xi.clone() };
            let q = AssociationProblem {
                log_omega: vec![row.iter().map(|x| x + shift).collect(), other],
                log_xi: xi,
            };
            let a = solve_association(&p, &BpOptions::default()).unwrap();
            let b = solve_association(&q, &BpOptions::default()).unwrap();
            for (x, y) in a.eta[0].iter().zip(&b.eta[0]) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
