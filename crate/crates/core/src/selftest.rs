//! Oracle suites that can be run from the command line: dispatch against an
//! exhaustive grid search, analytic Jacobians against finite differences,
//! power conservation, and eigenvalue identities.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{GridConfig, Scheme};
use crate::dispatch::{brute_force_dispatch, solve_dispatch, CostFunction};
use crate::error::Result;
use crate::network::{complex_powers, power_angle_jacobians, solve_network, Impedance, Phasor};
use crate::smallsignal::{acquire_operating_point, build_state_matrix, spectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    /// Worst observed error, in the suite's own normalization.
    pub worst: f64,
    pub limit: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.worst <= self.limit
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} cases={:<3} worst={:.3e} limit={:.1e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.limit
        )
    }
}

/// Runs every suite with a fixed seed.
pub fn run_all(seed: u64) -> Result<Vec<SuiteReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        dispatch_oracle(&mut rng, 10, 0.05)?,
        jacobian_differences(&mut rng, 20)?,
        power_conservation(&mut rng, 20)?,
        spectrum_identities(&mut rng)?,
    ])
}

/// Cost of moving each unit one grid step away from `powers`.
pub fn one_step_cost(costs: &[CostFunction], powers: &[f64], step: f64) -> f64 {
    costs
        .iter()
        .zip(powers)
        .map(|(c, &p)| c.marginal(p).abs() * step + c.a.abs() * step * step)
        .sum()
}

/// Random bounded 2-3 unit instances; the solver must be no worse than the
/// grid optimum and no better by more than one step of cost.
pub fn dispatch_oracle(rng: &mut impl Rng, cases: usize, step: f64) -> Result<SuiteReport> {
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let n = rng.gen_range(2..=3);
        let costs: Vec<CostFunction> = (0..n)
            .map(|_| {
                let p_max = rng.gen_range(20.0..60.0);
                CostFunction::new(
                    rng.gen_range(0.05..0.5),
                    rng.gen_range(0.0..2.0),
                    rng.gen_range(0.0..5.0),
                    0.0,
                    p_max,
                )
            })
            .collect::<Result<_>>()?;
        let cap: f64 = costs.iter().map(|c| c.p_max).sum();
        let load = rng.gen_range(0.05..0.95) * cap;
        let exact = solve_dispatch(&costs, load, true)?;
        let grid = brute_force_dispatch(&costs, load, step)?;
        let allowance = one_step_cost(&costs, &grid.powers, step);
        // Positive when the solver is worse than the grid, or when it
        // beats the grid by more than a step.
        let excess = (exact.total_cost - grid.total_cost).max(grid.total_cost - exact.total_cost - allowance);
        worst = worst.max(excess.max(0.0) / allowance.max(f64::MIN_POSITIVE));
    }
    Ok(SuiteReport {
        name: "dispatch-brute-force",
        cases,
        worst,
        limit: 1e-6,
    })
}

fn random_network(rng: &mut impl Rng) -> (Vec<Phasor>, Impedance, Vec<Impedance>) {
    let n = rng.gen_range(2..=4);
    let v = (0..n)
        .map(|_| Phasor::new(rng.gen_range(10.0..80.0), rng.gen_range(-0.6..0.6)))
        .collect();
    let z_load = Impedance::new(rng.gen_range(2.0..30.0), rng.gen_range(0.0..8.0));
    let lines = (0..n)
        .map(|_| Impedance::new(rng.gen_range(0.0..0.5), rng.gen_range(0.1..1.5)))
        .collect();
    (v, z_load, lines)
}

/// Analytic `∂P/∂δ`, `∂Q/∂δ` against central differences.
pub fn jacobian_differences(rng: &mut impl Rng, cases: usize) -> Result<SuiteReport> {
    let mut worst = 0.0f64;
    let h = 1e-6;
    for _ in 0..cases {
        let (v, z_load, lines) = random_network(rng);
        let (tp, tq) = power_angle_jacobians(&v, z_load, &lines)?;
        let n = v.len();
        let scale = tp
            .iter()
            .chain(&tq)
            .flatten()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        for j in 0..n {
            let shifted = |d: f64| {
                let mut w = v.clone();
                w[j] = Phasor::new(w[j].magnitude, w[j].angle + d);
                solve_network(&w, z_load, &lines)
            };
            let plus = shifted(h)?;
            let minus = shifted(-h)?;
            for i in 0..n {
                let dp = (plus.p[i] - minus.p[i]) / (2.0 * h);
                let dq = (plus.q[i] - minus.q[i]) / (2.0 * h);
                worst = worst.max((dp - tp[i][j]).abs() / scale).max((dq - tq[i][j]).abs() / scale);
            }
        }
    }
    Ok(SuiteReport {
        name: "jacobian-differences",
        cases,
        worst,
        limit: 1e-5,
    })
}

/// Generated complex power equals the power absorbed by the loop, and the
/// trigonometric sums agree with `V·conj(I)`.
pub fn power_conservation(rng: &mut impl Rng, cases: usize) -> Result<SuiteReport> {
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let (v, z_load, lines) = random_network(rng);
        let net = solve_network(&v, z_load, &lines)?;
        let direct = complex_powers(&v, z_load, &lines)?;
        let generated: Complex64 = net.p.iter().zip(&net.q).map(|(&p, &q)| Complex64::new(p, q)).sum();
        let total_z = lines.iter().fold(z_load.to_complex(), |a, z| a + z.to_complex());
        let absorbed = total_z * net.current.magnitude.powi(2);
        let scale = absorbed.norm();
        worst = worst.max((generated - absorbed).norm() / scale);
        for (i, s) in direct.iter().enumerate() {
            worst = worst.max((Complex64::new(net.p[i], net.q[i]) - s).norm() / scale);
        }
    }
    Ok(SuiteReport {
        name: "power-conservation",
        cases,
        worst,
        limit: 1e-9,
    })
}

/// Trace and determinant identities on random matrices, plus trace and
/// residual checks on the state matrix of the bundled grid at 12 Ω.
pub fn spectrum_identities(rng: &mut impl Rng) -> Result<SuiteReport> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..5 {
        let a = DMatrix::from_fn(9, 9, |_, _| rng.gen_range(-1.0..1.0));
        let s = spectrum(&a)?;
        let sum: Complex64 = s.values.iter().sum();
        let prod: Complex64 = s.values.iter().product();
        let det = a.determinant();
        worst = worst
            .max((sum.re - a.trace()).abs() / a.trace().abs().max(s.norm))
            .max((prod - det).norm() / det.abs().max(f64::MIN_POSITIVE))
            .max(s.max_relative_residual());
        cases += 1;
    }
    let config = GridConfig::table1();
    let params = config.controller(Scheme::Economical)?;
    let op = acquire_operating_point(&config, &params, Impedance::resistive(12.0))?;
    let a = build_state_matrix(&op)?;
    let s = spectrum(&a)?;
    let expected = -2.0 * op.units() as f64 * op.w_c;
    let sum: f64 = s.values.iter().map(|l| l.re).sum();
    worst = worst
        .max((sum - expected).abs() / expected.abs())
        .max(s.max_relative_residual());
    cases += 1;
    Ok(SuiteReport {
        name: "spectrum-identities",
        cases,
        worst,
        limit: 1e-8,
    })
}
