use crate::controller::ControllerParams;
use crate::error::{Error, Result};
use crate::network::{solve_network, Impedance, NetworkSolution, Phasor};

const DAMPING: f64 = 0.5;
const MAX_ITERATIONS: usize = 100;

/// Consistent `(I, φ, V)` triple for a given set of angles.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSolution {
    pub current_mag: f64,
    pub phi: Vec<f64>,
    pub voltages: Vec<f64>,
    pub network: NetworkSolution,
    pub iterations: usize,
}

fn evaluate(
    delta: &[f64],
    phi: Vec<f64>,
    params: &ControllerParams,
    z_load: Impedance,
    z_lines: &[Impedance],
) -> Result<(Vec<f64>, Vec<f64>, NetworkSolution)> {
    let voltages: Vec<f64> = phi.iter().map(|p| p * params.v_pcc_ref).collect();
    let phasors: Vec<Phasor> = voltages
        .iter()
        .zip(delta)
        .map(|(&v, &d)| Phasor::new(v, d))
        .collect();
    let network = solve_network(&phasors, z_load, z_lines)?;
    Ok((phi, voltages, network))
}

/// Resolves the circular dependence `I → φ(I) → V → I` by damped
/// fixed-point iteration starting from `i_guess`.
pub fn solve_algebraic_loop(
    delta: &[f64],
    params: &ControllerParams,
    z_load: Impedance,
    z_lines: &[Impedance],
    i_guess: f64,
) -> Result<LoopSolution> {
    if !(i_guess >= 0.0 && i_guess.is_finite()) {
        return Err(Error::Config(format!("current guess must be >= 0, got {i_guess}")));
    }
    if params.sharing.is_constant() {
        let phi = params.sharing.coefficients(i_guess)?;
        let (phi, voltages, network) = evaluate(delta, phi, params, z_load, z_lines)?;
        return Ok(LoopSolution {
            current_mag: network.current.magnitude,
            phi,
            voltages,
            network,
            iterations: 1,
        });
    }

    let mut current = i_guess;
    let mut residual = f64::INFINITY;
    for k in 1..=MAX_ITERATIONS {
        let phi = params.sharing.coefficients(current)?;
        let (phi, voltages, network) = evaluate(delta, phi, params, z_load, z_lines)?;
        let next = network.current.magnitude;
        residual = (next - current).abs();
        if residual <= 1e-9 * current.max(1.0) {
            return Ok(LoopSolution {
                current_mag: next,
                phi,
                voltages,
                network,
                iterations: k,
            });
        }
        current = (1.0 - DAMPING) * current + DAMPING * next;
    }
    Err(Error::AlgebraicLoop {
        iterations: MAX_ITERATIONS,
        last_current: current,
        residual,
    })
}
