use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::config::{GridConfig, Scheme};
use crate::controller::ControllerParams;
use crate::error::{Error, Result};
use crate::network::{power_angle_jacobians, solve_network, Impedance, Phasor};
use crate::simulator::{
    closed_loop_rate, detect_steady_state, minimum_window, LoopSolution, SimState, Simulation,
    StateRate, SteadyTolerance,
};

/// Largest normalized derivative residual accepted at an operating point.
pub const OPERATING_POINT_TOLERANCE: f64 = 1e-6;

/// A synchronized steady state of the closed loop, with the sharing
/// coefficients frozen at their values there.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub delta: Vec<f64>,
    pub voltages: Vec<f64>,
    pub phi: Vec<f64>,
    pub current_mag: f64,
    pub p_f: Vec<f64>,
    pub q_f: Vec<f64>,
    pub z_load: Impedance,
    pub z_lines: Vec<Impedance>,
    pub w_c: f64,
    /// Frequency gain in Hz per per-unit power.
    pub h: f64,
    pub p_base: f64,
}

impl OperatingPoint {
    /// Builds an operating point from a simulator state, resolving the
    /// algebraic loop there. Rejects states that are not steady.
    pub fn from_state(
        params: &ControllerParams,
        z_load: Impedance,
        z_lines: &[Impedance],
        state: &SimState,
        current_guess: f64,
    ) -> Result<Self> {
        let (_, resolved, _) = closed_loop_rate(params, z_load, z_lines, state, current_guess)?;
        let op = Self::from_parts(params, z_load, z_lines, state, &resolved);
        op.check()?;
        Ok(op)
    }

    fn from_parts(
        params: &ControllerParams,
        z_load: Impedance,
        z_lines: &[Impedance],
        state: &SimState,
        resolved: &LoopSolution,
    ) -> Self {
        Self {
            delta: state.delta.clone(),
            voltages: resolved.voltages.clone(),
            phi: resolved.phi.clone(),
            current_mag: resolved.current_mag,
            p_f: state.p_f.clone(),
            q_f: state.q_f.clone(),
            z_load,
            z_lines: z_lines.to_vec(),
            w_c: params.w_c,
            h: params.h,
            p_base: params.p_base,
        }
    }

    pub fn units(&self) -> usize {
        self.delta.len()
    }

    pub fn phasors(&self) -> Vec<Phasor> {
        self.voltages
            .iter()
            .zip(&self.delta)
            .map(|(&v, &d)| Phasor::new(v, d))
            .collect()
    }

    /// Largest of `|P_i − P_if|`, `|Q_i − Q_if|` and the spread of
    /// `P_if/φ_i`, all divided by the power base. Zero at an exact
    /// synchronized equilibrium.
    pub fn residual(&self) -> Result<f64> {
        let net = solve_network(&self.phasors(), self.z_load, &self.z_lines)?;
        let mut worst = 0.0f64;
        for i in 0..self.units() {
            worst = worst
                .max((net.p[i] - self.p_f[i]).abs())
                .max((net.q[i] - self.q_f[i]).abs());
        }
        let ratios: Vec<f64> = self.p_f.iter().zip(&self.phi).map(|(p, f)| p / f).collect();
        let (lo, hi) = ratios
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        Ok(worst.max(hi - lo) / self.p_base)
    }

    pub fn check(&self) -> Result<()> {
        let residual = self.residual()?;
        if !(residual <= OPERATING_POINT_TOLERANCE) {
            return Err(Error::InconsistentOperatingPoint {
                residual,
                limit: OPERATING_POINT_TOLERANCE,
            });
        }
        Ok(())
    }
}

/// Runs the economical closed loop from rest into a constant load until
/// it settles and returns the operating point reached.
pub fn acquire_operating_point(
    config: &GridConfig,
    params: &ControllerParams,
    z_load: Impedance,
) -> Result<OperatingPoint> {
    let sim = Simulation::new(config, Scheme::Economical)?.with_params(params.clone())?;
    let dt = config.dt.min(0.2 / params.w_c);
    // Sixty filter time constants, rounded up to whole steps.
    let horizon = ((60.0 / params.w_c) / dt).ceil().max(1.0) * dt;
    let window = minimum_window(params.w_c);
    let mut sim = sim;
    let mut last_residual = f64::INFINITY;
    for _ in 0..4 {
        let out = sim.run_loads(&[(0.0, z_load)], horizon.max(2.0 * window), dt)?;
        let settled = detect_steady_state(&out.trajectory, window, SteadyTolerance::default())?;
        let op = OperatingPoint::from_parts(params, z_load, sim.z_lines(), &out.final_state, &out.final_loop);
        last_residual = op.residual()?;
        if settled.iter().all(|s| s.reached) && last_residual <= OPERATING_POINT_TOLERANCE {
            return Ok(op);
        }
        sim = sim.with_initial_state(out.final_state, out.final_loop.current_mag);
    }
    Err(Error::InconsistentOperatingPoint {
        residual: last_residual,
        limit: OPERATING_POINT_TOLERANCE,
    })
}

/// Linearized closed loop in the state order `[ΔP_f | ΔQ_f | Δδ]`.
///
/// The angle rows carry `2π·h/(φ_i·p_base)`, matching `dδ/dt = 2π f` in the
/// simulator. Voltages and sharing coefficients are held at their operating
/// values.
pub fn build_state_matrix(op: &OperatingPoint) -> Result<DMatrix<f64>> {
    op.check()?;
    state_matrix_unchecked(op)
}

pub(crate) fn state_matrix_unchecked(op: &OperatingPoint) -> Result<DMatrix<f64>> {
    let n = op.units();
    let (tp, tq) = power_angle_jacobians(&op.phasors(), op.z_load, &op.z_lines)?;
    let mut a = DMatrix::zeros(3 * n, 3 * n);
    for i in 0..n {
        a[(i, i)] = -op.w_c;
        a[(n + i, n + i)] = -op.w_c;
        for j in 0..n {
            a[(i, 2 * n + j)] = op.w_c * tp[i][j];
            a[(n + i, 2 * n + j)] = op.w_c * tq[i][j];
        }
        a[(2 * n + i, i)] = 2.0 * PI * op.h / (op.phi[i] * op.p_base);
    }
    Ok(a)
}

fn flatten(rate: &StateRate) -> Vec<f64> {
    rate.d_p_f
        .iter()
        .chain(&rate.d_q_f)
        .chain(&rate.d_delta)
        .copied()
        .collect()
}

fn perturbed(op: &OperatingPoint, k: usize, step: f64) -> SimState {
    let n = op.units();
    let mut s = SimState {
        time: 0.0,
        delta: op.delta.clone(),
        p_f: op.p_f.clone(),
        q_f: op.q_f.clone(),
    };
    match k / n {
        0 => s.p_f[k % n] += step,
        1 => s.q_f[k % n] += step,
        _ => s.delta[k % n] += step,
    }
    s
}

/// Nonlinear closed-loop derivative at `op` displaced by `dx` (same order as
/// the state matrix), with the algebraic loop re-solved.
pub fn nonlinear_rate(op: &OperatingPoint, params: &ControllerParams, dx: &[f64]) -> Result<Vec<f64>> {
    let n = op.units();
    let state = SimState {
        time: 0.0,
        p_f: (0..n).map(|i| op.p_f[i] + dx[i]).collect(),
        q_f: (0..n).map(|i| op.q_f[i] + dx[n + i]).collect(),
        delta: (0..n).map(|i| op.delta[i] + dx[2 * n + i]).collect(),
    };
    let (rate, _, _) = closed_loop_rate(params, op.z_load, &op.z_lines, &state, op.current_mag)?;
    Ok(flatten(&rate))
}

/// Central-difference Jacobian of the full closed loop, letting voltages and
/// sharing coefficients follow the current. For comparison with
/// [`build_state_matrix`].
pub fn full_sensitivity_matrix(op: &OperatingPoint, params: &ControllerParams) -> Result<DMatrix<f64>> {
    let n = op.units();
    let mut a = DMatrix::zeros(3 * n, 3 * n);
    for k in 0..3 * n {
        let step = if k < 2 * n { 1e-3 * op.p_base } else { 1e-5 };
        let rate = |s: f64| -> Result<Vec<f64>> {
            let state = perturbed(op, k, s);
            let (r, _, _) = closed_loop_rate(params, op.z_load, &op.z_lines, &state, op.current_mag)?;
            Ok(flatten(&r))
        };
        let plus = rate(step)?;
        let minus = rate(-step)?;
        for r in 0..3 * n {
            a[(r, k)] = (plus[r] - minus[r]) / (2.0 * step);
        }
    }
    Ok(a)
}
