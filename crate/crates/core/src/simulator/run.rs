use std::f64::consts::PI;

use super::algebraic::{solve_algebraic_loop, LoopSolution};
use super::schedule::LoadSchedule;
use super::state::{SimState, StateRate};
use super::trajectory::{Sample, Segment, Trajectory};
use crate::config::{GridConfig, Scheme};
use crate::controller::{economical_command, filter_step, proportional_command, ControlCommand, ControllerParams, Sharing};
use crate::dispatch::{total_cost, CostFunction};
use crate::error::{Error, Result};
use crate::network::Impedance;

/// Largest `dt·w_c` accepted by the integrator.
pub const MAX_STEP_FILTER_PRODUCT: f64 = 0.2;

/// Closed-loop derivatives at a state whose algebraic loop is resolved.
pub fn derivatives(
    state: &SimState,
    resolved: &LoopSolution,
    params: &ControllerParams,
) -> Result<(StateRate, Vec<ControlCommand>)> {
    let n = state.units();
    let mut rate = StateRate {
        d_delta: vec![0.0; n],
        d_p_f: vec![0.0; n],
        d_q_f: vec![0.0; n],
    };
    let mut commands = Vec::with_capacity(n);
    for i in 0..n {
        let cmd = match params.sharing {
            Sharing::Economical(_) => economical_command(resolved.phi[i], state.p_f[i], params)?,
            Sharing::Proportional(_) => proportional_command(resolved.phi[i], state.p_f[i], params)?,
        };
        rate.d_delta[i] = 2.0 * PI * cmd.frequency;
        let (dp, dq) = filter_step(
            resolved.network.p[i],
            resolved.network.q[i],
            state.p_f[i],
            state.q_f[i],
            params.w_c,
        );
        rate.d_p_f[i] = dp;
        rate.d_q_f[i] = dq;
        commands.push(cmd);
    }
    Ok((rate, commands))
}

/// Resolves the algebraic loop at `state` and returns its derivatives.
pub fn closed_loop_rate(
    params: &ControllerParams,
    z_load: Impedance,
    z_lines: &[Impedance],
    state: &SimState,
    i_guess: f64,
) -> Result<(StateRate, LoopSolution, Vec<ControlCommand>)> {
    let resolved = solve_algebraic_loop(&state.delta, params, z_load, z_lines, i_guess)?;
    let (rate, commands) = derivatives(state, &resolved, params)?;
    Ok((rate, resolved, commands))
}

/// Trajectory plus the state reached at the last grid point.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub final_state: SimState,
    pub final_loop: LoopSolution,
}

/// A configured closed loop, ready to integrate.
#[derive(Debug, Clone)]
pub struct Simulation {
    scheme: Scheme,
    params: ControllerParams,
    costs: Vec<CostFunction>,
    z_lines: Vec<Impedance>,
    decimation: usize,
    initial: Option<SimState>,
    initial_current: f64,
    bases: super::schedule::LoadBases,
}

impl Simulation {
    pub fn new(config: &GridConfig, scheme: Scheme) -> Result<Self> {
        config.validate()?;
        let params = config.controller(scheme)?;
        Ok(Self {
            scheme,
            initial_current: params.p_base / params.v_pcc_ref,
            params,
            costs: config.costs(),
            z_lines: config.line_impedances(),
            decimation: config.output_decimation,
            initial: None,
            bases: config.load_bases(),
        })
    }

    /// Replaces the controller, e.g. to study a modified gain.
    pub fn with_params(mut self, params: ControllerParams) -> Result<Self> {
        params.validate()?;
        if params.sharing.units() != self.costs.len() {
            return Err(Error::Config("controller unit count does not match the grid".into()));
        }
        self.params = params;
        Ok(self)
    }

    pub fn with_initial_state(mut self, state: SimState, current_guess: f64) -> Self {
        self.initial = Some(state);
        self.initial_current = current_guess;
        self
    }

    pub fn with_decimation(mut self, decimation: usize) -> Self {
        self.decimation = decimation.max(1);
        self
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn z_lines(&self) -> &[Impedance] {
        &self.z_lines
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn run(&self, schedule: &LoadSchedule, t_end: f64, dt: f64) -> Result<Trajectory> {
        let loads = schedule.resolve(self.bases)?;
        Ok(self.run_loads(&loads, t_end, dt)?.trajectory)
    }

    /// Integrates with fixed-step RK4 through `(start, impedance)` loads.
    pub fn run_loads(&self, loads: &[(f64, Impedance)], t_end: f64, dt: f64) -> Result<RunOutput> {
        let n = self.costs.len();
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        if dt * self.params.w_c > MAX_STEP_FILTER_PRODUCT {
            return Err(Error::Config(format!(
                "dt·w_c = {} exceeds {MAX_STEP_FILTER_PRODUCT}",
                dt * self.params.w_c
            )));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be positive, got {t_end}")));
        }
        if loads.is_empty() || loads[0].0 != 0.0 {
            return Err(Error::Config("load schedule must start at t = 0".into()));
        }
        let steps = (t_end / dt).round() as usize;
        let starts: Vec<usize> = loads.iter().map(|(t, _)| (t / dt).round() as usize).collect();
        if starts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "two load steps fall on the same integration grid point".into(),
            ));
        }
        if *starts.last().unwrap() >= steps {
            return Err(Error::Config(format!(
                "t_end = {t_end} s does not cover the last scheduled load step"
            )));
        }
        let segments: Vec<Segment> = loads
            .iter()
            .enumerate()
            .map(|(k, &(_, z_load))| Segment {
                start: starts[k] as f64 * dt,
                end: starts.get(k + 1).copied().unwrap_or(steps) as f64 * dt,
                z_load,
            })
            .collect();

        let mut state = match &self.initial {
            Some(s) => {
                if s.units() != n || s.p_f.len() != n || s.q_f.len() != n {
                    return Err(Error::Config("initial state has the wrong unit count".into()));
                }
                let mut s = s.clone();
                s.wrap();
                s
            }
            None => SimState::zero(n),
        };
        let mut guess = self.initial_current;
        let mut seg = 0;
        let mut samples = Vec::with_capacity(steps / self.decimation + 1);
        let mut integral = 0.0;
        let mut prev_tagc: Option<f64> = None;

        for k in 0..=steps {
            while seg + 1 < starts.len() && k >= starts[seg + 1] {
                seg += 1;
            }
            let t = k as f64 * dt;
            state.time = t;
            let z_load = segments[seg].z_load;
            let at = |e: Error| Error::Simulation {
                time: t,
                source: Box::new(e),
            };

            let (k1, resolved, commands) =
                closed_loop_rate(&self.params, z_load, &self.z_lines, &state, guess).map_err(at)?;
            guess = resolved.current_mag;

            let tagc = total_cost(&self.costs, &state.p_f);
            if let Some(prev) = prev_tagc {
                integral += 0.5 * dt * (prev + tagc);
            }
            prev_tagc = Some(tagc);

            if k % self.decimation == 0 {
                samples.push(self.sample(&state, seg, z_load, &resolved, &commands, tagc));
            }
            if k == steps {
                let trajectory = Trajectory {
                    scheme: self.scheme,
                    units: n,
                    dt,
                    decimation: self.decimation,
                    w_c: self.params.w_c,
                    segments,
                    samples,
                    integrated_tagc: integral,
                };
                return Ok(RunOutput {
                    trajectory,
                    final_state: state,
                    final_loop: resolved,
                });
            }

            let mut stage = |s: SimState| -> Result<StateRate> {
                let (r, l, _) = closed_loop_rate(&self.params, z_load, &self.z_lines, &s, guess)?;
                guess = l.current_mag;
                Ok(r)
            };
            let k2 = stage(state.advanced(&k1, 0.5 * dt)).map_err(at)?;
            let k3 = stage(state.advanced(&k2, 0.5 * dt)).map_err(at)?;
            let k4 = stage(state.advanced(&k3, dt)).map_err(at)?;
            let mut next = state.advanced(&StateRate::rk4([&k1, &k2, &k3, &k4]), dt);
            next.wrap();
            state = next;
        }
        unreachable!("loop returns at the final step")
    }

    fn sample(
        &self,
        state: &SimState,
        segment: usize,
        z_load: Impedance,
        resolved: &LoopSolution,
        commands: &[ControlCommand],
        tagc: f64,
    ) -> Sample {
        let net = &resolved.network;
        Sample {
            time: state.time,
            segment,
            frequency: commands.iter().map(|c| c.frequency).collect(),
            voltage: resolved.voltages.clone(),
            delta: state.delta.clone(),
            p: net.p.clone(),
            q: net.q.clone(),
            p_f: state.p_f.clone(),
            q_f: state.q_f.clone(),
            current: net.current.magnitude,
            v_pcc: net.load_voltage.magnitude,
            load_power: net.current.magnitude.powi(2) * z_load.resistance,
            phi: resolved.phi.clone(),
            tagc,
            saturated: commands.iter().map(|c| c.saturated).collect(),
        }
    }
}

/// Runs `scheme` on `config` through `schedule`.
pub fn run_scenario(
    config: &GridConfig,
    schedule: &LoadSchedule,
    scheme: Scheme,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    Simulation::new(config, scheme)?.run(schedule, t_end, dt)
}
