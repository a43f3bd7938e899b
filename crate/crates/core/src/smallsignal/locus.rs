use std::fmt;
use std::fmt::Write as _;

use num_complex::Complex64;

use super::eigen::{norm_inf, spectrum};
use super::matrix::{acquire_operating_point, build_state_matrix};
use crate::config::{GridConfig, Scheme};
use crate::error::{Error, Result};
use crate::network::Impedance;

/// Relative radius of the ball around zero holding the rotation mode.
pub const ZERO_BALL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Marginal => "marginal",
            Verdict::Unstable => "unstable",
        })
    }
}

/// Number of eigenvalues with `|λ| ≤ ZERO_BALL·norm`.
pub fn zero_modes(eigs: &[Complex64], norm: f64) -> usize {
    eigs.iter().filter(|l| l.norm() <= ZERO_BALL * norm).count()
}

/// Classifies a spectrum, exempting one simple eigenvalue at zero.
/// `norm` is the max-row-sum norm of the matrix the eigenvalues came from.
pub fn stability_verdict(eigs: &[Complex64], norm: f64) -> Verdict {
    let ball = ZERO_BALL * norm;
    if zero_modes(eigs, norm) >= 2 {
        return Verdict::Marginal;
    }
    let smallest = eigs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .filter(|(_, l)| l.norm() <= ball)
        .map(|(k, _)| k);
    let rest = eigs.iter().enumerate().filter(|(k, _)| Some(*k) != smallest);
    let mut verdict = Verdict::Stable;
    for (_, l) in rest {
        if l.re > ball {
            return Verdict::Unstable;
        }
        if l.re >= -ball {
            verdict = Verdict::Marginal;
        }
    }
    verdict
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Resistive load, Ω, at the configured filter cutoff.
    LoadResistance,
    /// Filter cutoff, rad/s, at a fixed resistive load.
    WC,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::LoadResistance => "load_resistance",
            SweepParameter::WC => "w_c",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub from: f64,
    pub to: f64,
    /// Number of swept values, endpoints included.
    pub steps: usize,
    /// Load used while sweeping the filter cutoff, Ω.
    pub load_resistance: f64,
}

impl Sweep {
    pub fn new(parameter: SweepParameter, from: f64, to: f64, steps: usize) -> Self {
        Self {
            parameter,
            from,
            to,
            steps,
            load_resistance: 12.0,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| self.from + (self.to - self.from) * k as f64 / last)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::validation("steps", "must be >= 1"));
        }
        for (name, v) in [("from", self.from), ("to", self.to)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(name, "must be positive and finite"));
            }
        }
        if !(self.load_resistance > 0.0 && self.load_resistance.is_finite()) {
            return Err(Error::validation("load_resistance", "must be positive and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocusPoint {
    pub value: f64,
    /// Empty when `error` is set.
    pub eigenvalues: Vec<Complex64>,
    pub verdict: Option<Verdict>,
    pub zero_modes: usize,
    pub norm: f64,
    pub trace: f64,
    /// Largest inverse-iteration residual divided by the norm.
    pub max_residual: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootLocus {
    pub parameter: SweepParameter,
    pub units: usize,
    pub points: Vec<LocusPoint>,
}

impl RootLocus {
    pub fn all_stable(&self) -> bool {
        !self.points.is_empty() && self.points.iter().all(|p| p.verdict == Some(Verdict::Stable))
    }

    pub fn failures(&self) -> impl Iterator<Item = &LocusPoint> {
        self.points.iter().filter(|p| p.error.is_some())
    }

    pub fn csv_header(units: usize) -> String {
        let mut h = String::from("param");
        for k in 1..=3 * units {
            let _ = write!(h, ",re_{k},im_{k}");
        }
        h.push_str(",verdict");
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.units);
        out.push('\n');
        for p in &self.points {
            let _ = write!(out, "{:.15e}", p.value);
            for k in 0..3 * self.units {
                match p.eigenvalues.get(k) {
                    Some(l) => {
                        let _ = write!(out, ",{:.15e},{:.15e}", l.re, l.im);
                    }
                    None => out.push_str(",NaN,NaN"),
                }
            }
            match p.verdict {
                Some(v) => {
                    let _ = writeln!(out, ",{v}");
                }
                None => out.push_str(",failed\n"),
            }
        }
        out
    }
}

fn evaluate_point(config: &GridConfig, sweep: &Sweep, value: f64) -> Result<LocusPoint> {
    let mut params = config.controller(Scheme::Economical)?;
    let z_load = match sweep.parameter {
        SweepParameter::LoadResistance => Impedance::resistive(value),
        SweepParameter::WC => {
            params.w_c = value;
            Impedance::resistive(sweep.load_resistance)
        }
    };
    let op = acquire_operating_point(config, &params, z_load)?;
    let a = build_state_matrix(&op)?;
    let s = spectrum(&a)?;
    let norm = norm_inf(&a);
    Ok(LocusPoint {
        value,
        verdict: Some(stability_verdict(&s.values, norm)),
        zero_modes: zero_modes(&s.values, norm),
        norm,
        trace: a.trace(),
        max_residual: s.max_relative_residual(),
        eigenvalues: s.values,
        error: None,
    })
}

/// Orders each spectrum so that entry `k` continues entry `k` of the
/// previous point: closest pairs are matched first.
pub fn match_continuity(points: &mut [LocusPoint]) {
    let mut previous: Option<Vec<Complex64>> = None;
    for p in points.iter_mut() {
        if p.eigenvalues.is_empty() {
            continue;
        }
        match &previous {
            None => p
                .eigenvalues
                .sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))),
            Some(prev) if prev.len() == p.eigenvalues.len() => {
                let m = prev.len();
                let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(m * m);
                for (i, a) in prev.iter().enumerate() {
                    for (j, b) in p.eigenvalues.iter().enumerate() {
                        pairs.push(((a - b).norm(), i, j));
                    }
                }
                pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
                let mut slot: Vec<Option<usize>> = vec![None; m];
                let mut used = vec![false; m];
                for (_, i, j) in pairs {
                    if slot[i].is_none() && !used[j] {
                        slot[i] = Some(j);
                        used[j] = true;
                    }
                }
                p.eigenvalues = slot.iter().map(|j| p.eigenvalues[j.unwrap()]).collect();
            }
            Some(_) => {}
        }
        previous = Some(p.eigenvalues.clone());
    }
}

/// Sweeps a parameter, acquiring the steady state at every value by
/// simulation, and returns the matched eigenvalue loci. A value whose steady
/// state or spectrum cannot be found is kept with its error.
pub fn root_locus(config: &GridConfig, sweep: Sweep) -> Result<RootLocus> {
    config.validate()?;
    sweep.validate()?;
    let values = sweep.values();
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(values.len());
    let chunk = values.len().div_ceil(workers);
    let mut points: Vec<LocusPoint> = std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&v| {
                            evaluate_point(config, &sweep, v).unwrap_or_else(|e| LocusPoint {
                                value: v,
                                eigenvalues: Vec::new(),
                                verdict: None,
                                zero_modes: 0,
                                norm: f64::NAN,
                                trace: f64::NAN,
                                max_residual: f64::NAN,
                                error: Some(e.to_string()),
                            })
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    match_continuity(&mut points);
    Ok(RootLocus {
        parameter: sweep.parameter,
        units: config.units(),
        points,
    })
}
