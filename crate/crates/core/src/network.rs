//! Quasi-static phasor model of the series cascade.
//!
//! All units drive one loop `Σ V_i e^{jδ_i} = (z_load + Σ z_i)·I`, so a
//! single current flows through every module and the load. Active and
//! reactive output of unit `i` follow from
//!
//! ```text
//! P_i = V_i Z' Σ_j V_j cos(δ_i − δ_j − θ')
//! Q_i = V_i Z' Σ_j V_j sin(δ_i − δ_j − θ')
//! ```
//!
//! where `Z'∠θ' = 1/(z_load + Σ z_i)` is an admittance.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phasor {
    pub magnitude: f64,
    pub angle: f64,
}

impl Phasor {
    /// Normalizes to a non-negative magnitude and a wrapped angle.
    pub fn new(magnitude: f64, angle: f64) -> Self {
        if magnitude < 0.0 {
            Self {
                magnitude: -magnitude,
                angle: wrap_angle(angle + PI),
            }
        } else {
            Self {
                magnitude,
                angle: wrap_angle(angle),
            }
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        let (r, theta) = z.to_polar();
        if r == 0.0 {
            Self::new(0.0, 0.0)
        } else {
            Self::new(r, theta)
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.angle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Impedance {
    pub resistance: f64,
    pub reactance: f64,
}

impl Impedance {
    pub const ZERO: Impedance = Impedance {
        resistance: 0.0,
        reactance: 0.0,
    };

    pub fn new(resistance: f64, reactance: f64) -> Self {
        Self {
            resistance,
            reactance,
        }
    }

    pub fn resistive(resistance: f64) -> Self {
        Self::new(resistance, 0.0)
    }

    /// Series inductor (with optional resistance) at `frequency` hertz.
    pub fn inductive(resistance: f64, inductance: f64, frequency: f64) -> Self {
        Self::new(resistance, 2.0 * PI * frequency * inductance)
    }

    /// Constant impedance drawing `p + jq` at voltage magnitude `v`:
    /// `z = |V|² / conj(S)`.
    pub fn from_power(p: f64, q: f64, v: f64) -> Result<Self> {
        let s = Complex64::new(p, q);
        if s.norm() == 0.0 {
            return Err(Error::SingularCircuit);
        }
        let z = Complex64::new(v * v, 0.0) / s.conj();
        Ok(Self::from_complex(z))
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self::new(z.re, z.im)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.resistance, self.reactance)
    }

    pub fn is_finite(&self) -> bool {
        self.resistance.is_finite() && self.reactance.is_finite()
    }
}

/// Load voltage, common current and per-unit powers of one network solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSolution {
    pub current: Phasor,
    pub load_voltage: Phasor,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

fn total_impedance(z_load: Impedance, z_lines: &[Impedance]) -> Result<Complex64> {
    let total = z_lines
        .iter()
        .fold(z_load.to_complex(), |acc, z| acc + z.to_complex());
    if total.norm() == 0.0 || !total.is_finite() {
        return Err(Error::SingularCircuit);
    }
    Ok(total)
}

/// Returns `(Z', θ')`, magnitude and angle of `1/(z_load + Σ z_lines)`.
pub fn equivalent_factor(z_load: Impedance, z_lines: &[Impedance]) -> Result<(f64, f64)> {
    let y = total_impedance(z_load, z_lines)?.inv();
    Ok((y.norm(), y.arg()))
}

/// Solves the loop and evaluates unit powers with the trigonometric sums.
pub fn solve_network(
    dg_voltages: &[Phasor],
    z_load: Impedance,
    z_lines: &[Impedance],
) -> Result<NetworkSolution> {
    if dg_voltages.is_empty() {
        return Err(Error::Config("network needs at least one unit".into()));
    }
    let total = total_impedance(z_load, z_lines)?;
    let y = total.inv();
    let (z_mag, theta) = (y.norm(), y.arg());

    let source: Complex64 = dg_voltages.iter().map(|v| v.to_complex()).sum();
    let current = source * y;
    let load_voltage = z_load.to_complex() * current;

    let n = dg_voltages.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for (i, vi) in dg_voltages.iter().enumerate() {
        let (mut sp, mut sq) = (0.0, 0.0);
        for vj in dg_voltages {
            let (s, c) = (vi.angle - vj.angle - theta).sin_cos();
            sp += vj.magnitude * c;
            sq += vj.magnitude * s;
        }
        p[i] = vi.magnitude * z_mag * sp;
        q[i] = vi.magnitude * z_mag * sq;
    }

    Ok(NetworkSolution {
        current: Phasor::from_complex(current),
        load_voltage: Phasor::from_complex(load_voltage),
        p,
        q,
    })
}

/// Per-unit complex power `V_i e^{jδ_i}·conj(I)` computed directly from the
/// loop current; an independent route to the same `(P_i, Q_i)`.
pub fn complex_powers(
    dg_voltages: &[Phasor],
    z_load: Impedance,
    z_lines: &[Impedance],
) -> Result<Vec<Complex64>> {
    let total = total_impedance(z_load, z_lines)?;
    let source: Complex64 = dg_voltages.iter().map(|v| v.to_complex()).sum();
    let current = source / total;
    Ok(dg_voltages
        .iter()
        .map(|v| v.to_complex() * current.conj())
        .collect())
}

/// Analytic `∂P_i/∂δ_j` and `∂Q_i/∂δ_j` with magnitudes held fixed,
/// returned as row-major `n×n` matrices `(T_Pδ, T_Qδ)`.
pub fn power_angle_jacobians(
    dg_voltages: &[Phasor],
    z_load: Impedance,
    z_lines: &[Impedance],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let (z_mag, theta) = equivalent_factor(z_load, z_lines)?;
    let n = dg_voltages.len();
    let mut tp = vec![vec![0.0; n]; n];
    let mut tq = vec![vec![0.0; n]; n];
    for i in 0..n {
        let vi = dg_voltages[i];
        for j in 0..n {
            if j == i {
                continue;
            }
            let vj = dg_voltages[j];
            let (s, c) = (vi.angle - vj.angle - theta).sin_cos();
            let k = vi.magnitude * vj.magnitude * z_mag;
            tp[i][j] = k * s;
            tq[i][j] = -k * c;
            tp[i][i] -= k * s;
            tq[i][i] += k * c;
        }
    }
    Ok((tp, tq))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn resistive_load_factor() {
        let (z, th) = equivalent_factor(Impedance::resistive(11.0), &[]).unwrap();
        assert!(close(z, 1.0 / 11.0, 1e-15));
        assert_eq!(th, 0.0);
    }

    #[test]
    fn purely_inductive_angle() {
        let (_, th) = equivalent_factor(Impedance::new(0.0, 3.0), &[]).unwrap();
        assert!((th + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn table_lines_factor() {
        let lines: Vec<_> = [1.5e-3, 1.6e-3, 1.2e-3]
            .iter()
            .map(|&l| Impedance::inductive(0.0, l, 50.0))
            .collect();
        let x = 2.0 * PI * 50.0 * 4.3e-3;
        assert!((x - 1.350_884).abs() < 1e-6);
        let (z, th) = equivalent_factor(Impedance::resistive(12.0), &lines).unwrap();
        assert!(close(z, 1.0 / (144.0 + x * x).sqrt(), 1e-14));
        assert!(close(th, -x.atan2(12.0), 1e-14));
    }

    #[test]
    fn zero_impedance_is_singular() {
        assert!(matches!(
            equivalent_factor(Impedance::ZERO, &[Impedance::ZERO]),
            Err(Error::SingularCircuit)
        ));
        let lines = [Impedance::new(0.0, 2.0)];
        assert!(equivalent_factor(Impedance::new(0.0, -2.0), &lines).is_err());
    }

    #[test]
    fn ohms_law_series_loop() {
        let v = [Phasor::new(55.0, 0.0), Phasor::new(55.0, 0.0)];
        let s = solve_network(&v, Impedance::resistive(11.0), &[]).unwrap();
        assert!(close(s.current.magnitude, 10.0, 1e-14));
        assert!(s.current.angle.abs() < 1e-15);
        for i in 0..2 {
            assert!(close(s.p[i], 550.0, 1e-14));
            assert!(s.q[i].abs() < 1e-12);
        }
    }

    #[test]
    fn opposed_sources_cancel() {
        let v = [Phasor::new(55.0, 0.0), Phasor::new(55.0, PI)];
        let lines = [Impedance::new(0.1, 0.4), Impedance::new(0.0, 0.3)];
        let s = solve_network(&v, Impedance::new(7.0, 1.0), &lines).unwrap();
        assert!(s.current.magnitude < 1e-12);
        for i in 0..2 {
            assert!(s.p[i].abs() < 1e-10 && s.q[i].abs() < 1e-10);
        }
    }

    #[test]
    fn single_unit_jacobian_is_zero() {
        let (tp, tq) =
            power_angle_jacobians(&[Phasor::new(110.0, 0.3)], Impedance::new(5.0, 2.0), &[]).unwrap();
        assert_eq!(tp, vec![vec![0.0]]);
        assert_eq!(tq, vec![vec![0.0]]);
    }

    #[test]
    fn in_phase_resistive_jacobian_vanishes() {
        let v = [Phasor::new(55.0, 0.2), Phasor::new(55.0, 0.2)];
        let (tp, _) = power_angle_jacobians(&v, Impedance::resistive(11.0), &[]).unwrap();
        for row in tp {
            for x in row {
                assert!(x.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn negative_magnitude_normalizes() {
        let p = Phasor::new(-2.0, 0.0);
        assert_eq!(p.magnitude, 2.0);
        assert!((p.angle - PI).abs() < 1e-15);
    }

    #[test]
    fn from_power_is_inductive_for_positive_q() {
        let z = Impedance::from_power(683.0, 185.0, 110.0).unwrap();
        assert!(z.resistance > 0.0 && z.reactance > 0.0);
        let s = Complex64::new(110.0 * 110.0, 0.0) / z.to_complex().conj();
        assert!(close(s.re, 683.0, 1e-12));
        assert!(close(s.im, 185.0, 1e-12));
    }
}
