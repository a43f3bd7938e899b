//! Decentralized frequency/voltage laws.
//!
//! Each unit commands
//!
//! ```text
//! f_i = f_min + (h/φ_i)·P_if / P_base
//! V_i = φ_i·V_pcc
//! ```
//!
//! using only its own filtered output and the common loop current. Equal
//! frequencies in steady state force `P_i ∝ φ_i`. The economical law takes
//! `φ_i = g_i(I)/Σ g_j(I)` from the optimal current-domain map; the
//! proportional baseline uses fixed rating-proportional weights.

use crate::dispatch::{MapVariable, SharingMap, MIN_CURRENT};
use crate::error::{Error, Result};

/// How the sharing coefficients are obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Sharing {
    /// Optimal map in the current domain.
    Economical(SharingMap),
    /// Constant weights summing to one.
    Proportional(Vec<f64>),
}

impl Sharing {
    pub fn units(&self) -> usize {
        match self {
            Sharing::Economical(m) => m.units(),
            Sharing::Proportional(w) => w.len(),
        }
    }

    /// True when the coefficients do not depend on the current.
    pub fn is_constant(&self) -> bool {
        matches!(self, Sharing::Proportional(_))
    }

    pub fn coefficients(&self, current_mag: f64) -> Result<Vec<f64>> {
        match self {
            Sharing::Economical(map) => sharing_coefficients(map, current_mag),
            Sharing::Proportional(w) => Ok(w.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerParams {
    pub f_min: f64,
    pub f_max: f64,
    /// Frequency gain in Hz per per-unit power.
    pub h: f64,
    pub v_pcc_ref: f64,
    /// Power-filter cutoff, rad/s.
    pub w_c: f64,
    /// Power base for the frequency law, W.
    pub p_base: f64,
    pub sharing: Sharing,
}

impl ControllerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_min < self.f_max) {
            return Err(Error::validation("f_min", "must be < f_max"));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::validation("h", "must be > 0"));
        }
        if !(self.w_c > 0.0 && self.w_c.is_finite()) {
            return Err(Error::validation("w_c", "must be > 0"));
        }
        if !(self.v_pcc_ref > 0.0 && self.v_pcc_ref.is_finite()) {
            return Err(Error::validation("v_pcc_ref", "must be > 0"));
        }
        if !(self.p_base > 0.0 && self.p_base.is_finite()) {
            return Err(Error::validation("power_base", "must be > 0"));
        }
        match &self.sharing {
            Sharing::Proportional(w) => {
                if w.is_empty() || w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(Error::validation("weights", "must be positive and finite"));
                }
                let s: f64 = w.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return Err(Error::validation("weights", "must sum to 1"));
                }
            }
            Sharing::Economical(map) => {
                if !matches!(map.variable, MapVariable::Current { .. }) {
                    return Err(Error::validation("sharing", "map must be in the current domain"));
                }
                map.validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlCommand {
    pub frequency: f64,
    pub voltage_magnitude: f64,
    pub saturated: bool,
}

/// `φ_i = g_i(I)/Σ g_j(I)`, renormalized so the coefficients sum to one.
/// Below [`MIN_CURRENT`] the large-current limit of the map is used.
pub fn sharing_coefficients(map: &SharingMap, current_mag: f64) -> Result<Vec<f64>> {
    if !(current_mag >= 0.0) {
        return Err(Error::DegenerateSharing(format!(
            "current magnitude must be >= 0, got {current_mag}"
        )));
    }
    if current_mag < MIN_CURRENT {
        return Ok(map.limit_coefficients());
    }
    let g = map.eval(current_mag);
    let total: f64 = g.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSharing(format!(
            "Σ g_i({current_mag} A) = {total} is not positive"
        )));
    }
    let mut phi: Vec<f64> = g.iter().map(|v| v / total).collect();
    // Push the rounding residue onto the largest entry.
    let drift = 1.0 - phi.iter().sum::<f64>();
    if let Some(k) = phi
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
    {
        phi[k] += drift;
    }
    Ok(phi)
}

fn command(phi: f64, p_filtered: f64, params: &ControllerParams) -> Result<ControlCommand> {
    if !(phi > 0.0) {
        return Err(Error::DegenerateSharing(format!(
            "sharing coefficient must be positive, got {phi}"
        )));
    }
    let raw = params.f_min + params.h / phi * (p_filtered / params.p_base);
    let frequency = raw.clamp(params.f_min, params.f_max);
    Ok(ControlCommand {
        frequency,
        voltage_magnitude: phi * params.v_pcc_ref,
        saturated: frequency != raw,
    })
}

/// Economical law for one unit.
pub fn economical_command(
    phi_i: f64,
    p_filtered: f64,
    params: &ControllerParams,
) -> Result<ControlCommand> {
    command(phi_i, p_filtered, params)
}

/// Proportional baseline: the same law with a fixed weight.
pub fn proportional_command(
    weight_i: f64,
    p_filtered: f64,
    params: &ControllerParams,
) -> Result<ControlCommand> {
    command(weight_i, p_filtered, params)
}

/// Rating-proportional weights `P_max,i / Σ P_max,j`.
pub fn proportional_weights(ratings: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = ratings.iter().sum();
    if ratings.is_empty() || ratings.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::validation("p_max", "ratings must be positive and finite"));
    }
    Ok(ratings.iter().map(|r| r / total).collect())
}

/// Low-pass filter derivatives `((P − P_f)·w_c, (Q − Q_f)·w_c)`.
pub fn filter_step(p_raw: f64, q_raw: f64, p_f: f64, q_f: f64, w_c: f64) -> (f64, f64) {
    ((p_raw - p_f) * w_c, (q_raw - q_f) * w_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::{build_load_map, to_current_domain, CostFunction, MapOptions};

    fn bundled_map() -> SharingMap {
        let costs = [
            CostFunction::quadratic(0.25, 0.0, 0.0).unwrap(),
            CostFunction::quadratic(0.15, 0.0, 0.0).unwrap(),
            CostFunction::quadratic(0.1, 0.01, 0.0).unwrap(),
        ];
        let m = build_load_map(&costs, (0.0, 3000.0), MapOptions::default()).unwrap();
        to_current_domain(&m, 110.0).unwrap()
    }

    fn params(sharing: Sharing) -> ControllerParams {
        ControllerParams {
            f_min: 49.0,
            f_max: 51.0,
            h: 0.1,
            v_pcc_ref: 110.0,
            w_c: 100.0 * std::f64::consts::PI,
            p_base: 1000.0,
            sharing,
        }
    }

    #[test]
    fn coefficients_at_one_amp() {
        let phi = sharing_coefficients(&bundled_map(), 1.0).unwrap();
        let g = [
            660.0 / 31.0 + 3.0 / 310.0,
            1100.0 / 31.0 + 1.0 / 62.0,
            1650.0 / 31.0 - 4.0 / 155.0,
        ];
        for i in 0..3 {
            assert!((phi[i] - g[i] / 110.0).abs() < 1e-14);
        }
        assert!((phi[0] - 0.193636).abs() < 1e-6);
        assert!((phi[1] - 0.322727).abs() < 1e-6);
        assert!((phi[2] - 0.483636).abs() < 1e-6);
    }

    #[test]
    fn below_min_current_uses_limit() {
        let phi = sharing_coefficients(&bundled_map(), 0.0).unwrap();
        assert!((phi[0] - 6.0 / 31.0).abs() < 1e-15);
        assert!((phi[2] - 15.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn zero_power_gives_f_min() {
        let p = params(Sharing::Proportional(vec![1.0]));
        let c = economical_command(0.3, 0.0, &p).unwrap();
        assert_eq!(c.frequency, 49.0);
        assert!(!c.saturated);
    }

    #[test]
    fn per_unit_frequency_law() {
        let p = params(Sharing::Proportional(vec![1.0]));
        let c = economical_command(1.0, 500.0, &p).unwrap();
        assert!((c.frequency - 49.05).abs() < 1e-12);
        let c = economical_command(0.5, 0.0, &p).unwrap();
        assert_eq!(c.voltage_magnitude, 55.0);
    }

    #[test]
    fn saturates_at_band_edges() {
        let p = params(Sharing::Proportional(vec![1.0]));
        let c = economical_command(0.1, 5000.0, &p).unwrap();
        assert_eq!(c.frequency, 51.0);
        assert!(c.saturated);
        let c = economical_command(0.5, -100.0, &p).unwrap();
        assert_eq!(c.frequency, 49.0);
        assert!(c.saturated);
    }

    #[test]
    fn nonpositive_phi_is_degenerate() {
        let p = params(Sharing::Proportional(vec![1.0]));
        assert!(matches!(
            economical_command(0.0, 1.0, &p),
            Err(Error::DegenerateSharing(_))
        ));
        assert!(proportional_command(-0.2, 1.0, &p).is_err());
    }

    #[test]
    fn rating_weights() {
        let w = proportional_weights(&[200.0, 100.0]).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15);
        let w = proportional_weights(&[1000.0; 3]).unwrap();
        let p = params(Sharing::Proportional(w.clone()));
        for wi in w {
            let c = proportional_command(wi, 0.0, &p).unwrap();
            assert!((c.voltage_magnitude - 110.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn filter_derivative() {
        assert_eq!(filter_step(5.0, 2.0, 5.0, 2.0, 100.0), (0.0, 0.0));
        let (dp, _) = filter_step(100.0, 0.0, 0.0, 0.0, 100.0 * std::f64::consts::PI);
        assert!((dp - 10000.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn validation_catches_band() {
        let mut p = params(Sharing::Proportional(vec![0.5, 0.5]));
        p.validate().unwrap();
        p.f_min = 52.0;
        assert!(p.validate().is_err());
    }
}
