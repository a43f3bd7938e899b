//! Scenario configuration: the grid, its controllers and an optional load
//! schedule, stored as strict JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::{proportional_weights, ControllerParams, Sharing};
use crate::dispatch::{build_load_map, to_current_domain, CostFunction, MapOptions, DEFAULT_MAP_SAMPLES};
use crate::error::{Error, Result};
use crate::network::Impedance;
use crate::simulator::{LoadBases, LoadSchedule};

const TABLE1_JSON: &str = include_str!("../../../configs/table1.json");
const TABLE2_JSON: &str = include_str!("../../../configs/table2.json");

/// Which control law drives the units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Economical,
    Proportional,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Economical => "economical",
            Scheme::Proportional => "proportional",
        })
    }
}

/// Output LC filter of a unit. Parsed and kept for reference only; the
/// phasor model neglects these fast dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFilter {
    pub l_f: f64,
    pub r_f: f64,
    pub c_f: f64,
    pub r_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgConfig {
    pub cost: CostFunction,
    /// Henry.
    pub line_inductance: f64,
    /// Ohm.
    #[serde(default)]
    pub line_resistance: f64,
    pub p_max: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub name: String,
    pub v_pcc_ref: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// Hz per per-unit power.
    pub h: f64,
    /// rad/s.
    pub w_c: f64,
    /// Frequency at which line reactances are evaluated.
    pub nominal_frequency: f64,
    /// Power base (W) for the frequency law and per-unit loads.
    pub power_base: f64,
    /// Reactive base (var) for per-unit loads.
    pub reactive_base: f64,
    pub dt: f64,
    pub output_decimation: usize,
    #[serde(default)]
    pub enforce_bounds: bool,
    #[serde(default = "default_map_samples")]
    pub map_samples: usize,
    /// Load interval (W) over which the sharing map is built; defaults to
    /// `[0, Σ p_max]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_domain: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<OutputFilter>,
    pub dgs: Vec<DgConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<LoadSchedule>,
}

fn default_map_samples() -> usize {
    DEFAULT_MAP_SAMPLES
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be a positive finite number, got {v}")))
    }
}

impl GridConfig {
    pub fn table1() -> Self {
        parse_config_str(TABLE1_JSON).expect("bundled table1.json is valid")
    }

    pub fn table2() -> Self {
        parse_config_str(TABLE2_JSON).expect("bundled table2.json is valid")
    }

    pub fn units(&self) -> usize {
        self.dgs.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dgs.is_empty() {
            return Err(Error::validation("dgs", "at least one unit is required"));
        }
        positive("v_pcc_ref", self.v_pcc_ref)?;
        if !(self.f_min.is_finite() && self.f_max.is_finite()) {
            return Err(Error::validation("f_min", "band edges must be finite"));
        }
        if !(self.f_min < self.f_max) {
            return Err(Error::validation(
                "f_min",
                format!("must be < f_max ({} >= {})", self.f_min, self.f_max),
            ));
        }
        positive("h", self.h)?;
        positive("w_c", self.w_c)?;
        positive("nominal_frequency", self.nominal_frequency)?;
        positive("power_base", self.power_base)?;
        positive("reactive_base", self.reactive_base)?;
        positive("dt", self.dt)?;
        if self.output_decimation == 0 {
            return Err(Error::validation("output_decimation", "must be >= 1"));
        }
        if self.map_samples < 2 {
            return Err(Error::validation("map_samples", "must be >= 2"));
        }
        if let Some([lo, hi]) = self.load_domain {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::validation("load_domain", "must be an increasing finite pair"));
            }
        }
        if let Some(f) = &self.filter {
            for (name, v) in [("l_f", f.l_f), ("r_f", f.r_f), ("c_f", f.c_f), ("r_d", f.r_d)] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::validation(format!("filter.{name}"), "must be >= 0"));
                }
            }
        }
        for (i, dg) in self.dgs.iter().enumerate() {
            dg.cost.validate(&format!("dgs[{i}].cost"))?;
            if !(dg.line_inductance >= 0.0 && dg.line_inductance.is_finite()) {
                return Err(Error::validation(format!("dgs[{i}].line_inductance"), "must be >= 0"));
            }
            if !(dg.line_resistance >= 0.0 && dg.line_resistance.is_finite()) {
                return Err(Error::validation(format!("dgs[{i}].line_resistance"), "must be >= 0"));
            }
            positive(&format!("dgs[{i}].p_max"), dg.p_max)?;
            positive(&format!("dgs[{i}].q_max"), dg.q_max)?;
        }
        if let Some(s) = &self.schedule {
            s.resolve(self.load_bases())?;
        }
        Ok(())
    }

    pub fn costs(&self) -> Vec<CostFunction> {
        self.dgs.iter().map(|d| d.cost).collect()
    }

    pub fn ratings(&self) -> Vec<f64> {
        self.dgs.iter().map(|d| d.p_max).collect()
    }

    pub fn line_impedances(&self) -> Vec<Impedance> {
        self.dgs
            .iter()
            .map(|d| Impedance::inductive(d.line_resistance, d.line_inductance, self.nominal_frequency))
            .collect()
    }

    pub fn load_bases(&self) -> LoadBases {
        LoadBases {
            v_rated: self.v_pcc_ref,
            p_base: self.power_base,
            q_base: self.reactive_base,
        }
    }

    pub fn map_domain(&self) -> (f64, f64) {
        match self.load_domain {
            Some([lo, hi]) => (lo, hi),
            None => (0.0, self.ratings().iter().sum()),
        }
    }

    pub fn map_options(&self) -> MapOptions {
        MapOptions {
            samples: self.map_samples,
            enforce_bounds: self.enforce_bounds,
        }
    }

    /// Controller parameters for `scheme`, building the optimal
    /// current-domain map when needed.
    pub fn controller(&self, scheme: Scheme) -> Result<ControllerParams> {
        let sharing = match scheme {
            Scheme::Economical => {
                let load_map = build_load_map(&self.costs(), self.map_domain(), self.map_options())?;
                Sharing::Economical(to_current_domain(&load_map, self.v_pcc_ref)?)
            }
            Scheme::Proportional => Sharing::Proportional(proportional_weights(&self.ratings())?),
        };
        let params = ControllerParams {
            f_min: self.f_min,
            f_max: self.f_max,
            h: self.h,
            v_pcc_ref: self.v_pcc_ref,
            w_c: self.w_c,
            p_base: self.power_base,
            sharing,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses and validates a configuration from JSON text.
pub fn parse_config_str(text: &str) -> Result<GridConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: GridConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse(format!(
            "line {} column {}: at `{}`: {}",
            inner.line(),
            inner.column(),
            path,
            inner
        ))
    })?;
    config.validate()?;
    Ok(config)
}

/// Reads a configuration file and its embedded schedule, if any.
pub fn parse_config(path: impl AsRef<Path>) -> Result<(GridConfig, Option<LoadSchedule>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let config = parse_config_str(&text)?;
    let schedule = config.schedule.clone();
    Ok((config, schedule))
}

/// Reads a standalone schedule file (`{"segments": [...]}`).
pub fn parse_schedule(path: impl AsRef<Path>) -> Result<LoadSchedule> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let schedule: LoadSchedule = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse(format!(
            "line {} column {}: at `{}`: {}",
            inner.line(),
            inner.column(),
            path,
            inner
        ))
    })?;
    schedule.validate()?;
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table1() {
        let c = GridConfig::table1();
        assert_eq!(c.units(), 3);
        assert_eq!(c.h, 0.1);
        assert_eq!(c.v_pcc_ref, 110.0);
        assert!(c.schedule.is_some());
    }

    #[test]
    fn bundled_table2() {
        let c = GridConfig::table2();
        assert_eq!(c.units(), 2);
        assert_eq!(c.v_pcc_ref, 100.0);
    }

    #[test]
    fn band_violation_names_f_min() {
        let text = TABLE1_JSON.replacen("\"f_min\": 49.0", "\"f_min\": 52.0", 1);
        match parse_config_str(&text) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "f_min"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_path() {
        let text = TABLE1_JSON.replacen("\"f_min\"", "\"fmin\"", 1);
        match parse_config_str(&text) {
            Err(Error::Parse(msg)) => assert!(msg.contains("fmin"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        let text = TABLE1_JSON.replacen("\"a\": 0.25", "\"a\": 0.25, \"bogus\": 1", 1);
        match parse_config_str(&text) {
            Err(Error::Parse(msg)) => assert!(msg.contains("dgs[0].cost") && msg.contains("bogus"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        for c in [GridConfig::table1(), GridConfig::table2()] {
            let again = parse_config_str(&c.to_json()).unwrap();
            assert_eq!(again, c);
        }
    }
}
