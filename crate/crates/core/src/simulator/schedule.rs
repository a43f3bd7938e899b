use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Impedance;

/// A load as written in a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadSpec {
    Impedance { resistance: f64, reactance: f64 },
    /// Watts and vars at rated PCC voltage.
    Power { p: f64, q: f64 },
    /// Per-unit of the configured power and reactive bases.
    PerUnit { p: f64, q: f64 },
}

/// Bases used to turn a [`LoadSpec`] into an impedance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadBases {
    pub v_rated: f64,
    pub p_base: f64,
    pub q_base: f64,
}

impl LoadSpec {
    pub fn to_impedance(&self, bases: LoadBases) -> Result<Impedance> {
        let z = match *self {
            LoadSpec::Impedance {
                resistance,
                reactance,
            } => Impedance::new(resistance, reactance),
            LoadSpec::Power { p, q } => Impedance::from_power(p, q, bases.v_rated)?,
            LoadSpec::PerUnit { p, q } => {
                Impedance::from_power(p * bases.p_base, q * bases.q_base, bases.v_rated)?
            }
        };
        if !z.is_finite() || z.to_complex().norm() == 0.0 {
            return Err(Error::SingularCircuit);
        }
        Ok(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub start: f64,
    pub load: LoadSpec,
}

/// Piecewise-constant load over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSchedule {
    pub segments: Vec<ScheduleEntry>,
}

impl LoadSchedule {
    pub fn constant(load: LoadSpec) -> Self {
        Self {
            segments: vec![ScheduleEntry { start: 0.0, load }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.segments.first() else {
            return Err(Error::validation("schedule.segments", "must not be empty"));
        };
        if first.start != 0.0 {
            return Err(Error::validation("schedule.segments[0].start", "must be 0"));
        }
        for (k, w) in self.segments.windows(2).enumerate() {
            if !(w[1].start > w[0].start) {
                return Err(Error::validation(
                    format!("schedule.segments[{}].start", k + 1),
                    "start times must be strictly increasing",
                ));
            }
        }
        Ok(())
    }

    /// `(start, impedance)` for every segment.
    pub fn resolve(&self, bases: LoadBases) -> Result<Vec<(f64, Impedance)>> {
        self.validate()?;
        self.segments
            .iter()
            .enumerate()
            .map(|(k, s)| {
                s.load
                    .to_impedance(bases)
                    .map(|z| (s.start, z))
                    .map_err(|_| {
                        Error::validation(
                            format!("schedule.segments[{k}].load"),
                            "load resolves to a singular impedance",
                        )
                    })
            })
            .collect()
    }
}
