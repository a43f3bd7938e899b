use std::fmt::Write as _;

use crate::config::Scheme;
use crate::network::{wrap_angle, Impedance};

/// One recorded instant of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub time: f64,
    /// Index into [`Trajectory::segments`].
    pub segment: usize,
    pub frequency: Vec<f64>,
    pub voltage: Vec<f64>,
    pub delta: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub p_f: Vec<f64>,
    pub q_f: Vec<f64>,
    pub current: f64,
    pub v_pcc: f64,
    /// Active power absorbed by the load impedance.
    pub load_power: f64,
    pub phi: Vec<f64>,
    /// `Σ C_i(P_if)`.
    pub tagc: f64,
    pub saturated: Vec<bool>,
}

impl Sample {
    /// Angles relative to unit 1.
    pub fn relative_angles(&self) -> Vec<f64> {
        let r = self.delta[0];
        self.delta.iter().map(|d| wrap_angle(d - r)).collect()
    }

    pub fn frequency_spread(&self) -> f64 {
        spread(&self.frequency)
    }

    pub fn any_saturated(&self) -> bool {
        self.saturated.iter().any(|&s| s)
    }
}

pub(crate) fn spread(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// A constant-load interval, with its start snapped to the integration grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub z_load: Impedance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scheme: Scheme,
    pub units: usize,
    pub dt: f64,
    pub decimation: usize,
    pub w_c: f64,
    pub segments: Vec<Segment>,
    pub samples: Vec<Sample>,
    /// Time integral of the instantaneous TAGC over the whole run.
    pub integrated_tagc: f64,
}

impl Trajectory {
    pub fn sample_spacing(&self) -> f64 {
        self.dt * self.decimation as f64
    }

    /// Samples belonging to segment `k`.
    pub fn segment_samples(&self, k: usize) -> &[Sample] {
        let lo = self.samples.partition_point(|s| s.segment < k);
        let hi = self.samples.partition_point(|s| s.segment <= k);
        &self.samples[lo..hi]
    }

    pub fn csv_header(units: usize) -> String {
        let mut h = String::from("t");
        for name in ["f", "V", "delta", "P", "Q", "Pf", "Qf"] {
            for i in 1..=units {
                let _ = write!(h, ",{name}_{i}");
            }
        }
        h.push_str(",I,Vpcc");
        for i in 1..=units {
            let _ = write!(h, ",phi_{i}");
        }
        h.push_str(",tagc,saturated");
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.units);
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{:.15e}", s.time);
            for group in [&s.frequency, &s.voltage, &s.delta, &s.p, &s.q, &s.p_f, &s.q_f] {
                for v in group.iter() {
                    let _ = write!(out, ",{v:.15e}");
                }
            }
            let _ = write!(out, ",{:.15e},{:.15e}", s.current, s.v_pcc);
            for v in &s.phi {
                let _ = write!(out, ",{v:.15e}");
            }
            let _ = writeln!(out, ",{:.15e},{}", s.tagc, u8::from(s.any_saturated()));
        }
        out
    }
}
