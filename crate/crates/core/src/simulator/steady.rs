use std::f64::consts::PI;

use super::trajectory::{spread, Sample, Trajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyTolerance {
    /// Largest frequency difference between units, Hz.
    pub frequency_spread: f64,
    /// Largest relative variation of each filtered active power.
    pub power_change: f64,
}

impl Default for SteadyTolerance {
    fn default() -> Self {
        Self {
            frequency_spread: 1e-4,
            power_change: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSettling {
    pub segment: usize,
    pub reached: bool,
    /// Start of the earliest window that satisfied the tolerance.
    pub t_settle: Option<f64>,
}

/// Shortest window accepted by [`detect_steady_state`] for a filter cutoff.
pub fn minimum_window(w_c: f64) -> f64 {
    10.0 * 2.0 * PI / w_c
}

fn window_is_steady(window: &[Sample], tol: SteadyTolerance) -> bool {
    if window.iter().any(|s| s.frequency_spread() > tol.frequency_spread) {
        return false;
    }
    let units = window[0].p_f.len();
    (0..units).all(|i| {
        let values: Vec<f64> = window.iter().map(|s| s.p_f[i]).collect();
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-9);
        spread(&values) / scale <= tol.power_change
    })
}

/// Finds, per load segment, the earliest window of length `window` over
/// which the units are synchronized and their filtered powers are flat.
pub fn detect_steady_state(
    traj: &Trajectory,
    window: f64,
    tol: SteadyTolerance,
) -> Result<Vec<SegmentSettling>> {
    let min = minimum_window(traj.w_c);
    if window < min * (1.0 - 1e-12) {
        return Err(Error::Config(format!(
            "steady-state window {window} s is shorter than 10 filter periods ({min} s)"
        )));
    }
    let span = window - 1e-9 * window.max(1.0);
    let out = (0..traj.segments.len())
        .map(|k| {
            let samples = traj.segment_samples(k);
            let mut hi = 0;
            for lo in 0..samples.len() {
                let t0 = samples[lo].time;
                hi = hi.max(lo);
                while hi < samples.len() && samples[hi].time - t0 < span {
                    hi += 1;
                }
                if hi >= samples.len() {
                    break;
                }
                if window_is_steady(&samples[lo..=hi], tol) {
                    return SegmentSettling {
                        segment: k,
                        reached: true,
                        t_settle: Some(t0),
                    };
                }
            }
            SegmentSettling {
                segment: k,
                reached: false,
                t_settle: None,
            }
        })
        .collect();
    Ok(out)
}
