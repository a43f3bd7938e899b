use super::steady::{detect_steady_state, minimum_window, SteadyTolerance};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTagc {
    pub segment: usize,
    /// Mean steady-state TAGC of each run.
    pub steady_a: f64,
    pub steady_b: f64,
    /// `steady_b − steady_a`.
    pub difference: f64,
    /// Samples where both runs were settled.
    pub samples_compared: usize,
    /// Smallest `b − a` over the compared samples.
    pub min_margin: f64,
    pub a_le_b: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagcComparison {
    pub segments: Vec<SegmentTagc>,
    pub integrated_a: f64,
    pub integrated_b: f64,
    /// `a ≤ b` at every steady-state sample of every segment.
    pub a_le_b_everywhere: bool,
}

impl TagcComparison {
    pub fn report(&self, label_a: &str, label_b: &str) -> String {
        let mut s = format!(
            "segment  TAGC {label_a:>14}  TAGC {label_b:>14}  difference  samples\n"
        );
        for seg in &self.segments {
            s.push_str(&format!(
                "{:>7}  {:>19.6}  {:>19.6}  {:>10.6}  {:>7}\n",
                seg.segment + 1,
                seg.steady_a,
                seg.steady_b,
                seg.difference,
                seg.samples_compared
            ));
        }
        s.push_str(&format!(
            "integrated TAGC: {label_a} {:.6}, {label_b} {:.6}\n{label_a} <= {label_b} at every steady sample: {}\n",
            self.integrated_a, self.integrated_b, self.a_le_b_everywhere
        ));
        s
    }
}

/// Compares the steady-state generation cost of two runs on the same grid.
pub fn compare_tagc(a: &Trajectory, b: &Trajectory) -> Result<TagcComparison> {
    let same_grid = a.samples.len() == b.samples.len()
        && a.segments.len() == b.segments.len()
        && a.samples
            .iter()
            .zip(&b.samples)
            .all(|(x, y)| x.time == y.time && x.segment == y.segment);
    if !same_grid {
        return Err(Error::Comparison("trajectories are not on the same time grid".into()));
    }
    if a.segments.iter().zip(&b.segments).any(|(x, y)| x.start != y.start) {
        return Err(Error::Comparison("trajectories follow different schedules".into()));
    }

    let tol = SteadyTolerance::default();
    let settle_a = detect_steady_state(a, minimum_window(a.w_c), tol)?;
    let settle_b = detect_steady_state(b, minimum_window(b.w_c), tol)?;

    let mut segments = Vec::with_capacity(a.segments.len());
    for k in 0..a.segments.len() {
        let from = match (settle_a[k].t_settle, settle_b[k].t_settle) {
            (Some(x), Some(y)) => x.max(y),
            _ => f64::INFINITY,
        };
        let sa = a.segment_samples(k);
        let sb = b.segment_samples(k);
        let pairs: Vec<(f64, f64)> = sa
            .iter()
            .zip(sb)
            .filter(|(x, _)| x.time >= from)
            .map(|(x, y)| (x.tagc, y.tagc))
            .collect();
        let count = pairs.len();
        let mean = |f: fn(&(f64, f64)) -> f64| {
            if count == 0 {
                f64::NAN
            } else {
                pairs.iter().map(f).sum::<f64>() / count as f64
            }
        };
        let steady_a = mean(|p| p.0);
        let steady_b = mean(|p| p.1);
        let min_margin = pairs
            .iter()
            .map(|(x, y)| y - x)
            .fold(f64::INFINITY, f64::min);
        segments.push(SegmentTagc {
            segment: k,
            steady_a,
            steady_b,
            difference: steady_b - steady_a,
            samples_compared: count,
            min_margin,
            a_le_b: count > 0 && min_margin >= 0.0,
        });
    }
    let a_le_b_everywhere = segments.iter().all(|s| s.a_le_b);
    Ok(TagcComparison {
        segments,
        integrated_a: a.integrated_tagc,
        integrated_b: b.integrated_tagc,
        a_le_b_everywhere,
    })
}
