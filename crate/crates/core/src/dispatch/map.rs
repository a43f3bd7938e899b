use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cost::CostFunction;
use super::solve::{check_aggregate_bounds, solve_dispatch};
use crate::error::{Error, Result};

/// Smallest current at which a current-domain map is evaluated; the
/// `V_i ∝ g_i(I)/I` structure is singular at zero.
pub const MIN_CURRENT: f64 = 1e-3;

/// Default number of samples for tabulated maps.
pub const DEFAULT_MAP_SAMPLES: usize = 1001;

/// Abscissa of a sharing map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapVariable {
    /// Total load `P_L` in watts.
    Load,
    /// Common current `I` in amperes, obtained by substituting `P_L = v_pcc·I`.
    Current { v_pcc: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapForm {
    AffineInLoad,
    AffineInCurrent,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    /// `value_i = slope_i·x + offset_i`.
    Affine { slopes: Vec<f64>, offsets: Vec<f64> },
    /// Linear interpolation over a strictly increasing grid; `columns[i][k]`
    /// is unit `i` at `x[k]`.
    Tabulated { x: Vec<f64>, columns: Vec<Vec<f64>> },
}

/// Per-unit optimal output as a function of total load or of common current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharingMap {
    pub variable: MapVariable,
    pub curve: Curve,
    pub domain: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapOptions {
    pub samples: usize,
    pub enforce_bounds: bool,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_MAP_SAMPLES,
            enforce_bounds: false,
        }
    }
}

impl SharingMap {
    pub fn units(&self) -> usize {
        match &self.curve {
            Curve::Affine { slopes, .. } => slopes.len(),
            Curve::Tabulated { columns, .. } => columns.len(),
        }
    }

    pub fn form(&self) -> MapForm {
        match (&self.curve, self.variable) {
            (Curve::Tabulated { .. }, _) => MapForm::Tabulated,
            (Curve::Affine { .. }, MapVariable::Load) => MapForm::AffineInLoad,
            (Curve::Affine { .. }, MapVariable::Current { .. }) => MapForm::AffineInCurrent,
        }
    }

    /// Evaluates every unit at `x`. Affine maps extrapolate; tabulated maps
    /// clamp `x` to the domain.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.units()];
        self.eval_into(x, &mut out);
        out
    }

    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        match &self.curve {
            Curve::Affine { slopes, offsets } => {
                for ((o, s), b) in out.iter_mut().zip(slopes).zip(offsets) {
                    *o = s * x + b;
                }
            }
            Curve::Tabulated { x: grid, columns } => {
                let x = x.clamp(self.domain.0, self.domain.1);
                let k = match grid.partition_point(|&g| g <= x) {
                    0 => 0,
                    k if k >= grid.len() => grid.len() - 2,
                    k => k - 1,
                };
                let t = (x - grid[k]) / (grid[k + 1] - grid[k]);
                for (o, col) in out.iter_mut().zip(columns) {
                    *o = col[k] + t * (col[k + 1] - col[k]);
                }
            }
        }
    }

    /// Sharing in the large-current limit: the affine slopes normalized.
    /// Tabulated maps use their lowest in-domain sample instead.
    pub fn limit_coefficients(&self) -> Vec<f64> {
        let raw = match &self.curve {
            Curve::Affine { slopes, .. } => slopes.clone(),
            Curve::Tabulated { .. } => self.eval(self.domain.0),
        };
        let total: f64 = raw.iter().sum();
        raw.iter().map(|v| v / total).collect()
    }

    /// Checks the structural invariants of the map.
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.domain;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("invalid map domain [{lo}, {hi}]")));
        }
        match &self.curve {
            Curve::Affine { slopes, offsets } => {
                if slopes.len() != offsets.len() || slopes.is_empty() {
                    return Err(Error::Config("affine map needs one slope and offset per unit".into()));
                }
                let expected = match self.variable {
                    MapVariable::Load => 1.0,
                    MapVariable::Current { v_pcc } => v_pcc,
                };
                let slope_sum: f64 = slopes.iter().sum();
                let offset_sum: f64 = offsets.iter().sum();
                let scale = slopes.iter().chain(offsets).map(|v| v.abs()).fold(expected, f64::max);
                if (slope_sum - expected).abs() > 1e-9 * scale || offset_sum.abs() > 1e-9 * scale {
                    return Err(Error::Config(format!(
                        "affine map does not preserve the total: Σslope = {slope_sum}, Σoffset = {offset_sum}"
                    )));
                }
            }
            Curve::Tabulated { x, columns } => {
                if x.len() < 2 || columns.is_empty() {
                    return Err(Error::Config("tabulated map needs ≥ 2 samples and ≥ 1 unit".into()));
                }
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("tabulated abscissa must be strictly increasing".into()));
                }
                for (i, col) in columns.iter().enumerate() {
                    if col.len() != x.len() {
                        return Err(Error::Config(format!("column {i} length mismatch")));
                    }
                    if col.windows(2).any(|w| w[1] < w[0] - 1e-9 * w[0].abs().max(1.0)) {
                        return Err(Error::Config(format!("column {i} is not non-decreasing")));
                    }
                }
            }
        }
        Ok(())
    }

    /// CSV with header `x,g_1,...,g_n` sampled uniformly over the domain.
    pub fn to_csv(&self, samples: usize) -> String {
        let samples = samples.max(2);
        let mut out = String::from("x");
        for i in 1..=self.units() {
            let _ = write!(out, ",g_{i}");
        }
        out.push('\n');
        let (lo, hi) = self.domain;
        let mut row = vec![0.0; self.units()];
        for k in 0..samples {
            let x = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
            self.eval_into(x, &mut row);
            let _ = write!(out, "{x:.15e}");
            for v in &row {
                let _ = write!(out, ",{v:.15e}");
            }
            out.push('\n');
        }
        out
    }
}

/// Builds `ξ_i(P_L)` over `load_domain`.
///
/// Quadratic costs with no active bound anywhere on the domain give the
/// closed affine form; otherwise the map is tabulated from repeated dispatch
/// solves.
pub fn build_load_map(
    costs: &[CostFunction],
    load_domain: (f64, f64),
    options: MapOptions,
) -> Result<SharingMap> {
    if costs.is_empty() {
        return Err(Error::Config("map needs at least one unit".into()));
    }
    let (lo, hi) = load_domain;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::Config(format!("invalid load domain [{lo}, {hi}]")));
    }
    if options.enforce_bounds {
        for endpoint in [lo, hi] {
            check_aggregate_bounds(costs, endpoint).map_err(|e| match e {
                Error::Infeasible(m) => Error::Infeasible(format!("load domain endpoint {endpoint} W: {m}")),
                other => other,
            })?;
        }
    }

    if costs.iter().all(CostFunction::is_quadratic) {
        let map = affine_load_map(costs, load_domain);
        let within_bounds = !options.enforce_bounds
            || [lo, hi].iter().all(|&x| {
                map.eval(x)
                    .iter()
                    .zip(costs)
                    .all(|(&p, c)| p >= c.p_min && p <= c.p_max)
            });
        if within_bounds {
            return Ok(map);
        }
    }

    let samples = options.samples.max(2);
    let mut x = Vec::with_capacity(samples);
    let mut columns = vec![Vec::with_capacity(samples); costs.len()];
    for k in 0..samples {
        let load = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
        let r = solve_dispatch(costs, load, options.enforce_bounds)?;
        x.push(load);
        for (col, p) in columns.iter_mut().zip(r.powers) {
            col.push(p);
        }
    }
    if hi == lo {
        return Err(Error::Config("tabulated map needs a non-degenerate domain".into()));
    }
    Ok(SharingMap {
        variable: MapVariable::Load,
        curve: Curve::Tabulated { x, columns },
        domain: load_domain,
    })
}

/// Closed form from equal incremental costs: with `w_i = 1/(2a_i)`,
/// `λ = (P_L + Σ w_j b_j)/Σ w_j` and `ξ_i = w_i (λ − b_i)`.
fn affine_load_map(costs: &[CostFunction], domain: (f64, f64)) -> SharingMap {
    let weights: Vec<f64> = costs.iter().map(|c| 0.5 / c.a).collect();
    let w_sum: f64 = weights.iter().sum();
    let wb: f64 = weights.iter().zip(costs).map(|(w, c)| w * c.b).sum();
    let slopes = weights.iter().map(|w| w / w_sum).collect();
    let offsets = weights
        .iter()
        .zip(costs)
        .map(|(w, c)| w * (wb / w_sum - c.b))
        .collect();
    SharingMap {
        variable: MapVariable::Load,
        curve: Curve::Affine { slopes, offsets },
        domain,
    }
}

/// Rewrites a load-domain map as `g_i(I)` using `P_L = v_pcc·I`.
pub fn to_current_domain(map: &SharingMap, v_pcc: f64) -> Result<SharingMap> {
    if !(v_pcc > 0.0 && v_pcc.is_finite()) {
        return Err(Error::Config(format!("PCC voltage must be positive, got {v_pcc}")));
    }
    if map.variable != MapVariable::Load {
        return Err(Error::Config("map is already in the current domain".into()));
    }
    let curve = match &map.curve {
        Curve::Affine { slopes, offsets } => Curve::Affine {
            slopes: slopes.iter().map(|s| s * v_pcc).collect(),
            offsets: offsets.clone(),
        },
        Curve::Tabulated { x, columns } => Curve::Tabulated {
            x: x.iter().map(|v| v / v_pcc).collect(),
            columns: columns.clone(),
        },
    };
    let hi = map.domain.1 / v_pcc;
    let lo = (map.domain.0 / v_pcc).max(MIN_CURRENT);
    Ok(SharingMap {
        variable: MapVariable::Current { v_pcc },
        curve,
        domain: (lo, hi.max(lo)),
    })
}
