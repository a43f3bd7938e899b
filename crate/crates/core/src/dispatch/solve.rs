use std::collections::BTreeSet;

use super::cost::{total_cost, CostFunction};
use crate::error::{Error, Result};

/// Optimal (or oracle) allocation of a load among the units.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchResult {
    pub powers: Vec<f64>,
    /// Common incremental cost of the unclamped units.
    pub lambda: f64,
    /// Units pinned at `p_min` or `p_max`.
    pub active_bounds: BTreeSet<usize>,
    pub total_cost: f64,
}

const MAX_BISECTIONS: usize = 400;

fn balance_tolerance(p_load: f64) -> f64 {
    1e-9 * p_load.abs().max(1.0)
}

fn validate_costs(costs: &[CostFunction]) -> Result<()> {
    if costs.is_empty() {
        return Err(Error::Config("dispatch needs at least one unit".into()));
    }
    for (i, c) in costs.iter().enumerate() {
        c.validate(&format!("costs[{i}]"))?;
    }
    Ok(())
}

/// Checks `p_load` against the aggregate interval of all units.
pub(crate) fn check_aggregate_bounds(costs: &[CostFunction], p_load: f64) -> Result<()> {
    let lo: f64 = costs.iter().map(|c| c.p_min).sum();
    let hi: f64 = costs.iter().map(|c| c.p_max).sum();
    // Sums of the bounds carry rounding; a load on the boundary is feasible.
    let slack = 8.0 * f64::EPSILON * costs.iter().map(|c| c.p_min.abs() + c.p_max.abs()).sum::<f64>();
    if p_load < lo - slack {
        return Err(Error::Infeasible(format!(
            "load {p_load} W is below the aggregate minimum output {lo} W"
        )));
    }
    if p_load > hi + slack {
        return Err(Error::Infeasible(format!(
            "load {p_load} W exceeds the aggregate maximum output {hi} W"
        )));
    }
    Ok(())
}

/// Where a unit sits for a given incremental cost.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Response {
    Free(f64),
    AtMin(f64),
    AtMax(f64),
    /// Affine unit whose constant incremental cost equals the trial value.
    Marginal,
}

fn respond(cost: &CostFunction, lambda: f64, bounded: bool) -> Response {
    if cost.is_quadratic() {
        let p = cost.output_at(lambda, false);
        if !bounded {
            Response::Free(p)
        } else if p <= cost.p_min {
            Response::AtMin(cost.p_min)
        } else if p >= cost.p_max {
            Response::AtMax(cost.p_max)
        } else {
            Response::Free(p)
        }
    } else if lambda < cost.b {
        Response::AtMin(cost.p_min)
    } else if lambda > cost.b {
        Response::AtMax(cost.p_max)
    } else {
        Response::Marginal
    }
}

fn supplied(costs: &[CostFunction], lambda: f64) -> f64 {
    costs
        .iter()
        .map(|c| match respond(c, lambda, true) {
            Response::Free(p) | Response::AtMin(p) | Response::AtMax(p) => p,
            Response::Marginal => c.p_min,
        })
        .sum()
}

fn finish(costs: &[CostFunction], powers: Vec<f64>, lambda: f64, active: BTreeSet<usize>) -> DispatchResult {
    let total_cost = total_cost(costs, &powers);
    DispatchResult {
        powers,
        lambda,
        active_bounds: active,
        total_cost,
    }
}

/// Minimizes total cost subject to `Σ P_i = p_load` by bisection on the
/// shared incremental cost.
///
/// With `enforce_bounds` unset every unit is treated as unbounded (the
/// quadratic closed forms apply everywhere, including negative outputs).
pub fn solve_dispatch(
    costs: &[CostFunction],
    p_load: f64,
    enforce_bounds: bool,
) -> Result<DispatchResult> {
    validate_costs(costs)?;
    if !p_load.is_finite() {
        return Err(Error::Config(format!("load must be finite, got {p_load}")));
    }
    if enforce_bounds {
        check_aggregate_bounds(costs, p_load)?;
        Ok(solve_bounded(costs, p_load))
    } else {
        solve_unbounded(costs, p_load)
    }
}

fn solve_unbounded(costs: &[CostFunction], p_load: f64) -> Result<DispatchResult> {
    let affine: Vec<usize> = (0..costs.len()).filter(|&i| !costs[i].is_quadratic()).collect();
    if !affine.is_empty() {
        // Unbounded affine units pin the incremental cost to their slope.
        let lambda = costs[affine[0]].b;
        if affine.iter().any(|&i| costs[i].b != lambda) {
            return Err(Error::Infeasible(
                "unbounded affine units with different slopes have no finite optimum".into(),
            ));
        }
        let mut powers = vec![0.0; costs.len()];
        let mut quad_sum = 0.0;
        for (i, c) in costs.iter().enumerate() {
            if c.is_quadratic() {
                powers[i] = c.output_at(lambda, false);
                quad_sum += powers[i];
            }
        }
        let share = (p_load - quad_sum) / affine.len() as f64;
        for &i in &affine {
            powers[i] = share;
        }
        return Ok(finish(costs, powers, lambda, BTreeSet::new()));
    }

    let reach = p_load.abs();
    let mut lo = costs
        .iter()
        .map(|c| c.marginal(-reach))
        .fold(f64::INFINITY, f64::min);
    let mut hi = costs
        .iter()
        .map(|c| c.marginal(reach))
        .fold(f64::NEG_INFINITY, f64::max);
    let sum_at = |lambda: f64| -> f64 { costs.iter().map(|c| c.output_at(lambda, false)).sum() };
    let tol = balance_tolerance(p_load);

    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTIONS {
        lambda = 0.5 * (lo + hi);
        let s = sum_at(lambda);
        if (s - p_load).abs() <= tol || lambda <= lo || lambda >= hi {
            break;
        }
        if s < p_load {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }
    // Every unit is free, so the balance is affine in lambda: one Newton
    // step removes the residual the bisection tolerance allows.
    let slope: f64 = costs.iter().map(|c| 0.5 / c.a).sum();
    let polished = lambda + (p_load - sum_at(lambda)) / slope;
    if (sum_at(polished) - p_load).abs() <= (sum_at(lambda) - p_load).abs() {
        lambda = polished;
    }
    let powers = costs.iter().map(|c| c.output_at(lambda, false)).collect();
    Ok(finish(costs, powers, lambda, BTreeSet::new()))
}

fn solve_bounded(costs: &[CostFunction], p_load: f64) -> DispatchResult {
    let mut lo = costs
        .iter()
        .map(|c| c.marginal(c.p_min))
        .fold(f64::INFINITY, f64::min);
    let mut hi = costs
        .iter()
        .map(|c| c.marginal(c.p_max.min(p_load.max(c.p_min))))
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = balance_tolerance(p_load);

    let mut lambda = lo;
    let mut converged = false;
    if (supplied(costs, lo) - p_load).abs() <= tol {
        converged = true;
    } else {
        for _ in 0..MAX_BISECTIONS {
            lambda = 0.5 * (lo + hi);
            let s = supplied(costs, lambda);
            if (s - p_load).abs() <= tol {
                converged = true;
                break;
            }
            if lambda <= lo || lambda >= hi {
                break;
            }
            if s < p_load {
                lo = lambda;
            } else {
                hi = lambda;
            }
        }
    }

    let responses: Vec<Response> = costs
        .iter()
        .map(|c| {
            if !c.is_quadratic() && !converged && c.b >= lo && c.b <= hi {
                Response::Marginal
            } else {
                respond(c, lambda, true)
            }
        })
        .collect();

    let mut powers = vec![0.0; costs.len()];
    let mut active = BTreeSet::new();
    let mut marginal = Vec::new();
    for (i, r) in responses.iter().enumerate() {
        match *r {
            Response::Free(p) => powers[i] = p,
            Response::AtMin(p) | Response::AtMax(p) => {
                powers[i] = p;
                active.insert(i);
            }
            Response::Marginal => marginal.push(i),
        }
    }

    if marginal.is_empty() {
        let free: Vec<usize> = responses
            .iter()
            .enumerate()
            .filter_map(|(i, r)| matches!(r, Response::Free(_)).then_some(i))
            .collect();
        if !free.is_empty() {
            let slope: f64 = free.iter().map(|&i| 0.5 / costs[i].a).sum();
            let residual = p_load - powers.iter().sum::<f64>();
            let candidate = lambda + residual / slope;
            let stays_free = free.iter().all(|&i| {
                let p = costs[i].output_at(candidate, false);
                p > costs[i].p_min && p < costs[i].p_max
            });
            if stays_free {
                lambda = candidate;
                for &i in &free {
                    powers[i] = costs[i].output_at(lambda, false);
                }
            }
        }
    } else {
        // Affine units at the clearing price absorb the remainder in
        // proportion to their headroom.
        let fixed: f64 = (0..costs.len())
            .filter(|i| !marginal.contains(i))
            .map(|i| powers[i])
            .sum();
        let floor: f64 = marginal.iter().map(|&i| costs[i].p_min).sum();
        let room: f64 = marginal.iter().map(|&i| costs[i].p_max - costs[i].p_min).sum();
        let frac = if room > 0.0 {
            ((p_load - fixed - floor) / room).clamp(0.0, 1.0)
        } else {
            0.0
        };
        for &i in &marginal {
            powers[i] = costs[i].p_min + frac * (costs[i].p_max - costs[i].p_min);
        }
        lambda = costs[marginal[0]].b;
    }
    finish(costs, powers, lambda, active)
}

/// Exhaustive grid search used as an independent check of [`solve_dispatch`].
///
/// The first `n - 1` units are enumerated on `p_min + k·grid_step`, the last
/// unit takes the remainder, and points outside any unit's interval are
/// rejected. Intended for `n ≤ 4`.
pub fn brute_force_dispatch(
    costs: &[CostFunction],
    p_load: f64,
    grid_step: f64,
) -> Result<DispatchResult> {
    validate_costs(costs)?;
    if costs.len() > 4 {
        return Err(Error::Config(format!(
            "brute force is limited to 4 units, got {}",
            costs.len()
        )));
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::Config(format!("grid step must be positive, got {grid_step}")));
    }
    let n = costs.len();
    let last = costs[n - 1];
    let feasible_last = |p: f64| p >= last.p_min && p <= last.p_max;

    if n == 1 {
        if !feasible_last(p_load) {
            return Err(Error::Infeasible(format!(
                "load {p_load} W is outside the single unit's interval"
            )));
        }
        let powers = vec![p_load];
        return Ok(finish(costs, powers, last.marginal(p_load), BTreeSet::new()));
    }

    // Grid upper limits: a unit can never exceed the load minus everyone
    // else's minimum.
    let min_sum: f64 = costs.iter().map(|c| c.p_min).sum();
    let counts: Vec<usize> = costs[..n - 1]
        .iter()
        .map(|c| {
            let top = c.p_max.min(p_load - (min_sum - c.p_min));
            if top < c.p_min {
                0
            } else {
                ((top - c.p_min) / grid_step + 1e-9).floor() as usize + 1
            }
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut current = vec![0.0; n];
    search(costs, p_load, grid_step, &counts, 0, 0.0, 0.0, &mut current, &mut best);

    let (_, powers) = best.ok_or_else(|| {
        Error::Infeasible(format!("no grid point balances a load of {p_load} W"))
    })?;

    let mut active = BTreeSet::new();
    let mut interior = Vec::new();
    for (i, (c, &p)) in costs.iter().zip(&powers).enumerate() {
        if p <= c.p_min + 0.5 * grid_step || p >= c.p_max - 0.5 * grid_step {
            active.insert(i);
        } else {
            interior.push(c.marginal(p));
        }
    }
    let lambda = if interior.is_empty() {
        f64::NAN
    } else {
        interior.iter().sum::<f64>() / interior.len() as f64
    };
    Ok(finish(costs, powers, lambda, active))
}

#[allow(clippy::too_many_arguments)]
fn search(
    costs: &[CostFunction],
    p_load: f64,
    step: f64,
    counts: &[usize],
    depth: usize,
    assigned: f64,
    partial_cost: f64,
    current: &mut Vec<f64>,
    best: &mut Option<(f64, Vec<f64>)>,
) {
    let n = costs.len();
    let unit = costs[depth];
    if depth == n - 2 {
        // Innermost level: scan this unit, the last unit takes the rest.
        let last = costs[n - 1];
        let remaining = p_load - assigned;
        let mut best_here: Option<(f64, f64)> = None;
        for k in 0..counts[depth] {
            let p = unit.p_min + k as f64 * step;
            let rest = remaining - p;
            if rest < last.p_min || rest > last.p_max {
                continue;
            }
            let c = partial_cost + unit.cost(p) + last.cost(rest);
            if best_here.is_none_or(|(bc, _)| c < bc) {
                best_here = Some((c, p));
            }
        }
        if let Some((c, p)) = best_here {
            if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
                current[depth] = p;
                current[n - 1] = remaining - p;
                *best = Some((c, current.clone()));
            }
        }
        return;
    }
    for k in 0..counts[depth] {
        let p = unit.p_min + k as f64 * step;
        current[depth] = p;
        search(
            costs,
            p_load,
            step,
            counts,
            depth + 1,
            assigned + p,
            partial_cost + unit.cost(p),
            current,
            best,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundled_costs() -> Vec<CostFunction> {
        vec![
            CostFunction::quadratic(0.25, 0.0, 0.0).unwrap(),
            CostFunction::quadratic(0.15, 0.0, 0.0).unwrap(),
            CostFunction::quadratic(0.1, 0.01, 0.0).unwrap(),
        ]
    }

    #[test]
    fn empty_is_config_error() {
        assert!(matches!(solve_dispatch(&[], 10.0, false), Err(Error::Config(_))));
    }

    #[test]
    fn closed_form_at_620() {
        let r = solve_dispatch(&bundled_costs(), 620.0, false).unwrap();
        let expect = [
            6.0 * 620.0 / 31.0 + 3.0 / 310.0,
            10.0 * 620.0 / 31.0 + 1.0 / 62.0,
            15.0 * 620.0 / 31.0 - 4.0 / 155.0,
        ];
        for (p, e) in r.powers.iter().zip(expect) {
            assert!((p - e).abs() <= 1e-9 * e.abs(), "{p} vs {e}");
        }
        assert!((r.powers[0] - 120.00968).abs() < 1e-5);
        assert!((r.powers[1] - 200.01613).abs() < 1e-5);
        assert!((r.powers[2] - 299.97419).abs() < 1e-5);
    }

    #[test]
    fn single_unit_takes_all() {
        let c = [CostFunction::quadratic(0.3, 2.0, 1.0).unwrap()];
        let r = solve_dispatch(&c, 100.0, false).unwrap();
        assert!((r.powers[0] - 100.0).abs() < 1e-9);
        let r = solve_dispatch(&c, 100.0, true).unwrap();
        assert!((r.powers[0] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn identical_units_split_evenly() {
        let c = vec![CostFunction::quadratic(0.2, 0.0, 0.0).unwrap(); 3];
        let r = solve_dispatch(&c, 300.0, false).unwrap();
        for p in &r.powers {
            assert!((p - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_load_names_bound() {
        let c: Vec<_> = bundled_costs()
            .into_iter()
            .map(|c| c.with_bounds(0.0, 100.0).unwrap())
            .collect();
        match solve_dispatch(&c, 400.0, true) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("maximum")),
            other => panic!("unexpected {other:?}"),
        }
        let c: Vec<_> = c.into_iter().map(|c| c.with_bounds(50.0, 100.0).unwrap()).collect();
        match solve_dispatch(&c, 10.0, true) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("minimum")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bounds_clamp_cheap_unit() {
        let c = vec![
            CostFunction::new(0.01, 0.0, 0.0, 0.0, 100.0).unwrap(),
            CostFunction::new(0.5, 0.0, 0.0, 0.0, 1000.0).unwrap(),
        ];
        let r = solve_dispatch(&c, 300.0, true).unwrap();
        assert_eq!(r.powers[0], 100.0);
        assert!((r.powers[1] - 200.0).abs() < 1e-9);
        assert!(r.active_bounds.contains(&0));
        assert!((r.lambda - 200.0).abs() < 1e-6);
    }

    #[test]
    fn affine_unit_fills_at_its_price() {
        let c = vec![
            CostFunction::new(0.0, 10.0, 0.0, 0.0, 50.0).unwrap(),
            CostFunction::new(0.1, 0.0, 0.0, 0.0, 500.0).unwrap(),
        ];
        // Quadratic unit reaches incremental cost 10 at 50 W; the affine unit
        // covers the rest up to its limit.
        let r = solve_dispatch(&c, 80.0, true).unwrap();
        assert!((r.powers[1] - 50.0).abs() < 1e-6, "{:?}", r.powers);
        assert!((r.powers[0] - 30.0).abs() < 1e-6);
        let r = solve_dispatch(&c, 30.0, true).unwrap();
        assert!((r.powers[1] - 30.0).abs() < 1e-6);
        assert_eq!(r.powers[0], 0.0);
    }

    #[test]
    fn unbounded_affine_slopes_must_match() {
        let c = vec![
            CostFunction::quadratic(0.0, 1.0, 0.0).unwrap(),
            CostFunction::quadratic(0.0, 2.0, 0.0).unwrap(),
        ];
        assert!(solve_dispatch(&c, 10.0, false).is_err());
    }

    #[test]
    fn brute_force_single_unit() {
        let c = [CostFunction::quadratic(0.3, 0.0, 0.0).unwrap()];
        let r = brute_force_dispatch(&c, 77.7, 5.0).unwrap();
        assert_eq!(r.powers, vec![77.7]);
    }

    #[test]
    fn brute_force_symmetric_split_on_grid() {
        let c = vec![CostFunction::new(0.2, 1.0, 0.0, 0.0, 100.0).unwrap(); 2];
        let r = brute_force_dispatch(&c, 2.0 * 17.0 * 0.5, 0.5).unwrap();
        assert_eq!(r.powers, vec![8.5, 8.5]);
    }

    #[test]
    fn brute_force_rejects_large_n() {
        let c = vec![CostFunction::quadratic(0.2, 0.0, 0.0).unwrap(); 5];
        assert!(brute_force_dispatch(&c, 10.0, 1.0).is_err());
    }

    #[test]
    fn brute_force_infeasible() {
        let c = vec![CostFunction::new(0.2, 0.0, 0.0, 0.0, 10.0).unwrap(); 2];
        assert!(matches!(
            brute_force_dispatch(&c, 50.0, 1.0),
            Err(Error::Infeasible(_))
        ));
    }
}
