use cascade_core::dispatch::{
    build_load_map, solve_dispatch, to_current_domain, CostFunction, MapOptions, MapVariable,
};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.01f64..1.0, 0.0f64..5.0, 0.0f64..10.0, 10.0f64..200.0)
}

fn bounded(units: Vec<(f64, f64, f64, f64)>) -> Vec<CostFunction> {
    units
        .into_iter()
        .map(|(a, b, c, cap)| CostFunction::new(a, b, c, 0.0, cap).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kkt_conditions_hold(units in prop::collection::vec(unit(), 1..6), frac in 0.0f64..1.0) {
        let costs = bounded(units);
        let cap: f64 = costs.iter().map(|c| c.p_max).sum();
        let load = frac * cap;
        let r = solve_dispatch(&costs, load, true).unwrap();
        let total: f64 = r.powers.iter().sum();
        prop_assert!((total - load).abs() <= 1e-8 * load.max(1.0));
        let scale = costs.iter().map(|c| c.marginal(c.p_max)).fold(1.0f64, f64::max);
        for (c, &p) in costs.iter().zip(&r.powers) {
            prop_assert!(p >= c.p_min - 1e-9 && p <= c.p_max + 1e-9);
            let m = 2.0 * c.a * p + c.b;
            let tol = 1e-6 * scale;
            if p > c.p_min + 1e-7 && p < c.p_max - 1e-7 {
                prop_assert!((m - r.lambda).abs() <= tol, "interior unit off lambda: {} vs {}", m, r.lambda);
            } else if p <= c.p_min + 1e-7 {
                prop_assert!(m >= r.lambda - tol);
            } else {
                prop_assert!(m <= r.lambda + tol);
            }
        }
    }

    #[test]
    fn no_feasible_exchange_lowers_cost(
        units in prop::collection::vec(unit(), 2..5),
        frac in 0.05f64..0.95,
        shift in 0.01f64..5.0,
    ) {
        let costs = bounded(units);
        let cap: f64 = costs.iter().map(|c| c.p_max).sum();
        let r = solve_dispatch(&costs, frac * cap, true).unwrap();
        let cost = |p: &[f64]| -> f64 {
            costs.iter().zip(p).map(|(c, &x)| c.a * x * x + c.b * x + c.c).sum()
        };
        let best = cost(&r.powers);
        for i in 0..costs.len() {
            for j in 0..costs.len() {
                if i == j {
                    continue;
                }
                let mut p = r.powers.clone();
                p[i] += shift;
                p[j] -= shift;
                if p[i] <= costs[i].p_max && p[j] >= costs[j].p_min {
                    prop_assert!(cost(&p) >= best - 1e-9 * best.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn load_map_sums_and_is_monotone(units in prop::collection::vec(unit(), 1..5), x in 0.0f64..1.0, dx in 0.0f64..0.2) {
        let costs = bounded(units);
        let cap: f64 = costs.iter().map(|c| c.p_max).sum();
        let map = build_load_map(&costs, (0.0, cap), MapOptions { samples: 201, enforce_bounds: true }).unwrap();
        let lo = x * cap;
        let hi = (lo + dx * cap).min(cap);
        let a = map.eval(lo);
        let b = map.eval(hi);
        prop_assert!((a.iter().sum::<f64>() - lo).abs() <= 1e-6 * cap);
        for (u, v) in a.iter().zip(&b) {
            prop_assert!(*v >= *u - 1e-9 * cap);
        }
    }

    #[test]
    fn current_map_is_load_map_at_v_times_i(a in prop::collection::vec(0.05f64..1.0, 2..5), i in 0.01f64..20.0, v in 50.0f64..400.0) {
        let costs: Vec<CostFunction> = a.iter().map(|&a| CostFunction::quadratic(a, 0.0, 0.0).unwrap()).collect();
        let load_map = build_load_map(&costs, (0.0, 10_000.0), MapOptions::default()).unwrap();
        let current = to_current_domain(&load_map, v).unwrap();
        prop_assert_eq!(current.variable, MapVariable::Current { v_pcc: v });
        for (g, xi) in current.eval(i).iter().zip(load_map.eval(v * i)) {
            prop_assert!((g - xi).abs() <= 1e-9 * xi.abs().max(1.0));
        }
    }
}

#[test]
fn quadratic_split_follows_inverse_curvature() {
    // Without linear terms, P_i ∝ 1/a_i.
    let costs = [0.2, 0.4, 0.8].map(|a| CostFunction::quadratic(a, 0.0, 0.0).unwrap());
    let r = solve_dispatch(&costs, 700.0, false).unwrap();
    let w = [5.0, 2.5, 1.25];
    let sum: f64 = w.iter().sum();
    for (p, wi) in r.powers.iter().zip(w) {
        assert!((p - 700.0 * wi / sum).abs() < 1e-9);
    }
}

#[test]
fn bounds_tabulate_the_map() {
    let costs = vec![
        CostFunction::new(0.25, 0.0, 0.0, 0.0, 100.0).unwrap(),
        CostFunction::new(0.15, 0.0, 0.0, 0.0, 1000.0).unwrap(),
    ];
    let map = build_load_map(&costs, (0.0, 1000.0), MapOptions { samples: 501, enforce_bounds: true }).unwrap();
    let at = map.eval(900.0);
    assert!((at[0] - 100.0).abs() < 1e-9);
    assert!((at[1] - 800.0).abs() < 1e-9);
}
