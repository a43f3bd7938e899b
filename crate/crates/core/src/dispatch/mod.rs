//! Cost-minimizing dispatch and the optimal sharing maps derived from it.

mod cost;
mod map;
mod solve;

pub use cost::{total_cost, CostFunction};
pub use map::{
    build_load_map, to_current_domain, Curve, MapForm, MapOptions, MapVariable, SharingMap,
    DEFAULT_MAP_SAMPLES, MIN_CURRENT,
};
pub use solve::{brute_force_dispatch, solve_dispatch, DispatchResult};
