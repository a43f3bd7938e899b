//! Fixed-step closed-loop simulation of the cascade under either control
//! law, with steady-state detection and cost comparison.

mod algebraic;
mod run;
mod schedule;
mod state;
mod steady;
mod tagc;
mod trajectory;

pub use algebraic::{solve_algebraic_loop, LoopSolution};
pub use run::{closed_loop_rate, derivatives, run_scenario, RunOutput, Simulation, MAX_STEP_FILTER_PRODUCT};
pub use schedule::{LoadBases, LoadSchedule, LoadSpec, ScheduleEntry};
pub use state::{SimState, StateRate};
pub use steady::{detect_steady_state, minimum_window, SegmentSettling, SteadyTolerance};
pub use tagc::{compare_tagc, SegmentTagc, TagcComparison};
pub use trajectory::{Sample, Segment, Trajectory};
