//! Linearization of the closed loop around a synchronized steady state,
//! eigenvalue analysis and root-locus sweeps.

mod eigen;
mod locus;
mod matrix;

pub use eigen::{eigen_residual, eigenvalues, norm_inf, spectrum, Spectrum};
pub use locus::{
    match_continuity, root_locus, stability_verdict, zero_modes, LocusPoint, RootLocus, Sweep,
    SweepParameter, Verdict, ZERO_BALL,
};
pub use matrix::{
    acquire_operating_point, build_state_matrix, full_sensitivity_matrix, nonlinear_rate,
    OperatingPoint, OPERATING_POINT_TOLERANCE,
};
