//! Almost periodic semi-waves of the free-boundary KPP-Fisher equation
//!
//! ```text
//! u_t = u_xx + u(g(x) − u),  x < h(t),   u(h(t), t) = 0,   h'(t) = −μ u_x(h(t), t)
//! ```
//!
//! in quasi-periodic media `g`. The crate builds the semi-wave as a limit of
//! cutoff solutions, pulls it back to the front-indexed profile `v(ξ, τ)`,
//! and measures speed laws, comparison functionals and almost periods.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builder;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod io;
pub mod media;
pub mod oracle;
pub mod solver;
pub mod steady_state;
mod tridiag;

pub use builder::{
    build_semiwave, extract_profile, monotone_in_time_check, tail_gap, veq_residual, Ladder,
    Profile, SemiwaveBuild,
};
pub use diagnostics::{
    almost_period_scan, average_speed, rho, rho_series, speed_bounds, speed_law, AlmostPeriods,
    RhoSeries, SpeedLaw,
};
pub use error::{Error, Result};
pub use media::{Mode, QuasiPeriodicMedium};
pub use solver::{
    boundary_flux, compare_ordered, evolve, init_cutoff, Advection, FluxOrder, FrontState, LeftBc,
    OrderingReport, SeriesPoint, Solver, SolverConfig, SpeedBounds, Stop, Trajectory,
};
pub use steady_state::{compute_steady_state, steady_residual, SteadyState};
