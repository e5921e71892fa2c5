//! Temporal two-grid compact difference (TTCD) solver for the periodic
//! Benjamin–Bona–Mahony–Burgers equation
//!
//! ```text
//! u_t − μ u_xxt + u u_x + u_x − λ u_xx = f(x, t),   u(x + L, t) = u(x, t),
//! ```
//!
//! together with the nonlinear compact difference (NCD) reference scheme.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! `f64` aliases below are what the experiment drivers use.

pub mod compact;
pub mod diagnostics;
pub mod error;
pub mod linsolve;
pub mod mesh;
pub mod ops;
pub mod scalar;
pub mod schemes;
pub mod twogrid;

pub use compact::CompactOperator;
pub use error::{Error, Result};
pub use mesh::{SpaceGrid, TimeGridPair};
pub use ops::GridFunction;
pub use scalar::Real;
pub use schemes::{
    solve_ncd, IterationPolicy, LinearSolverKind, PdeParams, SourceSampling, SourceSteps,
    StateLevel, Stepper, Trajectory,
};
pub use twogrid::{run_ttcd, PhaseTimings, TtcdRun};

pub type SpaceGrid64 = SpaceGrid<f64>;
pub type TimeGridPair64 = TimeGridPair<f64>;
pub type GridFunction64 = GridFunction<f64>;
pub type CompactOperator64 = CompactOperator<f64>;
pub type PdeParams64 = PdeParams<f64>;
pub type StateLevel64 = StateLevel<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type TtcdRun64 = TtcdRun<f64>;

pub type SpaceGrid32 = SpaceGrid<f32>;
pub type GridFunction32 = GridFunction<f32>;
pub type Trajectory32 = Trajectory<f32>;
