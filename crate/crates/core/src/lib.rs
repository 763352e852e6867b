//! Numerical laboratory for scalar parabolic equations
//! `u_t = u_xx + f(t, u, u_x)` on the circle under recurrent time forcing.
//!
//! The crate is organised by concern:
//!
//! * [`forcing`]: quasi-periodic and dyadic almost periodic signals, their
//!   hull, and the parametric nonlinearity.
//! * [`spectral`]: grid, Fourier differentiation, ETDRK4 integration of the
//!   equation and of its linearisation.
//! * [`zeronum`]: zero counting on the circle and monotonicity monitoring.
//! * [`symmetry`]: rotations, orbit and quotient distances, spatial periods.
//! * [`dynamics`]: ω-limit sampling, recurrence, fibres and proximality.
//! * [`circleflow`]: phase extraction and the reduced circle-flow vector field.
//! * [`spectrum`]: Lyapunov exponents and their dimension counts.
//! * [`lab`]: scenario files and run orchestration.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circleflow;
pub mod dynamics;
pub mod error;
pub mod forcing;
pub mod lab;
pub mod spectral;
pub mod spectrum;
pub mod symmetry;
pub mod zeronum;

pub use error::{LabError, Result};
pub use forcing::{HullMetric, HullPoint, Nonlinearity, QuasiPeriodicSignal};
pub use spectral::{derivative, evolve, evolve_linearized, CircleGrid, Field, Trajectory};
