//! Numerical laboratory for limit cycles of random planar polynomial vector
//! fields near a focus, and for zero counts of holomorphic families that
//! depend analytically on a parameter.
//!
//! Layout:
//!
//! - [`analytic`]: complex polynomials, argument-principle zero counting,
//!   the Jensen-type zero bound and a polynomial root finder.
//! - [`family`]: parametric families `v -> f_v(z)`, zero counts over the
//!   parameter ball, tail tables and moment estimates.
//! - [`field`]: coefficient tensors of planar fields, the ellipsoid of
//!   admissible fields, uniform sampling and the polar reduction.
//! - [`poincare`]: Picard and Runge-Kutta solvers for the angular return
//!   equation, the displacement map and limit cycle counting.
//! - [`random_poly`]: random polynomial families and annulus zero counts.
//! - [`ensembles`]: experiment orchestration and output files.
//! - [`verify`]: the acceptance criteria, runnable from tests and the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod ensembles;
pub mod family;
pub mod field;
pub mod io;
pub mod poincare;
pub mod random_poly;
pub mod sampling;
pub mod stats;
pub mod verify;

pub use num_complex::Complex64 as C64;

pub use analytic::{Count, ZeroCountResult};
pub use family::{ParametricFamily, SummaryStats, TailTable};
pub use field::{Ellipsoid, PlanarField, PolarSystem};
pub use poincare::{CycleCount, SolverConfig, Trajectory};

/// Budget `N = 1/(192 pi d^2)` below which the return equation is
/// guaranteed to be well posed on the unit disk.
pub fn default_budget(degree: usize) -> f64 {
    let d = degree as f64;
    1.0 / (192.0 * std::f64::consts::PI * d * d)
}
