//! Numerical laboratory for coated inclusions that are neutral to uniform
//! fields in two-dimensional isotropic elasticity and conductivity.
//!
//! * [`model`]: phases, geometry, loads and closed-form neutrality constants.
//! * [`conductivity`]: exact mode-1 solution for concentric conducting disks.
//! * [`elasticity`]: Laurent-series Kolosov–Muskhelishvili solver for
//!   concentric elastic disks, far-field extraction and shell/core checks.
//! * [`bem`]: Kelvin-matrix single-layer solver for arbitrary smooth shapes.
//! * [`lab`]: root finding, sweeps, the rigidity experiment and Cauchy
//!   transform diagnostics.
//! * [`io`]: scenario files, result records and the command runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bem;
pub mod conductivity;
pub mod elasticity;
pub mod io;
pub mod lab;
pub mod model;
