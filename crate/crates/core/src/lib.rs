//! Finite element solvers for the clamped biharmonic wave equation
//! `u_tt + Δ²u = f` on rectangles, with Morley, discontinuous Galerkin and
//! C0 interior penalty discretizations in space and explicit or implicit
//! second-order schemes in time.

pub mod analysis;
pub mod config;
pub mod error;
pub mod experiments;
pub mod field;
pub mod forms;
pub mod mesh;
pub mod problems;
pub mod projection;
pub mod quadrature;
pub mod spaces;
pub mod sparse;
pub mod timestep;

pub use error::{Error, Result};
