//! Numerical laboratory for p-Laplace type equations with an isolated boundary
//! singularity at the origin.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: planar domains with the singular point at the origin, distance
//!   to the boundary, normal offsets, chains of balls and graded polar grids.
//! * [`solver`]: finite-volume discretisation of
//!   `-div(|Du|^{p-2} Du) + c |x|^{-p} u^{p-1} = 0` on polar grids, pointwise
//!   sub/supersolution checks and the radial annulus eigenpair.
//! * [`exponents`]: separable exponents and angular profiles by shooting.
//! * [`barriers`]: the exponential lower barrier and the eigenfunction upper barrier.
//! * [`harnack`]: measured Harnack-type constants on computed fields.
//! * [`singular`]: truncation ladders, singular limits, blow-up and cone fits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barriers;
pub mod error;
pub mod exponents;
pub mod geometry;
pub mod harnack;
pub mod io;
pub mod singular;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{DomainSpec, Point};
