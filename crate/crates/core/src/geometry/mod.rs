//! Planar domains with the singular point at the origin, chains of balls and polar grids.

mod chain;
mod domain;
mod grid;
mod point;

pub use chain::{chain_of_balls, lift_bound_per_level, Ball, Chain};
pub use domain::{DomainSpec, Side};
pub use grid::{build_polar_grid, Grading, GridGeometry, NodeTag, PolarGrid};
pub use point::Point;

use crate::error::GeometryError;

/// `ρ(x)`, the distance from `x` to `∂Ω`.
pub fn distance_to_boundary(dom: &DomainSpec, x: Point) -> Result<f64, GeometryError> {
    dom.distance_to_boundary(x)
}

/// Inward (`N_r(P)`) or outward (`𝒩_r(P)`) normal offset of a boundary point.
pub fn normal_point(
    dom: &DomainSpec,
    p: Point,
    r: f64,
    side: Side,
) -> Result<Point, GeometryError> {
    dom.normal_point(p, r, side)
}
