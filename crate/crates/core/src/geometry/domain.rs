use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::point::{segment_distance, Point};
use crate::error::GeometryError;

/// Relative tolerance used for boundary membership.
const BOUNDARY_TOL: f64 = 1e-12;

/// Planar domain whose boundary passes through the singular point, the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum DomainSpec {
    /// `{0 < |x| < radius, 0 < arg x < opening}`.
    Sector { opening: f64, radius: f64 },
    /// `{|x| < radius, x₂ > 0}`; flat boundary through the origin with `x·ν₀ ≤ 0`.
    HalfDisk { radius: f64 },
    /// Simple polygon, vertices listed counter-clockwise; the origin must lie on its boundary.
    LipschitzPolygon { vertices: Vec<Point> },
}

/// Side of the boundary for normal offsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Inward,
    Outward,
}

#[derive(Clone, Copy, Debug)]
enum Piece {
    Segment(Point, Point),
    /// Arc of the circle `|x| = radius` for angles in `[0, opening]`.
    Arc {
        radius: f64,
        opening: f64,
    },
}

impl Piece {
    fn distance(&self, x: Point) -> f64 {
        match *self {
            Piece::Segment(a, b) => segment_distance(x, a, b),
            Piece::Arc { radius, opening } => {
                let r = x.norm();
                if r > 0.0 && x.angle() <= opening {
                    (radius - r).abs()
                } else {
                    let a = Point::new(radius, 0.0);
                    let b = Point::from_polar(radius, opening);
                    x.dist(a).min(x.dist(b))
                }
            }
        }
    }
}

impl DomainSpec {
    pub fn sector(opening: f64, radius: f64) -> Result<Self, GeometryError> {
        if !(opening > 0.0 && opening < TAU) {
            return Err(GeometryError::InvalidDomain(format!(
                "sector opening {opening} not in (0, 2π)"
            )));
        }
        if !(radius > 0.0) {
            return Err(GeometryError::InvalidDomain(format!(
                "radius {radius} must be positive"
            )));
        }
        Ok(DomainSpec::Sector { opening, radius })
    }

    pub fn half_disk(radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0) {
            return Err(GeometryError::InvalidDomain(format!(
                "radius {radius} must be positive"
            )));
        }
        Ok(DomainSpec::HalfDisk { radius })
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::InvalidDomain(
                "polygon needs at least 3 vertices".into(),
            ));
        }
        let dom = DomainSpec::LipschitzPolygon { vertices };
        if dom.boundary_distance(Point::ORIGIN) > BOUNDARY_TOL * dom.scale() {
            return Err(GeometryError::InvalidDomain(
                "origin is not on the polygon boundary".into(),
            ));
        }
        if dom.signed_area() <= 0.0 {
            return Err(GeometryError::InvalidDomain(
                "polygon must be counter-clockwise".into(),
            ));
        }
        Ok(dom)
    }

    /// Angular extent of the domain around the origin, when it is a sector.
    pub fn opening(&self) -> Option<f64> {
        match *self {
            DomainSpec::Sector { opening, .. } => Some(opening),
            DomainSpec::HalfDisk { .. } => Some(PI),
            DomainSpec::LipschitzPolygon { .. } => None,
        }
    }

    /// Outer radius for sector-like domains.
    pub fn radius(&self) -> Option<f64> {
        match *self {
            DomainSpec::Sector { radius, .. } | DomainSpec::HalfDisk { radius } => Some(radius),
            DomainSpec::LipschitzPolygon { .. } => None,
        }
    }

    /// Characteristic length (diameter bound) used to scale tolerances.
    pub fn scale(&self) -> f64 {
        match self {
            DomainSpec::Sector { radius, .. } | DomainSpec::HalfDisk { radius } => *radius,
            DomainSpec::LipschitzPolygon { vertices } => {
                vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
            }
        }
    }

    /// Lipschitz constant `m` of the boundary as a graph near the origin.
    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            DomainSpec::HalfDisk { .. } => 0.0,
            DomainSpec::Sector { opening, .. } => (opening / 2.0).tan().recip().abs(),
            DomainSpec::LipschitzPolygon { .. } => match self.corner_angle_at_origin() {
                Some(angle) => (angle / 2.0).tan().recip().abs(),
                None => 0.0,
            },
        }
    }

    /// Interior/exterior sphere radius `R₀`, defined for the shapes that are `C²` near
    /// the singular point. For the half-disk it is the radius for which every flat
    /// boundary point with `|P| ≤ R/2` has both tangent balls of radius `R₀`.
    pub fn sphere_radius(&self) -> Option<f64> {
        match *self {
            DomainSpec::HalfDisk { radius } => Some(radius / 4.0),
            DomainSpec::Sector { opening, radius } if (opening - PI).abs() < 1e-15 => {
                Some(radius / 4.0)
            }
            _ => None,
        }
    }

    /// Unit vector pointing into the domain from the origin (the normal `-ν₀` for
    /// the half-disk, the bisector for a sector).
    pub fn inward_axis(&self) -> Point {
        match self {
            DomainSpec::HalfDisk { .. } => Point::new(0.0, 1.0),
            DomainSpec::Sector { opening, .. } => Point::from_polar(1.0, opening / 2.0),
            DomainSpec::LipschitzPolygon { vertices } => {
                let (prev, next) = self.origin_neighbours();
                let a = prev.map(|i| vertices[i].normalized());
                let b = next.map(|i| vertices[i].normalized());
                match (a, b) {
                    (Some(a), Some(b)) => {
                        // bisector of the interior angle, swept counter-clockwise from b to a
                        let start = b.angle();
                        let mut sweep = a.angle() - start;
                        if sweep <= 0.0 {
                            sweep += TAU;
                        }
                        Point::from_polar(1.0, start + sweep / 2.0)
                    }
                    _ => {
                        let (a, b) = self.edge_through_origin().expect("origin on boundary");
                        (b - a).perp().normalized()
                    }
                }
            }
        }
    }

    fn pieces(&self) -> Vec<Piece> {
        match self {
            DomainSpec::Sector { opening, radius } => vec![
                Piece::Segment(Point::ORIGIN, Point::new(*radius, 0.0)),
                Piece::Segment(Point::ORIGIN, Point::from_polar(*radius, *opening)),
                Piece::Arc {
                    radius: *radius,
                    opening: *opening,
                },
            ],
            DomainSpec::HalfDisk { radius } => vec![
                Piece::Segment(Point::new(-radius, 0.0), Point::new(*radius, 0.0)),
                Piece::Arc {
                    radius: *radius,
                    opening: PI,
                },
            ],
            DomainSpec::LipschitzPolygon { vertices } => (0..vertices.len())
                .map(|i| Piece::Segment(vertices[i], vertices[(i + 1) % vertices.len()]))
                .collect(),
        }
    }

    fn signed_area(&self) -> f64 {
        match self {
            DomainSpec::LipschitzPolygon { vertices } => {
                let n = vertices.len();
                0.5 * (0..n)
                    .map(|i| {
                        let a = vertices[i];
                        let b = vertices[(i + 1) % n];
                        a.x * b.y - b.x * a.y
                    })
                    .sum::<f64>()
            }
            _ => 1.0,
        }
    }

    fn origin_neighbours(&self) -> (Option<usize>, Option<usize>) {
        if let DomainSpec::LipschitzPolygon { vertices } = self {
            let n = vertices.len();
            let tol = BOUNDARY_TOL * self.scale();
            if let Some(k) = vertices.iter().position(|v| v.norm() <= tol) {
                return (Some((k + n - 1) % n), Some((k + 1) % n));
            }
        }
        (None, None)
    }

    fn edge_through_origin(&self) -> Option<(Point, Point)> {
        if let DomainSpec::LipschitzPolygon { vertices } = self {
            let n = vertices.len();
            let tol = BOUNDARY_TOL * self.scale();
            for i in 0..n {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                if segment_distance(Point::ORIGIN, a, b) <= tol {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Interior angle at the origin when the origin is a polygon vertex.
    fn corner_angle_at_origin(&self) -> Option<f64> {
        let DomainSpec::LipschitzPolygon { vertices } = self else {
            return None;
        };
        let (Some(prev), Some(next)) = self.origin_neighbours() else {
            return None;
        };
        let start = vertices[next].angle();
        let mut sweep = vertices[prev].angle() - start;
        if sweep <= 0.0 {
            sweep += TAU;
        }
        Some(sweep)
    }

    /// Distance from any point of the plane to the boundary.
    pub(crate) fn boundary_distance(&self, x: Point) -> f64 {
        self.pieces()
            .iter()
            .map(|p| p.distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Strict interior membership (boundary excluded up to rounding).
    pub fn is_interior(&self, x: Point) -> bool {
        let tol = BOUNDARY_TOL * self.scale();
        self.raw_inside(x) && self.boundary_distance(x) > tol
    }

    /// Membership in the closure.
    pub fn contains(&self, x: Point) -> bool {
        let tol = BOUNDARY_TOL * self.scale();
        self.raw_inside(x) || self.boundary_distance(x) <= tol
    }

    fn raw_inside(&self, x: Point) -> bool {
        match self {
            DomainSpec::Sector { opening, radius } => {
                x.norm() < *radius && x.norm() > 0.0 && x.angle() < *opening && x.angle() > 0.0
            }
            DomainSpec::HalfDisk { radius } => x.norm() < *radius && x.y > 0.0,
            DomainSpec::LipschitzPolygon { vertices } => {
                let n = vertices.len();
                let mut inside = false;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    if (a.y > x.y) != (b.y > x.y) {
                        let t = (x.y - a.y) / (b.y - a.y);
                        if x.x < a.x + t * (b.x - a.x) {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    /// `ρ(x)`, the distance from `x` to `∂Ω`.
    pub fn distance_to_boundary(&self, x: Point) -> Result<f64, GeometryError> {
        if !self.contains(x) {
            return Err(GeometryError::OutsideDomain { x: x.x, y: x.y });
        }
        let d = self.boundary_distance(x);
        Ok(if d <= BOUNDARY_TOL * self.scale() {
            0.0
        } else {
            d
        })
    }

    /// Outward unit normal at a non-corner boundary point.
    pub fn outward_normal(&self, p: Point) -> Result<Point, GeometryError> {
        let tol = 1e-10 * self.scale();
        let hits: Vec<Piece> = self
            .pieces()
            .into_iter()
            .filter(|piece| piece.distance(p) <= tol)
            .collect();
        match hits.as_slice() {
            [] => Err(GeometryError::NotOnBoundary { x: p.x, y: p.y }),
            [Piece::Arc { .. }] => Ok(p.normalized()),
            [Piece::Segment(a, b)] => {
                let n = (*b - *a).perp().normalized();
                // perp of a counter-clockwise edge points inside; check rather than assume
                let probe = p + n * (1e-6 * self.scale());
                if self.raw_inside(probe) {
                    Ok(-n)
                } else {
                    Ok(n)
                }
            }
            _ => Err(GeometryError::Corner { x: p.x, y: p.y }),
        }
    }

    /// `N_r(P) = P − rν_P` (inward) or `𝒩_r(P) = P + rν_P` (outward).
    pub fn normal_point(&self, p: Point, r: f64, side: Side) -> Result<Point, GeometryError> {
        if !(r > 0.0) {
            return Err(GeometryError::OutOfTube { r, tube: 0.0 });
        }
        if let Some(r0) = self.sphere_radius() {
            if r > r0 {
                return Err(GeometryError::OutOfTube { r, tube: r0 });
            }
        }
        let nu = self.outward_normal(p)?;
        let z = match side {
            Side::Inward => p - nu * r,
            Side::Outward => p + nu * r,
        };
        let rho = self.boundary_distance(z);
        if (rho - r).abs() > 1e-12 * r.max(1.0) * 10.0 {
            return Err(GeometryError::OutOfTube { r, tube: rho });
        }
        Ok(z)
    }
}
