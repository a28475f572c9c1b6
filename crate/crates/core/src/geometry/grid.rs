use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::domain::DomainSpec;
use super::point::Point;
use crate::error::GeometryError;

/// How the angular coordinate is embedded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridGeometry {
    /// Plane sector `0 ≤ θ ≤ θ₀`; both rays are Dirichlet boundary.
    Planar,
    /// Meridian section of an axially symmetric cone in `R^dim`; `θ` is measured from the
    /// symmetry axis, the axis `θ = 0` is interior and the cone `θ = θ₀` is Dirichlet.
    Axisymmetric { dim: u32 },
}

impl GridGeometry {
    pub fn dim(&self) -> u32 {
        match self {
            GridGeometry::Planar => 2,
            GridGeometry::Axisymmetric { dim } => *dim,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeTag {
    Interior,
    DirichletZero,
    TruncationArc,
}

impl NodeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeTag::Interior => "interior",
            NodeTag::DirichletZero => "dirichlet-zero",
            NodeTag::TruncationArc => "truncation-arc",
        }
    }
}

/// Radial node placement between `ε` and the outer radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grading {
    /// Log-uniform radii: constant ratio between consecutive radii.
    Auto,
    /// Radial steps shrink by the factor `q` toward `ε`.
    Ratio(f64),
}

/// Tensor grid in `(r, θ)` covering `{ε ≤ r ≤ R, 0 ≤ θ ≤ θ₀}`.
///
/// Nodes are numbered `id = i·n_θ + j` with `i` the radial and `j` the angular index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    radii: Vec<f64>,
    thetas: Vec<f64>,
    geometry: GridGeometry,
    tags: Vec<NodeTag>,
}

fn graded_radii(
    n_r: usize,
    eps: f64,
    radius: f64,
    grading: Grading,
) -> Result<Vec<f64>, GeometryError> {
    match grading {
        Grading::Auto => {
            let l = (eps / radius).ln();
            let mut r: Vec<f64> = (0..n_r)
                .map(|i| radius * (l * (n_r - 1 - i) as f64 / (n_r - 1) as f64).exp())
                .collect();
            r[0] = eps;
            r[n_r - 1] = radius;
            Ok(r)
        }
        Grading::Ratio(q) => {
            if !(q > 0.0 && q < 1.0) {
                return Err(GeometryError::Config(format!(
                    "grading ratio q = {q} not in (0, 1)"
                )));
            }
            let steps = n_r - 1;
            // h_k = h_top·q^(steps-1-k), k = 0 next to ε
            let sum: f64 = (0..steps).map(|k| q.powi(k as i32)).sum();
            let h_top = (radius - eps) / sum;
            let mut r = Vec::with_capacity(n_r);
            r.push(eps);
            for k in 0..steps {
                let h = h_top * q.powi((steps - 1 - k) as i32);
                r.push(r[k] + h);
            }
            r[n_r - 1] = radius;
            Ok(r)
        }
    }
}

/// Grid on `Ω ∖ B_ε(0)` for a sector or half-disk.
pub fn build_polar_grid(
    dom: &DomainSpec,
    n_r: usize,
    n_theta: usize,
    eps: f64,
    grading: Grading,
) -> Result<PolarGrid, GeometryError> {
    let (opening, radius) = match (dom.opening(), dom.radius()) {
        (Some(o), Some(r)) => (o, r),
        _ => {
            return Err(GeometryError::Config(
                "polar grids need a sector or half-disk domain".into(),
            ))
        }
    };
    PolarGrid::graded(
        GridGeometry::Planar,
        opening,
        radius,
        n_r,
        n_theta,
        eps,
        grading,
    )
}

impl PolarGrid {
    /// Grid with explicit radii and `n_θ` uniform angles on `[0, θ₀]`.
    pub fn from_radii(
        geometry: GridGeometry,
        theta0: f64,
        radii: Vec<f64>,
        n_theta: usize,
    ) -> Result<Self, GeometryError> {
        if radii.len() < 4 || n_theta < 4 {
            return Err(GeometryError::Config(format!(
                "insufficient resolution: n_r = {}, n_theta = {n_theta} (need at least 4 each)",
                radii.len()
            )));
        }
        if !(radii[0] > 0.0) || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(GeometryError::Config(
                "radii must be positive and strictly increasing".into(),
            ));
        }
        let max_theta = match geometry {
            GridGeometry::Planar => 2.0 * PI,
            GridGeometry::Axisymmetric { dim } => {
                if dim < 3 {
                    return Err(GeometryError::Config(format!(
                        "axisymmetric grids need dim >= 3, got {dim}"
                    )));
                }
                PI
            }
        };
        if !(theta0 > 0.0 && theta0 < max_theta) {
            return Err(GeometryError::Config(format!(
                "angular extent {theta0} out of range"
            )));
        }
        let thetas: Vec<f64> = (0..n_theta)
            .map(|j| theta0 * j as f64 / (n_theta - 1) as f64)
            .collect();
        let n_r = radii.len();
        let mut tags = Vec::with_capacity(n_r * n_theta);
        for i in 0..n_r {
            for j in 0..n_theta {
                let lateral = j == n_theta - 1 || (j == 0 && geometry == GridGeometry::Planar);
                tags.push(if lateral || i == n_r - 1 {
                    NodeTag::DirichletZero
                } else if i == 0 {
                    NodeTag::TruncationArc
                } else {
                    NodeTag::Interior
                });
            }
        }
        Ok(PolarGrid {
            radii,
            thetas,
            geometry,
            tags,
        })
    }

    pub fn graded(
        geometry: GridGeometry,
        theta0: f64,
        radius: f64,
        n_r: usize,
        n_theta: usize,
        eps: f64,
        grading: Grading,
    ) -> Result<Self, GeometryError> {
        if n_r < 4 || n_theta < 4 {
            return Err(GeometryError::Config(format!(
                "insufficient resolution: n_r = {n_r}, n_theta = {n_theta} (need at least 4 each)"
            )));
        }
        if !(eps > 0.0 && eps < radius) {
            return Err(GeometryError::Config(format!(
                "epsilon {eps} not in (0, {radius})"
            )));
        }
        let radii = graded_radii(n_r, eps, radius, grading)?;
        Self::from_radii(geometry, theta0, radii, n_theta)
    }

    /// Log-uniform grid with `per_octave` radial cells per factor of two, anchored at the
    /// outer radius. Grids for `ε` and `ε/2` share every node of the coarser one.
    pub fn dyadic(
        geometry: GridGeometry,
        theta0: f64,
        radius: f64,
        eps: f64,
        per_octave: usize,
        n_theta: usize,
    ) -> Result<Self, GeometryError> {
        let octaves = (radius / eps).log2();
        let k = octaves.round();
        if !(eps > 0.0) || k < 1.0 || (octaves - k).abs() > 1e-9 || per_octave == 0 {
            return Err(GeometryError::Config(format!(
                "dyadic grid needs radius/epsilon a power of two, got {}",
                radius / eps
            )));
        }
        let n = k as usize * per_octave;
        let radii = (0..=n)
            .map(|i| radius * 2f64.powf(-((n - i) as f64) / per_octave as f64))
            .collect();
        Self::from_radii(geometry, theta0, radii, n_theta)
    }

    pub fn geometry(&self) -> GridGeometry {
        self.geometry
    }

    /// Ambient dimension `N`.
    pub fn dim(&self) -> u32 {
        self.geometry.dim()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn n_r(&self) -> usize {
        self.radii.len()
    }

    pub fn n_theta(&self) -> usize {
        self.thetas.len()
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.radii[0]
    }

    pub fn outer_radius(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn theta0(&self) -> f64 {
        *self.thetas.last().unwrap()
    }

    pub fn id(&self, i: usize, j: usize) -> usize {
        i * self.n_theta() + j
    }

    pub fn ij(&self, id: usize) -> (usize, usize) {
        (id / self.n_theta(), id % self.n_theta())
    }

    pub fn r(&self, id: usize) -> f64 {
        self.radii[id / self.n_theta()]
    }

    pub fn theta(&self, id: usize) -> f64 {
        self.thetas[id % self.n_theta()]
    }

    pub fn tag(&self, id: usize) -> NodeTag {
        self.tags[id]
    }

    pub fn tags(&self) -> &[NodeTag] {
        &self.tags
    }

    /// Cartesian position: `(r cos θ, r sin θ)` for planar grids and the meridian
    /// coordinates `(r sin θ, r cos θ)` (distance to axis, height along axis) otherwise.
    pub fn point(&self, id: usize) -> Point {
        Self::embed(self.geometry, self.r(id), self.theta(id))
    }

    pub(crate) fn embed(geometry: GridGeometry, r: f64, theta: f64) -> Point {
        match geometry {
            GridGeometry::Planar => Point::from_polar(r, theta),
            GridGeometry::Axisymmetric { .. } => Point::new(r * theta.sin(), r * theta.cos()),
        }
    }

    /// Polar coordinates `(r, θ)` of a Cartesian point in this grid's embedding.
    pub fn polar(&self, x: Point) -> (f64, f64) {
        match self.geometry {
            GridGeometry::Planar => (x.norm(), x.angle()),
            GridGeometry::Axisymmetric { .. } => (x.norm(), x.x.atan2(x.y)),
        }
    }

    /// Distance to the boundary of the full domain `{r < R, 0 < θ < θ₀}`; the truncation
    /// arc is not part of that boundary.
    pub fn rho_polar(&self, r: f64, theta: f64) -> f64 {
        let ray = |phi: f64| {
            let d = (theta - phi).abs();
            if d >= FRAC_PI_2 {
                r
            } else {
                r * d.sin()
            }
        };
        let lateral = match self.geometry {
            GridGeometry::Planar => ray(0.0).min(ray(self.theta0())),
            GridGeometry::Axisymmetric { .. } => ray(self.theta0()),
        };
        lateral.min(self.outer_radius() - r).max(0.0)
    }

    pub fn rho(&self, id: usize) -> f64 {
        self.rho_polar(self.r(id), self.theta(id))
    }

    pub fn count(&self, tag: NodeTag) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }

    /// Write the `node_id,r,theta,x,y,tag` table.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["node_id", "r", "theta", "x", "y", "tag"])?;
        for id in 0..self.len() {
            let p = self.point(id);
            wr.write_record(&[
                id.to_string(),
                format!("{:.17e}", self.r(id)),
                format!("{:.17e}", self.theta(id)),
                format!("{:.17e}", p.x),
                format!("{:.17e}", p.y),
                self.tag(id).as_str().to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}
