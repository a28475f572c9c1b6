use serde::{Deserialize, Serialize};

use super::domain::DomainSpec;
use super::point::Point;
use crate::error::GeometryError;

/// Fraction of the clearance used as ball radius, so that `2B ⊂ B_{2r}(Q) ∩ Ω` strictly.
const RADIUS_FRACTION: f64 = 0.45;
const MAX_STEPS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0) {
            return Err(GeometryError::Chain(format!(
                "ball radius {radius} must be positive"
            )));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, x: Point) -> bool {
        self.center.dist(x) < self.radius
    }

    pub fn intersects(&self, other: &Ball) -> bool {
        self.center.dist(other.center) < self.radius + other.radius
    }
}

/// Output of [`chain_of_balls`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub balls: Vec<Ball>,
    /// Achieved `N₀ = ⌈j/h⌉`.
    pub n0: usize,
    /// Number of balls spent lifting both endpoints off the boundary.
    pub lift_balls: usize,
    /// Number of balls on the connecting path at the lifted level.
    pub traverse_balls: usize,
}

/// A priori per-level bound on lifting balls: two endpoints, each needing at most
/// `⌈ln 2 / ln(1 + 0.225/√(1+m²))⌉` steps per halving of the clearance, plus one.
pub fn lift_bound_per_level(m: f64) -> usize {
    let g = RADIUS_FRACTION / 2.0 / (1.0 + m * m).sqrt();
    2 * (std::f64::consts::LN_2 / (1.0 + g).ln()).ceil() as usize + 1
}

/// Height to which both endpoints are lifted before they are joined.
fn lift_level(m: f64, r: f64) -> f64 {
    r / (2.0 * (1.0 + m * m).sqrt())
}

struct Clearance<'a> {
    dom: &'a DomainSpec,
    q: Point,
    r: f64,
}

impl Clearance<'_> {
    fn at(&self, z: Point) -> f64 {
        if !self.dom.is_interior(z) {
            return 0.0;
        }
        self.dom
            .boundary_distance(z)
            .min(2.0 * self.r - z.dist(self.q))
    }

    fn ball(&self, z: Point) -> Ball {
        Ball {
            center: z,
            radius: RADIUS_FRACTION * self.at(z),
        }
    }

    fn gradient(&self, z: Point, scale: f64) -> Point {
        let e = 1e-4 * scale;
        let dx = self.at(z + Point::new(e, 0.0)) - self.at(z - Point::new(e, 0.0));
        let dy = self.at(z + Point::new(0.0, e)) - self.at(z - Point::new(0.0, e));
        Point::new(dx, dy) * (0.5 / e)
    }

    /// Ascend the clearance from `z` until it reaches `level`; returns the centres visited.
    fn lift(&self, z: Point, level: f64) -> Result<Vec<Point>, GeometryError> {
        let mut path = vec![z];
        let mut cur = z;
        let mut f = self.at(cur);
        while f < level {
            if path.len() > MAX_STEPS {
                return Err(GeometryError::Chain("lift exceeded the step budget".into()));
            }
            let rad = RADIUS_FRACTION * f;
            let g = self.gradient(cur, rad);
            let gn = g.norm();
            if !(gn > 1e-12) {
                return Err(GeometryError::Chain(format!(
                    "lift stalled at ({}, {}) with clearance {f:e}",
                    cur.x, cur.y
                )));
            }
            let dir = g * (1.0 / gn);
            let mut step = rad / 2.0;
            let mut next = cur + dir * step;
            let mut fnext = self.at(next);
            while fnext <= f {
                step /= 2.0;
                if step < 1e-3 * rad {
                    return Err(GeometryError::Chain(format!(
                        "lift stalled at ({}, {}) with clearance {f:e} below {level:e}",
                        cur.x, cur.y
                    )));
                }
                next = cur + dir * step;
                fnext = self.at(next);
            }
            cur = next;
            f = fnext;
            path.push(cur);
        }
        Ok(path)
    }

    /// Straight walk from `a` to `b`; `None` if the segment gets too close to the boundary.
    fn traverse(&self, a: Point, b: Point, floor: f64) -> Option<Vec<Point>> {
        let mut path = Vec::new();
        let mut cur = a;
        loop {
            let f = self.at(cur);
            if f < floor || path.len() > MAX_STEPS {
                return None;
            }
            let step = RADIUS_FRACTION * f / 2.0;
            let rest = cur.dist(b);
            if rest <= step {
                path.push(b);
                return Some(path);
            }
            cur = cur + (b - cur) * (step / rest);
            path.push(cur);
        }
    }

    /// Point of largest clearance on a polar sample around `Q`.
    fn hub(&self) -> Point {
        let mut best = (0.0, self.q);
        for i in 1..=24 {
            let t = 1.5 * self.r * i as f64 / 24.0;
            for k in 0..96 {
                let z = self.q + Point::from_polar(t, std::f64::consts::TAU * k as f64 / 96.0);
                let f = self.at(z);
                if f > best.0 {
                    best = (f, z);
                }
            }
        }
        best.1
    }
}

/// Connected chain of balls from `x` to `y` inside `Ω ∩ B_{2r}(Q)`, built by lifting both
/// endpoints along the gradient of the clearance `min(ρ, 2r − |z−Q|)` and joining the
/// lifted points at a fixed height. Each ball has radius `0.45` times the clearance at
/// its centre and consecutive centres are at most half a radius apart.
pub fn chain_of_balls(
    dom: &DomainSpec,
    q: Point,
    r: f64,
    x: Point,
    y: Point,
    h: u32,
) -> Result<Chain, GeometryError> {
    if !(r > 0.0) {
        return Err(GeometryError::Chain(format!(
            "radius r = {r} must be positive"
        )));
    }
    if h == 0 {
        return Err(GeometryError::Chain("depth h must be at least 1".into()));
    }
    if dom.boundary_distance(q) > 1e-12 * dom.scale() {
        return Err(GeometryError::Chain("Q is not a boundary point".into()));
    }
    for (name, z) in [("x", x), ("y", y)] {
        if !dom.is_interior(z) {
            return Err(GeometryError::Chain(format!("{name} is not in the domain")));
        }
        if z.dist(q) >= 1.5 * r {
            return Err(GeometryError::Chain(format!(
                "{name} is not in B_(3r/2)(Q)"
            )));
        }
        let floor = r / 2f64.powi(h as i32);
        if dom.boundary_distance(z) < floor * (1.0 - 1e-12) {
            return Err(GeometryError::Chain(format!(
                "rho({name}) is below r/2^h = {floor:e}"
            )));
        }
    }
    let cl = Clearance { dom, q, r };
    if x == y {
        return Ok(Chain {
            balls: vec![cl.ball(x)],
            n0: 1,
            lift_balls: 1,
            traverse_balls: 0,
        });
    }
    let m = dom.lipschitz_constant();
    let level = lift_level(m, r);
    let up_x = cl.lift(x, level)?;
    let up_y = cl.lift(y, level)?;
    let (xa, ya) = (*up_x.last().unwrap(), *up_y.last().unwrap());
    let floor = 0.5 * level;
    let middle = match cl.traverse(xa, ya, floor) {
        Some(p) => p,
        None => {
            let hub = cl.hub();
            let mut p = cl
                .traverse(xa, hub, floor)
                .ok_or_else(|| GeometryError::Chain("no clear path to the hub".into()))?;
            p.extend(
                cl.traverse(hub, ya, floor)
                    .ok_or_else(|| GeometryError::Chain("no clear path from the hub".into()))?,
            );
            p
        }
    };
    let mut centres = up_x.clone();
    let traverse_start = centres.len();
    centres.extend(middle.iter().copied().filter(|&z| z != ya));
    let traverse_balls = centres.len() - traverse_start;
    centres.extend(up_y.iter().rev().copied());
    centres.dedup();
    let balls: Vec<Ball> = centres.into_iter().map(|z| cl.ball(z)).collect();
    let j = balls.len();
    Ok(Chain {
        n0: j.div_ceil(h as usize),
        lift_balls: up_x.len() + up_y.len(),
        traverse_balls,
        balls,
    })
}
