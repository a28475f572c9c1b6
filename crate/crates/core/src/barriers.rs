//! The exponential lower barrier and the annulus-eigenfunction upper barrier, with
//! pointwise certification of their differential inequalities.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{BarrierError, Error};
use crate::geometry::{
    normal_point, DomainSpec, Grading, GridGeometry, Point, PolarGrid, Side as NormalSide,
};
use crate::solver::{side_condition_check, RadialEigenpair, ScalarField, Side, StencilFailure};

/// Relative tolerance of the pointwise barrier checks.
pub const CERT_TOL: f64 = 1e-3;
const CERT_NR: usize = 257;
const CERT_NTHETA: usize = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBarrierParams {
    pub a: f64,
    /// `α = p/(p−1)`.
    pub alpha: f64,
    pub p: f64,
    pub dim: u32,
    pub c0_tilde: f64,
    pub r: f64,
    /// `N_{r/2}(P)`.
    pub center: Point,
}

/// Left side of the condition on `a`: `a^{p−1}(ap/4^α − N)`.
pub fn lower_condition(a: f64, p: f64, dim: u32) -> f64 {
    let alpha = p / (p - 1.0);
    a.powf(p - 1.0) * (a * p / 4f64.powf(alpha) - dim as f64)
}

/// Least `a` with `a^{p−1}(ap/4^α − N) ≥ C̃₀`, placed at `r = 1/2` next to the boundary
/// point `P = (1, 0)` of the upper half-plane.
pub fn lower_barrier_params(
    p: f64,
    dim: u32,
    c0_tilde: f64,
) -> Result<LowerBarrierParams, BarrierError> {
    if !(p > 1.0) || !p.is_finite() || dim < 2 {
        return Err(BarrierError::Input(format!(
            "need p > 1 and N >= 2, got p = {p}, N = {dim}"
        )));
    }
    if !(c0_tilde >= 0.0) || !c0_tilde.is_finite() {
        return Err(BarrierError::Input(format!("C0 = {c0_tilde} must be >= 0")));
    }
    let alpha = p / (p - 1.0);
    let root0 = dim as f64 * 4f64.powf(alpha) / p;
    let a = if c0_tilde == 0.0 {
        root0
    } else {
        let f = |a: f64| lower_condition(a, p, dim) - c0_tilde;
        let (mut lo, mut hi) = (root0, 2.0 * root0);
        while f(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let r = 0.5;
    Ok(LowerBarrierParams {
        a,
        alpha,
        p,
        dim,
        c0_tilde,
        r,
        center: Point::new(1.0, r / 2.0),
    })
}

impl LowerBarrierParams {
    /// `V(s)`.
    pub fn profile(&self, s: f64) -> f64 {
        let (a, al, r) = (self.a, self.alpha, self.r);
        let e = |t: f64| (-a * t).exp();
        let outer = e(0.5f64.powf(al));
        (e((s / r).powf(al)) - outer) / (e(0.25f64.powf(al)) - outer)
    }

    /// Smallest ratio `V(N_t(P))·r/t` over `t ∈ (0, r/2]`, sampled.
    pub fn slope_constant(&self) -> f64 {
        (1..=512)
            .map(|k| {
                let t = self.r / 2.0 * k as f64 / 512.0;
                self.profile(self.r / 2.0 - t) * self.r / t
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `v(x) = V(|x − N_{r/2}(P)|)`.
pub fn eval_lower_barrier(params: &LowerBarrierParams, x: Point) -> f64 {
    params.profile(x.dist(params.center))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBarrierParams {
    pub b: f64,
    pub r: f64,
    pub rb: f64,
    /// `𝒩_{rb}(P)`.
    pub center: Point,
    pub scale: f64,
    pub p: f64,
    pub dim: u32,
    pub c0_tilde: f64,
    #[serde(skip)]
    pub eigen: Arc<RadialEigenpair>,
}

impl Default for RadialEigenpair {
    fn default() -> Self {
        RadialEigenpair {
            p: 2.0,
            dim: 2,
            lambda1: f64::NAN,
            s: vec![],
            phi: vec![],
            dphi: vec![],
            end_mismatch: f64::NAN,
        }
    }
}

/// Geometry of one upper-barrier placement.
#[derive(Clone, Debug)]
pub struct UpperPlacement<'a> {
    pub dom: &'a DomainSpec,
    pub q: Point,
    pub p_point: Point,
    pub r: f64,
}

/// Largest `b` on the ladder `2/3, 1/3, 1/6, …` with `λ₁/(rb)^p ≥ 1 + C̃₀` and
/// `B_{2br}(𝒩_{br}(P)) ⊂ B_r(Q)`.
pub fn upper_barrier_params(
    eigen: Arc<RadialEigenpair>,
    c0_tilde: f64,
    place: &UpperPlacement,
    scale: f64,
) -> Result<UpperBarrierParams, Error> {
    let (p, r) = (eigen.p, place.r);
    if !(r > 0.0) || !(scale > 0.0) {
        return Err(
            BarrierError::Input(format!("need r > 0 and scale > 0, got {r}, {scale}")).into(),
        );
    }
    let mut b = 2.0 / 3.0;
    for _ in 0..40 {
        let rb = r * b;
        let eig_ok = eigen.lambda1 / rb.powf(p) >= 1.0 + c0_tilde;
        if eig_ok {
            let center = normal_point(place.dom, place.p_point, rb, NormalSide::Outward)?;
            if center.dist(place.q) + 2.0 * rb <= r {
                return Ok(UpperBarrierParams {
                    b,
                    r,
                    rb,
                    center,
                    scale,
                    p,
                    dim: eigen.dim,
                    c0_tilde,
                    eigen,
                });
            }
        }
        b /= 2.0;
    }
    Err(BarrierError::NoAdmissibleB { smallest: b }.into())
}

/// `scale·φ₁(|x − 𝒩_{rb}(P)|/(rb))` on the annulus `rb ≤ |x − 𝒩_{rb}(P)| ≤ 3rb`.
pub fn eval_upper_barrier(params: &UpperBarrierParams, x: Point) -> Result<f64, BarrierError> {
    let d = x.dist(params.center);
    let s = d / params.rb;
    let tol = 1e-12;
    if !(s >= 1.0 - tol && s <= 3.0 + tol) {
        return Err(BarrierError::OutsideAnnulus {
            distance: d,
            inner: params.rb,
            outer: 3.0 * params.rb,
        });
    }
    let v = params.eigen.value(s.clamp(1.0, 3.0)).unwrap_or(0.0);
    Ok(params.scale * v)
}

/// Smallest `C` with `φ₁(s) ≤ C(s − 1)` on sampled `s ∈ (1, 2]`.
pub fn eigen_linear_bound(eigen: &RadialEigenpair) -> f64 {
    (1..=1000)
        .map(|k| {
            let s = 1.0 + k as f64 / 1000.0;
            eigen.value(s).unwrap_or(0.0) / (s - 1.0)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub params: serde_json::Value,
    pub annulus: [f64; 2],
    pub side: Side,
    pub checked: usize,
    pub worst: f64,
    pub failures: Vec<StencilFailure>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Barrier to certify.
#[derive(Clone, Debug)]
pub enum Barrier<'a> {
    Lower(&'a LowerBarrierParams),
    Upper(&'a UpperBarrierParams),
}

/// Polar grid centred at the barrier centre, covering its annulus of validity. Planar for
/// `N = 2`, axisymmetric otherwise.
pub fn certification_grid(
    dim: u32,
    inner: f64,
    outer: f64,
    n_r: usize,
    n_theta: usize,
) -> Result<PolarGrid, Error> {
    let geometry = if dim == 2 {
        GridGeometry::Planar
    } else {
        GridGeometry::Axisymmetric { dim }
    };
    Ok(PolarGrid::graded(
        geometry,
        FRAC_PI_2,
        outer,
        n_r,
        n_theta,
        inner,
        Grading::Auto,
    )?)
}

/// Evaluate the barrier on [`certification_grid`] and check its inequality pointwise.
pub fn certify_barrier(barrier: Barrier, tol: f64) -> Result<Certificate, Error> {
    let (dim, p, c0, inner, outer, side, params) = match barrier {
        Barrier::Lower(lp) => (
            lp.dim,
            lp.p,
            lp.c0_tilde,
            lp.r / 4.0,
            lp.r / 2.0,
            Side::Subsolution,
            serde_json::to_value(lp).map_err(|e| Error::Io(e.to_string()))?,
        ),
        Barrier::Upper(up) => (
            up.dim,
            up.p,
            up.c0_tilde,
            up.rb,
            3.0 * up.rb,
            Side::Supersolution,
            serde_json::to_value(up).map_err(|e| Error::Io(e.to_string()))?,
        ),
    };
    let grid = Arc::new(certification_grid(dim, inner, outer, CERT_NR, CERT_NTHETA)?);
    let field = match barrier {
        Barrier::Lower(lp) => ScalarField::from_fn(grid, |s, _| lp.profile(s)),
        Barrier::Upper(up) => ScalarField::from_fn(grid, |s, _| {
            up.scale * up.eigen.value((s / up.rb).clamp(1.0, 3.0)).unwrap_or(0.0)
        }),
    };
    let rep = side_condition_check(&field, p, c0, side, tol);
    Ok(Certificate {
        params,
        annulus: [inner, outer],
        side,
        checked: rep.checked,
        worst: rep.worst,
        failures: rep.failures,
    })
}
