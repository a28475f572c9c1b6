//! Separable exponents and angular profiles by shooting on the angular equation
//!
//! `−div_σ((a²η² + |∇η|²)^{(p−2)/2}∇η) + cη^{p−1} = λ(a)(a²η² + |∇η|²)^{(p−2)/2}η`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ExponentError;
use crate::geometry::{GridGeometry, PolarGrid};
use crate::solver::{hermite_root, ScalarField};

/// Angular integration step (radians).
pub const STEP: f64 = 1e-4;
/// Exponent search interval.
pub const A_MIN: f64 = 1e-3;
pub const A_MAX: f64 = 50.0;
/// Bisection tolerance on the exponent.
pub const A_TOL: f64 = 1e-8;
const SCAN_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// `U = r^{γ}ψ`.
    Regular,
    /// `V = r^{−β}φ`.
    Singular,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Regular => "regular",
            Kind::Singular => "singular",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngularGeometry {
    /// Plane sector `0 < θ < θ₀`, Dirichlet at both ends (`N = 2`).
    PlanarSector,
    /// Spherical cap `θ < θ₀` around the axis in `S^{N−1}`, regular at the axis.
    AxisymmetricCap,
}

/// `λ(a)` for the given kind.
pub fn lambda_of(a: f64, p: f64, dim: u32, kind: Kind) -> f64 {
    let n = dim as f64;
    match kind {
        Kind::Singular => a * (a * (p - 1.0) + p - n),
        Kind::Regular => a * (a * (p - 1.0) + n - p),
    }
}

/// Parameters of one shooting problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootSpec {
    pub p: f64,
    pub dim: u32,
    pub kind: Kind,
    pub c: f64,
    pub geometry: AngularGeometry,
}

impl ShootSpec {
    pub fn new(
        p: f64,
        dim: u32,
        kind: Kind,
        c: f64,
        geometry: AngularGeometry,
    ) -> Result<Self, ExponentError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(ExponentError::Input(format!("p = {p} must exceed 1")));
        }
        if !(c >= 0.0) || !c.is_finite() {
            return Err(ExponentError::Input(format!("c = {c} must be >= 0")));
        }
        match geometry {
            AngularGeometry::PlanarSector if dim != 2 => Err(ExponentError::Input(format!(
                "planar sectors need N = 2, got {dim}"
            ))),
            AngularGeometry::AxisymmetricCap if dim < 3 => {
                Err(ExponentError::Input(format!("caps need N >= 3, got {dim}")))
            }
            _ => Ok(ShootSpec {
                p,
                dim,
                kind,
                c,
                geometry,
            }),
        }
    }

    fn theta_max(&self) -> f64 {
        match self.geometry {
            AngularGeometry::PlanarSector => 2.0 * PI,
            AngularGeometry::AxisymmetricCap => PI,
        }
    }

    /// `(η', η'')` at `θ` for state `(η, η')`.
    fn rhs(&self, a: f64, lambda: f64, theta: f64, y: [f64; 2]) -> [f64; 2] {
        let (eta, d) = (y[0], y[1]);
        let (p, a2) = (self.p, a * a);
        let g = a2 * eta * eta + d * d;
        let mut num = -lambda * g * eta - (p - 2.0) * a2 * eta * d * d;
        if self.c != 0.0 && eta != 0.0 {
            num += self.c * eta.abs().powf(p - 2.0) * eta * g.powf(0.5 * (4.0 - p));
        }
        if self.geometry == AngularGeometry::AxisymmetricCap {
            num -= (self.dim as f64 - 2.0) * g * d / theta.tan();
        }
        let den = a2 * eta * eta + (p - 1.0) * d * d;
        [d, num / den]
    }

    /// Initial point of the integration: `(θ, η, η')`.
    fn start(&self, a: f64, lambda: f64) -> (f64, [f64; 2]) {
        match self.geometry {
            AngularGeometry::PlanarSector => (0.0, [0.0, 1.0]),
            AngularGeometry::AxisymmetricCap => {
                let n = self.dim as f64;
                let e2 = (self.c * a.powf(2.0 - self.p) - lambda) / (n - 1.0);
                let t = n * STEP;
                (t, [1.0 + 0.5 * e2 * t * t, e2 * t])
            }
        }
    }
}

struct Trajectory {
    zero: Option<f64>,
    theta: Vec<f64>,
    eta: Vec<f64>,
    deta: Vec<f64>,
}

fn integrate(spec: &ShootSpec, a: f64, record: bool) -> Result<Trajectory, ExponentError> {
    let lambda = lambda_of(a, spec.p, spec.dim, spec.kind);
    let (mut t, mut y) = spec.start(a, lambda);
    let mut out = Trajectory {
        zero: None,
        theta: vec![],
        eta: vec![],
        deta: vec![],
    };
    if record {
        if t > 0.0 {
            // axis value from the symmetric expansion
            out.theta.push(0.0);
            out.eta.push(1.0);
            out.deta.push(0.0);
        }
        out.theta.push(t);
        out.eta.push(y[0]);
        out.deta.push(y[1]);
    }
    let tmax = spec.theta_max();
    let h = STEP;
    while t + h < tmax {
        let f = |t: f64, y: [f64; 2]| spec.rhs(a, lambda, t, y);
        let k1 = f(t, y);
        let k2 = f(
            t + h / 2.0,
            [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]],
        );
        let k3 = f(
            t + h / 2.0,
            [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]],
        );
        let k4 = f(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        let yn = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if !(yn[0].is_finite() && yn[1].is_finite()) {
            return Err(ExponentError::Integrator { theta: t });
        }
        if y[0] > 0.0 && yn[0] <= 0.0 {
            let z = t + h * hermite_root(y[0], yn[0], y[1] * h, yn[1] * h);
            out.zero = Some(z);
            if record {
                out.theta.push(z);
                out.eta.push(0.0);
                out.deta.push(yn[1]);
            }
            return Ok(out);
        }
        if yn[0] < 0.0 && y[0] <= 0.0 && t > 0.0 {
            // started negative: cannot happen for the normalisations used
            return Err(ExponentError::Integrator { theta: t });
        }
        t += h;
        y = yn;
        if record {
            out.theta.push(t);
            out.eta.push(y[0]);
            out.deta.push(y[1]);
        }
    }
    Ok(out)
}

/// First zero `θ*(a)` of the angular profile, `+∞` if there is none before `2π` (planar)
/// or `π` (cap).
pub fn angular_shoot(a: f64, spec: &ShootSpec) -> Result<f64, ExponentError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(ExponentError::Input(format!(
            "exponent a = {a} must be positive"
        )));
    }
    Ok(integrate(spec, a, false)?.zero.unwrap_or(f64::INFINITY))
}

/// Separable exponent with its angular profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularProfile {
    pub a: f64,
    pub kind: Kind,
    pub lambda: f64,
    pub c: f64,
    pub p: f64,
    pub dim: u32,
    pub geometry: AngularGeometry,
    pub theta0: f64,
    pub theta: Vec<f64>,
    pub eta: Vec<f64>,
    pub deta: Vec<f64>,
    /// `θ*(a) − θ₀` at the returned exponent, before the samples were rescaled.
    pub mismatch: f64,
}

impl AngularProfile {
    /// Cubic Hermite interpolation of `η`; `None` outside `[0, θ₀]`.
    pub fn eta_at(&self, theta: f64) -> Option<f64> {
        let tol = 1e-12;
        if !(theta >= -tol && theta <= self.theta0 + tol) {
            return None;
        }
        let theta = theta.clamp(0.0, self.theta0);
        let k = match self.theta.partition_point(|&t| t <= theta) {
            0 => 0,
            k => (k - 1).min(self.theta.len() - 2),
        };
        let h = self.theta[k + 1] - self.theta[k];
        let t = (theta - self.theta[k]) / h;
        let (y0, y1, d0, d1) = (
            self.eta[k],
            self.eta[k + 1],
            self.deta[k] * h,
            self.deta[k + 1] * h,
        );
        let t2 = t * t;
        let t3 = t2 * t;
        Some(
            (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                + (t3 - 2.0 * t2 + t) * d0
                + (-2.0 * t3 + 3.0 * t2) * y1
                + (t3 - t2) * d1,
        )
    }

    pub fn max_eta(&self) -> f64 {
        self.eta.iter().copied().fold(0.0, f64::max)
    }

    /// Separable function `r^{±a}η(θ)` at a point given in polar form.
    pub fn eval(&self, r: f64, theta: f64) -> Option<f64> {
        let radial = match self.kind {
            Kind::Regular => r.powf(self.a),
            Kind::Singular => r.powf(-self.a),
        };
        self.eta_at(theta).map(|e| radial * e.max(0.0))
    }

    /// `theta,eta` table.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["theta", "eta"])?;
        for (t, e) in self.theta.iter().zip(&self.eta) {
            wr.write_record(&[format!("{t:.17e}"), format!("{e:.17e}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn table_row(&self) -> ExponentRow {
        ExponentRow {
            p: self.p,
            n: self.dim,
            theta0: self.theta0,
            kind: self.kind,
            c: self.c,
            a: self.a,
            lambda: self.lambda,
        }
    }
}

/// Exponent with `θ*(a) = θ₀`, found by a log-spaced scan of `[A_MIN, A_MAX]` followed by
/// bisection.
pub fn exponent_for_opening(
    theta0: f64,
    spec: &ShootSpec,
    tol: f64,
) -> Result<AngularProfile, ExponentError> {
    if !(theta0 > 0.0 && theta0 < spec.theta_max()) {
        return Err(ExponentError::Input(format!(
            "opening {theta0} out of range"
        )));
    }
    if !(tol > 0.0) {
        return Err(ExponentError::Input(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let f = |a: f64| angular_shoot(a, spec).map(|z| z - theta0);
    let ratio = (A_MAX / A_MIN).ln();
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|k| A_MIN * (ratio * k as f64 / (SCAN_POINTS - 1) as f64).exp())
        .collect();
    let mut vals = Vec::with_capacity(grid.len());
    for &a in &grid {
        vals.push(f(a)?);
    }
    let mut brackets = Vec::new();
    for k in 0..grid.len() - 1 {
        let (f0, f1) = (vals[k], vals[k + 1]);
        if f0 == 0.0 || (f0 > 0.0) != (f1 > 0.0) {
            brackets.push((grid[k], grid[k + 1], f0));
        }
    }
    if vals.last() == Some(&0.0) {
        brackets.push((grid[grid.len() - 1], grid[grid.len() - 1], 0.0));
    }
    brackets.dedup_by(|b, a| a.1 == b.0 && a.2 == 0.0);
    let (mut lo, mut hi, flo) = match brackets.as_slice() {
        [] => {
            return Err(ExponentError::Range {
                lo: A_MIN,
                hi: A_MAX,
                theta0,
            })
        }
        [b] => *b,
        many => {
            return Err(ExponentError::Ambiguous {
                crossings: many.iter().map(|b| 0.5 * (b.0 + b.1)).collect(),
            })
        }
    };
    let lo_positive = flo > 0.0;
    let mut a = 0.5 * (lo + hi);
    for _ in 0..200 {
        a = 0.5 * (lo + hi);
        let fm = f(a)?;
        if fm == 0.0 || (fm.abs() < tol && hi - lo <= A_TOL) || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        if (fm > 0.0) == lo_positive {
            lo = a;
        } else {
            hi = a;
        }
    }
    profile_at(a, theta0, spec)
}

/// Profile for a given exponent, with samples rescaled so that the first zero sits at `θ₀`.
pub fn profile_at(a: f64, theta0: f64, spec: &ShootSpec) -> Result<AngularProfile, ExponentError> {
    let tr = integrate(spec, a, true)?;
    let zero = tr.zero.ok_or(ExponentError::Range {
        lo: a,
        hi: a,
        theta0,
    })?;
    let scale = theta0 / zero;
    let mut theta: Vec<f64> = tr.theta.iter().map(|t| t * scale).collect();
    *theta.last_mut().unwrap() = theta0;
    let deta = tr.deta.iter().map(|d| d / scale).collect();
    Ok(AngularProfile {
        a,
        kind: spec.kind,
        lambda: lambda_of(a, spec.p, spec.dim, spec.kind),
        c: spec.c,
        p: spec.p,
        dim: spec.dim,
        geometry: spec.geometry,
        theta0,
        theta,
        eta: tr.eta,
        deta,
        mismatch: zero - theta0,
    })
}

/// Nodal values of the separable function on `grid`.
pub fn separable_field(
    profile: &AngularProfile,
    grid: &Arc<PolarGrid>,
) -> Result<ScalarField, ExponentError> {
    let ok = match (profile.geometry, grid.geometry()) {
        (AngularGeometry::PlanarSector, GridGeometry::Planar) => true,
        (AngularGeometry::AxisymmetricCap, GridGeometry::Axisymmetric { dim }) => {
            dim == profile.dim
        }
        _ => false,
    };
    if !ok {
        return Err(ExponentError::Input(
            "profile and grid geometries differ".into(),
        ));
    }
    if (grid.theta0() - profile.theta0).abs() > 1e-12 * profile.theta0.max(1.0) {
        return Err(ExponentError::Input(format!(
            "grid extent {} does not match profile opening {}",
            grid.theta0(),
            profile.theta0
        )));
    }
    let mut f = ScalarField::from_fn(grid.clone(), |r, t| profile.eval(r, t).unwrap_or(0.0));
    let g = grid.clone();
    for (id, v) in f.values_mut().iter_mut().enumerate() {
        if g.tag(id) == crate::geometry::NodeTag::DirichletZero && g.theta(id) >= g.theta0() - 1e-15
        {
            *v = 0.0;
        }
    }
    Ok(f)
}

/// One row of an exponent table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentRow {
    pub p: f64,
    #[serde(rename = "N")]
    pub n: u32,
    pub theta0: f64,
    pub kind: Kind,
    pub c: f64,
    pub a: f64,
    pub lambda: f64,
}

/// `p,N,theta0,kind,c,a,lambda` table.
pub fn write_table<W: Write>(rows: &[ExponentRow], w: W) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["p", "N", "theta0", "kind", "c", "a", "lambda"])?;
    for r in rows {
        wr.write_record(&[
            format!("{}", r.p),
            r.n.to_string(),
            format!("{:.17e}", r.theta0),
            r.kind.as_str().to_string(),
            format!("{}", r.c),
            format!("{:.17e}", r.a),
            format!("{:.17e}", r.lambda),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
