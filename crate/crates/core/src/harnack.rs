//! Measurement of Harnack-type constants on computed fields.
//!
//! Every estimate is a ratio of field values, so all measured constants are invariant
//! under scaling the field. Values below [`FLOOR`] are never used as denominators; the
//! number of discarded samples is reported with each measurement.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, GeometryError, HarnackError};
use crate::geometry::{GridGeometry, NodeTag, Point, PolarGrid};
use crate::solver::ScalarField;

/// Smallest value admitted as a ratio denominator.
pub const FLOOR: f64 = 1e-14;
/// Per-halving growth of `m(r)` above which a field is classified singular.
pub const SINGULAR_GROWTH: f64 = 1.25;
/// Per-halving growth of `m(r)` below which a field is classified bounded.
pub const BOUNDED_GROWTH: f64 = 1.1;
/// Default `b` limiting the normal offsets in [`two_sided_slope`].
pub const TWO_SIDED_B: f64 = 1.0 / 3.0;

/// A ratio-type measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub value: f64,
    pub samples: usize,
    pub excluded: usize,
}

fn spread(values: impl IntoIterator<Item = f64>) -> Result<Measurement, HarnackError> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let (mut samples, mut excluded) = (0, 0);
    for v in values {
        if v > FLOOR && v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
            samples += 1;
        } else {
            excluded += 1;
        }
    }
    if samples == 0 {
        return Err(HarnackError::Sampling(format!(
            "no usable samples ({excluded} excluded)"
        )));
    }
    Ok(Measurement {
        value: hi / lo,
        samples,
        excluded,
    })
}

fn interior_nodes<'a>(
    grid: &'a PolarGrid,
    keep: impl Fn(usize) -> bool + 'a,
) -> impl Iterator<Item = usize> + 'a {
    (0..grid.len()).filter(move |&n| grid.tag(n) == NodeTag::Interior && keep(n))
}

/// Inward unit normal at a point on the lateral rays or the outer arc of the grid domain.
pub fn inward_normal(grid: &PolarGrid, p: Point) -> Result<Point, HarnackError> {
    let (r, theta) = grid.polar(p);
    let scale = grid.outer_radius();
    let tol = 1e-9 * scale;
    let on_arc = (r - scale).abs() <= tol;
    let t0 = grid.theta0();
    let (on_zero, on_end) = match grid.geometry() {
        GridGeometry::Planar => (
            p.y.abs() <= tol && p.x > 0.0,
            (Point::from_polar(1.0, t0).perp().dot(p)).abs() <= tol
                && Point::from_polar(1.0, t0).dot(p) > 0.0,
        ),
        GridGeometry::Axisymmetric { .. } => (
            false,
            (p.x * t0.cos() - p.y * t0.sin()).abs() <= tol && r > 0.0 && (theta - t0).abs() < 0.5,
        ),
    };
    let hits = on_arc as usize + on_zero as usize + on_end as usize;
    if hits != 1 {
        return Err(HarnackError::Sampling(format!(
            "({}, {}) is not a smooth boundary point of the grid domain",
            p.x, p.y
        )));
    }
    Ok(if on_arc {
        -p.normalized()
    } else if on_zero {
        Point::new(0.0, 1.0)
    } else {
        match grid.geometry() {
            GridGeometry::Planar => -Point::from_polar(1.0, t0).perp(),
            GridGeometry::Axisymmetric { .. } => Point::new(-t0.cos(), t0.sin()),
        }
    })
}

/// `N_r(0)`: the point at distance `r` on the axis of the cone.
pub fn axis_point(grid: &PolarGrid, r: f64) -> Point {
    match grid.geometry() {
        GridGeometry::Planar => Point::from_polar(r, grid.theta0() / 2.0),
        GridGeometry::Axisymmetric { .. } => Point::new(0.0, r),
    }
}

fn sample_at(field: &ScalarField, x: Point) -> Result<f64, HarnackError> {
    field
        .sample(x)
        .ok_or_else(|| HarnackError::Sampling(format!("({}, {}) is outside the grid", x.x, x.y)))
}

/// `sup/inf` of the field over `B_r(P)`, requiring `B_{2r}(P) ⊂ Ω` and `|P| ≥ 4r`.
pub fn interior_harnack(field: &ScalarField, p: Point, r: f64) -> Result<Measurement, Error> {
    let grid = field.grid();
    let (rp, tp) = grid.polar(p);
    if !(r > 0.0) || grid.rho_polar(rp, tp) < 2.0 * r || rp - r < grid.epsilon() {
        return Err(GeometryError::BallOutside {
            x: p.x,
            y: p.y,
            radius: 2.0 * r,
        }
        .into());
    }
    if rp < 4.0 * r {
        return Err(HarnackError::Sampling(format!("|P| = {rp} is below 4r = {}", 4.0 * r)).into());
    }
    let mut values = vec![sample_at(field, p)?];
    for k in 1..=8 {
        let t = r * k as f64 / 8.0;
        for a in 0..32 {
            let x = p + Point::from_polar(t, std::f64::consts::TAU * a as f64 / 32.0);
            values.push(sample_at(field, x)?);
        }
    }
    Ok(spread(values)?)
}

/// Least `c` with `u(x) ≤ c^h u(y)` over points of `B_{3r/2}(Q) ∩ Ω` with `ρ ≥ r/2^h`.
/// The points form a Cartesian lattice of spacing `max(r/2^{h+1}, 3r/400)` centred at
/// `Q`, so the sample set does not depend on the grid.
pub fn chained_harnack(
    field: &ScalarField,
    q: Point,
    r: f64,
    h: u32,
) -> Result<Measurement, HarnackError> {
    if h == 0 || !(r > 0.0) {
        return Err(HarnackError::Sampling("need h >= 1 and r > 0".into()));
    }
    let grid = field.grid();
    let floor = r / 2f64.powi(h as i32);
    let step = (floor / 2.0).max(1.5 * r / 200.0);
    let n = (1.5 * r / step).ceil() as i64;
    let mut values = Vec::new();
    for a in -n..=n {
        for b in -n..=n {
            let x = q + Point::new(a as f64 * step, b as f64 * step);
            if x.dist(q) >= 1.5 * r {
                continue;
            }
            let (rx, tx) = grid.polar(x);
            if tx > grid.theta0() || grid.rho_polar(rx, tx) < floor {
                continue;
            }
            if let Some(v) = field.sample(x) {
                values.push(v);
            }
        }
    }
    if values.is_empty() {
        return Err(HarnackError::Sampling(
            "no points satisfy the clearance condition".into(),
        ));
    }
    let mut m = spread(values)?;
    m.value = m.value.powf(1.0 / h as f64);
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub delta: f64,
    pub c3: f64,
    pub samples: usize,
}

/// Fit `u(P + tν) ~ t^δ` along the inward normal for `t ∈ [s/64, s/2]`; `c₃` is the
/// least constant with `u(x) ≤ c₃ (|x−P|/s)^δ max_{B_s(P)} u` on the samples.
pub fn boundary_decay(field: &ScalarField, p: Point, s: f64) -> Result<DecayFit, HarnackError> {
    let grid = field.grid();
    if p.norm() <= 1e-12 * grid.outer_radius() {
        return Err(HarnackError::Sampling(
            "P must differ from the singular point".into(),
        ));
    }
    let n = inward_normal(grid, p)?;
    let mut pts = Vec::new();
    for k in 2..=12 {
        let t = s * 2f64.powf(-(k as f64) / 2.0);
        if let Some(u) = field.sample(p + n * t) {
            if u > FLOOR {
                pts.push((t, u));
            }
        }
    }
    if pts.len() < 4 {
        return Err(HarnackError::Sampling(format!(
            "{} usable samples along the normal",
            pts.len()
        )));
    }
    let xy: Vec<(f64, f64)> = pts.iter().map(|&(t, u)| (t.ln(), u.ln())).collect();
    let (delta, _) = fit_line(&xy);
    let m = (0..grid.len())
        .filter(|&k| grid.point(k).dist(p) < s)
        .map(|k| field.value(k))
        .fold(0.0, f64::max);
    if !(m > FLOOR) {
        return Err(HarnackError::Degenerate { value: m });
    }
    let c3 = pts
        .iter()
        .map(|&(t, u)| u / ((t / s).powf(delta) * m))
        .fold(0.0, f64::max);
    Ok(DecayFit {
        delta,
        c3,
        samples: pts.len(),
    })
}

/// Least-squares slope and intercept.
pub fn fit_line(xy: &[(f64, f64)]) -> (f64, f64) {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `max_{B_r(Q)∩Ω} u / u(A_{r/2}(Q))`.
pub fn carleson_constant(
    field: &ScalarField,
    q: Point,
    r: f64,
) -> Result<Measurement, HarnackError> {
    let grid = field.grid();
    let a = q + inward_normal(grid, q)? * (r / 2.0);
    let ua = sample_at(field, a)?;
    if !(ua > FLOOR) {
        return Err(HarnackError::Degenerate { value: ua });
    }
    let nodes: Vec<usize> = (0..grid.len())
        .filter(|&n| grid.point(n).dist(q) < r)
        .collect();
    if nodes.is_empty() {
        return Err(HarnackError::Sampling("no nodes in B_r(Q)".into()));
    }
    let m = nodes.iter().map(|&n| field.value(n)).fold(0.0, f64::max);
    Ok(Measurement {
        value: m / ua,
        samples: nodes.len(),
        excluded: 0,
    })
}

/// Least `c₆` with `t/(c₆r) ≤ u(N_t(P))/u(N_{r/2}(Q)) ≤ c₆t/r` over boundary points
/// `P = Q + kr/4·τ`, `|k| ≤ 3`, and offsets `t = rb/2·2^{−j}`, `j ≤ 5`.
pub fn two_sided_slope(
    field: &ScalarField,
    q: Point,
    r: f64,
    b: f64,
) -> Result<Measurement, HarnackError> {
    let grid = field.grid();
    let n = inward_normal(grid, q)?;
    let tau = n.perp();
    let uq = sample_at(field, q + n * (r / 2.0))?;
    if !(uq > FLOOR) {
        return Err(HarnackError::Degenerate { value: uq });
    }
    let (mut c6, mut samples, mut excluded) = (0.0f64, 0, 0);
    for k in -3i32..=3 {
        let p = q + tau * (k as f64 * r / 4.0);
        match inward_normal(grid, p) {
            Ok(np) if np.dist(n) < 1e-9 => {}
            _ => continue,
        }
        for j in 0..=5 {
            let t = r * b / 2.0 * 2f64.powi(-j);
            match field.sample(p + n * t) {
                Some(u) if u > FLOOR => {
                    let ratio = u / uq;
                    c6 = c6.max(t / (r * ratio)).max(r * ratio / t);
                    samples += 1;
                }
                _ => excluded += 1,
            }
        }
    }
    if samples == 0 {
        return Err(HarnackError::Sampling(
            "no admissible (P, t) samples".into(),
        ));
    }
    Ok(Measurement {
        value: c6,
        samples,
        excluded,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriFit {
    pub alpha: f64,
    /// Log-log slope of `max u/(ρ u(A))` over the annuli.
    pub upper_slope: f64,
    /// Log-log slope of `min u/(ρ u(A))`.
    pub lower_slope: f64,
    pub c7: f64,
    pub radii: Vec<f64>,
}

/// Envelopes of `u(x)/(ρ(x)u(A))` on the dyadic annuli `|A|2^{−k−1} ≤ |x| < |A|2^{−k}`.
/// The fitted `α` is the least value consistent with both envelope slopes.
pub fn apriori_alpha(field: &ScalarField, a: Point) -> Result<AprioriFit, HarnackError> {
    let grid = field.grid();
    let ua = sample_at(field, a)?;
    if !(ua > FLOOR) {
        return Err(HarnackError::Degenerate { value: ua });
    }
    let (mut up, mut lo, mut radii) = (Vec::new(), Vec::new(), Vec::new());
    let mut rk = a.norm() / 2.0;
    while rk / 2.0 >= 2.0 * grid.epsilon() {
        let q: Vec<f64> = interior_nodes(grid, |n| {
            let r = grid.r(n);
            r >= rk / 2.0 && r < rk && grid.rho(n) > 0.0
        })
        .filter(|&n| field.value(n) > FLOOR)
        .map(|n| field.value(n) / (grid.rho(n) * ua))
        .collect();
        if !q.is_empty() {
            let mid = rk / std::f64::consts::SQRT_2;
            radii.push(mid);
            up.push((mid.ln(), q.iter().copied().fold(0.0, f64::max).ln()));
            lo.push((
                mid.ln(),
                q.iter().copied().fold(f64::INFINITY, f64::min).ln(),
            ));
        }
        rk /= 2.0;
    }
    if radii.len() < 3 {
        return Err(HarnackError::Sampling(format!(
            "{} annuli available, need 3",
            radii.len()
        )));
    }
    let (upper_slope, _) = fit_line(&up);
    let (lower_slope, _) = fit_line(&lo);
    let alpha = (-upper_slope - 1.0).max(lower_slope + 1.0);
    let c7 = up
        .iter()
        .zip(&lo)
        .map(|(&(x, yu), &(_, yl))| {
            let r = x.exp();
            (yu.exp() / r.powf(-alpha - 1.0)).max(r.powf(alpha - 1.0) / yl.exp())
        })
        .fold(0.0, f64::max);
    Ok(AprioriFit {
        alpha,
        upper_slope,
        lower_slope,
        c7,
        radii,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Uniformity {
    /// `sup u(x)ρ(y)/(u(y)ρ(x))` over `|x|, |y| ∈ [r/2, 2r]`.
    pub c9: Measurement,
    /// `max_{B_{2r}∖B_{r/2}} u / u(N_r(0))`.
    pub c9_prime: f64,
}

pub fn ratio_uniformity(field: &ScalarField, r: f64) -> Result<Uniformity, HarnackError> {
    let grid = field.grid();
    let nodes: Vec<usize> = interior_nodes(grid, |n| {
        let rr = grid.r(n);
        rr >= r / 2.0 && rr <= 2.0 * r && grid.rho(n) > 0.0
    })
    .collect();
    if nodes.is_empty() {
        return Err(HarnackError::Sampling(format!(
            "no nodes with |x| in [{}, {}]",
            r / 2.0,
            2.0 * r
        )));
    }
    let c9 = spread(nodes.iter().map(|&n| field.value(n) / grid.rho(n)))?;
    let un = sample_at(field, axis_point(grid, r))?;
    if !(un > FLOOR) {
        return Err(HarnackError::Degenerate { value: un });
    }
    let m = nodes.iter().map(|&n| field.value(n)).fold(0.0, f64::max);
    Ok(Uniformity {
        c9,
        c9_prime: m / un,
    })
}

fn quotient_spread(
    u1: &ScalarField,
    u2: &ScalarField,
    keep: impl Fn(usize) -> bool,
) -> Result<Measurement, HarnackError> {
    if !u1.compatible(u2) {
        return Err(HarnackError::Incompatible);
    }
    let grid = u1.grid();
    let mut excluded = 0;
    let q: Vec<f64> = interior_nodes(grid, keep)
        .filter_map(|n| {
            let (a, b) = (u1.value(n), u2.value(n));
            if a > FLOOR && b > FLOOR {
                Some(a / b)
            } else {
                excluded += 1;
                None
            }
        })
        .collect();
    let mut m = spread(q)?;
    m.excluded += excluded;
    Ok(m)
}

/// `c₁₀`: the largest double ratio `(u₁(x)/u₂(x))/(u₁(y)/u₂(y))` over nodes in `B_r(Q)`.
pub fn boundary_harnack(
    u1: &ScalarField,
    u2: &ScalarField,
    q: Point,
    r: f64,
) -> Result<Measurement, HarnackError> {
    let grid = u1.grid().clone();
    quotient_spread(u1, u2, |n| grid.point(n).dist(q) < r)
}

/// `c₁₁`: `sup/inf` of `u₁/u₂` over `Ω ∩ (B_r ∖ B_{r/2})`.
pub fn boundary_harnack_annulus(
    u1: &ScalarField,
    u2: &ScalarField,
    r: f64,
) -> Result<Measurement, HarnackError> {
    let grid = u1.grid().clone();
    quotient_spread(u1, u2, |n| {
        let rr = grid.r(n);
        rr >= r / 2.0 && rr <= r
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Singular,
    Bounded,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub verdict: Verdict,
    /// Ladder radii, decreasing.
    pub radii: Vec<f64>,
    /// `m(r) = min_{|x|=r} |x|u(x)/ρ(x)`.
    pub m: Vec<f64>,
    /// `m(r/2)/m(r)` along the ladder.
    pub growth: Vec<f64>,
}

/// Classify a field by the growth of `m(r)` on the rings nearest to `r = R/4·2^{−k}`,
/// `r ≥ 4ε`. Singular if each of the last three halvings multiplies `m` by at least
/// [`SINGULAR_GROWTH`]; bounded if none of them exceeds [`BOUNDED_GROWTH`].
pub fn singularity_test(field: &ScalarField) -> SingularityReport {
    let grid = field.grid();
    let radii = grid.radii();
    let (mut rs, mut m) = (Vec::new(), Vec::new());
    let mut r = grid.outer_radius() / 4.0;
    while r >= 4.0 * grid.epsilon() {
        let i = (0..radii.len())
            .min_by(|&a, &b| {
                (radii[a] / r)
                    .ln()
                    .abs()
                    .total_cmp(&(radii[b] / r).ln().abs())
            })
            .unwrap_or(0);
        let v = (0..grid.n_theta())
            .map(|j| grid.id(i, j))
            .filter(|&n| grid.tag(n) == NodeTag::Interior && grid.rho(n) > 0.0)
            .map(|n| grid.r(n) * field.value(n) / grid.rho(n))
            .fold(f64::INFINITY, f64::min);
        if v.is_finite() {
            rs.push(radii[i]);
            m.push(v);
        }
        r /= 2.0;
    }
    let growth: Vec<f64> = m.windows(2).map(|w| w[1] / w[0]).collect();
    let verdict = if growth.len() < 3 {
        Verdict::Inconclusive
    } else {
        let last = &growth[growth.len() - 3..];
        if last.iter().all(|&g| g >= SINGULAR_GROWTH) {
            Verdict::Singular
        } else if last.iter().all(|&g| g <= BOUNDED_GROWTH) {
            Verdict::Bounded
        } else {
            Verdict::Inconclusive
        }
    };
    SingularityReport {
        verdict,
        radii: rs,
        m,
        growth,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quotient {
    pub k: f64,
    pub deviation: f64,
    pub samples: usize,
    pub excluded: usize,
}

/// `k` = median of `v/u` over interior nodes with `lo ≤ |x| ≤ hi`; deviation
/// `max |v/(ku) − 1|` over the same nodes.
pub fn quotient_constancy(
    u: &ScalarField,
    v: &ScalarField,
    lo: f64,
    hi: f64,
) -> Result<Quotient, HarnackError> {
    if !u.compatible(v) {
        return Err(HarnackError::Incompatible);
    }
    let grid = u.grid();
    let mut excluded = 0;
    let mut q: Vec<f64> = interior_nodes(grid, |n| grid.r(n) >= lo && grid.r(n) <= hi)
        .filter_map(|n| {
            let (a, b) = (u.value(n), v.value(n));
            if a > FLOOR && b > FLOOR {
                Some(b / a)
            } else {
                excluded += 1;
                None
            }
        })
        .collect();
    if q.is_empty() {
        return Err(HarnackError::Sampling(
            "no positive nodes in the quotient region".into(),
        ));
    }
    q.sort_by(f64::total_cmp);
    let k = if q.len() % 2 == 1 {
        q[q.len() / 2]
    } else {
        0.5 * (q[q.len() / 2 - 1] + q[q.len() / 2])
    };
    let deviation = q.iter().map(|&x| (x / k - 1.0).abs()).fold(0.0, f64::max);
    Ok(Quotient {
        k,
        deviation,
        samples: q.len(),
        excluded,
    })
}

/// One measured constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub estimate: String,
    pub radii: Vec<f64>,
    pub constant: f64,
    pub grid: String,
    pub level: usize,
    pub excluded: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub records: Vec<Record>,
}

/// Short identifier of a grid for reports.
pub fn grid_label(grid: &PolarGrid) -> String {
    format!("{}x{}@{:e}", grid.n_r(), grid.n_theta(), grid.epsilon())
}

impl HarnackReport {
    pub fn push(
        &mut self,
        estimate: &str,
        radii: Vec<f64>,
        constant: f64,
        grid: &PolarGrid,
        level: usize,
        excluded: usize,
    ) {
        self.records.push(Record {
            estimate: estimate.to_string(),
            radii,
            constant,
            grid: grid_label(grid),
            level,
            excluded,
        });
    }

    /// `estimate_id,r,constant` with the first recorded radius of each record.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["estimate_id", "r", "constant"])?;
        for rec in &self.records {
            let r = rec.radii.first().copied().unwrap_or(f64::NAN);
            wr.write_record(&[
                rec.estimate.clone(),
                format!("{r:.17e}"),
                format!("{:.17e}", rec.constant),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}
