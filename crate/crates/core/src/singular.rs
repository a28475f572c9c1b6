//! Singular solutions on the half-disk by the truncation scheme, their blow-up profile,
//! cone exponents from large truncated sectors and the Kelvin inversion check.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, SingularError};
use crate::exponents::{exponent_for_opening, AngularGeometry, AngularProfile, Kind, ShootSpec};
use crate::geometry::{Grading, GridGeometry, NodeTag, PolarGrid};
use crate::harnack::{fit_line, FLOOR};
use crate::solver::{
    local_h2, solve_dirichlet_with, weak_residual_in, BoundaryData, PotentialSpec, ScalarField,
    SolveOptions,
};

/// Tolerance on the relative change between successive ladder levels.
pub const LIMIT_TOL: f64 = 1e-4;
/// Relative difference of the inner and outer half slopes above which a cone fit is
/// rejected.
pub const CURVATURE_LIMIT: f64 = 0.02;

/// Multiplier applied to the separable profile on the truncation arc:
/// `k(1 + m cos θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcWeight {
    pub scale: f64,
    pub modulation: f64,
}

impl Default for ArcWeight {
    fn default() -> Self {
        ArcWeight {
            scale: 1.0,
            modulation: 0.0,
        }
    }
}

impl ArcWeight {
    pub fn at(&self, theta: f64) -> f64 {
        self.scale * (1.0 + self.modulation * theta.cos())
    }

    /// Largest value over `[0, π]`.
    pub fn max(&self) -> f64 {
        self.scale * (1.0 + self.modulation.abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderConfig {
    pub p: f64,
    pub c: f64,
    /// Half-disk radius `R`.
    pub radius: f64,
    /// `ε₀`; defaults to `R/8`.
    pub eps0: f64,
    /// Number of levels `ε_k = ε₀2^{−k}`, `k < levels`.
    pub levels: usize,
    pub per_octave: usize,
    pub n_theta: usize,
    pub tol: f64,
    pub arc: ArcWeight,
    /// Slack constant `C` of the monotonicity check.
    pub slack_c: f64,
}

impl LadderConfig {
    pub fn new(p: f64, c: f64) -> Self {
        LadderConfig {
            p,
            c,
            radius: 1.0,
            eps0: 1.0 / 8.0,
            levels: 5,
            per_octave: 16,
            n_theta: 65,
            tol: 1e-8,
            arc: ArcWeight::default(),
            slack_c: 1.0,
        }
    }

    pub fn epsilons(&self) -> Vec<f64> {
        (0..self.levels)
            .map(|k| self.eps0 * 2f64.powi(-(k as i32)))
            .collect()
    }

    fn validate(&self) -> Result<(), SingularError> {
        if !(self.p > 1.0) || !(self.c >= 0.0) || !(self.radius > 0.0) || !(self.tol > 0.0) {
            return Err(SingularError::Input(format!(
                "need p > 1, c >= 0, R > 0, tol > 0; got p = {}, c = {}, R = {}, tol = {}",
                self.p, self.c, self.radius, self.tol
            )));
        }
        let oct = (self.radius / self.eps0).log2();
        if !(oct >= 1.0) || (oct - oct.round()).abs() > 1e-9 {
            return Err(SingularError::Input(format!(
                "R/eps0 = {} must be a power of two",
                self.radius / self.eps0
            )));
        }
        if self.levels == 0 || self.per_octave == 0 || self.n_theta < 4 {
            return Err(SingularError::Input(
                "levels, per_octave must be positive and n_theta >= 4".into(),
            ));
        }
        if !(self.arc.scale > 0.0) || !(self.arc.modulation.abs() < 1.0) {
            return Err(SingularError::Input("arc weight must stay positive".into()));
        }
        Ok(())
    }
}

/// Singular separable profile of the half-plane for `(p, c)`.
pub fn half_plane_profile(p: f64, c: f64) -> Result<AngularProfile, Error> {
    let spec = ShootSpec::new(p, 2, Kind::Singular, c, AngularGeometry::PlanarSector)?;
    Ok(exponent_for_opening(PI, &spec, 1e-10)?)
}

/// Dyadic half-disk grid for one ladder level.
pub fn ladder_grid(cfg: &LadderConfig, eps: f64) -> Result<Arc<PolarGrid>, Error> {
    Ok(Arc::new(PolarGrid::dyadic(
        GridGeometry::Planar,
        PI,
        cfg.radius,
        eps,
        cfg.per_octave,
        cfg.n_theta,
    )?))
}

/// Solve on `Ω ∖ B_ε(0)` with the weighted trace of `V = r^{−β}η(θ)` on the arc.
pub fn truncated_solve(
    grid: &Arc<PolarGrid>,
    p: f64,
    c: f64,
    profile: &AngularProfile,
    arc: ArcWeight,
    tol: f64,
    initial: Option<Vec<f64>>,
) -> Result<ScalarField, Error> {
    let pot = PotentialSpec::inverse_power(c)?;
    let data = BoundaryData::from_fn(grid, |r, t| arc.at(t) * profile.eval(r, t).unwrap_or(0.0));
    let opts = SolveOptions {
        tol,
        max_outer: 200,
        initial,
    };
    Ok(solve_dirichlet_with(grid, p, pot, &data, &opts)?)
}

/// A solved ladder.
#[derive(Clone, Debug)]
pub struct TruncationLadder {
    pub config: LadderConfig,
    pub profile: AngularProfile,
    pub fields: Vec<ScalarField>,
    /// `K̄`: largest weighted `V` on `∂Ω ∖ Λ`.
    pub k_bar: f64,
}

/// Map from node ids of a coarser ladder grid to those of a finer one; the finer grid
/// has `shift` extra rings at its inner end.
fn common_node(coarse: &PolarGrid, fine: &PolarGrid, id: usize) -> usize {
    let shift = fine.n_r() - coarse.n_r();
    let (i, j) = coarse.ij(id);
    fine.id(i + shift, j)
}

/// Solve every level in order, warm-starting each from the previous one.
pub fn solve_ladder(cfg: &LadderConfig) -> Result<TruncationLadder, Error> {
    cfg.validate()?;
    let profile = half_plane_profile(cfg.p, cfg.c)?;
    let mut fields: Vec<ScalarField> = Vec::with_capacity(cfg.levels);
    for eps in cfg.epsilons() {
        let grid = ladder_grid(cfg, eps)?;
        let initial = fields.last().map(|prev| {
            let mut init: Vec<f64> = (0..grid.len())
                .map(|n| {
                    cfg.arc.at(grid.theta(n))
                        * profile.eval(grid.r(n), grid.theta(n)).unwrap_or(0.0)
                })
                .collect();
            for n in 0..prev.grid().len() {
                init[common_node(prev.grid(), &grid, n)] = prev.value(n);
            }
            init
        });
        fields.push(truncated_solve(
            &grid, cfg.p, cfg.c, &profile, cfg.arc, cfg.tol, initial,
        )?);
    }
    let k_bar = cfg.arc.max() * cfg.radius.powf(-profile.a) * profile.max_eta();
    Ok(TruncationLadder {
        config: cfg.clone(),
        profile,
        fields,
        k_bar,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub p: f64,
    pub c: f64,
    pub beta: f64,
    pub epsilons: Vec<f64>,
    /// Per consecutive pair, `min (u_{ε_{k+1}} − u_{ε_k} + slack)` over common interior
    /// nodes; nonnegative iff `u_{ε_{k+1}} ≥ u_{ε_k} − slack` everywhere.
    pub monotonicity_min: Vec<f64>,
    /// Per pair, `min (u_{ε_k} − u_{ε_{k+1}} + slack)`; nonnegative iff the levels decrease
    /// as `ε` decreases, within the slack.
    pub decrease_min: Vec<f64>,
    /// Per pair, the largest relative decrease `(u_{ε_k} − u_{ε_{k+1}})/u_{ε_k}`.
    pub max_relative_decrease: Vec<f64>,
    /// Per level, `min (V − u_ε + slack)`; nonnegative iff `u_ε ≤ V` within the slack.
    pub sandwich_min: Vec<f64>,
    /// Per level, `max (V − u_ε − slack)/K̄`; at most one iff `V − K̄ ≤ u_ε` within the
    /// slack.
    pub sandwich_max: Vec<f64>,
    pub k_bar: f64,
    /// Relative sup-change between successive levels on the comparison annulus.
    pub convergence_diffs: Vec<f64>,
    pub converged: bool,
    pub iterations: Vec<usize>,
}

impl LadderReport {
    pub fn monotone(&self) -> bool {
        self.monotonicity_min.iter().all(|&m| m >= 0.0)
    }

    pub fn decreasing(&self) -> bool {
        self.decrease_min.iter().all(|&m| m >= 0.0)
    }

    pub fn sandwiched(&self) -> bool {
        self.sandwich_min.iter().all(|&m| m >= 0.0) && self.sandwich_max.iter().all(|&m| m <= 1.0)
    }
}

impl TruncationLadder {
    fn slack(&self, grid: &PolarGrid, id: usize, u: f64) -> f64 {
        let m = self
            .k_bar
            .max(self.fields.iter().map(|f| f.max()).fold(0.0, f64::max));
        1e-8 * m + self.config.slack_c * local_h2(grid, id) * u.abs()
    }

    fn weighted_v(&self, r: f64, t: f64) -> f64 {
        self.config.arc.at(t) * self.profile.eval(r, t).unwrap_or(0.0)
    }

    /// Relative sup-change between levels `k` and `k+1` on `R/4 ≤ |x| ≤ R/2`.
    fn level_diff(&self, k: usize) -> f64 {
        let (a, b) = (&self.fields[k], &self.fields[k + 1]);
        let (ga, gb) = (a.grid(), b.grid());
        let (lo, hi) = (self.config.radius / 4.0, self.config.radius / 2.0);
        let (mut d, mut m) = (0.0f64, 0.0f64);
        for n in 0..ga.len() {
            let r = ga.r(n);
            if r >= lo && r <= hi {
                let vb = b.value(common_node(ga, gb, n));
                d = d.max((vb - a.value(n)).abs());
                m = m.max(vb.abs());
            }
        }
        if m > 0.0 {
            d / m
        } else {
            0.0
        }
    }

    pub fn report(&self) -> LadderReport {
        let mut rep = LadderReport {
            p: self.config.p,
            c: self.config.c,
            beta: self.profile.a,
            epsilons: self.config.epsilons(),
            monotonicity_min: vec![],
            decrease_min: vec![],
            max_relative_decrease: vec![],
            sandwich_min: vec![],
            sandwich_max: vec![],
            k_bar: self.k_bar,
            convergence_diffs: vec![],
            converged: false,
            iterations: self
                .fields
                .iter()
                .map(|f| f.log.as_ref().map_or(0, |l| l.iterations))
                .collect(),
        };
        for k in 0..self.fields.len().saturating_sub(1) {
            let (a, b) = (&self.fields[k], &self.fields[k + 1]);
            let (ga, gb) = (a.grid(), b.grid());
            let (mut inc, mut dec, mut rel) = (f64::INFINITY, f64::INFINITY, 0.0f64);
            for n in 0..ga.len() {
                if ga.tag(n) != NodeTag::Interior {
                    continue;
                }
                let nb = common_node(ga, gb, n);
                let (ua, ub) = (a.value(n), b.value(nb));
                let s = self.slack(gb, nb, ua);
                inc = inc.min(ub - ua + s);
                dec = dec.min(ua - ub + s);
                if ua > 0.0 {
                    rel = rel.max((ua - ub) / ua);
                }
            }
            rep.monotonicity_min.push(inc);
            rep.decrease_min.push(dec);
            rep.max_relative_decrease.push(rel);
            rep.convergence_diffs.push(self.level_diff(k));
        }
        for f in &self.fields {
            let g = f.grid();
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for n in 0..g.len() {
                if g.tag(n) != NodeTag::Interior {
                    continue;
                }
                let gap = self.weighted_v(g.r(n), g.theta(n)) - f.value(n);
                let s = self.slack(g, n, f.value(n));
                lo = lo.min(gap + s);
                hi = hi.max((gap - s) / self.k_bar);
            }
            rep.sandwich_min.push(lo);
            rep.sandwich_max.push(hi);
        }
        rep.converged = rep.convergence_diffs.last().is_some_and(|&d| d < LIMIT_TOL);
        rep
    }
}

#[derive(Clone, Debug)]
pub struct SingularLimit {
    pub field: ScalarField,
    pub diffs: Vec<f64>,
    pub converged: bool,
}

/// Finest level of the ladder with its convergence diagnostics. For an unmodulated arc
/// weight the data are a multiple of `V`, so the comparison principle orders the levels and
/// the call fails if some level exceeds its predecessor by more than the slack. Modulated
/// weights give unordered levels and skip that check.
pub fn singular_limit(ladder: &TruncationLadder) -> Result<SingularLimit, SingularError> {
    if ladder.fields.len() < 3 {
        return Err(SingularError::Input(format!(
            "{} levels, need at least 3",
            ladder.fields.len()
        )));
    }
    let rep = ladder.report();
    let ordered = ladder.config.arc.modulation == 0.0;
    if let Some((level, &v)) = rep
        .decrease_min
        .iter()
        .enumerate()
        .find(|(_, &m)| ordered && m < 0.0)
    {
        return Err(SingularError::NotMonotone {
            level: level + 1,
            violation: v,
        });
    }
    Ok(SingularLimit {
        field: ladder.fields.last().unwrap().clone(),
        diffs: rep.convergence_diffs,
        converged: rep.converged,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowUp {
    /// Ring radii, decreasing.
    pub radii: Vec<f64>,
    /// `sup_θ |r^β u(r, θ) − κη(θ)|`.
    pub deviations: Vec<f64>,
    /// Homothety constant fitted on the smallest ring.
    pub kappa: f64,
    /// `κ max η`.
    pub reference: f64,
}

impl BlowUp {
    pub fn relative(&self) -> Vec<f64> {
        self.deviations.iter().map(|d| d / self.reference).collect()
    }

    /// `r,sup_deviation` table.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["r", "sup_deviation"])?;
        for (r, d) in self.radii.iter().zip(&self.deviations) {
            wr.write_record(&[format!("{r:.17e}"), format!("{d:.17e}")])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Rings nearest to `R/4·2^{−k}` with radius at least `4ε`.
pub fn ladder_rings(grid: &PolarGrid) -> Vec<usize> {
    let radii = grid.radii();
    let mut out = Vec::new();
    let mut r = grid.outer_radius() / 4.0;
    while r >= 4.0 * grid.epsilon() * (1.0 - 1e-12) {
        let i = (0..radii.len())
            .min_by(|&a, &b| {
                (radii[a] / r)
                    .ln()
                    .abs()
                    .total_cmp(&(radii[b] / r).ln().abs())
            })
            .unwrap_or(0);
        out.push(i);
        r /= 2.0;
    }
    out
}

pub fn blowup_rate(field: &ScalarField, profile: &AngularProfile) -> Result<BlowUp, SingularError> {
    if profile.kind != Kind::Singular {
        return Err(SingularError::Input(
            "blow-up needs a singular profile".into(),
        ));
    }
    let grid = field.grid();
    let rings = ladder_rings(grid);
    if rings.is_empty() {
        return Err(SingularError::Input(
            "no ladder rings above 4 epsilon".into(),
        ));
    }
    let eta: Vec<f64> = grid
        .thetas()
        .iter()
        .map(|&t| profile.eta_at(t).unwrap_or(0.0))
        .collect();
    let ring = |i: usize| -> Vec<f64> {
        let rb = grid.radii()[i].powf(profile.a);
        (0..grid.n_theta()).map(|j| rb * field.at(i, j)).collect()
    };
    let last = ring(*rings.last().unwrap());
    let kappa = last.iter().zip(&eta).map(|(f, e)| f * e).sum::<f64>()
        / eta.iter().map(|e| e * e).sum::<f64>();
    let deviations = rings
        .iter()
        .map(|&i| {
            ring(i)
                .iter()
                .zip(&eta)
                .map(|(f, e)| (f - kappa * e).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(BlowUp {
        radii: rings.iter().map(|&i| grid.radii()[i]).collect(),
        deviations,
        kappa,
        reference: kappa * profile.max_eta(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeConfig {
    pub r_out: f64,
    pub n_r: usize,
    pub n_theta: usize,
    /// Fit window `[fit_lo, fit_hi]`.
    pub fit_lo: f64,
    pub fit_hi: f64,
    pub tol: f64,
}

impl Default for ConeConfig {
    fn default() -> Self {
        let r_out = 2f64.powi(14);
        ConeConfig {
            r_out,
            n_r: 256,
            n_theta: 128,
            fit_lo: 2.0,
            fit_hi: r_out / 8.0,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeFit {
    pub beta: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    /// Relative difference between the slopes of the inner and outer halves of the window.
    pub curvature: f64,
    pub rings: usize,
    pub iterations: usize,
}

/// Solve on `{1 ≤ |x| ≤ R_out}` in the sector of the given opening with unit data on the
/// inner arc, zero elsewhere, and fit the decay of `max_θ v` over the window.
pub fn tolksdorff_cone_fit(
    opening: f64,
    p: f64,
    c: f64,
    cfg: &ConeConfig,
) -> Result<ConeFit, Error> {
    if !(opening > 0.0 && opening < 2.0 * PI) {
        return Err(SingularError::Input(format!("opening {opening} not in (0, 2pi)")).into());
    }
    if !(cfg.r_out >= 64.0)
        || !(cfg.fit_lo >= 1.0 && cfg.fit_hi <= cfg.r_out && cfg.fit_lo < cfg.fit_hi)
    {
        return Err(SingularError::Input(
            "need R_out >= 64 and a fit window inside [1, R_out]".into(),
        )
        .into());
    }
    let grid = Arc::new(PolarGrid::graded(
        GridGeometry::Planar,
        opening,
        cfg.r_out,
        cfg.n_r,
        cfg.n_theta,
        1.0,
        Grading::Auto,
    )?);
    let data = BoundaryData::from_fn(&grid, |_, _| 1.0);
    let pot = PotentialSpec::inverse_power(c)?;
    let v = solve_dirichlet_with(&grid, p, pot, &data, &SolveOptions::new(cfg.tol))?;
    let pts: Vec<(f64, f64)> = (0..grid.n_r())
        .filter(|&i| {
            let r = grid.radii()[i];
            r >= cfg.fit_lo * (1.0 - 1e-12) && r <= cfg.fit_hi * (1.0 + 1e-12)
        })
        .map(|i| {
            let m = (0..grid.n_theta()).map(|j| v.at(i, j)).fold(0.0, f64::max);
            (grid.radii()[i].ln(), m)
        })
        .filter(|&(_, m)| m > FLOOR)
        .map(|(x, m)| (x, m.ln()))
        .collect();
    if pts.len() < 6 {
        return Err(SingularError::Input(format!("{} rings in the fit window", pts.len())).into());
    }
    let (slope, icpt) = fit_line(&pts);
    let residual = (pts
        .iter()
        .map(|&(x, y)| (y - slope * x - icpt).powi(2))
        .sum::<f64>()
        / pts.len() as f64)
        .sqrt();
    let half = pts.len() / 2;
    let (s_in, _) = fit_line(&pts[..half]);
    let (s_out, _) = fit_line(&pts[half..]);
    let curvature = ((s_in - s_out) / slope).abs();
    let fit = ConeFit {
        beta: -slope,
        residual,
        curvature,
        rings: pts.len(),
        iterations: v.log.as_ref().map_or(0, |l| l.iterations),
    };
    if !(curvature <= CURVATURE_LIMIT) {
        return Err(SingularError::ExtendDomain { curvature }.into());
    }
    Ok(fit)
}

/// Pull a planar half-disk field back under `x ↦ x/|x|²` and return the normalised
/// Laplace residual of the image on `lo ≤ |x| ≤ hi`.
pub fn moebius_check(field: &ScalarField, lo: f64, hi: f64) -> Result<f64, Error> {
    let grid = field.grid();
    if grid.geometry() != GridGeometry::Planar {
        return Err(SingularError::Input("the inversion check needs a planar field".into()).into());
    }
    let (img_lo, img_hi) = (1.0 / grid.outer_radius(), 1.0 / grid.epsilon());
    if !(lo > img_lo && hi < img_hi && lo < hi) {
        return Err(SingularError::ImageOutsideGrid {
            lo: img_lo,
            hi: img_hi,
        }
        .into());
    }
    let radii: Vec<f64> = grid.radii().iter().rev().map(|r| 1.0 / r).collect();
    let image = Arc::new(PolarGrid::from_radii(
        GridGeometry::Planar,
        grid.theta0(),
        radii,
        grid.n_theta(),
    )?);
    let n_r = grid.n_r();
    let values = (0..image.len())
        .map(|n| {
            let (i, j) = image.ij(n);
            field.at(n_r - 1 - i, j)
        })
        .collect();
    let inverted = ScalarField::new(image, values)?;
    Ok(weak_residual_in(
        &inverted,
        2.0,
        PotentialSpec::Zero,
        lo,
        hi,
    ))
}
