use serde::{Deserialize, Serialize};

use super::field::ScalarField;
use super::operator::Discrete;
use crate::error::SolverError;
use crate::geometry::NodeTag;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `−Δ_p v + C̃₀ v^{p−1} ≤ 0`.
    Subsolution,
    /// `−Δ_p v − C̃₀ v^{p−1} ≥ v^{p−1}`.
    Supersolution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StencilFailure {
    pub node_id: usize,
    /// Signed violation divided by the local operator scale.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideReport {
    pub side: Side,
    pub checked: usize,
    pub failures: Vec<StencilFailure>,
    /// Largest normalised violation over checked nodes (negative when all pass with margin).
    pub worst: f64,
}

impl SideReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Pointwise evaluation of the barrier inequalities on interior nodes with the
/// finite-volume `−Δ_p`. A node fails when the inequality is violated by more than
/// `tol` times the local scale `|Dv|^{p−1}/r + |v|^{p−1}/r^p + C̃₀|v|^{p−1}`.
pub fn side_condition_check(
    field: &ScalarField,
    p: f64,
    c0_tilde: f64,
    side: Side,
    tol: f64,
) -> SideReport {
    let grid = field.grid();
    let disc = Discrete::new(grid, p, 0.0);
    let u = field.values();
    let flux = disc.flux_gradient(u);
    let mut failures = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for id in 0..grid.len() {
        if grid.tag(id) != NodeTag::Interior {
            continue;
        }
        checked += 1;
        let lap = flux[id] / disc.volume(id);
        let v = u[id].abs().powf(p - 1.0);
        // violation > 0 means the inequality fails
        let violation = match side {
            Side::Subsolution => lap + c0_tilde * v,
            Side::Supersolution => v + c0_tilde * v - lap,
        };
        let scale = disc.operator_scale(u, id) + c0_tilde * v;
        let rel = if scale > 0.0 {
            violation / scale
        } else {
            violation.signum() * f64::INFINITY
        };
        let rel = if violation == 0.0 { 0.0 } else { rel };
        worst = worst.max(rel);
        if rel > tol {
            failures.push(StencilFailure {
                node_id: id,
                residual: rel,
            });
        }
    }
    SideReport {
        side,
        checked,
        failures,
        worst,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Largest `u2 − u1` over interior nodes (nonpositive when ordered).
    pub max_violation: f64,
    pub worst_node: Option<usize>,
    /// Number of nodes where `u2 − u1` exceeds the slack.
    pub violations: usize,
    pub ordered: bool,
}

/// Slack `abs·M + c·h²·max(u1, u2)` with `h² = Δs² + Δθ²` local and `M` the largest
/// boundary value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub abs: f64,
    pub c: f64,
}

impl Default for Slack {
    fn default() -> Self {
        Slack { abs: 1e-8, c: 1.0 }
    }
}

impl Slack {
    /// Allowance at node `id` for fields with boundary maximum `m`.
    pub fn at(&self, grid: &crate::geometry::PolarGrid, id: usize, m: f64, scale: f64) -> f64 {
        self.abs * m + self.c * local_h2(grid, id) * scale
    }
}

/// `Δs² + Δθ²` at a node, with `Δs` the larger adjacent log-radial step.
pub fn local_h2(grid: &crate::geometry::PolarGrid, id: usize) -> f64 {
    let (i, _) = grid.ij(id);
    let r = grid.radii();
    let lo = if i > 0 { (r[i] / r[i - 1]).ln() } else { 0.0 };
    let hi = if i + 1 < r.len() {
        (r[i + 1] / r[i]).ln()
    } else {
        0.0
    };
    let ds = lo.max(hi);
    let dth = grid.theta0() / (grid.n_theta() - 1) as f64;
    ds * ds + dth * dth
}

/// Check `u1 ≥ u2 − slack` on interior nodes, given ordered boundary data.
pub fn comparison_check(
    u1: &ScalarField,
    u2: &ScalarField,
    slack: Slack,
) -> Result<ComparisonReport, SolverError> {
    if !u1.compatible(u2) {
        return Err(SolverError::Input("fields live on different grids".into()));
    }
    let grid = u1.grid();
    let (a, b) = (u1.values(), u2.values());
    let mut m = 0.0f64;
    for id in 0..grid.len() {
        match grid.tag(id) {
            NodeTag::TruncationArc => {
                if a[id] < b[id] {
                    return Err(SolverError::Ordering {
                        node: id,
                        upper: a[id],
                        lower: b[id],
                    });
                }
                m = m.max(a[id].abs()).max(b[id].abs());
            }
            NodeTag::DirichletZero => {
                if a[id] != 0.0 || b[id] != 0.0 {
                    return Err(SolverError::Input(format!(
                        "fields do not vanish on Dirichlet node {id}"
                    )));
                }
            }
            NodeTag::Interior => {}
        }
    }
    let mut worst = f64::NEG_INFINITY;
    let mut worst_node = None;
    let mut violations = 0;
    for id in 0..grid.len() {
        if grid.tag(id) != NodeTag::Interior {
            continue;
        }
        let d = b[id] - a[id];
        if d > worst {
            worst = d;
            worst_node = Some(id);
        }
        if d > slack.at(grid, id, m, a[id].max(b[id])) {
            violations += 1;
        }
    }
    Ok(ComparisonReport {
        max_violation: if worst_node.is_some() { worst } else { 0.0 },
        worst_node,
        violations,
        ordered: violations == 0,
    })
}
