//! Discrete energy on a polar grid in the coordinates `s = ln r`, `θ`.
//!
//! The physical energy `∫ (1/p)|Du|^p + (c/p)|x|^{-p}|u|^p dx` becomes
//! `∫ r^{N−p} sin^{N−2}θ [(1/p)(u_s² + u_θ²)^{p/2} + (c/p)|u|^p] ds dθ`.
//! Each grid cell contributes one term per corner; the corner gradient uses the two cell
//! edges meeting at that corner, so every term couples three nodes.

use super::banded::BandedSpd;
use crate::geometry::{GridGeometry, NodeTag, PolarGrid};

const NONE: usize = usize::MAX;

/// One corner term: weight, nodes `[corner, s-neighbour, θ-neighbour]` and the
/// derivatives of `g_s`, `g_θ` with respect to those nodes.
#[derive(Clone, Copy)]
struct Corner {
    w: f64,
    nodes: [usize; 3],
    ks: f64,
    kt: f64,
}

impl Corner {
    #[inline]
    fn grads(&self, u: &[f64]) -> (f64, f64, f64) {
        let [c, s, t] = self.nodes;
        (self.ks * (u[c] - u[s]), self.kt * (u[c] - u[t]), u[c])
    }

    #[inline]
    fn dgs(&self) -> [f64; 3] {
        [self.ks, -self.ks, 0.0]
    }

    #[inline]
    fn dgt(&self) -> [f64; 3] {
        [self.kt, 0.0, -self.kt]
    }
}

/// How to linearise the energy when assembling a linear system.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Linearisation {
    /// Quadratic energy with unit gradient coefficient and potential `c u²/2`.
    Laplace,
    /// Coefficients frozen at the current iterate.
    Picard,
    /// Exact Hessian.
    Newton,
}

pub(crate) struct Discrete<'g> {
    pub grid: &'g PolarGrid,
    pub p: f64,
    pub c: f64,
    corners: Vec<Corner>,
    /// Physical volume attached to each node.
    vol: Vec<f64>,
    /// Node → unknown index (`NONE` for Dirichlet nodes).
    index: Vec<usize>,
    pub unknowns: Vec<usize>,
    pub bandwidth: usize,
}

impl<'g> Discrete<'g> {
    pub fn new(grid: &'g PolarGrid, p: f64, c: f64) -> Self {
        let (nr, nt) = (grid.n_r(), grid.n_theta());
        let n_dim = grid.dim() as i32;
        let s: Vec<f64> = grid.radii().iter().map(|r| r.ln()).collect();
        let dth = grid.theta0() / (nt - 1) as f64;
        let axisym = matches!(grid.geometry(), GridGeometry::Axisymmetric { .. });
        let mut corners = Vec::with_capacity(4 * (nr - 1) * (nt - 1));
        let mut vol = vec![0.0; grid.len()];
        for i in 0..nr - 1 {
            let ds = s[i + 1] - s[i];
            let sc = 0.5 * (s[i] + s[i + 1]);
            for j in 0..nt - 1 {
                let tc = grid.thetas()[j] + 0.5 * dth;
                let ang = if axisym {
                    tc.sin().powi(n_dim - 2)
                } else {
                    1.0
                };
                let base = ang * ds * dth / 4.0;
                let w = ((n_dim as f64 - p) * sc).exp() * base;
                let wv = (n_dim as f64 * sc).exp() * base;
                for a in 0..2 {
                    for b in 0..2 {
                        let c = grid.id(i + a, j + b);
                        let sn = grid.id(i + 1 - a, j + b);
                        let tn = grid.id(i + a, j + 1 - b);
                        let ks = if a == 1 { 1.0 } else { -1.0 } / ds;
                        let kt = if b == 1 { 1.0 } else { -1.0 } / dth;
                        corners.push(Corner {
                            w,
                            nodes: [c, sn, tn],
                            ks,
                            kt,
                        });
                        vol[c] += wv;
                    }
                }
            }
        }
        let mut index = vec![NONE; grid.len()];
        let mut unknowns = Vec::new();
        for (id, slot) in index.iter_mut().enumerate() {
            if grid.tag(id) == NodeTag::Interior {
                *slot = unknowns.len();
                unknowns.push(id);
            }
        }
        let per_row = unknowns.iter().filter(|&&id| id / nt == 1).count().max(1);
        Discrete {
            grid,
            p,
            c,
            corners,
            vol,
            index,
            unknowns,
            bandwidth: per_row + 1,
        }
    }

    pub fn volume(&self, node: usize) -> f64 {
        self.vol[node]
    }

    pub fn energy(&self, u: &[f64], delta: f64) -> f64 {
        let (p, c, d2) = (self.p, self.c, delta * delta);
        let mut e = 0.0;
        for k in &self.corners {
            let (gs, gt, uc) = k.grads(u);
            let mut t = (gs * gs + gt * gt + d2).powf(0.5 * p) / p;
            if c != 0.0 {
                t += c * (uc * uc + d2).powf(0.5 * p) / p;
            }
            e += k.w * t;
        }
        e
    }

    /// `∂E/∂u_n` at every node (Dirichlet entries included but meaningless).
    pub fn gradient(&self, u: &[f64], delta: f64) -> Vec<f64> {
        self.gradient_with(u, delta, self.c)
    }

    /// Gradient of the energy without the potential term: the discrete `−Δ_p` balance.
    pub fn flux_gradient(&self, u: &[f64]) -> Vec<f64> {
        self.gradient_with(u, 0.0, 0.0)
    }

    fn gradient_with(&self, u: &[f64], delta: f64, c: f64) -> Vec<f64> {
        let (p, d2) = (self.p, delta * delta);
        let mut g = vec![0.0; u.len()];
        for k in &self.corners {
            let (gs, gt, uc) = k.grads(u);
            let q = gs * gs + gt * gt + d2;
            let kap = if q > 0.0 { q.powf(0.5 * p - 1.0) } else { 0.0 };
            let (fs, ft) = (k.w * kap * gs, k.w * kap * gt);
            let [n0, n1, n2] = k.nodes;
            g[n0] += fs * k.ks + ft * k.kt;
            g[n1] -= fs * k.ks;
            g[n2] -= ft * k.kt;
            if c != 0.0 {
                let qu = uc * uc + d2;
                if qu > 0.0 {
                    g[n0] += k.w * c * qu.powf(0.5 * p - 1.0) * uc;
                }
            }
        }
        g
    }

    /// Assemble a linear system for the unknowns.
    ///
    /// `Laplace`/`Picard`: returns `(A, b)` whose solution is the minimiser of the frozen
    /// quadratic energy. `Newton`: returns `(H, −∇E)`, the Newton correction system.
    pub fn assemble(&self, u: &[f64], delta: f64, mode: Linearisation) -> (BandedSpd, Vec<f64>) {
        let n = self.unknowns.len();
        let mut a = BandedSpd::zeros(n, self.bandwidth);
        let mut rhs = vec![0.0; n];
        let (p, c, d2) = (self.p, self.c, delta * delta);
        let mut h = [[0.0f64; 3]; 3];
        let mut loc_g = [0.0f64; 3];
        for k in &self.corners {
            let (gs, gt, uc) = k.grads(u);
            let (ds, dt) = (k.dgs(), k.dgt());
            let q = gs * gs + gt * gt + d2;
            let (kap, kap2, pc, pc2) = match mode {
                Linearisation::Laplace => (1.0, 0.0, c, 0.0),
                Linearisation::Picard => {
                    let kap = if q > 0.0 { q.powf(0.5 * p - 1.0) } else { 0.0 };
                    let qu = uc * uc + d2;
                    let pc = if c != 0.0 && qu > 0.0 {
                        c * qu.powf(0.5 * p - 1.0)
                    } else {
                        0.0
                    };
                    (kap, 0.0, pc, 0.0)
                }
                Linearisation::Newton => {
                    let kap = if q > 0.0 { q.powf(0.5 * p - 1.0) } else { 0.0 };
                    let kap2 = if q > 0.0 {
                        (p - 2.0) * q.powf(0.5 * p - 2.0)
                    } else {
                        0.0
                    };
                    let qu = uc * uc + d2;
                    let (pc, pc2) = if c != 0.0 && qu > 0.0 {
                        (
                            c * qu.powf(0.5 * p - 1.0),
                            c * (p - 2.0) * qu.powf(0.5 * p - 2.0),
                        )
                    } else {
                        (0.0, 0.0)
                    };
                    (kap, kap2, pc, pc2)
                }
            };
            let v = [0, 1, 2].map(|al| gs * ds[al] + gt * dt[al]);
            for al in 0..3 {
                for be in 0..3 {
                    h[al][be] =
                        k.w * (kap * (ds[al] * ds[be] + dt[al] * dt[be]) + kap2 * v[al] * v[be]);
                }
                loc_g[al] = k.w * kap * v[al];
            }
            h[0][0] += k.w * (pc + pc2 * uc * uc);
            loc_g[0] += k.w * pc * uc;
            for al in 0..3 {
                let ia = self.index[k.nodes[al]];
                if ia == NONE {
                    continue;
                }
                if let Linearisation::Newton = mode {
                    rhs[ia] -= loc_g[al];
                }
                for be in 0..3 {
                    let ib = self.index[k.nodes[be]];
                    if ib == NONE {
                        if !matches!(mode, Linearisation::Newton) {
                            rhs[ia] -= h[al][be] * u[k.nodes[be]];
                        }
                    } else if ib <= ia {
                        a.add(ia, ib, h[al][be]);
                    }
                }
            }
        }
        (a, rhs)
    }

    /// Central-difference log-polar gradient magnitude at a node.
    pub fn node_gradient(&self, u: &[f64], node: usize) -> f64 {
        let g = self.grid;
        let (i, j) = g.ij(node);
        let (nr, nt) = (g.n_r(), g.n_theta());
        let s = |k: usize| g.radii()[k].ln();
        let (i0, i1) = (i.saturating_sub(1), (i + 1).min(nr - 1));
        let us = (u[g.id(i1, j)] - u[g.id(i0, j)]) / (s(i1) - s(i0));
        let dth = g.theta0() / (nt - 1) as f64;
        let ut = if j == 0 {
            match g.geometry() {
                GridGeometry::Axisymmetric { .. } => 0.0,
                GridGeometry::Planar => (u[g.id(i, 1)] - u[node]) / dth,
            }
        } else if j == nt - 1 {
            (u[node] - u[g.id(i, j - 1)]) / dth
        } else {
            (u[g.id(i, j + 1)] - u[g.id(i, j - 1)]) / (2.0 * dth)
        };
        us.hypot(ut)
    }

    /// Scale of the operator at a node: `(|∇_{s,θ}u|^{p−1} + |u|^{p−1}) / r^p`.
    pub fn operator_scale(&self, u: &[f64], node: usize) -> f64 {
        let pm1 = self.p - 1.0;
        (self.node_gradient(u, node).powf(pm1) + u[node].abs().powf(pm1))
            / self.grid.r(node).powf(self.p)
    }

    /// Normalised residual `max_n |∂E/∂u_n| / (vol_n · scale_n)` over interior nodes with
    /// `lo ≤ r ≤ hi`.
    pub fn residual_in(&self, u: &[f64], delta: f64, lo: f64, hi: f64) -> f64 {
        let g = self.gradient(u, delta);
        let mut worst = 0.0f64;
        for &n in &self.unknowns {
            let r = self.grid.r(n);
            if r < lo || r > hi {
                continue;
            }
            let num = g[n].abs() / self.vol[n];
            if num == 0.0 {
                continue;
            }
            let den = self.operator_scale(u, n);
            let v = if den > 0.0 { num / den } else { f64::INFINITY };
            worst = worst.max(v);
        }
        worst
    }

    pub fn residual(&self, u: &[f64], delta: f64) -> f64 {
        self.residual_in(u, delta, 0.0, f64::INFINITY)
    }
}
