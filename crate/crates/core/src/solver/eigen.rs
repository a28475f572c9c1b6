use serde::{Deserialize, Serialize};

use crate::error::SolverError;

const STEP: f64 = 1e-4;
const S_MAX: f64 = 8.0;

/// First Dirichlet eigenpair of `−Δ_p` on the annulus `1 < |y| < 3` in `R^N`, radial profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialEigenpair {
    pub p: f64,
    pub dim: u32,
    pub lambda1: f64,
    /// Uniform samples `s_k = 1 + k·h` on `[1, 3]`.
    pub s: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    /// `φ(3)` before it was set to zero; measures the shooting mismatch.
    pub end_mismatch: f64,
}

impl RadialEigenpair {
    fn locate(&self, s: f64) -> Option<(usize, f64)> {
        if !(1.0..=3.0).contains(&s) {
            return None;
        }
        let h = self.s[1] - self.s[0];
        let k = (((s - 1.0) / h).floor() as usize).min(self.s.len() - 2);
        Some((k, (s - self.s[k]) / h))
    }

    /// Cubic Hermite interpolation of `φ₁`; `None` outside `[1, 3]`.
    pub fn value(&self, s: f64) -> Option<f64> {
        let (k, t) = self.locate(s)?;
        let h = self.s[1] - self.s[0];
        let (y0, y1, d0, d1) = (
            self.phi[k],
            self.phi[k + 1],
            self.dphi[k] * h,
            self.dphi[k + 1] * h,
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

    /// Derivative of the Hermite interpolant.
    pub fn derivative(&self, s: f64) -> Option<f64> {
        let (k, t) = self.locate(s)?;
        let h = self.s[1] - self.s[0];
        let (y0, y1, d0, d1) = (
            self.phi[k],
            self.phi[k + 1],
            self.dphi[k] * h,
            self.dphi[k + 1] * h,
        );
        let t2 = t * t;
        Some(
            ((6.0 * t2 - 6.0 * t) * y0
                + (3.0 * t2 - 4.0 * t + 1.0) * d0
                + (-6.0 * t2 + 6.0 * t) * y1
                + (3.0 * t2 - 2.0 * t) * d1)
                / h,
        )
    }
}

struct Shot {
    /// First zero of `φ` after `s = 1`, `None` if none before `S_MAX`.
    zero: Option<f64>,
    s: Vec<f64>,
    phi: Vec<f64>,
    dphi: Vec<f64>,
}

fn phi_prime(w: f64, s: f64, n: f64, p: f64) -> f64 {
    let q = w / s.powf(n - 1.0);
    q.signum() * q.abs().powf(1.0 / (p - 1.0))
}

/// Integrate `φ' = sgn(w)|w/s^{N−1}|^{1/(p−1)}`, `w' = −λ s^{N−1}|φ|^{p−2}φ` from
/// `φ(1) = 0`, `φ'(1) = 1`.
fn shoot(lambda: f64, p: f64, n: f64, until: f64, record: bool) -> Shot {
    let rhs = |s: f64, y: [f64; 2]| -> [f64; 2] {
        let dphi = phi_prime(y[1], s, n, p);
        let phi = y[0];
        let src = if phi == 0.0 {
            0.0
        } else {
            phi.abs().powf(p - 2.0) * phi
        };
        [dphi, -lambda * s.powf(n - 1.0) * src]
    };
    let mut y = [0.0, 1.0];
    let mut s = 1.0;
    let mut out = Shot {
        zero: None,
        s: vec![],
        phi: vec![],
        dphi: vec![],
    };
    if record {
        out.s.push(s);
        out.phi.push(0.0);
        out.dphi.push(1.0);
    }
    let steps = ((until - 1.0) / STEP).round() as usize;
    for k in 0..steps {
        let h = STEP;
        let k1 = rhs(s, y);
        let k2 = rhs(
            s + h / 2.0,
            [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]],
        );
        let k3 = rhs(
            s + h / 2.0,
            [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]],
        );
        let k4 = rhs(s + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        let yn = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        let sn = 1.0 + (k + 1) as f64 * h;
        if out.zero.is_none() && yn[0] <= 0.0 && y[0] > 0.0 {
            let d0 = phi_prime(y[1], s, n, p);
            let d1 = phi_prime(yn[1], sn, n, p);
            out.zero = Some(s + h * hermite_root(y[0], yn[0], d0 * h, d1 * h));
            if !record {
                return out;
            }
        }
        y = yn;
        s = sn;
        if record {
            out.s.push(s);
            out.phi.push(y[0]);
            out.dphi.push(phi_prime(y[1], s, n, p));
        }
    }
    out
}

/// Root in `[0, 1]` of the cubic Hermite interpolant with end values `y0 > 0 ≥ y1`.
pub(crate) fn hermite_root(y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let f = |t: f64| {
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1
    };
    let (mut a, mut b) = (0.0, 1.0);
    if f(1.0) > 0.0 {
        return 1.0;
    }
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if f(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// First radial eigenpair on `B₃ ∖ B̄₁`, normalised by `φ₁(2) = 1`.
pub fn eigen_annulus_radial(p: f64, dim: u32) -> Result<RadialEigenpair, SolverError> {
    if !(p > 1.0) || dim < 2 {
        return Err(SolverError::Input(format!(
            "need p > 1 and N >= 2, got p = {p}, N = {dim}"
        )));
    }
    let n = dim as f64;
    let zero_at = |lambda: f64| {
        shoot(lambda, p, n, S_MAX, false)
            .zero
            .unwrap_or(f64::INFINITY)
    };
    let (mut lo, mut hi) = (1.0, 1.0);
    let mut tries = 0;
    while zero_at(hi) > 3.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(SolverError::Bracket(format!(
                "no zero before s = 3 up to lambda = {hi:e}"
            )));
        }
    }
    while zero_at(lo) <= 3.0 {
        lo /= 2.0;
        tries += 1;
        if tries > 120 {
            return Err(SolverError::Bracket(format!(
                "zero before s = 3 down to lambda = {lo:e}"
            )));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if zero_at(mid) > 3.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let shot = shoot(lambda, p, n, 3.0, true);
    let mid = shot
        .s
        .iter()
        .position(|&s| (s - 2.0).abs() < 0.5 * STEP)
        .expect("s = 2 sample");
    let norm = shot.phi[mid];
    if !(norm > 0.0) {
        return Err(SolverError::Bracket(format!(
            "profile not positive at s = 2 (lambda = {lambda})"
        )));
    }
    let mut phi: Vec<f64> = shot.phi.iter().map(|v| v / norm).collect();
    let dphi: Vec<f64> = shot.dphi.iter().map(|v| v / norm).collect();
    let end_mismatch = *phi.last().unwrap();
    *phi.last_mut().unwrap() = 0.0;
    Ok(RadialEigenpair {
        p,
        dim,
        lambda1: lambda,
        s: shot.s,
        phi,
        dphi,
        end_mismatch,
    })
}
