use std::sync::Arc;

use super::field::{BoundaryData, ScalarField, SolveLog};
use super::operator::{Discrete, Linearisation};
use super::potential::PotentialSpec;
use crate::error::SolverError;
use crate::geometry::{NodeTag, PolarGrid};

/// Regularisation levels relative to the largest boundary value. A final unregularised
/// Newton pass runs only if the residual target is still missed after the last level.
pub const CONTINUATION: [f64; 4] = [1e-2, 1e-4, 1e-6, 1e-8];
/// Residual below which Picard hands over to Newton.
pub const PICARD_SWITCH: f64 = 1e-3;
const PICARD_CAP: usize = 25;
/// Picard also stops once a step reduces the residual by less than this factor.
const PICARD_STALL: f64 = 0.9;

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    /// Budget of outer (Picard plus Newton) steps.
    pub max_outer: usize,
    /// Starting iterate on all nodes; boundary entries are overwritten by the data.
    pub initial: Option<Vec<f64>>,
}

impl SolveOptions {
    pub fn new(tol: f64) -> Self {
        SolveOptions {
            tol,
            max_outer: 200,
            initial: None,
        }
    }
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self::new(1e-8)
    }
}

/// Solve `−div(|Du|^{p−2}Du) + c|x|^{−p}u^{p−1} = 0` with the given data on the truncation
/// arc and zero on the rest of the boundary.
pub fn solve_dirichlet(
    grid: &Arc<PolarGrid>,
    p: f64,
    pot: PotentialSpec,
    data: &BoundaryData,
    tol: f64,
) -> Result<ScalarField, SolverError> {
    solve_dirichlet_with(grid, p, pot, data, &SolveOptions::new(tol))
}

pub fn solve_dirichlet_with(
    grid: &Arc<PolarGrid>,
    p: f64,
    pot: PotentialSpec,
    data: &BoundaryData,
    opts: &SolveOptions,
) -> Result<ScalarField, SolverError> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(SolverError::Input(format!("p = {p} must exceed 1")));
    }
    if !(opts.tol > 0.0) {
        return Err(SolverError::Input(format!(
            "tolerance {} must be positive",
            opts.tol
        )));
    }
    let c = pot.c();
    if !(c >= 0.0) {
        return Err(SolverError::Input(format!(
            "potential strength {c} must be >= 0"
        )));
    }
    data.validate(grid)?;
    let disc = Discrete::new(grid, p, c);
    let scale = data.max_abs();
    let mut u = vec![0.0; grid.len()];
    let log = |iterations, final_residual, floor| SolveLog {
        iterations,
        final_residual,
        regularization_floor: floor,
        p,
        potential_c: c,
    };
    if scale == 0.0 || disc.unknowns.is_empty() {
        for (n, v) in data.iter() {
            u[n] = v;
        }
        let mut f = ScalarField::new(grid.clone(), u)?;
        f.log = Some(log(0, 0.0, 0.0));
        return Ok(f);
    }
    for (n, v) in data.iter() {
        if grid.tag(n) == NodeTag::TruncationArc {
            u[n] = v;
        }
    }

    let mut steps = 0usize;
    let linear_solve =
        |u: &mut Vec<f64>, delta: f64, mode: Linearisation| -> Result<(), SolverError> {
            let (a, b) = disc.assemble(u, delta, mode);
            let x = a.factor()?.solve(&b);
            for (k, &n) in disc.unknowns.iter().enumerate() {
                u[n] = x[k];
            }
            Ok(())
        };

    match &opts.initial {
        Some(init) if init.len() == grid.len() => {
            for &n in &disc.unknowns {
                u[n] = init[n].max(0.0);
            }
        }
        Some(_) => {
            return Err(SolverError::Input(
                "initial guess has the wrong length".into(),
            ))
        }
        None => {
            linear_solve(&mut u, 0.0, Linearisation::Laplace)?;
            steps += 1;
        }
    }
    if p == 2.0 {
        if opts.initial.is_some() {
            linear_solve(&mut u, 0.0, Linearisation::Laplace)?;
            steps += 1;
        }
        let res = disc.residual(&u, 0.0);
        if !(res <= opts.tol) {
            return Err(SolverError::NoConvergence {
                iterations: steps,
                residual: res,
            });
        }
        let mut f = ScalarField::new(grid.clone(), u)?;
        f.log = Some(log(steps, res, 0.0));
        return Ok(f);
    }

    let mut floor = 0.0;
    let stages = CONTINUATION
        .iter()
        .map(|e| e * scale)
        .chain(std::iter::once(0.0));
    for (stage, delta) in stages.enumerate() {
        let polish = delta == 0.0;
        if polish && disc.residual(&u, 0.0) <= opts.tol {
            break;
        }
        floor = delta;
        let last = stage + 1 >= CONTINUATION.len();
        let target = if last {
            opts.tol
        } else {
            PICARD_SWITCH.min(opts.tol.max(CONTINUATION[stage]))
        };
        let mut res = disc.residual(&u, delta);
        let mut picard = 0;
        while stage == 0 && res > PICARD_SWITCH && picard < PICARD_CAP && steps < opts.max_outer {
            linear_solve(&mut u, delta, Linearisation::Picard)?;
            steps += 1;
            picard += 1;
            let prev = res;
            res = disc.residual(&u, delta);
            if res > PICARD_STALL * prev {
                break;
            }
        }
        let mut energy = disc.energy(&u, delta);
        loop {
            let true_res = if last { disc.residual(&u, 0.0) } else { res };
            if true_res <= target {
                break;
            }
            if steps >= opts.max_outer {
                return Err(SolverError::NoConvergence {
                    iterations: steps,
                    residual: true_res,
                });
            }
            let (h, rhs) = disc.assemble(&u, delta, Linearisation::Newton);
            let dir = match h.factor() {
                Ok(f) => f.solve(&rhs),
                Err(_) if polish => {
                    return Err(SolverError::NoConvergence {
                        iterations: steps,
                        residual: true_res,
                    })
                }
                Err(e) => return Err(e),
            };
            steps += 1;
            let mut t = 1.0;
            let mut trial = u.clone();
            let accepted = loop {
                for (k, &n) in disc.unknowns.iter().enumerate() {
                    trial[n] = u[n] + t * dir[k];
                }
                let e = disc.energy(&trial, delta);
                if e < energy || disc.residual(&trial, delta) < res {
                    energy = e;
                    break true;
                }
                t *= 0.5;
                if t < 1e-12 {
                    break false;
                }
            };
            if !accepted {
                break;
            }
            std::mem::swap(&mut u, &mut trial);
            res = disc.residual(&u, delta);
        }
    }
    let res = disc.residual(&u, 0.0);
    if !(res <= opts.tol) {
        return Err(SolverError::NoConvergence {
            iterations: steps,
            residual: res,
        });
    }
    for v in u.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let mut f = ScalarField::new(grid.clone(), u)?;
    f.log = Some(log(steps, res, floor));
    Ok(f)
}

/// Normalised discrete residual of `field` on its interior nodes (zero data mismatch is
/// not measured; Dirichlet nodes are fixed).
pub fn weak_residual(field: &ScalarField, p: f64, pot: PotentialSpec) -> f64 {
    Discrete::new(field.grid(), p, pot.c()).residual(field.values(), 0.0)
}

/// [`weak_residual`] restricted to interior nodes with `lo ≤ r ≤ hi`.
pub fn weak_residual_in(field: &ScalarField, p: f64, pot: PotentialSpec, lo: f64, hi: f64) -> f64 {
    Discrete::new(field.grid(), p, pot.c()).residual_in(field.values(), 0.0, lo, hi)
}
