use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, SolverError};
use crate::geometry::{NodeTag, Point, PolarGrid};

/// Metadata of a nonlinear solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveLog {
    pub iterations: usize,
    pub final_residual: f64,
    pub regularization_floor: f64,
    pub p: f64,
    pub potential_c: f64,
}

/// Nodal values on a polar grid.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<PolarGrid>,
    values: Vec<f64>,
    pub log: Option<SolveLog>,
}

impl ScalarField {
    pub fn new(grid: Arc<PolarGrid>, values: Vec<f64>) -> Result<Self, SolverError> {
        if values.len() != grid.len() {
            return Err(SolverError::Input(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField {
            grid,
            values,
            log: None,
        })
    }

    /// Evaluate `f(r, θ)` at every node.
    pub fn from_fn(grid: Arc<PolarGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|id| f(grid.r(id), grid.theta(id)))
            .collect();
        ScalarField {
            grid,
            values,
            log: None,
        }
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value(&self, id: usize) -> f64 {
        self.values[id]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.id(i, j)]
    }

    pub fn residual(&self) -> Option<f64> {
        self.log.as_ref().map(|l| l.final_residual)
    }

    pub fn scaled(&self, k: f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
            log: None,
        }
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Values nonnegative everywhere and exactly zero on Dirichlet-zero nodes.
    pub fn satisfies_invariants(&self) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(id, &v)| v >= 0.0 && (self.grid.tag(id) != NodeTag::DirichletZero || v == 0.0))
    }

    /// Same grid (by identity or by value).
    pub fn compatible(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Bilinear interpolation in `(ln r, θ)`; `None` outside the grid.
    pub fn sample_polar(&self, r: f64, theta: f64) -> Option<f64> {
        let g = &*self.grid;
        let radii = g.radii();
        let tol = 1e-12;
        if !(r >= radii[0] * (1.0 - tol) && r <= g.outer_radius() * (1.0 + tol)) {
            return None;
        }
        if !(theta >= -tol && theta <= g.theta0() + tol) {
            return None;
        }
        let r = r.clamp(radii[0], g.outer_radius());
        let i = match radii.partition_point(|&x| x <= r) {
            0 => 0,
            k => (k - 1).min(radii.len() - 2),
        };
        let t = ((r / radii[i]).ln() / (radii[i + 1] / radii[i]).ln()).clamp(0.0, 1.0);
        let dth = g.theta0() / (g.n_theta() - 1) as f64;
        let jf = (theta.clamp(0.0, g.theta0()) / dth).min((g.n_theta() - 1) as f64);
        let j = (jf.floor() as usize).min(g.n_theta() - 2);
        let u = jf - j as f64;
        let v00 = self.at(i, j);
        let v01 = self.at(i, j + 1);
        let v10 = self.at(i + 1, j);
        let v11 = self.at(i + 1, j + 1);
        Some((1.0 - t) * ((1.0 - u) * v00 + u * v01) + t * ((1.0 - u) * v10 + u * v11))
    }

    /// Sample at a Cartesian point in the grid's embedding.
    pub fn sample(&self, x: Point) -> Option<f64> {
        let (r, theta) = self.grid.polar(x);
        self.sample_polar(r, theta)
    }

    /// Write the `node_id,r,theta,value` table.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["node_id", "r", "theta", "value"])?;
        for id in 0..self.grid.len() {
            wr.write_record(&[
                id.to_string(),
                format!("{:.17e}", self.grid.r(id)),
                format!("{:.17e}", self.grid.theta(id)),
                format!("{:.17e}", self.values[id]),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Read a `node_id,r,theta,value` table written for `grid`; `#` lines are skipped.
    pub fn read_csv<R: Read>(grid: Arc<PolarGrid>, r: R) -> Result<Self, Error> {
        #[derive(Deserialize)]
        struct Row {
            node_id: usize,
            r: f64,
            theta: f64,
            value: f64,
        }
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let mut values = vec![f64::NAN; grid.len()];
        for row in rd.deserialize() {
            let row: Row = row?;
            if row.node_id >= grid.len() {
                return Err(SolverError::Input(format!("node {} not in grid", row.node_id)).into());
            }
            let (gr, gt) = (grid.r(row.node_id), grid.theta(row.node_id));
            if (gr - row.r).abs() > 1e-12 * gr || (gt - row.theta).abs() > 1e-12 {
                return Err(SolverError::Input(format!(
                    "node {} does not match the grid coordinates",
                    row.node_id
                ))
                .into());
            }
            values[row.node_id] = row.value;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(SolverError::Input("field file does not cover every node".into()).into());
        }
        Ok(ScalarField::new(grid, values)?)
    }
}

/// Dirichlet values on truncation-arc nodes; every other boundary node is zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryData {
    values: BTreeMap<usize, f64>,
}

impl BoundaryData {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, node: usize, value: f64) {
        self.values.insert(node, value);
    }

    /// Evaluate `f(r, θ)` on the truncation-arc nodes of `grid`.
    pub fn from_fn(grid: &PolarGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .filter(|&id| grid.tag(id) == NodeTag::TruncationArc)
            .map(|id| (id, f(grid.r(id), grid.theta(id))))
            .collect();
        BoundaryData { values }
    }

    pub fn get(&self, node: usize) -> f64 {
        self.values.get(&node).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, k: f64) -> Self {
        BoundaryData {
            values: self.values.iter().map(|(&n, &v)| (n, v * k)).collect(),
        }
    }

    /// Reject negative values and nonzero values off the truncation arc.
    pub fn validate(&self, grid: &PolarGrid) -> Result<(), SolverError> {
        for (&node, &v) in &self.values {
            if node >= grid.len() {
                return Err(SolverError::Input(format!(
                    "boundary node {node} not in grid"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(SolverError::Input(format!(
                    "boundary value {v} at node {node} must be finite and nonnegative"
                )));
            }
            match grid.tag(node) {
                NodeTag::TruncationArc => {}
                NodeTag::DirichletZero if v == 0.0 => {}
                tag => {
                    return Err(SolverError::Input(format!(
                        "nonzero data {v} on {} node {node}",
                        tag.as_str()
                    )))
                }
            }
        }
        Ok(())
    }
}
