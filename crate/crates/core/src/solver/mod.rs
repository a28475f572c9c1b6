//! Finite-volume solver for `−div(|Du|^{p−2}Du) + c|x|^{−p}u^{p−1} = 0` on polar grids.

mod banded;
mod checks;
mod eigen;
mod field;
mod nonlinear;
mod operator;
mod potential;

pub use banded::{BandedCholesky, BandedSpd};
pub use checks::{
    comparison_check, local_h2, side_condition_check, ComparisonReport, Side, SideReport, Slack,
    StencilFailure,
};
pub(crate) use eigen::hermite_root;
pub use eigen::{eigen_annulus_radial, RadialEigenpair};
pub use field::{BoundaryData, ScalarField, SolveLog};
pub use nonlinear::{
    solve_dirichlet, solve_dirichlet_with, weak_residual, weak_residual_in, SolveOptions,
    CONTINUATION, PICARD_SWITCH,
};
pub use potential::PotentialSpec;
