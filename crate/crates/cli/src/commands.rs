//! The experiment pipelines behind each subcommand.

use std::f64::consts::PI;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use bhlab::barriers::{
    certify_barrier, eigen_linear_bound, lower_barrier_params, upper_barrier_params, Barrier,
    Certificate, UpperPlacement, CERT_TOL,
};
use bhlab::error::HarnackError;
use bhlab::exponents::{
    exponent_for_opening, write_table, AngularGeometry, AngularProfile, Kind, ShootSpec,
};
use bhlab::geometry::{build_polar_grid, DomainSpec, Grading, GridGeometry, Point, PolarGrid};
use bhlab::harnack::{
    apriori_alpha, boundary_decay, boundary_harnack, boundary_harnack_annulus, carleson_constant,
    chained_harnack, fit_line, interior_harnack, quotient_constancy, ratio_uniformity,
    singularity_test, two_sided_slope, HarnackReport, Verdict, TWO_SIDED_B,
};
use bhlab::io::{csv_bytes, header_line, write_atomic};
use bhlab::singular::{
    blowup_rate, ladder_rings, singular_limit, solve_ladder, ArcWeight, LadderConfig,
};
use bhlab::solver::{
    eigen_annulus_radial, solve_dirichlet, BoundaryData, PotentialSpec, ScalarField,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;

/// Outcome of a command: the module whose checks ran and the checks that failed.
pub struct Summary {
    pub module: &'static str,
    pub failures: Vec<String>,
}

fn core<E: Into<bhlab::Error>>(e: E) -> CliError {
    CliError::Core(e.into())
}

/// Output directory with the configuration hash stamped on every file.
pub struct Output {
    dir: PathBuf,
    hash: String,
}

impl Output {
    pub fn new(dir: &Path, hash: &str) -> Self {
        Output {
            dir: dir.to_path_buf(),
            hash: hash.to_string(),
        }
    }

    pub fn csv(&self, name: &str, body: Vec<u8>) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, Some(&header_line(&self.hash)), &body)?;
        Ok(path)
    }

    pub fn json(&self, name: &str, mut value: Value) -> Result<PathBuf, CliError> {
        if let Value::Object(m) = &mut value {
            m.insert("config_hash".into(), Value::String(self.hash.clone()));
        }
        let mut text = serde_json::to_string_pretty(&value).expect("JSON value serializes");
        text.push('\n');
        let path = self.dir.join(name);
        write_atomic(&path, None, text.as_bytes())?;
        Ok(path)
    }

    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, Some(&header_line(&self.hash)), body.as_bytes())?;
        Ok(path)
    }
}

fn angular_geometry(dim: u32) -> AngularGeometry {
    if dim == 2 {
        AngularGeometry::PlanarSector
    } else {
        AngularGeometry::AxisymmetricCap
    }
}

fn or_single<T: Clone>(list: &[T], single: T) -> Vec<T> {
    if list.is_empty() {
        vec![single]
    } else {
        list.to_vec()
    }
}

fn planar_only(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.dim != 2 {
        return Err(CliError::Config(format!(
            "{} runs on planar grids and needs dim = 2, got {}",
            cfg.command, cfg.dim
        )));
    }
    Ok(())
}

pub fn exponent(cfg: &RunConfig, out: &Output) -> Result<Summary, CliError> {
    let sec = &cfg.exponent;
    let mut profiles: Vec<AngularProfile> = Vec::new();
    for &p in &or_single(&sec.p, cfg.p) {
        for &dim in &or_single(&sec.dim, cfg.dim) {
            for &theta0 in &or_single(&sec.opening, cfg.opening) {
                for kind in &sec.kind {
                    let kind = if kind == "regular" {
                        Kind::Regular
                    } else {
                        Kind::Singular
                    };
                    for &c in &or_single(&sec.c, cfg.c) {
                        let spec =
                            ShootSpec::new(p, dim, kind, c, angular_geometry(dim)).map_err(core)?;
                        profiles.push(exponent_for_opening(theta0, &spec, sec.tol).map_err(core)?);
                    }
                }
            }
        }
    }
    let rows: Vec<_> = profiles.iter().map(|pr| pr.table_row()).collect();
    out.csv("exponents.csv", csv_bytes(|w| write_table(&rows, w))?)?;
    for (k, pr) in profiles.iter().enumerate() {
        out.csv(
            &format!("profile_{k:03}.csv"),
            csv_bytes(|w| pr.write_csv(w))?,
        )?;
    }
    // exponents grow with c for fixed (p, N, θ₀, kind)
    let mut anomalies = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            let same = a.p == b.p && a.n == b.n && a.theta0 == b.theta0 && a.kind == b.kind;
            if same && b.c > a.c && b.a < a.a - 1e-9 {
                anomalies.push(json!({
                    "p": a.p, "N": a.n, "theta0": a.theta0, "kind": a.kind,
                    "c_low": a.c, "a_low": a.a, "c_high": b.c, "a_high": b.a,
                }));
            }
        }
    }
    let failures = anomalies
        .iter()
        .map(|v| format!("exponent decreases with c: {v}"))
        .collect();
    out.json(
        "exponents.json",
        json!({
            "rows": rows,
            "mismatch": profiles.iter().map(|p| p.mismatch).collect::<Vec<_>>(),
            "c_monotonicity_anomalies": anomalies,
        }),
    )?;
    for r in &rows {
        println!(
            "p = {}, N = {}, theta0 = {:.6}, {}, c = {}: a = {:.10}",
            r.p,
            r.n,
            r.theta0,
            r.kind.as_str(),
            r.c,
            r.a
        );
    }
    Ok(Summary {
        module: "spherical_exponents",
        failures,
    })
}

fn domain(cfg: &RunConfig) -> Result<DomainSpec, CliError> {
    let dom = if cfg.opening == PI {
        DomainSpec::half_disk(cfg.radius)
    } else {
        DomainSpec::sector(cfg.opening, cfg.radius)
    };
    dom.map_err(core)
}

fn sector_profile(cfg: &RunConfig) -> Result<AngularProfile, CliError> {
    let spec = ShootSpec::new(
        cfg.p,
        2,
        Kind::Singular,
        cfg.c,
        AngularGeometry::PlanarSector,
    )
    .map_err(core)?;
    exponent_for_opening(cfg.opening, &spec, cfg.exponent.tol).map_err(core)
}

pub fn solve(cfg: &RunConfig, out: &Output) -> Result<Summary, CliError> {
    planar_only(cfg)?;
    let grading = cfg.q.map_or(Grading::Auto, Grading::Ratio);
    let grid = Arc::new(
        build_polar_grid(
            &domain(cfg)?,
            cfg.grid[0],
            cfg.grid[1],
            cfg.epsilon,
            grading,
        )
        .map_err(core)?,
    );
    let scale = cfg.solve.arc_scale;
    let data = if cfg.solve.arc == "profile" {
        let profile = sector_profile(cfg)?;
        BoundaryData::from_fn(&grid, |r, t| scale * profile.eval(r, t).unwrap_or(0.0))
    } else {
        BoundaryData::from_fn(&grid, |_, _| scale)
    };
    let pot = PotentialSpec::inverse_power(cfg.c).map_err(core)?;
    let field = solve_dirichlet(&grid, cfg.p, pot, &data, cfg.tol).map_err(core)?;
    out.csv("grid.csv", csv_bytes(|w| grid.write_csv(w))?)?;
    out.csv("field.csv", csv_bytes(|w| field.write_csv(w))?)?;
    let log = field.log.clone().expect("solver attaches a log");
    out.json(
        "solve_log.json",
        serde_json::to_value(&log).expect("log serializes"),
    )?;
    let mut failures = Vec::new();
    if !field.satisfies_invariants() {
        failures.push("field is not finite and nonnegative".to_string());
    }
    if !(log.final_residual <= cfg.tol) {
        failures.push(format!(
            "weak residual {:e} above tol {:e}",
            log.final_residual, cfg.tol
        ));
    }
    println!(
        "solved {} nodes in {} iterations, residual {:.3e}",
        grid.len(),
        log.iterations,
        log.final_residual
    );
    Ok(Summary {
        module: "plaplace_solver",
        failures,
    })
}

pub fn singular(cfg: &RunConfig, out: &Output) -> Result<Summary, CliError> {
    planar_only(cfg)?;
    if cfg.opening != PI {
        return Err(CliError::Config(
            "truncation ladders live on the half-disk; set opening = pi".into(),
        ));
    }
    let sec = &cfg.singular;
    let mut lc = LadderConfig::new(cfg.p, cfg.c);
    lc.radius = cfg.radius;
    lc.eps0 = cfg.epsilon;
    lc.levels = sec.levels;
    lc.per_octave = sec.per_octave;
    lc.n_theta = cfg.grid[1];
    lc.tol = cfg.tol;
    lc.arc = ArcWeight {
        scale: sec.arc_scale,
        modulation: sec.modulation,
    };
    lc.slack_c = sec.slack_c;
    let ladder = solve_ladder(&lc).map_err(core)?;
    let report = ladder.report();
    let limit = singular_limit(&ladder).map_err(core)?;
    let sing = singularity_test(&limit.field);
    let blow = blowup_rate(&limit.field, &ladder.profile).map_err(core)?;
    let grid = limit.field.grid();
    let pts: Vec<(f64, f64)> = ladder_rings(grid)
        .into_iter()
        .map(|i| {
            let m = (0..grid.n_theta())
                .map(|j| limit.field.at(i, j))
                .fold(0.0, f64::max);
            (grid.radii()[i].ln(), m.ln())
        })
        .collect();
    let beta_fit = if pts.len() >= 2 {
        -fit_line(&pts).0
    } else {
        f64::NAN
    };
    let beta = ladder.profile.a;

    out.csv("grid.csv", csv_bytes(|w| grid.write_csv(w))?)?;
    out.csv("field_limit.csv", csv_bytes(|w| limit.field.write_csv(w))?)?;
    if sec.write_levels {
        for (k, f) in ladder.fields.iter().enumerate() {
            out.csv(
                &format!("field_level_{k}.csv"),
                csv_bytes(|w| f.write_csv(w))?,
            )?;
        }
    }
    out.csv("blowup.csv", csv_bytes(|w| blow.write_csv(w))?)?;
    out.csv("profile.csv", csv_bytes(|w| ladder.profile.write_csv(w))?)?;
    let rel = blow.relative();
    out.json(
        "ladder.json",
        json!({
            "ladder": report,
            "limit": { "diffs": limit.diffs, "converged": limit.converged },
            "singularity": sing,
            "blowup": {
                "radii": blow.radii,
                "deviations": blow.deviations,
                "relative": rel,
                "kappa": blow.kappa,
                "reference": blow.reference,
            },
            "beta": {
                "shooting": beta,
                "fit": beta_fit,
                "relative_difference": (beta_fit - beta).abs() / beta,
            },
        }),
    )?;

    let mut failures = Vec::new();
    if sing.verdict != Verdict::Singular {
        failures.push(format!("singularity verdict {:?}", sing.verdict));
    }
    // sandwich and blow-up trend are properties of data proportional to V
    if sec.modulation == 0.0 {
        if !report.sandwiched() {
            failures.push("sandwich V - K <= u <= V violated".to_string());
        }
        // the smallest ring fixes κ, so the trend is read on the rings above it
        let above = &rel[..rel.len().saturating_sub(1)];
        let tail = &above[above.len().saturating_sub(3)..];
        if tail.windows(2).any(|w| w[1] > w[0]) {
            failures.push(format!("blow-up deviations not decreasing: {tail:?}"));
        }
    }
    println!(
        "beta = {beta:.8} (fit {beta_fit:.4}), verdict {:?}, blow-up deviation {:.3e}",
        sing.verdict,
        rel.last().copied().unwrap_or(f64::NAN)
    );
    Ok(Summary {
        module: "singular_solutions",
        failures,
    })
}

#[derive(Deserialize)]
struct Row {
    node_id: usize,
    r: f64,
    theta: f64,
}

/// Rebuild the tensor grid of a `node_id,r,theta,value` file.
fn grid_of(path: &Path, geometry: GridGeometry) -> Result<PolarGrid, CliError> {
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(File::open(path)?);
    let mut rows: Vec<Row> = Vec::new();
    for row in rd.deserialize() {
        rows.push(row.map_err(|e| CliError::Core(e.into()))?);
    }
    rows.sort_by_key(|r| r.node_id);
    let bad =
        |m: &str| CliError::Core(HarnackError::Sampling(format!("{}: {m}", path.display())).into());
    if rows.is_empty() || rows.iter().enumerate().any(|(k, r)| r.node_id != k) {
        return Err(bad("node ids must run 0..n without gaps"));
    }
    let n_theta = rows.iter().take_while(|r| r.r == rows[0].r).count();
    if n_theta < 2 || !rows.len().is_multiple_of(n_theta) {
        return Err(bad("rows do not form a tensor grid"));
    }
    let theta0 = rows[n_theta - 1].theta;
    let radii = rows.iter().step_by(n_theta).map(|r| r.r).collect();
    PolarGrid::from_radii(geometry, theta0, radii, n_theta).map_err(core)
}

fn read_field(path: &Path, grid: Arc<PolarGrid>) -> Result<ScalarField, CliError> {
    ScalarField::read_csv(grid, File::open(path)?).map_err(CliError::Core)
}

pub fn harnack(cfg: &RunConfig, out: &Output) -> Result<Summary, CliError> {
    let sec = &cfg.harnack;
    if sec.fields.is_empty() || sec.fields.len() > 2 {
        return Err(CliError::Config(format!(
            "harnack takes one or two field files, got {}",
            sec.fields.len()
        )));
    }
    let geometry = if cfg.dim == 2 {
        GridGeometry::Planar
    } else {
        GridGeometry::Axisymmetric { dim: cfg.dim }
    };
    let grid = Arc::new(grid_of(&sec.fields[0], geometry)?);
    let u1 = read_field(&sec.fields[0], grid.clone())?;
    let u2 = match sec.fields.get(1) {
        Some(path) => {
            if grid_of(path, geometry)? != *grid {
                return Err(core(HarnackError::Incompatible));
            }
            Some(read_field(path, grid.clone())?)
        }
        None => None,
    };
    let big_r = grid.outer_radius();
    let pt = |a: [f64; 2]| Point::new(a[0] * big_r, a[1] * big_r);
    let (q, r) = (pt(sec.q), sec.r * big_r);

    let mut rep = HarnackReport::default();
    let m = interior_harnack(&u1, pt(sec.interior_point), sec.interior_r * big_r).map_err(core)?;
    rep.push(
        "harn-int",
        vec![sec.interior_r * big_r],
        m.value,
        &grid,
        0,
        m.excluded,
    );
    let m = chained_harnack(&u1, q, r, sec.chain_levels).map_err(core)?;
    rep.push("harn-h", vec![r], m.value, &grid, 0, m.excluded);
    let dec = boundary_decay(&u1, pt(sec.decay_point), r).map_err(core)?;
    rep.push("harn-hold", vec![r], dec.delta, &grid, 0, 0);
    rep.push("harn-hold-c3", vec![r], dec.c3, &grid, 0, 0);
    let m = carleson_constant(&u1, q, r).map_err(core)?;
    rep.push("norm-est", vec![r], m.value, &grid, 0, m.excluded);
    let m = two_sided_slope(&u1, q, r, TWO_SIDED_B).map_err(core)?;
    rep.push("norm-est2", vec![r], m.value, &grid, 0, m.excluded);
    let ap = apriori_alpha(&u1, pt(sec.apriori_point)).map_err(core)?;
    rep.push("a-prior0", ap.radii.clone(), ap.alpha, &grid, 0, 0);
    let uni = ratio_uniformity(&u1, r).map_err(core)?;
    rep.push("unif1", vec![r], uni.c9.value, &grid, 0, uni.c9.excluded);
    rep.push("unif1'", vec![r], uni.c9_prime, &grid, 0, 0);

    let mut quotient = None;
    if let Some(u2) = &u2 {
        let m = boundary_harnack(&u1, u2, q, r).map_err(core)?;
        rep.push("bhi1", vec![r], m.value, &grid, 0, m.excluded);
        for k in 1..=sec.annuli {
            let rk = big_r * 2f64.powi(-(k as i32));
            let m = boundary_harnack_annulus(&u1, u2, rk).map_err(core)?;
            rep.push("bhi2", vec![rk, rk / 2.0], m.value, &grid, 0, m.excluded);
        }
        let (lo, hi) = (
            sec.quotient_lo_eps * grid.epsilon(),
            sec.quotient_hi * big_r,
        );
        let qc = quotient_constancy(&u1, u2, lo, hi).map_err(core)?;
        rep.push("quotient-k", vec![lo, hi], qc.k, &grid, 0, qc.excluded);
        quotient = Some(qc);
    }
    let singularity: Vec<_> = std::iter::once(&u1)
        .chain(u2.as_ref())
        .map(singularity_test)
        .collect();

    out.csv("harnack.csv", csv_bytes(|w| rep.write_csv(w))?)?;
    out.json(
        "harnack.json",
        json!({
            "fields": sec.fields,
            "records": rep.records,
            "quotient": quotient,
            "singularity": singularity,
        }),
    )?;

    let mut failures = Vec::new();
    for rec in &rep.records {
        if !rec.constant.is_finite() {
            failures.push(format!("{} is not finite", rec.estimate));
        }
        let ratio = matches!(
            rec.estimate.as_str(),
            "harn-int" | "harn-h" | "unif1" | "bhi1" | "bhi2"
        );
        if ratio && rec.constant < 1.0 - 1e-12 {
            failures.push(format!("{} = {} is below 1", rec.estimate, rec.constant));
        }
    }
    for rec in &rep.records {
        println!(
            "{:<13} r = {:<10.4e} {:.6}",
            rec.estimate, rec.radii[0], rec.constant
        );
    }
    Ok(Summary {
        module: "harnack_verifier",
        failures,
    })
}

fn certificate_json(cert: &Certificate) -> Value {
    json!({
        "passed": cert.passed(),
        "params": cert.params,
        "annulus": cert.annulus,
        "side": cert.side,
        "checked": cert.checked,
        "worst": cert.worst,
        "failures": cert.failures,
    })
}

pub fn barrier(cfg: &RunConfig, out: &Output) -> Result<Summary, CliError> {
    let c0 = cfg.barrier.c0_tilde.unwrap_or(cfg.c);
    let lp = lower_barrier_params(cfg.p, cfg.dim, c0).map_err(core)?;
    let lower = certify_barrier(Barrier::Lower(&lp), CERT_TOL).map_err(CliError::Core)?;
    let probe = match cfg.barrier.probe_factor {
        Some(f) => {
            let mut weak = lp.clone();
            weak.a *= f;
            let cert = certify_barrier(Barrier::Lower(&weak), CERT_TOL).map_err(CliError::Core)?;
            json!({
                "factor": f,
                "a": weak.a,
                "passed": cert.passed(),
                "checked": cert.checked,
                "failing": cert.failures.len(),
                "worst": cert.worst,
            })
        }
        None => Value::Null,
    };
    let eigen = Arc::new(eigen_annulus_radial(cfg.p, cfg.dim).map_err(core)?);
    let dom = DomainSpec::half_disk(4.0).map_err(core)?;
    let place = UpperPlacement {
        dom: &dom,
        q: Point::new(1.0, 0.0),
        p_point: Point::new(1.0, 0.0),
        r: 0.5,
    };
    let up = upper_barrier_params(eigen.clone(), c0, &place, 1.0).map_err(CliError::Core)?;
    let upper = certify_barrier(Barrier::Upper(&up), CERT_TOL).map_err(CliError::Core)?;
    let linear = eigen_linear_bound(&eigen);
    let slope = lp.slope_constant();
    out.json(
        "barrier.json",
        json!({
            "p": cfg.p,
            "N": cfg.dim,
            "c0_tilde": c0,
            "c0_tilde_choice": "C0 (potential bound used without rescaling)",
            "lower": {
                "a": lp.a,
                "alpha": lp.alpha,
                "slope_constant": slope,
                "certificate": certificate_json(&lower),
            },
            "upper": {
                "b": up.b,
                "rb": up.rb,
                "lambda1": eigen.lambda1,
                "linear_bound": linear,
                "certificate": certificate_json(&upper),
            },
            "probe": probe,
        }),
    )?;
    let mut failures = Vec::new();
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    if !lower.passed() {
        failures.push(format!(
            "lower barrier: {} failing stencils",
            lower.failures.len()
        ));
    }
    if !upper.passed() {
        failures.push(format!(
            "upper barrier: {} failing stencils",
            upper.failures.len()
        ));
    }
    println!("lower a = {:.12} {}", lp.a, verdict(lower.passed()));
    println!("upper b = {} {}", up.b, verdict(upper.passed()));
    if let Some(passed) = probe.get("passed").and_then(Value::as_bool) {
        println!("probe a = {} {}", probe["a"], verdict(passed));
    }
    Ok(Summary {
        module: "barriers",
        failures,
    })
}
