use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use bhlab::error::ExponentError;
use bhlab::exponents::*;
use bhlab::geometry::{Grading, GridGeometry, PolarGrid};
use bhlab::solver::{weak_residual, PotentialSpec};

fn spec(p: f64, dim: u32, kind: Kind, c: f64) -> ShootSpec {
    let geometry = if dim == 2 {
        AngularGeometry::PlanarSector
    } else {
        AngularGeometry::AxisymmetricCap
    };
    ShootSpec::new(p, dim, kind, c, geometry).unwrap()
}

#[test]
fn lambda_formula_examples() {
    assert_eq!(lambda_of(1.0, 2.0, 3, Kind::Regular), 2.0);
    for p in [2.0, 3.0, 4.0] {
        assert_eq!(lambda_of(1.0, p, p as u32, Kind::Singular), p - 1.0);
    }
    for kind in [Kind::Regular, Kind::Singular] {
        assert_eq!(lambda_of(0.0, 1.7, 5, kind), 0.0);
    }
}

#[test]
fn shooting_examples() {
    assert!((angular_shoot(1.0, &spec(2.0, 2, Kind::Singular, 0.0)).unwrap() - PI).abs() < 1e-9);
    for p in [1.5, 2.0, 3.0, 4.0] {
        for n in [3, 4] {
            let t = angular_shoot(1.0, &spec(p, n, Kind::Regular, 0.0)).unwrap();
            assert!((t - FRAC_PI_2).abs() < 1e-8, "p = {p}, N = {n}: {t}");
        }
    }
    assert!(
        (angular_shoot(2.0, &spec(2.0, 3, Kind::Singular, 0.0)).unwrap() - FRAC_PI_2).abs() < 1e-9
    );
}

#[test]
fn exponent_oracles() {
    let cases = [
        (PI, 2.0, 2, 1.0),
        (FRAC_PI_2, 2.0, 2, 2.0),
        (1.5 * PI, 2.0, 2, 2.0 / 3.0),
        (FRAC_PI_2, 3.0, 3, 1.0),
        (FRAC_PI_2, 2.0, 3, 2.0),
    ];
    for (theta0, p, n, a) in cases {
        let prof = exponent_for_opening(theta0, &spec(p, n, Kind::Singular, 0.0), 1e-8).unwrap();
        assert!(
            (prof.a - a).abs() < 1e-6,
            "θ0 = {theta0}, p = {p}, N = {n}: {}",
            prof.a
        );
        assert!(prof.mismatch.abs() < 1e-8);
    }
    for p in [1.5, 2.0, 3.0, 4.0] {
        let prof = exponent_for_opening(FRAC_PI_2, &spec(p, 3, Kind::Regular, 0.0), 1e-8).unwrap();
        assert!((prof.a - 1.0).abs() < 1e-6, "p = {p}: {}", prof.a);
    }
}

#[test]
fn profile_invariants() {
    for (p, n, kind, c, theta0) in [
        (3.0, 2, Kind::Singular, 0.0, PI),
        (1.5, 2, Kind::Singular, 1.0, 0.75 * PI),
        (2.5, 3, Kind::Singular, 0.5, 2.0),
        (4.0, 4, Kind::Regular, 0.0, 1.0),
    ] {
        let prof = exponent_for_opening(theta0, &spec(p, n, kind, c), 1e-8).unwrap();
        let last = prof.eta.len() - 1;
        assert!(prof.eta[1..last].iter().all(|&e| e > 0.0));
        assert!(prof.eta[last].abs() < 1e-6 * prof.max_eta());
        let expected = lambda_of(prof.a, p, n, kind);
        assert_eq!(prof.lambda, expected);
        match prof.geometry {
            AngularGeometry::PlanarSector => assert_eq!(prof.eta[0], 0.0),
            AngularGeometry::AxisymmetricCap => assert!(prof.deta[0].abs() < 1e-2),
        }
    }
}

#[test]
fn separable_fields_match_closed_forms() {
    let g = Arc::new(
        PolarGrid::graded(
            GridGeometry::Planar,
            PI,
            1.0,
            33,
            33,
            1.0 / 32.0,
            Grading::Auto,
        )
        .unwrap(),
    );
    let reg = exponent_for_opening(PI, &spec(2.0, 2, Kind::Regular, 0.0), 1e-10).unwrap();
    let f = separable_field(&reg, &g).unwrap();
    let scale = reg.max_eta();
    for n in 0..g.len() {
        let exact = g.r(n) * g.theta(n).sin() * scale;
        assert!((f.value(n) - exact).abs() < 1e-8 * scale);
    }
    let sing = exponent_for_opening(PI, &spec(2.0, 2, Kind::Singular, 0.0), 1e-10).unwrap();
    let f = separable_field(&sing, &g).unwrap();
    for n in 0..g.len() {
        let exact = g.theta(n).sin() / g.r(n) * sing.max_eta();
        assert!((f.value(n) - exact).abs() < 1e-8 * exact.abs().max(1.0));
    }
    let wrong = Arc::new(
        PolarGrid::graded(
            GridGeometry::Planar,
            FRAC_PI_2,
            1.0,
            9,
            9,
            0.1,
            Grading::Auto,
        )
        .unwrap(),
    );
    assert!(matches!(
        separable_field(&sing, &wrong),
        Err(ExponentError::Input(_))
    ));
}

#[test]
fn separable_field_residual_vanishes_under_refinement() {
    for (p, c) in [(1.5, 0.0), (3.0, 1.0)] {
        let prof = exponent_for_opening(PI, &spec(p, 2, Kind::Singular, c), 1e-10).unwrap();
        let pot = PotentialSpec::inverse_power(c).unwrap();
        let res: Vec<f64> = [1usize, 2, 4]
            .iter()
            .map(|&k| {
                let g = Arc::new(
                    PolarGrid::graded(
                        GridGeometry::Planar,
                        PI,
                        1.0,
                        16 * k + 1,
                        16 * k + 1,
                        1.0 / 16.0,
                        Grading::Auto,
                    )
                    .unwrap(),
                );
                weak_residual(&separable_field(&prof, &g).unwrap(), p, pot)
            })
            .collect();
        assert!(res[1] < res[0] / 3.0 && res[2] < res[1] / 3.0, "{res:?}");
    }
}

fn trapezoid(x: &[f64], y: impl Fn(usize) -> f64) -> f64 {
    (1..x.len())
        .map(|k| 0.5 * (x[k] - x[k - 1]) * (y(k) + y(k - 1)))
        .sum()
}

/// For `p = 2` the Rayleigh quotient of `η` with weight `sin^{N−2}θ` is the
/// Laplace–Beltrami eigenvalue, which must equal `λ(a)`.
#[test]
fn p2_rayleigh_quotient_matches_lambda() {
    for (n, kind, theta0) in [
        (2, Kind::Singular, 0.75 * PI),
        (2, Kind::Regular, 1.3 * PI),
        (3, Kind::Singular, 2.0),
        (3, Kind::Regular, 1.0),
        (5, Kind::Singular, FRAC_PI_2),
    ] {
        let prof = exponent_for_opening(theta0, &spec(2.0, n, kind, 0.0), 1e-10).unwrap();
        let w = |k: usize| {
            if n == 2 {
                1.0
            } else {
                prof.theta[k].sin().powi(n as i32 - 2)
            }
        };
        let num = trapezoid(&prof.theta, |k| prof.deta[k].powi(2) * w(k));
        let den = trapezoid(&prof.theta, |k| prof.eta[k].powi(2) * w(k));
        let rq = num / den;
        assert!(
            (rq - prof.lambda).abs() < 1e-4 * prof.lambda,
            "N = {n}: {rq} vs {}",
            prof.lambda
        );
    }
}

#[test]
fn regular_and_singular_profiles_coexist() {
    for (p, n, theta0) in [(2.0, 3, 1.2), (3.0, 3, 2.0), (1.5, 2, 2.5)] {
        let g = exponent_for_opening(theta0, &spec(p, n, Kind::Regular, 0.0), 1e-8).unwrap();
        let b = exponent_for_opening(theta0, &spec(p, n, Kind::Singular, 0.0), 1e-8).unwrap();
        for prof in [&g, &b] {
            assert!(prof.eta[1..prof.eta.len() - 1].iter().all(|&e| e > 0.0));
        }
        if p == 2.0 {
            // same eigenvalue, so β = γ + N − 2
            assert!((b.a - g.a - (n as f64 - 2.0)).abs() < 1e-6);
        }
    }
}

#[test]
fn exponent_is_nondecreasing_in_c() {
    for (p, n, theta0) in [
        (2.0, 2, PI),
        (3.0, 2, PI),
        (1.5, 2, PI),
        (3.0, 3, FRAC_PI_2),
    ] {
        let a: Vec<f64> = [0.0, 0.5, 1.0, 2.0]
            .iter()
            .map(|&c| {
                exponent_for_opening(theta0, &spec(p, n, Kind::Singular, c), 1e-8)
                    .unwrap()
                    .a
            })
            .collect();
        assert!(
            a.windows(2).all(|w| w[1] >= w[0]),
            "p = {p}, N = {n}: {a:?}"
        );
    }
    let a = exponent_for_opening(PI, &spec(2.0, 2, Kind::Singular, 1.0), 1e-10)
        .unwrap()
        .a;
    assert!((a - 2f64.sqrt()).abs() < 1e-6);
}

#[test]
fn first_zero_angle_is_continuous_in_a() {
    let s = spec(3.0, 2, Kind::Singular, 0.5);
    let a0 = exponent_for_opening(PI, &s, 1e-8).unwrap().a;
    let t: Vec<f64> = (0..101)
        .map(|k| angular_shoot(a0 * (0.8 + 0.004 * k as f64), &s).unwrap())
        .collect();
    let jumps: Vec<f64> = t.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(
        jumps.windows(2).all(|j| (j[1] - j[0]).abs() < 0.2 * j[0]),
        "{jumps:?}"
    );
    assert!(t.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn error_reports() {
    let s = spec(2.0, 2, Kind::Singular, 0.0);
    assert!(matches!(
        exponent_for_opening(0.05, &s, 1e-8),
        Err(ExponentError::Range { .. })
    ));
    assert!(matches!(
        exponent_for_opening(7.0, &s, 1e-8),
        Err(ExponentError::Input(_))
    ));
    assert!(matches!(
        angular_shoot(-1.0, &s),
        Err(ExponentError::Input(_))
    ));
    assert_eq!(
        angular_shoot(1e-3, &spec(2.0, 3, Kind::Regular, 0.0)).unwrap(),
        f64::INFINITY
    );
    assert!(ShootSpec::new(
        2.0,
        2,
        Kind::Singular,
        0.0,
        AngularGeometry::AxisymmetricCap
    )
    .is_err());
    assert!(ShootSpec::new(2.0, 3, Kind::Singular, 0.0, AngularGeometry::PlanarSector).is_err());
    assert!(ShootSpec::new(1.0, 2, Kind::Singular, 0.0, AngularGeometry::PlanarSector).is_err());
    assert!(ShootSpec::new(2.0, 2, Kind::Singular, -1.0, AngularGeometry::PlanarSector).is_err());
}

#[test]
fn csv_outputs() {
    let prof = exponent_for_opening(PI, &spec(2.0, 2, Kind::Singular, 0.0), 1e-8).unwrap();
    let mut buf = Vec::new();
    write_table(&[prof.table_row()], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,N,theta0,kind,c,a,lambda"));
    assert!(lines.next().unwrap().starts_with("2,2,"));
    let mut buf = Vec::new();
    prof.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("theta,eta"));
    assert_eq!(text.lines().count(), prof.theta.len() + 1);
}

/// `x_N`, `x_N/|x|^N` (p = 2) and `x_N/|x|²` (p = N) all restrict to `cos θ` on the
/// upper hemisphere; the shooting profiles must reproduce that shape.
#[test]
fn axisymmetric_profiles_match_cosine() {
    let cases = [
        (1.5, 3, Kind::Regular, 1.0),
        (3.0, 3, Kind::Regular, 1.0),
        (2.0, 3, Kind::Singular, 2.0),
        (2.0, 4, Kind::Singular, 3.0),
        (3.0, 3, Kind::Singular, 1.0),
    ];
    for (p, n, kind, a) in cases {
        let prof = exponent_for_opening(FRAC_PI_2, &spec(p, n, kind, 0.0), 1e-10).unwrap();
        assert!((prof.a - a).abs() < 1e-7, "p = {p}, N = {n}: a = {}", prof.a);
        let err = (0..=200)
            .map(|k| {
                let t = FRAC_PI_2 * k as f64 / 200.0;
                (prof.eta_at(t).unwrap() - t.cos()).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "p = {p}, N = {n}: {err:e}");
    }
}
