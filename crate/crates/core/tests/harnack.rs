use std::f64::consts::PI;
use std::sync::Arc;

use bhlab::error::{Error, GeometryError, HarnackError};
use bhlab::exponents::{exponent_for_opening, separable_field, AngularGeometry, Kind, ShootSpec};
use bhlab::geometry::{GridGeometry, Point, PolarGrid};
use bhlab::harnack::*;
use bhlab::solver::{solve_dirichlet, BoundaryData, PotentialSpec, ScalarField};

const EPS: f64 = 1.0 / 256.0;

/// Half-disk grid with `8k` rings per octave and `32k + 1` angles.
fn grid(k: usize) -> Arc<PolarGrid> {
    Arc::new(PolarGrid::dyadic(GridGeometry::Planar, PI, 1.0, EPS, 8 * k, 32 * k + 1).unwrap())
}

fn solve(g: &Arc<PolarGrid>, p: f64, c: f64) -> ScalarField {
    let pot = if c == 0.0 {
        PotentialSpec::Zero
    } else {
        PotentialSpec::inverse_power(c).unwrap()
    };
    let data = BoundaryData::from_fn(g, |r, t| t.sin() / r);
    solve_dirichlet(g, p, pot, &data, 1e-9).unwrap()
}

fn refinement_stable(v: &[f64], rel: f64) -> bool {
    let (a, b) = (v[v.len() - 2], v[v.len() - 1]);
    (a - b).abs() <= rel * b.abs()
}

fn harmonic(g: &Arc<PolarGrid>) -> ScalarField {
    ScalarField::from_fn(g.clone(), |r, t| t.sin() / r)
}

#[test]
fn interior_harnack_examples() {
    let g = grid(2);
    let one = ScalarField::from_fn(g.clone(), |_, _| 1.0);
    assert_eq!(
        interior_harnack(&one, Point::new(0.2, 0.5), 0.1)
            .unwrap()
            .value,
        1.0
    );
    let p = Point::new(0.1, 0.4);
    let v: Vec<f64> = (1..=3)
        .map(|k| interior_harnack(&harmonic(&grid(k)), p, 0.1).unwrap().value)
        .collect();
    assert!(refinement_stable(&v, 0.05), "{v:?}");
    let exact = {
        let f = |x: Point| x.y / (x.x * x.x + x.y * x.y);
        let vals: Vec<f64> = (0..=2000)
            .flat_map(|k| {
                let t = 0.1 * (k / 40) as f64 / 50.0;
                let a = 2.0 * PI * (k % 40) as f64 / 40.0;
                [f(p + Point::from_polar(t, a))]
            })
            .collect();
        vals.iter().copied().fold(0.0, f64::max)
            / vals.iter().copied().fold(f64::INFINITY, f64::min)
    };
    assert!((v[2] / exact - 1.0).abs() < 0.05, "{} vs {exact}", v[2]);
    assert!(matches!(
        interior_harnack(&one, Point::new(0.5, 0.1), 0.1),
        Err(Error::Geometry(GeometryError::BallOutside { .. }))
    ));
    assert!(matches!(
        interior_harnack(&one, Point::new(0.0, 0.3), 0.1),
        Err(Error::Harnack(HarnackError::Sampling(_)))
    ));
}

#[test]
fn interior_harnack_is_scale_invariant_with_potential() {
    let g = grid(2);
    let u = solve(&g, 3.0, 1.0);
    let p = Point::new(0.02, 0.08);
    let a = interior_harnack(&u, p, 0.02).unwrap().value;
    let b = interior_harnack(&u, p * 0.5, 0.01).unwrap().value;
    assert!((a / b - 1.0).abs() < 0.05, "{a} vs {b}");
}

#[test]
fn chained_harnack_examples() {
    let g = grid(2);
    let u = harmonic(&g);
    let q = Point::new(0.5, 0.0);
    let c: Vec<f64> = (1..=4)
        .map(|h| chained_harnack(&u, q, 0.1, h).unwrap().value)
        .collect();
    assert!(c[0] >= 1.0);
    assert!(c.windows(2).all(|w| w[1] <= w[0]), "{c:?}");
    let scaled = chained_harnack(&u.scaled(7.0), q, 0.1, 3).unwrap().value;
    assert!((scaled - c[2]).abs() <= 1e-12 * c[2]);
    assert!(chained_harnack(&u, q, 0.1, 0).is_err());
}

#[test]
fn boundary_decay_examples() {
    let g = grid(2);
    let x2 = ScalarField::from_fn(g.clone(), |r, t| r * t.sin());
    let q = Point::new(0.5, 0.0);
    assert!((boundary_decay(&x2, q, 0.1).unwrap().delta - 1.0).abs() < 1e-3);
    let d: Vec<f64> = (1..=3)
        .map(|k| {
            boundary_decay(&solve(&grid(k), 3.0, 0.0), Point::new(-0.3, 0.0), 0.1)
                .unwrap()
                .delta
        })
        .collect();
    assert!(d.iter().all(|&x| x > 0.0 && x <= 1.0 + 1e-2), "{d:?}");
    assert!(refinement_stable(&d, 0.1), "{d:?}");
    assert!(matches!(
        boundary_decay(&x2, Point::new(0.0, 0.0), 0.1),
        Err(HarnackError::Sampling(_))
    ));
    let zero = ScalarField::from_fn(g, |_, _| 0.0);
    assert!(matches!(
        boundary_decay(&zero, q, 0.1),
        Err(HarnackError::Sampling(_))
    ));
}

#[test]
fn carleson_examples() {
    let g = grid(2);
    let u = harmonic(&g);
    let vals: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&r| {
            carleson_constant(&u, Point::new(4.0 * r, 0.0), r)
                .unwrap()
                .value
        })
        .collect();
    assert!(vals.iter().all(|v| v.is_finite() && *v >= 1.0));
    assert!((vals[1] / vals[2] - 1.0).abs() < 0.1, "{vals:?}");
    let k = carleson_constant(&u.scaled(0.3), Point::new(0.2, 0.0), 0.05)
        .unwrap()
        .value;
    assert!((k - vals[2]).abs() <= 1e-12 * k);
    let radial = ScalarField::from_fn(g, |r, t| t.sin() * (1.0 / r - r));
    for r in [0.05, 0.1, 0.2] {
        assert!(
            carleson_constant(&radial, Point::new(-0.5, 0.0), r)
                .unwrap()
                .value
                >= 1.0
        );
    }
}

#[test]
fn two_sided_slope_examples() {
    let q = Point::new(0.4, 0.0);
    let x2 = ScalarField::from_fn(grid(2), |r, t| r * t.sin());
    assert!((two_sided_slope(&x2, q, 0.1, TWO_SIDED_B).unwrap().value - 2.0).abs() < 1e-3);
    let c: Vec<f64> = (1..=3)
        .map(|k| {
            two_sided_slope(&solve(&grid(k), 3.0, 1.0), q, 0.1, TWO_SIDED_B)
                .unwrap()
                .value
        })
        .collect();
    assert!(c.iter().all(|v| v.is_finite() && *v >= 1.0));
    assert!(refinement_stable(&c, 0.1), "{c:?}");
    let u = harmonic(&grid(2));
    let a = two_sided_slope(&u, q, 0.1, TWO_SIDED_B).unwrap().value;
    let b = two_sided_slope(&u.scaled(5.0), q, 0.1, TWO_SIDED_B)
        .unwrap()
        .value;
    assert!((a - b).abs() <= 1e-12 * a);
    // both envelopes bracket every sampled ratio
    let uq = u.sample(q + Point::new(0.0, 0.05)).unwrap();
    for j in 0..=5 {
        let t = 0.1 * TWO_SIDED_B / 2.0 * 2f64.powi(-j);
        let ratio = u.sample(q + Point::new(0.0, t)).unwrap() / uq;
        assert!(t / (a * 0.1) <= ratio * (1.0 + 1e-12) && ratio <= a * t / 0.1 * (1.0 + 1e-12));
    }
    let zero = ScalarField::from_fn(grid(1), |_, _| 0.0);
    assert!(matches!(
        two_sided_slope(&zero, q, 0.1, TWO_SIDED_B),
        Err(HarnackError::Degenerate { .. })
    ));
}

#[test]
fn apriori_examples() {
    let g = grid(2);
    let a = Point::new(0.0, 0.5);
    let fit = apriori_alpha(&harmonic(&g), a).unwrap();
    assert!(
        (fit.upper_slope + 2.0).abs() < 1e-6 && (fit.lower_slope + 2.0).abs() < 1e-6,
        "{fit:?}"
    );
    assert!((fit.alpha - 1.0).abs() < 1e-6);
    let spec = ShootSpec::new(3.0, 2, Kind::Regular, 0.0, AngularGeometry::PlanarSector).unwrap();
    let prof = exponent_for_opening(0.75 * PI, &spec, 1e-10).unwrap();
    let sector =
        Arc::new(PolarGrid::dyadic(GridGeometry::Planar, 0.75 * PI, 1.0, EPS, 16, 65).unwrap());
    let reg = separable_field(&prof, &sector).unwrap();
    let fit = apriori_alpha(&reg, Point::from_polar(0.5, 0.375 * PI)).unwrap();
    // u/ρ ~ |x|^{γ−1} on every annulus away from the far corner of the sector
    assert!(
        (fit.upper_slope - (prof.a - 1.0)).abs() < 0.02,
        "{fit:?} γ = {}",
        prof.a
    );
    let s = apriori_alpha(&reg.scaled(9.0), Point::from_polar(0.5, 0.375 * PI)).unwrap();
    assert!((s.alpha - fit.alpha).abs() < 1e-12);
    assert!(matches!(
        apriori_alpha(&harmonic(&g), Point::new(0.0, 0.02)),
        Err(HarnackError::Sampling(_))
    ));
}

#[test]
fn uniformity_examples() {
    let spec = ShootSpec::new(3.0, 2, Kind::Singular, 1.0, AngularGeometry::PlanarSector).unwrap();
    let prof = exponent_for_opening(PI, &spec, 1e-10).unwrap();
    let g = grid(2);
    let v = separable_field(&prof, &g).unwrap();
    let a = ratio_uniformity(&v, 0.1).unwrap();
    let b = ratio_uniformity(&v, 0.05).unwrap();
    assert!((a.c9.value / b.c9.value - 1.0).abs() < 0.01, "{a:?} {b:?}");
    assert!((a.c9_prime / b.c9_prime - 1.0).abs() < 0.01);
    let x2 = ScalarField::from_fn(g, |r, t| r * t.sin());
    let u = ratio_uniformity(&x2, 0.1).unwrap();
    assert!(u.c9.value <= 4.0);
    let s = ratio_uniformity(&v.scaled(2.0), 0.1).unwrap();
    assert!((s.c9.value - a.c9.value).abs() < 1e-12 && (s.c9_prime - a.c9_prime).abs() < 1e-12);
}

#[test]
fn boundary_harnack_examples() {
    let g = grid(2);
    let u = solve(&g, 2.0, 0.0);
    let v = u.scaled(4.0);
    assert!(
        (boundary_harnack(&u, &v, Point::new(0.4, 0.0), 0.1)
            .unwrap()
            .value
            - 1.0)
            .abs()
            < 1e-12
    );
    assert!((boundary_harnack_annulus(&u, &v, 0.25).unwrap().value - 1.0).abs() < 1e-12);
    let reg = ScalarField::from_fn(g.clone(), |r, t| r * t.sin());
    let c = boundary_harnack_annulus(&reg, &u, 0.25).unwrap();
    assert!(c.value.is_finite() && c.value > 1.0);
    let other = Arc::new(PolarGrid::dyadic(GridGeometry::Planar, PI, 1.0, EPS, 8, 33).unwrap());
    let w = harmonic(&other);
    assert!(matches!(
        boundary_harnack_annulus(&u, &w, 0.25),
        Err(HarnackError::Incompatible)
    ));
}

#[test]
fn singularity_and_quotient() {
    let g = grid(2);
    for (p, c) in [(2.0, 0.0), (3.0, 0.0), (1.5, 1.0)] {
        let spec = ShootSpec::new(p, 2, Kind::Singular, c, AngularGeometry::PlanarSector).unwrap();
        let prof = exponent_for_opening(PI, &spec, 1e-10).unwrap();
        let rep = singularity_test(&separable_field(&prof, &g).unwrap());
        assert_eq!(rep.verdict, Verdict::Singular, "p = {p}: {:?}", rep.growth);
    }
    let rep = singularity_test(&ScalarField::from_fn(g.clone(), |r, t| r * t.sin()));
    assert_eq!(rep.verdict, Verdict::Bounded);
    let u = solve(&g, 3.0, 0.0);
    let q = quotient_constancy(&u, &u.scaled(3.0), 0.0, 0.5).unwrap();
    assert!((q.k - 3.0).abs() < 1e-12 && q.deviation < 1e-12);
}

#[test]
fn report_outputs() {
    let g = grid(1);
    let mut rep = HarnackReport::default();
    rep.push("harn-int", vec![0.1], 1.5, &g, 0, 0);
    rep.push("bhi2", vec![0.25, 0.5], 2.0, &g, 3, 2);
    let json = serde_json::to_value(&rep).unwrap();
    assert_eq!(json["records"][1]["radii"][1], 0.5);
    assert!(rep
        .records
        .iter()
        .all(|r| !r.radii.is_empty() && r.constant > 0.0));
    let mut buf = Vec::new();
    rep.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("estimate_id,r,constant"));
    assert_eq!(text.lines().count(), 3);
}
