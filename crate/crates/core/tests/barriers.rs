use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use bhlab::barriers::*;
use bhlab::error::{BarrierError, Error};
use bhlab::geometry::{DomainSpec, Grading, GridGeometry, Point, PolarGrid};
use bhlab::solver::{
    eigen_annulus_radial, solve_dirichlet, BoundaryData, PotentialSpec, RadialEigenpair, Slack,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `e^x` for rational `x ≥ 0` by its Taylor series, summed exactly.
fn exp_exact(x: &BigRational, terms: u32) -> BigRational {
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    for k in 1..=terms {
        sum += &term;
        term = term * x / BigRational::from_integer(BigInt::from(k));
    }
    sum
}

#[test]
fn lower_threshold_closed_forms() {
    assert_eq!(lower_barrier_params(2.0, 2, 0.0).unwrap().a, 16.0);
    assert_eq!(lower_barrier_params(2.0, 3, 0.0).unwrap().a, 24.0);
    let a = lower_barrier_params(2.0, 2, 1.0).unwrap().a;
    assert!((a - (8.0 + 72f64.sqrt())).abs() < 1e-10);
    for (p, n, c) in [(1.5, 2, 0.3), (3.0, 3, 2.0), (4.0, 2, 10.0)] {
        let lp = lower_barrier_params(p, n, c).unwrap();
        assert!((lower_condition(lp.a, p, n) - c).abs() <= 1e-10 * c.max(1.0));
        assert!((lp.alpha * (p - 1.0) - p).abs() < 1e-15);
    }
    assert!(matches!(
        lower_barrier_params(1.0, 2, 0.0),
        Err(BarrierError::Input(_))
    ));
    assert!(matches!(
        lower_barrier_params(2.0, 2, -1.0),
        Err(BarrierError::Input(_))
    ));
}

#[test]
fn lower_threshold_increases_with_c0() {
    for p in [1.5, 2.0, 3.0] {
        let a: Vec<f64> = [0.0, 0.1, 1.0, 4.0, 20.0]
            .iter()
            .map(|&c| lower_barrier_params(p, 2, c).unwrap().a)
            .collect();
        assert!(a.windows(2).all(|w| w[1] > w[0]), "{a:?}");
    }
}

#[test]
fn lower_profile_values() {
    let lp = lower_barrier_params(2.0, 2, 0.0).unwrap();
    let c = lp.center;
    assert!(eval_lower_barrier(&lp, Point::new(c.x + lp.r / 2.0, c.y)).abs() < 1e-15);
    assert!((eval_lower_barrier(&lp, Point::new(c.x, c.y + lp.r / 4.0)) - 1.0).abs() < 1e-15);
    // s = r/3 with a = 16, α = 2: (e^{−16/9} − e^{−4}) / (e^{−1} − e^{−4})
    let terms = 120;
    let inv = |x: BigRational| BigRational::one() / exp_exact(&x, terms);
    let (e1, e4, e16) = (inv(rat(1, 1)), inv(rat(4, 1)), inv(rat(16, 9)));
    let exact = ((e16 - &e4) / (e1 - e4)).to_f64().unwrap();
    let v = eval_lower_barrier(&lp, Point::new(c.x + lp.r / 3.0, c.y));
    assert!((v - exact).abs() <= 1e-14 * exact, "{v} vs {exact}");
}

#[test]
fn lower_barrier_slope_is_positive() {
    for (p, n, c) in [(2.0, 2, 0.0), (1.5, 3, 1.0), (3.0, 2, 2.0)] {
        let lp = lower_barrier_params(p, n, c).unwrap();
        let cp = lp.slope_constant();
        assert!(cp > 0.0);
        for k in 1..=100 {
            let t = lp.r / 2.0 * k as f64 / 100.0;
            assert!(lp.profile(lp.r / 2.0 - t) >= cp * t / lp.r * (1.0 - 1e-12));
        }
    }
}

#[test]
fn lower_certificates() {
    for (p, n, c) in [(2.0, 2, 0.0), (1.5, 2, 1.0), (3.0, 3, 0.5), (4.0, 2, 2.0)] {
        let lp = lower_barrier_params(p, n, c).unwrap();
        let cert = certify_barrier(Barrier::Lower(&lp), CERT_TOL).unwrap();
        assert!(cert.passed(), "p = {p}, N = {n}: worst {}", cert.worst);
        assert_eq!(cert.annulus, [lp.r / 4.0, lp.r / 2.0]);
        let mut weak = lp.clone();
        weak.a /= 2.0;
        let cert = certify_barrier(Barrier::Lower(&weak), CERT_TOL).unwrap();
        assert!(!cert.passed(), "halved a passed for p = {p}");
        assert!(cert.failures.len() < cert.checked);
    }
}

fn placement(dom: &DomainSpec) -> UpperPlacement<'_> {
    UpperPlacement {
        dom,
        q: Point::new(1.0, 0.0),
        p_point: Point::new(1.0, 0.0),
        r: 0.5,
    }
}

#[test]
fn upper_barrier_values() {
    let dom = DomainSpec::half_disk(4.0).unwrap();
    let eigen = Arc::new(eigen_annulus_radial(2.0, 2).unwrap());
    let up = upper_barrier_params(eigen.clone(), 0.0, &placement(&dom), 2.5).unwrap();
    assert_eq!(up.b, 1.0 / 3.0);
    assert!(eigen.lambda1 / up.rb.powf(2.0) >= 1.0);
    let c = up.center;
    assert!((c.x - 1.0).abs() < 1e-15 && (c.y + up.rb).abs() < 1e-15);
    let at = |d: f64| eval_upper_barrier(&up, Point::new(c.x, c.y + d));
    assert!(at(up.rb).unwrap().abs() < 1e-14);
    assert!(at(3.0 * up.rb).unwrap().abs() < 1e-14);
    assert!((at(2.0 * up.rb).unwrap() - 2.5).abs() < 1e-12);
    assert!(matches!(
        at(0.5 * up.rb),
        Err(BarrierError::OutsideAnnulus { .. })
    ));
    assert!(matches!(
        at(3.5 * up.rb),
        Err(BarrierError::OutsideAnnulus { .. })
    ));
    let cl = eigen_linear_bound(&eigen);
    assert!(cl > 0.0);
    for k in 1..=50 {
        let s = 1.0 + k as f64 / 50.0;
        assert!(eigen.value(s).unwrap() <= cl * (s - 1.0) * (1.0 + 1e-12));
    }
}

#[test]
fn upper_b_shrinks_with_c0() {
    let dom = DomainSpec::half_disk(4.0).unwrap();
    let eigen = Arc::new(eigen_annulus_radial(3.0, 2).unwrap());
    let mut prev = 1.0;
    for c in [0.0, 10.0, 1e3, 1e5] {
        let up = upper_barrier_params(eigen.clone(), c, &placement(&dom), 1.0).unwrap();
        assert!(eigen.lambda1 / up.rb.powf(3.0) >= 1.0 + c);
        assert!(up.b <= prev);
        prev = up.b;
    }
    assert!(prev < 1.0 / 3.0);
    let err = upper_barrier_params(eigen, f64::INFINITY, &placement(&dom), 1.0).unwrap_err();
    assert!(matches!(
        err,
        Error::Barrier(BarrierError::NoAdmissibleB { .. })
    ));
}

#[test]
fn upper_certificates() {
    let dom = DomainSpec::half_disk(4.0).unwrap();
    for (p, n, c) in [(2.0, 2, 0.0), (1.5, 3, 1.0), (3.0, 2, 2.0)] {
        let eigen = Arc::new(eigen_annulus_radial(p, n).unwrap());
        let up = upper_barrier_params(eigen.clone(), c, &placement(&dom), 1.0).unwrap();
        let cert = certify_barrier(Barrier::Upper(&up), CERT_TOL).unwrap();
        assert!(cert.passed(), "p = {p}: worst {}", cert.worst);
        assert!(eigen_linear_bound(&eigen) > 0.0);
        // a potential bound far above λ₁/(rb)^p − 1 breaks the supersolution inequality
        let mut bad = up.clone();
        bad.c0_tilde = 4.0 * eigen.lambda1 / up.rb.powf(p);
        assert!(!certify_barrier(Barrier::Upper(&bad), CERT_TOL)
            .unwrap()
            .passed());
    }
}

/// A `p`-harmonic function below the barrier on the boundary of a sub-annulus stays below
/// it inside.
#[test]
fn solutions_stay_below_the_upper_barrier() {
    let dom = DomainSpec::half_disk(4.0).unwrap();
    for p in [1.5, 2.0, 3.0] {
        let eigen: Arc<RadialEigenpair> = Arc::new(eigen_annulus_radial(p, 2).unwrap());
        let up = upper_barrier_params(eigen.clone(), 0.0, &placement(&dom), 1.0).unwrap();
        let rb = up.rb;
        let grid = Arc::new(
            PolarGrid::graded(
                GridGeometry::Planar,
                FRAC_PI_2,
                2.8 * rb,
                97,
                33,
                1.2 * rb,
                Grading::Auto,
            )
            .unwrap(),
        );
        let inner = up.scale * eigen.value(1.2).unwrap();
        let data = BoundaryData::from_fn(&grid, |_, t| inner * (2.0 * t).sin());
        let u = solve_dirichlet(&grid, p, PotentialSpec::Zero, &data, 1e-9).unwrap();
        let slack = Slack::default();
        for id in 0..grid.len() {
            let phi = up.scale * eigen.value(grid.r(id) / rb).unwrap();
            let allowance = slack.at(&grid, id, inner, phi.max(u.value(id)));
            assert!(
                u.value(id) <= phi + allowance,
                "p = {p}, node {id}: {} > {phi}",
                u.value(id)
            );
        }
    }
}
