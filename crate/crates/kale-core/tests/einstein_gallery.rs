//! Gallery-level checks of the compactified family: the scalar curvature
//! triangulated by independent routes, the Einstein rescalings in every
//! regime, the Green-type identity, and the orientation flip.

use kale_core::chart::{curvature_at, weyl_split, ChartPoint, Orientation};
use kale_core::einstein::{
    best_fit_einstein_constant, compact_metric, conformal_laplacian_residual,
    einstein_certificate, einstein_constant, greens_function_check, regime_report,
    ricci_flat_proportionality, scalar_hat_root, scalar_hat_routes, Regime,
};

fn radial_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

#[test]
fn three_scalar_routes_triangulate() {
    let rs = radial_grid(1.1, 20.0, 50);
    for &beta in &[0.5, 1.0, 2.0, 3.0] {
        let routes = scalar_hat_routes(beta, &rs).expect("routes evaluate");
        let spread = routes.iter().map(|r| r.spread()).fold(0.0f64, f64::max);
        assert!(spread < 1e-4, "beta = {beta}: route spread {spread}");
    }
}

#[test]
fn unit_parameter_is_constant_and_split_parameter_has_a_root() {
    let rs = radial_grid(1.2, 20.0, 25);
    for routes in scalar_hat_routes(1.0, &rs).expect("routes evaluate") {
        assert!((routes.pipeline - 24.0).abs() < 1e-6, "pipeline {}", routes.pipeline);
    }
    let root = scalar_hat_root(3.0).expect("sign change exists");
    assert!((root * root - 4.0).abs() < 1e-6, "root {root}");
}

#[test]
fn einstein_rescalings_verify_in_both_signed_regimes() {
    for &beta in &[0.5, 1.5] {
        let defect = einstein_certificate(beta, &[1.3, 2.0, 4.0]).expect("certificate runs");
        assert!(defect < 1e-4, "beta = {beta}: defect {defect}");
        let fit = best_fit_einstein_constant(beta, &[1.3, 2.0, 4.0]).expect("fit runs");
        let formula = einstein_constant(beta);
        assert!((fit - formula).abs() / formula.abs() < 1e-3, "fit {fit} vs {formula}");
    }
    // both sides of the sign change of the compactified scalar curvature
    let defect = einstein_certificate(3.0, &[1.5, 1.8, 2.5, 3.5]).expect("certificate runs");
    assert!(defect < 1e-4, "split regime defect {defect}");
    assert_eq!(einstein_constant(3.0), -54.0);
}

#[test]
fn boundary_parameter_is_proportional_to_the_family_metric() {
    let (constant, defect) =
        ricci_flat_proportionality(&[1.4, 2.0, 5.0]).expect("comparison runs");
    assert!((constant - 0.25).abs() < 1e-10, "constant {constant}");
    assert!(defect < 1e-8, "proportionality defect {defect}");
}

#[test]
fn squared_radius_is_a_conformal_green_function() {
    let radii = [1.3, 1.7, 2.2, 3.0, 4.5];
    for &k in &[1.0, 2.0, 3.0] {
        let residual = greens_function_check(k, &radii).expect("identity evaluates");
        assert!(residual < 1e-5, "k = {k}: residual {residual}");
    }
    // wrong conformal coefficient must leave a visible residual
    let control = conformal_laplacian_residual(1.0, &radii, 5.0).expect("control evaluates");
    assert!(control >= 0.01, "control residual {control}");
}

#[test]
fn compactification_reverses_the_distinguished_orientation() {
    // the family metric concentrates its Weyl curvature in one chirality;
    // after the rescaling the distinguished half sits in the other one
    let beta = 3.0;
    let hat = compact_metric(beta).expect("compactified field");
    let p = ChartPoint::new(vec![2.4, 1.1, 0.7, 2.0]).expect("frame point");
    let report = curvature_at(&hat, &p, 1e-3).expect("inside chart");
    let (_, minus_rev) = weyl_split(&report, Orientation::Negative).expect("dimension 4");
    let (_, minus_std) = weyl_split(&report, Orientation::Positive).expect("dimension 4");
    assert!(minus_rev.norm() < 1e-5, "reversed-orientation block {}", minus_rev.norm());
    assert!(minus_std.norm() > 0.01, "standard-orientation block {}", minus_std.norm());
}

#[test]
fn regimes_classify_and_serialize() {
    let report = regime_report(1.5).expect("classification runs");
    assert_eq!(report.regime, Regime::PositiveEinstein);
    assert_eq!(report.einstein_constant, 6.75);

    let report = regime_report(4.0).expect("classification runs");
    assert_eq!(report.regime, Regime::AheSplit);
    assert_eq!(report.einstein_constant, -192.0);
    assert_eq!(report.zero_locus_r_sq, Some(3.0));

    let text = serde_json::to_string(&report).expect("serializes");
    assert!(text.contains("\"ahe-split\""), "serialized form {text}");
}
