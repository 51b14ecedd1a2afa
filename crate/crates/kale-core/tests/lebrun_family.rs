//! Family-level checks: scalar-flatness certificates across the cone
//! parameter sweep, cone angles, recovery of the radial potential from the
//! profile, chart agreement, and asymptotic decay.

use kale_core::compactify::ale_decay_rate;
use kale_core::lebrun::{
    complex_embedding, cone_angle_estimate, lebrun_metric, potential_radius, recover_potential,
    scalar_flat_certificate, LebrunChart,
};
use kale_core::chart::ChartPoint;

use std::f64::consts::PI;

#[test]
fn certificates_hold_across_the_parameter_sweep() {
    let radii = [1.3, 2.0, 3.5, 5.0, 10.0];
    for &beta in &[0.5, 1.0, 2.0, 3.0] {
        let (scalar, weyl_plus) =
            scalar_flat_certificate(beta, &radii).expect("certificate runs");
        assert!(scalar < 1e-5, "beta = {beta}: scalar {scalar}");
        assert!(weyl_plus < 1e-5, "beta = {beta}: self-dual Weyl {weyl_plus}");
    }
}

#[test]
fn cone_angles_track_the_parameter() {
    for &beta in &[0.5, 1.0, 2.0, 3.0] {
        let angle = cone_angle_estimate(beta).expect("angle resolves");
        let expected = 2.0 * PI * beta;
        let rel = (angle - expected).abs() / expected;
        assert!(rel < 1e-3, "beta = {beta}: angle {angle} vs {expected} (rel {rel})");
    }
}

#[test]
fn recovered_profile_matches_the_closed_form_at_unit_parameter() {
    // at beta = 1 the radial potential derivative is (z + 1)/z exactly
    let phi = recover_potential(1.0, (1.05, 12.0), 1e-10).expect("recovery integrates");
    let mut worst = 0.0f64;
    for i in 0..40 {
        let r: f64 = 1.1 + (10.0 - 1.1) * i as f64 / 39.0;
        let z = r * r - 1.0;
        let expected = (z + 1.0) / z;
        let got = phi.d1(z).expect("inside recovered domain");
        worst = worst.max((got - expected).abs() / expected);
    }
    assert!(worst < 1e-8, "profile defect {worst}");
}

#[test]
fn frame_and_recovered_charts_describe_one_metric() {
    for &beta in &[1.0, 2.0, 3.0] {
        let frame = lebrun_metric(beta, LebrunChart::Frame).expect("frame chart");
        let complex = lebrun_metric(beta, LebrunChart::Complex).expect("recovered chart");
        for &(r, theta, phi_a, psi) in
            &[(1.2, 0.8, 0.5, 1.1), (2.5, 1.9, 3.0, 4.0), (6.0, 2.3, 5.5, 0.7)]
        {
            let q = ChartPoint::new(vec![r, theta, phi_a, psi]).expect("frame point");
            let (p, jac) = complex_embedding(beta, &q).expect("embedding");
            let g_frame = frame.value(&q).expect("inside frame chart");
            let g_complex = complex.value(&p).expect("inside recovered chart");
            let pulled = jac.transpose() * g_complex * &jac;
            let rel = (&g_frame - &pulled).norm() / g_frame.norm();
            assert!(rel < 1e-6, "beta = {beta}, r = {r}: round-trip defect {rel}");
        }
    }
}

#[test]
fn family_metric_decays_at_the_stated_rate() {
    let field = lebrun_metric(3.0, LebrunChart::Complex).expect("recovered chart");
    let radii = [10.0, 15.0, 22.0, 33.0, 47.0, 68.0, 100.0];
    let tau = ale_decay_rate(&field, &radii).expect("monotone decay");
    assert!((tau - 2.0).abs() < 0.1, "fitted rate {tau}");
}

#[test]
fn conformal_factor_is_normalized_at_infinity() {
    // 1/phi'(z(r)) is the conformal factor times the squared chart radius;
    // it must stay within ten percent of one far out
    let phi = recover_potential(3.0, (1.05, 150.0), 1e-10).expect("recovery integrates");
    for i in 0..10 {
        let r = 10.0 + 90.0 * i as f64 / 9.0;
        let z = potential_radius(3.0, r).expect("inside chart").value();
        let d1 = phi.d1(z).expect("inside recovered domain");
        let product = 1.0 / d1;
        assert!((0.9..=1.1).contains(&product), "r = {r}: u times squared radius {product}");
    }
}
