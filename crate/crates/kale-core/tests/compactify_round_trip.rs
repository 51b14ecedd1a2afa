//! End-to-end checks of the conformal rescaling: quadratured outer
//! potentials against their closed forms, the first-order system that links
//! the inner and outer profiles, the pullback identity, and decay rates.

use kale_core::compactify::{
    ale_decay_rate, compactified_metric, compactified_potential, compactified_potential_in_z,
    verify_ode_system, verify_pullback_identity,
};
use kale_core::potential::{metric_from_potential, outer_structure, RadialPotential};
use kale_core::chart::kahler_defect;
use kale_core::sample;

#[test]
fn outer_potentials_match_their_closed_forms() {
    // The outer potentials are only defined up to an affine gauge, so the
    // comparison anchors both sides at xi = 1 and compares differences;
    // first derivatives are gauge-free and compared directly.
    let flat = compactified_potential(&RadialPotential::flat(), 1.0).expect("anchor in domain");
    let burns = compactified_potential(&RadialPotential::burns(), 1.0).expect("anchor in domain");
    let flat_ref = flat.value(1.0).expect("anchor value");
    let burns_ref = burns.value(1.0).expect("anchor value");
    let mut worst = 0.0f64;
    for i in 0..50 {
        let xi = 0.01 + 0.99 * i as f64 / 49.0;
        let f = flat.jet(xi).expect("inside domain");
        worst = worst.max(((f.value() - flat_ref) - (xi - 1.0)).abs());
        worst = worst.max((f.derivative(1) - 1.0).abs());
        let b = burns.jet(xi).expect("inside domain");
        worst = worst.max(((b.value() - burns_ref) - ((1.0 + xi).ln() - 2.0f64.ln())).abs());
        worst = worst.max((b.derivative(1) - 1.0 / (1.0 + xi)).abs());
    }
    assert!(worst < 1e-9, "closed-form defect {worst}");
}

#[test]
fn first_order_system_residuals_are_tiny() {
    for phi in [RadialPotential::flat(), RadialPotential::burns()] {
        let hat = compactified_potential_in_z(&phi, 1.0).expect("anchor in domain");
        for i in 0..20 {
            let z = 0.05 + 6.95 * i as f64 / 19.0;
            let (r1, r2) = verify_ode_system(&phi, &hat, z).expect("inside domain");
            assert!(
                r1.abs() < 1e-10 && r2.abs() < 1e-10,
                "{}: residuals ({r1}, {r2}) at z = {z}",
                phi.label()
            );
        }
    }
}

#[test]
fn pullback_identity_holds_on_the_axis() {
    for phi in [RadialPotential::flat(), RadialPotential::burns()] {
        for &z in &[0.25, 1.0, 2.25, 4.0] {
            let residual = verify_pullback_identity(&phi, z).expect("inside domain");
            assert!(residual < 1e-8, "{}: residual {residual} at z = {z}", phi.label());
        }
    }
}

#[test]
fn rescaled_metrics_are_kahler_for_the_inverted_structure() {
    let outer = outer_structure(2);
    for phi in RadialPotential::builtins() {
        let hat = compactified_metric(&phi, 2);
        for p in sample::chart_points(2003, 10, 2, 1.4, 0.05) {
            let defect = kahler_defect(&hat, &outer, &p).expect("inside chart");
            assert!(
                defect.max() < 1e-6,
                "{}: defect {} at {:?}",
                phi.label(),
                defect.max(),
                p.coords()
            );
        }
    }
}

#[test]
fn decay_rates_separate_the_builtin_profiles() {
    let radii = [10.0, 16.0, 26.0, 42.0, 68.0, 110.0];
    // blow-up profile: the correction to phi' is 1/z, one power of the
    // squared radius, so the metric approaches Euclidean like r^-2
    let burns = metric_from_potential(&RadialPotential::burns(), 2);
    let tau_burns = ale_decay_rate(&burns, &radii).expect("monotone decay");
    assert!((tau_burns - 2.0).abs() < 0.05, "blow-up rate {tau_burns}");

    // cotangent-bundle profile: the correction is O(1/z^2), hence r^-4
    let eh = metric_from_potential(&RadialPotential::eguchi_hanson(), 2);
    let tau_eh = ale_decay_rate(&eh, &radii).expect("monotone decay");
    assert!((tau_eh - 4.0).abs() < 0.05, "cotangent-bundle rate {tau_eh}");

    // identity profile: already Euclidean, reported as infinitely fast
    let flat = metric_from_potential(&RadialPotential::flat(), 2);
    let tau_flat = ale_decay_rate(&flat, &radii).expect("flat metric");
    assert!(tau_flat.is_infinite(), "identity profile rate {tau_flat}");
}
