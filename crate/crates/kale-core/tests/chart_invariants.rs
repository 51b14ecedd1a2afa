//! Cross-module invariants of the chart and curvature layer, exercised
//! through the public API: coordinate-free quantities must not care how a
//! metric was produced, scaled, or rotated.

use kale_core::chart::{
    curvature_at, euclidean_metric, kahler_defect, weyl_split, ChartPoint, Orientation,
};
use kale_core::potential::{
    metric_from_potential, standard_structure, RadialPotential,
};
use kale_core::sample;

use nalgebra::DVector;
use proptest::prelude::*;

const FD_STEP: f64 = 1e-3;

fn axis_free_point(coords: [f64; 4]) -> ChartPoint {
    ChartPoint::new(coords.to_vec()).expect("finite coordinates")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every curvature entry of the Euclidean metric vanishes, wherever we
    /// look and at any finite-difference step that survives validation.
    #[test]
    fn euclidean_curvature_vanishes_everywhere(
        x in -5.0f64..5.0,
        y in -5.0f64..5.0,
        z in -5.0f64..5.0,
        w in -5.0f64..5.0,
    ) {
        let field = euclidean_metric(4);
        let p = axis_free_point([x, y, z, w]);
        let report = curvature_at(&field, &p, FD_STEP).expect("flat chart has no boundary");
        prop_assert!(report.riemann_lower.max_abs() < 1e-12);
        prop_assert!(report.ricci.amax() < 1e-12);
        prop_assert!(report.scalar.abs() < 1e-12);
    }

    /// Rescaling a metric by the constant factor c^2 leaves the Ricci
    /// tensor alone, multiplies the lowered curvature by c^2, and divides
    /// the scalar by c^2.
    #[test]
    fn constant_rescaling_acts_as_expected(c in 0.5f64..10.0, seed in 0u64..1000) {
        let base = metric_from_potential(&RadialPotential::burns(), 2);
        let scaled = base.scaled(c, "scaled");
        let c2 = c * c;
        let p = &sample::chart_points(seed, 1, 2, 1.8, 0.3)[0];
        let a = curvature_at(&base, p, FD_STEP).expect("inside chart");
        let b = curvature_at(&scaled, p, FD_STEP).expect("inside chart");
        let scale = (c2 * a.riemann_lower.max_abs()).max(1.0);
        let mut worst = 0.0f64;
        for l in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        let want = c2 * a.riemann_lower.get(l, i, j, k);
                        worst = worst.max((b.riemann_lower.get(l, i, j, k) - want).abs());
                    }
                }
            }
        }
        prop_assert!(worst / scale < 1e-7, "lowered curvature defect {}", worst / scale);
        prop_assert!((&b.ricci - &a.ricci).amax() < 1e-7 * a.ricci.amax().max(1.0));
        prop_assert!((b.scalar - a.scalar / c2).abs() < 1e-7 * a.scalar.abs().max(1.0));
    }

    /// The radial-potential metric only sees the radius, so any rotation
    /// preserving the radius preserves the metric: g(Up) pulled back along
    /// U equals g(p).
    #[test]
    fn unitary_rotations_preserve_potential_metrics(seed in 0u64..1000) {
        let field = metric_from_potential(&RadialPotential::eguchi_hanson(), 2);
        let u = sample::random_unitary_real(seed, 2);
        let p = &sample::chart_points(seed.wrapping_add(1), 1, 2, 1.8, 0.3)[0];
        let moved_coords: Vec<f64> =
            (&u * DVector::from_column_slice(p.coords())).iter().copied().collect();
        let q = ChartPoint::new(moved_coords).expect("rotation keeps coordinates finite");
        let g_p = field.value(p).expect("inside chart");
        let g_q = field.value(&q).expect("rotation preserves the radius");
        let pulled = u.transpose() * g_q * &u;
        prop_assert!((&pulled - &g_p).amax() < 1e-12 * g_p.amax());
    }

    /// Scaling the profile scales the metric linearly.
    #[test]
    fn profile_scaling_is_metric_scaling(c in 0.25f64..8.0, seed in 0u64..1000) {
        let phi = RadialPotential::fubini_study();
        let base = metric_from_potential(&phi, 2);
        let stretched = metric_from_potential(&phi.scaled(c), 2);
        let p = &sample::chart_points(seed, 1, 2, 1.5, 0.05)[0];
        let a = stretched.value(p).expect("inside chart");
        let b = base.value(p).expect("inside chart");
        prop_assert!((&a - b.scale(c)).amax() < 1e-12 * a.amax());
    }
}

#[test]
fn builtin_potentials_are_kahler_for_the_standard_structure() {
    let structure = standard_structure(2);
    for phi in RadialPotential::builtins() {
        let field = metric_from_potential(&phi, 2);
        for p in sample::chart_points(1009, 12, 2, 1.6, 0.1) {
            let defect = kahler_defect(&field, &structure, &p).expect("inside chart");
            assert!(
                defect.max() < 1e-9,
                "{}: defect {} at {:?}",
                phi.label(),
                defect.max(),
                p.coords()
            );
        }
    }
}

#[test]
fn projective_profile_has_a_vanishing_weyl_half() {
    // log(1 + z) is the canonical self-dual Kahler example: its
    // anti-self-dual Weyl block vanishes in the complex orientation while
    // scalar curvature stays visibly positive.
    let field = metric_from_potential(&RadialPotential::fubini_study(), 2);
    for p in sample::chart_points(1013, 8, 2, 1.4, 0.2) {
        let report = curvature_at(&field, &p, FD_STEP).expect("inside chart");
        let (_, minus) = weyl_split(&report, Orientation::Positive).expect("dimension 4");
        assert!(minus.norm() < 1e-8, "anti-self-dual block {}", minus.norm());
        assert!(report.scalar > 1.0, "scalar {}", report.scalar);
    }
}

#[test]
fn blow_up_profile_is_scalar_flat_but_not_flat() {
    let field = metric_from_potential(&RadialPotential::burns(), 2);
    let mut max_scalar = 0.0f64;
    let mut max_riemann = 0.0f64;
    for p in sample::chart_points(1021, 10, 2, 1.8, 0.3) {
        let report = curvature_at(&field, &p, FD_STEP).expect("inside chart");
        max_scalar = max_scalar.max(report.scalar.abs());
        max_riemann = max_riemann.max(report.riemann_lower.max_abs());
    }
    assert!(max_scalar < 1e-9, "scalar {max_scalar}");
    assert!(max_riemann > 1e-3, "curvature should not vanish ({max_riemann})");
}
