//! Conformal compactifications of the scalar-flat edge-cone family and the
//! Einstein metrics hiding inside their conformal classes.
//!
//! Rescaling the family metric by `r^{-4}` produces a metric that extends
//! over the point at infinity; in the chart it has the closed form
//! `dr^2/((r^2-1)(r^2+beta-1)) + (1/r^2)[...]` and its scalar curvature is
//! the rational function `24[(2-beta) + 2(beta-1)/r^2]`. Dividing by the
//! square of that scalar curvature (normalized by its `beta = 1` value 24)
//! yields an Einstein metric wherever the scalar curvature is nonzero, with
//! Einstein constant `6 beta^2 (2-beta)`. The sign of that constant splits
//! the family into three regimes, and the compactified metric also satisfies
//! a Green-type identity: `r^2` is annihilated by the conformal Laplacian
//! `-Laplacian + scalar/6`.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::chart::{
    curvature_at, laplacian, ChartError, ChartMetricField, ChartPoint, MetricJet,
};
use crate::jet::Jet2;
use crate::lebrun::{lebrun_metric, CoframeProfile, LebrunChart, LebrunError};

/// Scalar curvature of the `beta = 1` compactification (the constant-curvature
/// member): conformal factors for the Einstein rescaling are normalized
/// against it so the Einstein constants take the values `6 beta^2 (2-beta)`.
pub const SCALAR_NORMALIZATION: f64 = 24.0;

/// Samples whose compactified scalar curvature is smaller than this margin
/// in absolute value are rejected by conformal operations: the rescaling
/// degenerates on the zero locus.
pub const ZERO_LOCUS_MARGIN: f64 = 0.1;

/// Euler-angle triples used when a radial operation needs concrete chart
/// points; all lie inside the polar exclusion band.
const ANGLE_SAMPLES: [(f64, f64, f64); 2] = [(0.9, 0.3, 1.1), (1.7, 2.0, 4.4)];

#[derive(Debug, Error)]
pub enum EinsteinError {
    #[error(transparent)]
    Lebrun(#[from] LebrunError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("compactified closed form mismatch at r = {r}: defect {defect:.3e}")]
    FormMismatch { r: f64, defect: f64 },
    #[error(
        "conformal factor singular here: compactified scalar curvature {scalar:.4} at \
         r = {r} is inside the exclusion margin {ZERO_LOCUS_MARGIN}"
    )]
    SingularConformalFactor { r: f64, scalar: f64 },
    #[error("regime classification inconsistent: {0}")]
    RegimeInconsistent(String),
}

/// Sign class of the Einstein constant `6 beta^2 (2-beta)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `0 < beta < 2`: the rescaled metric is Einstein with positive
    /// constant on the whole chart.
    PositiveEinstein,
    /// `beta = 2`: the constant vanishes and the rescaled metric is
    /// Ricci-flat (a constant multiple of the `beta = 2` family member).
    RicciFlatBoundary,
    /// `beta > 2`: the scalar curvature changes sign across a hypersurface,
    /// so the rescaling splits into two Einstein pieces with negative
    /// constant.
    AheSplit,
}

/// Classification of one family member by the sign of its Einstein constant.
#[derive(Clone, Debug, Serialize)]
pub struct RegimeReport {
    pub beta: f64,
    pub regime: Regime,
    /// Squared radius where the compactified scalar curvature vanishes;
    /// present exactly when `beta > 2`, and then `> 1` (inside the chart).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_locus_r_sq: Option<f64>,
    /// `6 beta^2 (2-beta)`.
    pub einstein_constant: f64,
}

/// `6 beta^2 (2-beta)`.
pub fn einstein_constant(beta: f64) -> f64 {
    6.0 * beta * beta * (2.0 - beta)
}

/// Squared radius of the scalar-curvature zero locus, `2(beta-1)/(beta-2)`,
/// defined for `beta > 2`.
pub fn zero_locus_r_sq(beta: f64) -> Option<f64> {
    if beta > 2.0 {
        Some(2.0 * (beta - 1.0) / (beta - 2.0))
    } else {
        None
    }
}

fn check_beta(beta: f64) -> Result<(), EinsteinError> {
    CoframeProfile::new(beta)?;
    Ok(())
}

fn check_radius(r: f64) -> Result<(), EinsteinError> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(LebrunError::OutsideChart(r).into());
    }
    Ok(())
}

/// Closed-form scalar curvature of the compactified metric,
/// `24[(2-beta) + 2(beta-1)/r^2]`.
pub fn scalar_curvature_hat(beta: f64, r: f64) -> Result<f64, EinsteinError> {
    check_beta(beta)?;
    check_radius(r)?;
    Ok(scalar_hat_value(beta, r))
}

fn scalar_hat_value(beta: f64, r: f64) -> f64 {
    SCALAR_NORMALIZATION * ((2.0 - beta) + 2.0 * (beta - 1.0) / (r * r))
}

fn scalar_hat_jet(beta: f64, rr: &Jet2) -> Jet2 {
    rr.recip()
        .scale(2.0 * SCALAR_NORMALIZATION * (beta - 1.0))
        .add_scalar(SCALAR_NORMALIZATION * (2.0 - beta))
}

/// The compactified metric `r^{-4} g` as a chart field, built from its
/// closed-form entries. Construction cross-checks the closed form against
/// the conformally rescaled family field on a chart-spanning grid and
/// reports any disagreement beyond rounding error.
pub fn compact_metric(beta: f64) -> Result<ChartMetricField, EinsteinError> {
    check_beta(beta)?;
    let field = compact_field(beta);
    let frame = lebrun_metric(beta, LebrunChart::Frame)?;
    let rescaled = frame.conformal(format!("rescaled-frame-{beta}"), |p: &ChartPoint| {
        let rj = Jet2::coordinate(p.coords()[0], 0, 4);
        Ok(rj.mul(&rj).recip())
    });
    for &r in &[1.01, 1.1, 1.5, 2.0, 3.0, 5.0, 10.0, 50.0] {
        for &(theta, phi, psi) in &ANGLE_SAMPLES {
            let p = ChartPoint::new(vec![r, theta, phi, psi])?;
            let a = field.jet(&p)?;
            let b = rescaled.jet(&p)?;
            let defect = jet_distance(&a, &b);
            if !(defect < 1e-12) {
                return Err(EinsteinError::FormMismatch { r, defect });
            }
        }
    }
    Ok(field)
}

/// Relative distance between two metric jets over value, gradient, and
/// Hessian slots.
fn jet_distance(a: &MetricJet, b: &MetricJet) -> f64 {
    let dim = a.dim();
    let mut worst = rel_norm(&a.value_matrix(), &b.value_matrix());
    for k in 0..dim {
        worst = worst.max(rel_norm(&a.first_derivative(k), &b.first_derivative(k)));
        for l in k..dim {
            worst = worst.max(rel_norm(
                &a.second_derivative(k, l),
                &b.second_derivative(k, l),
            ));
        }
    }
    worst
}

fn rel_norm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / (1.0 + a.norm())
}

fn compact_field(beta: f64) -> ChartMetricField {
    ChartMetricField::new(4, format!("compact-{beta}"), move |p: &ChartPoint| {
        let r = p.coords()[0];
        let theta = p.coords()[1];
        if !(r > 1.0) {
            return Err(ChartError::OutsideDomain(format!(
                "outside chart: r = {r} is not > 1"
            )));
        }
        let rj = Jet2::coordinate(r, 0, 4);
        let tj = Jet2::coordinate(theta, 1, 4);
        let rr = rj.mul(&rj);
        let q = rr.recip();
        let num = rr.add_scalar(-1.0).mul(&rr.add_scalar(beta - 1.0));
        let v = num.mul(&q).mul(&q);
        let sin = tj.compose([theta.sin(), theta.cos(), -theta.sin()]);
        let cos = tj.compose([theta.cos(), -theta.sin(), -theta.cos()]);
        let g_rr = num.recip();
        let g_tt = q.scale(0.25);
        let fiber = v.mul(&q).scale(0.25);
        let g_pp = g_tt.mul(&sin.mul(&sin)).add(&fiber.mul(&cos.mul(&cos)));
        let g_ps = fiber.mul(&cos).neg();
        let zero = Jet2::constant(0.0, 4);
        Ok(MetricJet::from_entries(4, |i, j| match (i, j) {
            (0, 0) => g_rr.clone(),
            (1, 1) => g_tt.clone(),
            (2, 2) => g_pp.clone(),
            (3, 3) => fiber.clone(),
            (2, 3) => g_ps.clone(),
            _ => zero.clone(),
        }))
    })
}

/// The Einstein rescaling `(scalar/24)^{-2}` of the compactified metric,
/// defined away from the scalar-curvature zero locus.
pub fn einstein_metric(beta: f64) -> Result<ChartMetricField, EinsteinError> {
    let compact = compact_metric(beta)?;
    Ok(compact.conformal(format!("einstein-{beta}"), move |p: &ChartPoint| {
        let r = p.coords()[0];
        let rj = Jet2::coordinate(r, 0, 4);
        let s = scalar_hat_jet(beta, &rj.mul(&rj));
        if s.val.abs() < 1e-8 {
            return Err(ChartError::OutsideDomain(format!(
                "conformal factor singular here: compactified scalar curvature \
                 vanishes at r = {r}"
            )));
        }
        Ok(s.recip().scale(SCALAR_NORMALIZATION))
    }))
}

/// Maximum Einstein defect `|Ric - lambda g|` of the rescaled metric over
/// the given radii (two angle samples each), with
/// `lambda = 6 beta^2 (2-beta)`. Radii must keep the compactified scalar
/// curvature outside the exclusion margin.
pub fn einstein_certificate(beta: f64, r_samples: &[f64]) -> Result<f64, EinsteinError> {
    let field = einstein_metric(beta)?;
    let lambda = einstein_constant(beta);
    let mut worst = 0.0f64;
    for &r in r_samples {
        check_radius(r)?;
        let scalar = scalar_hat_value(beta, r);
        if scalar.abs() <= ZERO_LOCUS_MARGIN {
            return Err(EinsteinError::SingularConformalFactor { r, scalar });
        }
        for &(theta, phi, psi) in &ANGLE_SAMPLES {
            let p = ChartPoint::new(vec![r, theta, phi, psi])?;
            let report = curvature_at(&field, &p, certificate_step(r))?;
            let g = field.value(&p)?;
            let defect = (&report.ricci - g.scale(lambda)).norm();
            worst = worst.max(defect);
        }
    }
    Ok(worst)
}

fn certificate_step(r: f64) -> f64 {
    (1e-3f64).min(0.05 * (r - 1.0))
}

/// Least-squares Einstein constant of the rescaled metric over the given
/// radii: the scalar `lambda` minimizing `|Ric - lambda g|^2` across all
/// samples. Coherence check for the displayed constant.
pub fn best_fit_einstein_constant(
    beta: f64,
    r_samples: &[f64],
) -> Result<f64, EinsteinError> {
    let field = einstein_metric(beta)?;
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for &r in r_samples {
        check_radius(r)?;
        let scalar = scalar_hat_value(beta, r);
        if scalar.abs() <= ZERO_LOCUS_MARGIN {
            return Err(EinsteinError::SingularConformalFactor { r, scalar });
        }
        for &(theta, phi, psi) in &ANGLE_SAMPLES {
            let p = ChartPoint::new(vec![r, theta, phi, psi])?;
            let report = curvature_at(&field, &p, certificate_step(r))?;
            let g = field.value(&p)?;
            num += report.ricci.dot(&g);
            den += g.dot(&g);
        }
    }
    if den == 0.0 {
        return Err(EinsteinError::RegimeInconsistent(
            "no samples for the least-squares constant".to_string(),
        ));
    }
    Ok(num / den)
}

/// At `beta = 2` the Einstein rescaling collapses to a constant multiple of
/// the family member itself. Returns the fitted proportionality constant and
/// the maximum relative deviation from exact proportionality over the radii.
pub fn ricci_flat_proportionality(r_samples: &[f64]) -> Result<(f64, f64), EinsteinError> {
    let tilde = einstein_metric(2.0)?;
    let base = lebrun_metric(2.0, LebrunChart::Frame)?;
    let mut constant = 0.0f64;
    let mut count = 0usize;
    let mut worst = 0.0f64;
    let mut pairs = Vec::new();
    for &r in r_samples {
        check_radius(r)?;
        for &(theta, phi, psi) in &ANGLE_SAMPLES {
            let p = ChartPoint::new(vec![r, theta, phi, psi])?;
            let a = tilde.value(&p)?;
            let b = base.value(&p)?;
            let c = a.dot(&b) / b.dot(&b);
            constant += c;
            count += 1;
            pairs.push((a, b, c));
        }
    }
    constant /= count as f64;
    for (a, b, c) in pairs {
        let defect = (&a - b.scale(c)).norm() / a.norm();
        worst = worst.max(defect);
    }
    Ok((constant, worst))
}

/// Maximum residual of the conformal Laplacian identity
/// `(-Laplacian + scalar/divisor)(r^2)` on the compactified metric over the
/// given radii. With `divisor = 6` the residual vanishes: `r^2` is the
/// Green-type potential of the compactification point.
pub fn conformal_laplacian_residual(
    beta: f64,
    r_samples: &[f64],
    divisor: f64,
) -> Result<f64, EinsteinError> {
    let field = compact_metric(beta)?;
    let r_sq = |q: &ChartPoint| -> Result<Jet2, ChartError> {
        let rj = Jet2::coordinate(q.coords()[0], 0, 4);
        Ok(rj.mul(&rj))
    };
    let mut worst = 0.0f64;
    for &r in r_samples {
        check_radius(r)?;
        for &(theta, phi, psi) in &ANGLE_SAMPLES {
            let p = ChartPoint::new(vec![r, theta, phi, psi])?;
            let lap = laplacian(&field, &p, &r_sq)?;
            let residual = -lap + scalar_hat_value(beta, r) / divisor * (r * r);
            worst = worst.max(residual.abs());
        }
    }
    Ok(worst)
}

/// Residual of `(-Laplacian + scalar/6)(r^2)` on the compactified metric:
/// the identity that exhibits `r^2` as a Green-type function for the
/// compactification point.
pub fn greens_function_check(beta: f64, r_samples: &[f64]) -> Result<f64, EinsteinError> {
    conformal_laplacian_residual(beta, r_samples, 6.0)
}

/// Classifies one family member by the sign of its Einstein constant. For
/// `beta > 2` the sign change of the compactified scalar curvature across
/// the zero locus is verified numerically.
pub fn regime_report(beta: f64) -> Result<RegimeReport, EinsteinError> {
    check_beta(beta)?;
    let lambda = einstein_constant(beta);
    let locus = zero_locus_r_sq(beta);
    let regime = if beta < 2.0 {
        Regime::PositiveEinstein
    } else if beta == 2.0 {
        Regime::RicciFlatBoundary
    } else {
        Regime::AheSplit
    };
    match regime {
        Regime::PositiveEinstein if !(lambda > 0.0) => {
            return Err(EinsteinError::RegimeInconsistent(format!(
                "constant {lambda} not positive for beta = {beta}"
            )));
        }
        Regime::AheSplit => {
            let r_sq = locus.ok_or_else(|| {
                EinsteinError::RegimeInconsistent(format!(
                    "missing zero locus for beta = {beta}"
                ))
            })?;
            if !(r_sq > 1.0) {
                return Err(EinsteinError::RegimeInconsistent(format!(
                    "zero locus r^2 = {r_sq} outside the chart for beta = {beta}"
                )));
            }
            let r0 = r_sq.sqrt();
            let inside = scalar_hat_value(beta, 0.9 * r0);
            let outside = scalar_hat_value(beta, 1.1 * r0);
            if !(inside > 0.0 && outside < 0.0) {
                return Err(EinsteinError::RegimeInconsistent(format!(
                    "scalar curvature does not change sign across r^2 = {r_sq}"
                )));
            }
            if !(lambda < 0.0) {
                return Err(EinsteinError::RegimeInconsistent(format!(
                    "constant {lambda} not negative for beta = {beta}"
                )));
            }
        }
        _ => {}
    }
    Ok(RegimeReport { beta, regime, zero_locus_r_sq: locus, einstein_constant: lambda })
}

/// The compactified scalar curvature by three independent routes: the
/// closed form, the curvature pipeline on the compactified field, and the
/// conformal transformation formula `-(6/u^3) Laplacian u` with `u = r^{-2}`
/// evaluated on the scalar-flat family field.
#[derive(Clone, Copy, Debug)]
pub struct ScalarRoutes {
    pub r: f64,
    pub closed_form: f64,
    pub pipeline: f64,
    pub conformal: f64,
}

impl ScalarRoutes {
    /// Largest pairwise disagreement among the three routes.
    pub fn spread(&self) -> f64 {
        let a = (self.closed_form - self.pipeline).abs();
        let b = (self.closed_form - self.conformal).abs();
        let c = (self.pipeline - self.conformal).abs();
        a.max(b).max(c)
    }
}

/// Evaluates all three scalar-curvature routes at each radius.
pub fn scalar_hat_routes(
    beta: f64,
    r_samples: &[f64],
) -> Result<Vec<ScalarRoutes>, EinsteinError> {
    let compact = compact_metric(beta)?;
    let frame = lebrun_metric(beta, LebrunChart::Frame)?;
    let u = |q: &ChartPoint| -> Result<Jet2, ChartError> {
        let rj = Jet2::coordinate(q.coords()[0], 0, 4);
        Ok(rj.mul(&rj).recip())
    };
    let (theta, phi, psi) = ANGLE_SAMPLES[0];
    let mut out = Vec::with_capacity(r_samples.len());
    for &r in r_samples {
        check_radius(r)?;
        let p = ChartPoint::new(vec![r, theta, phi, psi])?;
        let report = curvature_at(&compact, &p, certificate_step(r))?;
        let lap = laplacian(&frame, &p, &u)?;
        let u_val = 1.0 / (r * r);
        let conformal = -6.0 / (u_val * u_val * u_val) * lap;
        out.push(ScalarRoutes {
            r,
            closed_form: scalar_hat_value(beta, r),
            pipeline: report.scalar,
            conformal,
        });
    }
    Ok(out)
}

/// Root of the closed-form scalar curvature on `r > 1`, located by
/// bisection; present only in the sign-splitting regime.
pub fn scalar_hat_root(beta: f64) -> Option<f64> {
    let r_sq = zero_locus_r_sq(beta)?;
    let mut lo = 1.0 + 1e-9;
    let mut hi = 2.0 * r_sq.sqrt().max(2.0);
    if !(scalar_hat_value(beta, lo) > 0.0 && scalar_hat_value(beta, hi) < 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if scalar_hat_value(beta, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{weyl_split, Orientation};

    #[test]
    fn compact_radial_coefficient_has_the_displayed_value() {
        let field = compact_metric(1.0).unwrap();
        let p = ChartPoint::new(vec![2.0, 0.9, 0.3, 1.1]).unwrap();
        let g = field.value(&p).unwrap();
        assert!((g[(0, 0)] - 1.0 / 12.0).abs() < 1e-15);
        // construction cross-check accepts the whole sampled family
        for beta in [0.5, 1.0, 2.0, 3.0] {
            compact_metric(beta).unwrap();
        }
        assert!(matches!(compact_metric(-0.5), Err(EinsteinError::Lebrun(_))));
    }

    #[test]
    fn profile_factorization_is_exact() {
        for &beta in &[0.5, 1.0, 2.0, 3.0, 4.7] {
            let prof = CoframeProfile::new(beta).unwrap();
            for &r in &[1.1f64, 1.7, 2.0, 3.3, 9.0] {
                let v = prof.v(r).unwrap().value();
                let rr = r * r;
                let lhs = rr * rr * v;
                let rhs = (rr - 1.0) * (rr + (beta - 1.0));
                let tol = 4.0 * f64::EPSILON * rhs.abs();
                assert!((lhs - rhs).abs() <= tol, "beta={beta} r={r}: {lhs} vs {rhs}");
            }
            // powers of two make the division exact
            let v = prof.v(2.0).unwrap().value();
            assert_eq!(16.0 * v, (4.0 - 1.0) * (4.0 + (beta - 1.0)));
        }
    }

    #[test]
    fn unit_parameter_gives_constant_curvature() {
        let field = compact_metric(1.0).unwrap();
        for &r in &[1.2, 2.0, 5.0, 20.0] {
            let p = ChartPoint::new(vec![r, 1.7, 2.0, 4.4]).unwrap();
            let report = curvature_at(&field, &p, certificate_step(r)).unwrap();
            assert!(
                (report.scalar - 24.0).abs() < 1e-6,
                "scalar at r={r}: {}",
                report.scalar
            );
        }
        // gradient of the scalar curvature along the radius, by differences
        // of the pipeline values
        let h = 1e-3;
        let at = |r: f64| {
            let p = ChartPoint::new(vec![r, 1.7, 2.0, 4.4]).unwrap();
            curvature_at(&field, &p, certificate_step(r)).unwrap().scalar
        };
        let grad = (at(2.0 + h) - at(2.0 - h)) / (2.0 * h);
        assert!(grad.abs() < 1e-6, "scalar gradient {grad}");
    }

    #[test]
    fn closed_form_scalar_matches_the_stated_examples() {
        for &r in &[1.1, 2.0, 7.0] {
            assert_eq!(scalar_curvature_hat(1.0, r).unwrap(), 24.0);
        }
        assert!(scalar_curvature_hat(3.0, 2.0).unwrap().abs() < 1e-14);
        assert!(scalar_curvature_hat(2.0, 1e7).unwrap() < 1e-12);
        assert!(scalar_curvature_hat(1.0, 0.5).is_err());
    }

    #[test]
    fn three_scalar_routes_agree() {
        for &beta in &[0.5, 1.0, 2.0, 3.0] {
            let rs = [1.2, 1.8, 3.0, 10.0];
            for routes in scalar_hat_routes(beta, &rs).unwrap() {
                assert!(
                    routes.spread() < 1e-4,
                    "beta={beta} r={}: spread {:.3e} ({} / {} / {})",
                    routes.r,
                    routes.spread(),
                    routes.closed_form,
                    routes.pipeline,
                    routes.conformal
                );
            }
        }
    }

    #[test]
    fn scalar_root_sits_where_the_locus_formula_says() {
        let root = scalar_hat_root(3.0).unwrap();
        assert!((root * root - 4.0).abs() < 1e-6, "root^2 = {}", root * root);
        assert!(scalar_hat_root(1.5).is_none());
    }

    #[test]
    fn positive_regime_certificate() {
        let defect = einstein_certificate(0.5, &[1.3, 2.0, 4.0]).unwrap();
        assert!(defect < 1e-4, "beta=0.5 defect {defect:.3e}");
        let lambda = best_fit_einstein_constant(0.5, &[1.3, 2.0, 4.0]).unwrap();
        assert!(
            (lambda - 2.25).abs() < 1e-3 * 2.25,
            "beta=0.5 best-fit {lambda}"
        );
    }

    #[test]
    fn split_regime_certificate_on_both_sides() {
        // scalar curvature vanishes at r = 2; sample both sides
        let defect = einstein_certificate(3.0, &[1.5, 1.8, 2.5, 3.5]).unwrap();
        assert!(defect < 1e-4, "beta=3 defect {defect:.3e}");
        let lambda = best_fit_einstein_constant(3.0, &[1.5, 3.0]).unwrap();
        assert!(
            (lambda + 54.0).abs() < 1e-3 * 54.0,
            "beta=3 best-fit {lambda}"
        );
        let err = einstein_certificate(3.0, &[2.001]).unwrap_err();
        assert!(
            err.to_string().contains("conformal factor singular here"),
            "{err}"
        );
    }

    #[test]
    fn boundary_regime_is_ricci_flat_and_proportional() {
        let field = einstein_metric(2.0).unwrap();
        for &r in &[1.4, 2.0, 5.0] {
            let p = ChartPoint::new(vec![r, 0.9, 0.3, 1.1]).unwrap();
            let report = curvature_at(&field, &p, certificate_step(r)).unwrap();
            assert!(report.ricci.norm() < 1e-4, "ricci at r={r}: {}", report.ricci.norm());
        }
        let (constant, defect) = ricci_flat_proportionality(&[1.4, 2.0, 5.0]).unwrap();
        assert!((constant - 0.25).abs() < 1e-10, "constant {constant}");
        assert!(defect < 1e-8, "proportionality defect {defect:.3e}");
    }

    #[test]
    fn greens_identity_holds_and_detects_the_wrong_coefficient() {
        for &beta in &[1.0, 2.0, 3.0] {
            let residual = greens_function_check(beta, &[1.5, 2.0, 4.0]).unwrap();
            assert!(residual < 1e-5, "beta={beta} residual {residual:.3e}");
        }
        let control = conformal_laplacian_residual(1.0, &[1.5, 2.0, 4.0], 5.0).unwrap();
        assert!(control > 0.01, "control residual {control}");
    }

    #[test]
    fn regimes_classify_and_serialize() {
        let report = regime_report(1.5).unwrap();
        assert_eq!(report.regime, Regime::PositiveEinstein);
        assert_eq!(report.einstein_constant, 6.75);
        assert!(report.zero_locus_r_sq.is_none());

        let report = regime_report(2.0).unwrap();
        assert_eq!(report.regime, Regime::RicciFlatBoundary);
        assert_eq!(report.einstein_constant, 0.0);

        let report = regime_report(4.0).unwrap();
        assert_eq!(report.regime, Regime::AheSplit);
        assert_eq!(report.zero_locus_r_sq, Some(3.0));
        assert_eq!(report.einstein_constant, -192.0);

        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["regime"], "ahe-split");
        assert_eq!(json["zero_locus_r_sq"], 3.0);
        let json = serde_json::to_value(regime_report(1.5).unwrap()).unwrap();
        assert_eq!(json["regime"], "positive-einstein");
        assert!(json.get("zero_locus_r_sq").is_none());
        assert_eq!(
            serde_json::to_value(regime_report(2.0).unwrap()).unwrap()["regime"],
            "ricci-flat-boundary"
        );
    }

    #[test]
    fn compactification_flips_the_special_orientation() {
        // The family metric has vanishing self-dual Weyl half in the
        // positive orientation; its compactification carries the vanishing
        // half on the opposite side, i.e. W- vanishes in the negative
        // orientation while the positive-orientation W- stays visible.
        let field = compact_metric(3.0).unwrap();
        let p = ChartPoint::new(vec![1.6, 1.1, 0.8, 2.0]).unwrap();
        let report = curvature_at(&field, &p, certificate_step(1.6)).unwrap();
        let (_, minus_neg) = weyl_split(&report, Orientation::Negative).unwrap();
        assert!(minus_neg.norm() < 1e-5, "W- flipped {}", minus_neg.norm());
        let (_, minus_pos) = weyl_split(&report, Orientation::Positive).unwrap();
        assert!(minus_pos.norm() > 0.01, "W- visible {}", minus_pos.norm());
    }

    #[test]
    fn scalar_curvature_is_angle_independent() {
        let field = compact_metric(2.7).unwrap();
        let reference = {
            let p = ChartPoint::new(vec![1.9, 0.9, 0.3, 1.1]).unwrap();
            curvature_at(&field, &p, certificate_step(1.9)).unwrap().scalar
        };
        for &(theta, phi, psi) in &[(1.4, 2.5, 0.2), (2.2, 0.1, 3.3)] {
            let p = ChartPoint::new(vec![1.9, theta, phi, psi]).unwrap();
            let scalar = curvature_at(&field, &p, certificate_step(1.9)).unwrap().scalar;
            assert!(
                (scalar - reference).abs() < 1e-8,
                "angular drift {} vs {reference}",
                scalar
            );
        }
    }
}
