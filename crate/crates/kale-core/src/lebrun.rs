//! A one-parameter family of scalar-flat Kahler metrics on the complex line
//! bundles over the projective line, presented two ways: a closed-form
//! cohomogeneity-one frame metric on coordinates `(r, theta, phi, psi)`, and
//! the radial potential that generates the same metric on a complex chart.
//!
//! The family is controlled by a positive cone parameter `beta`. Its radial
//! profile `V(r) = (r^2 - 1)(r^2 + beta - 1) / r^4` vanishes at `r = 1`
//! (the zero section) and tends to one at infinity. The transverse geometry
//! at the zero section is a two-dimensional cone of total angle `2 pi beta`:
//! integer `beta = k` values are exactly the profiles whose cone closes up
//! smoothly after the cyclic quotient of order `k`.
//!
//! The potential route runs in the other direction: integrating
//! `d(log z)/dr = 2 / (r V(r))` downward from a large anchor radius recovers
//! the radial coordinate change `z(r)` and with it the generating potential,
//! normalized so the metric is asymptotically Euclidean. The two routes are
//! linked by `z phi'(z) = r^2` and are kept independent so each can check
//! the other.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::chart::{curvature_at, ChartError, ChartMetricField, ChartPoint, MetricJet};
use crate::jet::Jet2;
use crate::ode;
use crate::potential::{
    metric_from_potential, standard_structure, Domain, PotentialError, RadialPotential,
};
use crate::quad::{self, QuadError};
use crate::sample;
use crate::series::Taylor5;

/// Relative tolerance used for potential-recovery integrations unless the
/// caller passes their own.
pub const DEFAULT_ODE_TOL: f64 = 1e-10;

/// Half-width of the polar exclusion band: frame-chart assertions sample
/// `theta` inside `[POLE_EXCLUSION, pi - POLE_EXCLUSION]`, away from the
/// Euler-angle degeneracies at the poles.
pub const POLE_EXCLUSION: f64 = 0.3;

/// Finite-difference step for curvature consistency checks at radius `r`:
/// small against the distance to the chart boundary at `r = 1`.
fn curvature_step(r: f64) -> f64 {
    (1e-3f64).min(0.05 * (r - 1.0))
}

#[derive(Debug, Error)]
pub enum LebrunError {
    #[error("cone parameter must be positive (got {0})")]
    BadCone(f64),
    #[error("radial range must satisfy 1 < lo < hi < infinity (got [{lo}, {hi}])")]
    BadRange { lo: f64, hi: f64 },
    #[error("outside chart: r = {0} is not > 1")]
    OutsideChart(f64),
    #[error("ODE failure: {0}")]
    OdeFailure(#[from] ode::OdeError),
    #[error("profile not ALE: {0}")]
    NotAle(String),
    #[error("cone angle unresolved: {0}")]
    ConeUnresolved(String),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
}

/// Which presentation of the family a metric field uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LebrunChart {
    /// Coordinates `(r, theta, phi, psi)`: radius and Euler angles of the
    /// orbit spheres. Closed-form entries, valid for `r > 1`.
    Frame,
    /// Real coordinates of the complex chart, with the metric produced by
    /// `metric_from_potential` from the ODE-recovered potential.
    Complex,
}

/// Default radial window used when the complex chart needs a recovered
/// potential and the caller has not asked for a specific range.
const COMPLEX_CHART_RANGE: (f64, f64) = (1.05, 150.0);

/// The closed-form radial profile of the family, exposed as jets.
///
/// `V(r) = 1 + (beta - 2)/r^2 + (1 - beta)/r^4`, computed in the factored
/// form `(r^2 - 1)(r^2 + beta - 1)/r^4` so `V(1) = 0` holds exactly and
/// positivity on `r > 1` is manifest.
#[derive(Clone, Debug)]
pub struct CoframeProfile {
    beta: f64,
    quotient_k: Option<u32>,
}

impl CoframeProfile {
    pub fn new(beta: f64) -> Result<Self, LebrunError> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(LebrunError::BadCone(beta));
        }
        let rounded = beta.round();
        let quotient_k = if (beta - rounded).abs() < 1e-12 && rounded >= 1.0 {
            Some(rounded as u32)
        } else {
            None
        };
        Ok(CoframeProfile { beta, quotient_k })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Set exactly when the cone parameter is a positive integer `k`, the
    /// case where the order-`k` cyclic quotient is smooth.
    pub fn quotient_k(&self) -> Option<u32> {
        self.quotient_k
    }

    /// Profile value and four derivatives at `r`.
    pub fn v(&self, r: f64) -> Result<Taylor5, LebrunError> {
        if !(r > 1.0 && r.is_finite()) {
            return Err(LebrunError::OutsideChart(r));
        }
        Ok(v_series(self.beta, r))
    }
}

/// `V` as a degree-4 series in `r`, factored so the zero at `r = 1` is exact.
fn v_series(beta: f64, r: f64) -> Taylor5 {
    let rj = Taylor5::from_derivatives([r, 1.0, 0.0, 0.0, 0.0]);
    let rr = rj.mul(&rj);
    rr.add_scalar(-1.0).mul(&rr.add_scalar(beta - 1.0)).div(&rr.mul(&rr))
}

fn v_value(beta: f64, r: f64) -> f64 {
    let rr = r * r;
    (rr - 1.0) * (rr + beta - 1.0) / (rr * rr)
}

/// Transverse polar coordinates at the zero section: the radial coordinate
/// `rt` with `rt^2 = (r^2 - 1) / beta`, in which the metric opens as a cone
/// of total angle `2 pi beta`.
#[derive(Clone, Copy, Debug)]
pub struct EdgeConeChart {
    beta: f64,
}

impl EdgeConeChart {
    pub fn new(beta: f64) -> Result<Self, LebrunError> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(LebrunError::BadCone(beta));
        }
        Ok(EdgeConeChart { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Cone-chart radius of the orbit at `r >= 1`; zero exactly at `r = 1`.
    pub fn r_tilde(&self, r: f64) -> Result<f64, LebrunError> {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(LebrunError::OutsideChart(r));
        }
        Ok(((r * r - 1.0) / self.beta).sqrt())
    }

    /// Inverse of `r_tilde`.
    pub fn r_from_tilde(&self, r_tilde: f64) -> f64 {
        (1.0 + self.beta * r_tilde * r_tilde).sqrt()
    }

    /// Total transverse angle `2 pi beta`.
    pub fn cone_angle(&self) -> f64 {
        2.0 * PI * self.beta
    }
}

/// The family metric as a chart field.
///
/// In the frame chart the entries realize
/// `dr^2/V + (r^2/4)(dtheta^2 + sin^2 theta dphi^2) + (r^2 V/4)(dpsi - cos theta dphi)^2`,
/// the round-sphere part scaled so the `V = 1` profile is the flat metric in
/// polar coordinates. In the complex chart the potential recovered over the
/// default radial window generates the metric.
pub fn lebrun_metric(beta: f64, chart: LebrunChart) -> Result<ChartMetricField, LebrunError> {
    let profile = CoframeProfile::new(beta)?;
    match chart {
        LebrunChart::Frame => Ok(frame_field(profile)),
        LebrunChart::Complex => {
            let phi = recover_potential(beta, COMPLEX_CHART_RANGE, DEFAULT_ODE_TOL)?;
            Ok(metric_from_potential(&phi, 2))
        }
    }
}

/// Frame-chart field with the profile supplied as a jet program, so tests
/// can run deliberately corrupted profiles through the same assembly.
fn frame_field_with(
    label: String,
    v_of_rr: impl Fn(&Jet2) -> Jet2 + Send + Sync + 'static,
) -> ChartMetricField {
    ChartMetricField::new(4, label, move |p: &ChartPoint| {
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
        let v = v_of_rr(&rr);
        let sin = tj.compose([theta.sin(), theta.cos(), -theta.sin()]);
        let cos = tj.compose([theta.cos(), -theta.sin(), -theta.cos()]);
        let g_rr = v.recip();
        let g_tt = rr.scale(0.25);
        let fiber = rr.mul(&v).scale(0.25);
        let g_pp = rr.scale(0.25).mul(&sin.mul(&sin)).add(&fiber.mul(&cos.mul(&cos)));
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

fn frame_field(profile: CoframeProfile) -> ChartMetricField {
    let beta = profile.beta();
    frame_field_with(format!("lebrun-frame-{beta}"), move |rr| {
        rr.add_scalar(-1.0).mul(&rr.add_scalar(beta - 1.0)).mul(&rr.recip()).mul(&rr.recip())
    })
}

/// The family metric pulled back to transverse polar coordinates
/// `(t, theta, phi, psi)` at the edge, where `t^2 = (r^2 - 1)/beta`. The
/// substitution `r^2 = 1 + beta t^2` is exact, so the entries stay accurate
/// arbitrarily close to the edge where the frame chart's `r^2 - 1` would
/// cancel catastrophically. The metric degenerates at `t = 0` itself (polar
/// coordinates), so the chart domain is `t > 0`.
pub fn cone_chart_metric(beta: f64) -> Result<ChartMetricField, LebrunError> {
    let profile = CoframeProfile::new(beta)?;
    let beta = profile.beta();
    Ok(ChartMetricField::new(
        4,
        format!("lebrun-cone-{beta}"),
        move |p: &ChartPoint| {
            let t = p.coords()[0];
            let theta = p.coords()[1];
            if !(t > 0.0) {
                return Err(ChartError::OutsideDomain(format!(
                    "outside cone chart: transverse radius {t} is not > 0"
                )));
            }
            let tj = Jet2::coordinate(t, 0, 4);
            let aj = Jet2::coordinate(theta, 1, 4);
            // r^2 - 1 = beta t^2 exactly; no subtraction occurs.
            let num1 = tj.mul(&tj).scale(beta);
            let rr = num1.add_scalar(1.0);
            let num2 = rr.add_scalar(beta - 1.0);
            let v = num1.mul(&num2).mul(&rr.recip()).mul(&rr.recip());
            // dr/dt = beta t / r, so the radial coefficient is
            // (beta t)^2 / (r^2 V).
            let g_tt = num1.scale(beta).div(&rr.mul(&v));
            let sin = aj.compose([theta.sin(), theta.cos(), -theta.sin()]);
            let cos = aj.compose([theta.cos(), -theta.sin(), -theta.cos()]);
            let g_aa = rr.scale(0.25);
            let fiber = rr.mul(&v).scale(0.25);
            let g_pp = g_aa.mul(&sin.mul(&sin)).add(&fiber.mul(&cos.mul(&cos)));
            let g_ps = fiber.mul(&cos).neg();
            let zero = Jet2::constant(0.0, 4);
            Ok(MetricJet::from_entries(4, |i, j| match (i, j) {
                (0, 0) => g_tt.clone(),
                (1, 1) => g_aa.clone(),
                (2, 2) => g_pp.clone(),
                (3, 3) => fiber.clone(),
                (2, 3) => g_ps.clone(),
                _ => zero.clone(),
            }))
        },
    ))
}

/// Maximum `|scalar curvature|` and `|W+|` of the frame metric over the
/// given radii, each sampled at several Euler angles inside the polar
/// exclusion band. Both vanish for every positive cone parameter: the family
/// is scalar-flat and anti-self-dual in the orientation of its complex
/// structure.
pub fn scalar_flat_certificate(
    beta: f64,
    r_samples: &[f64],
) -> Result<(f64, f64), LebrunError> {
    let profile = CoframeProfile::new(beta)?;
    certificate_for(&frame_field(profile), r_samples)
}

fn certificate_for(
    field: &ChartMetricField,
    r_samples: &[f64],
) -> Result<(f64, f64), LebrunError> {
    let angles = [(0.9, 0.3, 1.1), (1.7, 2.0, 4.4), (2.4, 5.1, 2.8)];
    let mut max_scalar = 0.0f64;
    let mut max_weyl_plus = 0.0f64;
    for &r in r_samples {
        if !(r > 1.0) {
            return Err(LebrunError::OutsideChart(r));
        }
        for &(theta, phi, psi) in &angles {
            let p = ChartPoint::new(vec![r, theta, phi, psi])?;
            let report = curvature_at(field, &p, curvature_step(r))?;
            max_scalar = max_scalar.max(report.scalar.abs());
            let plus = report
                .weyl_plus
                .ok_or_else(|| ChartError::SelfDualityUndefined(field.dim()))?;
            max_weyl_plus = max_weyl_plus.max(plus.norm());
        }
    }
    Ok((max_scalar, max_weyl_plus))
}

/// The potential-chart radial coordinate `z(r)` with four derivatives,
/// in the closed form `z = (r^2 - 1)^{1/beta} (r^2 + beta - 1)^{(beta-1)/beta}`.
/// Its logarithmic derivative is `2/(r V)`, and `z/r^2 -> 1` at infinity,
/// which is the asymptotically Euclidean normalization.
pub fn potential_radius(beta: f64, r: f64) -> Result<Taylor5, LebrunError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(LebrunError::BadCone(beta));
    }
    if !(r > 1.0 && r.is_finite()) {
        return Err(LebrunError::OutsideChart(r));
    }
    let rj = Taylor5::from_derivatives([r, 1.0, 0.0, 0.0, 0.0]);
    let rr = rj.mul(&rj);
    let a = rr.add_scalar(-1.0).powf(1.0 / beta);
    let b = rr.add_scalar(beta - 1.0).powf((beta - 1.0) / beta);
    Ok(a.mul(&b))
}

/// Recovers the generating radial potential of the family over `z` values
/// covered by `r_range`, by integrating the logarithmic flow
/// `d(log z)/dr = 2/(r V(r))` downward from a large anchor radius where the
/// asymptotically Euclidean normalization fixes the constant. The returned
/// potential carries exact order-4 jets: the radial inversion `r(z)` is
/// solved by a bracketed Newton iteration on the dense ODE output and its
/// derivatives are rebuilt from the flow itself.
pub fn recover_potential(
    beta: f64,
    r_range: (f64, f64),
    tol: f64,
) -> Result<RadialPotential, LebrunError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(LebrunError::BadCone(beta));
    }
    let (lo, hi) = r_range;
    if !(lo > 1.0 && hi > lo && hi.is_finite()) {
        return Err(LebrunError::BadRange { lo, hi });
    }
    let rtol = if tol > 0.0 && tol.is_finite() { tol } else { DEFAULT_ODE_TOL };
    let r_inf = (2.0 * hi).max(1000.0);
    // Tail of log(z/r^2) at the anchor, from the large-r expansion of the
    // flow; the neglected term is O(r_inf^{-6}).
    let c2 = 2.0 - beta;
    let y_inf = -c2 / (r_inf * r_inf)
        - ((beta - 1.0) + c2 * c2) / (2.0 * r_inf.powi(4));
    let z_inf = r_inf * r_inf * y_inf.exp();
    let state0 = [y_inf, z_inf];
    let rhs = move |r: f64, y: &[f64], dy: &mut [f64]| {
        let _ = y;
        let v = v_value(beta, r);
        dy[0] = 2.0 * (1.0 - v) / (r * v);
        dy[1] = 2.0 * r / v;
    };
    let dense = ode::integrate_dense(rhs, r_inf, lo, &state0, rtol, rtol * 1e-3)?;
    let mut buf = [0.0f64; 2];
    dense.eval(lo, &mut buf)?;
    if !buf[0].is_finite() || buf[0].abs() > 200.0 {
        return Err(LebrunError::NotAle(format!(
            "log-profile value {:.3e} at r = {lo} is not a decaying normalization",
            buf[0]
        )));
    }
    let z_of = |r: f64, dense: &ode::DenseOutput| -> Result<f64, LebrunError> {
        let mut b = [0.0f64; 2];
        dense.eval(r, &mut b)?;
        Ok(r * r * b[0].exp())
    };
    let z_lo = z_of(lo, &dense)?;
    let z_hi = z_of(hi, &dense)?;
    if !(z_lo.is_finite() && z_hi.is_finite() && z_lo > 0.0 && z_hi > z_lo) {
        return Err(LebrunError::NotAle(format!(
            "recovered radial window [{z_lo:.3e}, {z_hi:.3e}] is not increasing"
        )));
    }
    let dense = Arc::new(dense);
    let label = format!("lebrun-potential-{beta}");
    Ok(RadialPotential::new(label, Domain::new(z_lo, z_hi), move |z| {
        let evaluation = |m: String| PotentialError::Evaluation(m);
        let target = z.ln();
        // Bracketed Newton for r(z): the map 2 log r + Y(r) is strictly
        // increasing, with derivative 2/(r V).
        let mut a = lo;
        let mut b = r_inf;
        let mut r = z.sqrt().clamp(lo, r_inf);
        let mut buf = [0.0f64; 2];
        let mut converged = false;
        for _ in 0..100 {
            dense.eval(r, &mut buf).map_err(|e| evaluation(e.to_string()))?;
            let h = 2.0 * r.ln() + buf[0] - target;
            if h.abs() < 1e-14 {
                converged = true;
                break;
            }
            if h > 0.0 {
                b = r;
            } else {
                a = r;
            }
            let hp = 2.0 / (r * v_value(beta, r));
            let mut next = r - h / hp;
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - r).abs() < 1e-16 * r {
                r = next;
                converged = true;
                break;
            }
            r = next;
        }
        if !converged {
            return Err(evaluation(format!("radial inversion stalled at z = {z}")));
        }
        // Rebuild order-4 jets of r(z) from dr/dz = r V / (2 z); each pass
        // promotes one more derivative to its exact value.
        let zj = Taylor5::from_derivatives([z, 1.0, 0.0, 0.0, 0.0]);
        let mut rj = Taylor5::from_derivatives([r, 0.0, 0.0, 0.0, 0.0]);
        for _ in 0..4 {
            let rr = rj.mul(&rj);
            let v = rr.add_scalar(-1.0).mul(&rr.add_scalar(beta - 1.0)).div(&rr.mul(&rr));
            let flow = rj.mul(&v).div(&zj.scale(2.0));
            let d = flow.derivatives();
            rj = Taylor5::from_derivatives([r, d[0], d[1], d[2], d[3]]);
        }
        let phi1 = rj.mul(&rj).div(&zj);
        dense.eval(r, &mut buf).map_err(|e| evaluation(e.to_string()))?;
        Ok(phi1.integrate(buf[1]))
    }))
}

/// Measured transverse cone angle at the zero section: the ratio of the
/// circumference of small fiber circles to their geodesic distance from the
/// edge, extrapolated to zero transverse radius. Both lengths are measured
/// from the cone-chart metric field; the leading finite-radius correction is
/// quadratic, so two radii suffice for the extrapolation.
pub fn cone_angle_estimate(beta: f64) -> Result<f64, LebrunError> {
    let field = cone_chart_metric(beta)?;
    let ratio_at = |rt: f64| -> Result<f64, LebrunError> {
        let radius = quad::integrate(
            |t| {
                let p = match ChartPoint::new(vec![t, 1.2, 0.4, 0.9]) {
                    Ok(p) => p,
                    Err(_) => return f64::NAN,
                };
                match field.value(&p) {
                    Ok(g) => g[(0, 0)].sqrt(),
                    Err(_) => f64::NAN,
                }
            },
            0.0,
            rt,
            1e-13,
        )?;
        let p = ChartPoint::new(vec![rt, 1.2, 0.4, 0.9])?;
        let g = field.value(&p)?;
        // The fiber circle is the psi-coordinate circle, of period 4 pi.
        let circumference = 4.0 * PI * g[(3, 3)].sqrt();
        Ok(circumference / radius.value)
    };
    let coarse = ratio_at(1e-2)?;
    let fine = ratio_at(1e-3)?;
    let t1 = 1e-2f64 * 1e-2;
    let t2 = 1e-3f64 * 1e-3;
    let limit = fine + (fine - coarse) * t2 / (t1 - t2);
    if !limit.is_finite() || (fine - limit).abs() > (coarse - limit).abs() + 1e-12 {
        return Err(LebrunError::ConeUnresolved(format!(
            "ratios {coarse} and {fine} do not tighten toward a limit"
        )));
    }
    Ok(limit)
}

/// Checks the order-`k` cyclic quotient bookkeeping: the complex-chart
/// metric is invariant under the generator (a scalar unitary rotation by
/// `2 pi / k`), and the measured cone angle divided by `k` is the smooth
/// value `2 pi`.
pub fn zk_quotient_check(k: u32) -> Result<bool, LebrunError> {
    if k < 1 {
        return Err(LebrunError::BadCone(k as f64));
    }
    let beta = k as f64;
    let field = lebrun_metric(beta, LebrunChart::Complex)?;
    let generator = sample::cyclic_generator_real(k, 2);
    let defect = invariance_defect(&field, &generator, 977 + u64::from(k))?;
    let angle = cone_angle_estimate(beta)?;
    let smooth = angle / beta;
    Ok(defect < 1e-10 && (smooth - 2.0 * PI).abs() < 1e-3 * 2.0 * PI)
}

/// Maximum relative congruence defect `|g(Up) - U^{-T} g(p) U^{-1}|` over 50
/// seeded points. Public so negative controls can drive the same measurement
/// with non-unitary maps.
pub fn invariance_defect(
    field: &ChartMetricField,
    map: &DMatrix<f64>,
    seed: u64,
) -> Result<f64, LebrunError> {
    let inv = map
        .clone()
        .try_inverse()
        .ok_or_else(|| LebrunError::NotAle("singular symmetry generator".to_string()))?;
    let inv_t = inv.transpose();
    let mut max_defect = 0.0f64;
    for p in sample::chart_points(seed, 50, 2, 3.0, 1.3) {
        let g = field.value(&p)?;
        let moved = map * nalgebra::DVector::from_column_slice(p.coords());
        let q = ChartPoint::new(moved.iter().copied().collect())?;
        let lhs = field.value(&q)?;
        let rhs = &inv_t * &g * &inv;
        let defect = (lhs - rhs).norm() / (1.0 + g.norm());
        max_defect = max_defect.max(defect);
    }
    Ok(max_defect)
}

/// Embedding of a frame-chart point into the complex chart, with its
/// Jacobian. The Euler convention pairs the first complex coordinate with
/// `(psi - phi)/2` and the second with `(psi + phi)/2`; its determinant is
/// positive, so the frame chart's coordinate orientation is the orientation
/// of the complex structure.
pub fn complex_embedding(
    beta: f64,
    frame_point: &ChartPoint,
) -> Result<(ChartPoint, DMatrix<f64>), LebrunError> {
    if frame_point.dim() != 4 {
        return Err(LebrunError::Chart(ChartError::BadDimension(frame_point.dim())));
    }
    let c = frame_point.coords();
    let (r, theta, phi, psi) = (c[0], c[1], c[2], c[3]);
    if !(r > 1.0) {
        return Err(LebrunError::OutsideChart(r));
    }
    let z_series = potential_radius(beta, r)?;
    let rj = Jet2::coordinate(r, 0, 4);
    let tj = Jet2::coordinate(theta, 1, 4);
    let pj = Jet2::coordinate(phi, 2, 4);
    let sj = Jet2::coordinate(psi, 3, 4);
    let d = z_series.derivatives();
    let w = rj.compose([d[0], d[1], d[2]]);
    let s = w.sqrt();
    let half = tj.scale(0.5);
    let hv = theta / 2.0;
    let cos_h = half.compose([hv.cos(), -hv.sin(), -hv.cos()]);
    let sin_h = half.compose([hv.sin(), hv.cos(), -hv.sin()]);
    let a1 = sj.sub(&pj).scale(0.5);
    let a2 = sj.add(&pj).scale(0.5);
    let a1v = (psi - phi) / 2.0;
    let a2v = (psi + phi) / 2.0;
    let cos1 = a1.compose([a1v.cos(), -a1v.sin(), -a1v.cos()]);
    let sin1 = a1.compose([a1v.sin(), a1v.cos(), -a1v.sin()]);
    let cos2 = a2.compose([a2v.cos(), -a2v.sin(), -a2v.cos()]);
    let sin2 = a2.compose([a2v.sin(), a2v.cos(), -a2v.sin()]);
    let x1 = s.mul(&cos_h).mul(&cos1);
    let y1 = s.mul(&cos_h).mul(&sin1);
    let x2 = s.mul(&sin_h).mul(&cos2);
    let y2 = s.mul(&sin_h).mul(&sin2);
    let outputs = [&x1, &y1, &x2, &y2];
    let point = ChartPoint::new(outputs.iter().map(|j| j.val).collect())?;
    let jac = DMatrix::from_fn(4, 4, |i, j| outputs[i].grad[j]);
    Ok((point, jac))
}

/// `|rho wedge omega|` at a complex-chart point: the Ricci form against the
/// fundamental form of the standard structure. Vanishing of this 4-form is
/// exactly scalar-flatness for a Kahler metric.
pub fn ricci_wedge_residual(
    field: &ChartMetricField,
    p: &ChartPoint,
) -> Result<f64, LebrunError> {
    let report = curvature_at(field, p, 1e-3)?;
    let j = standard_structure(2).value(p)?;
    let rho = j.transpose() * &report.ricci;
    let omega = j.transpose() * &report.metric;
    let wedge = rho[(0, 1)] * omega[(2, 3)] - rho[(0, 2)] * omega[(1, 3)]
        + rho[(0, 3)] * omega[(1, 2)]
        + rho[(2, 3)] * omega[(0, 1)]
        - rho[(1, 3)] * omega[(0, 2)]
        + rho[(1, 2)] * omega[(0, 3)];
    Ok(wedge.abs())
}

/// Leading metric coefficients in the cone chart at transverse radius
/// `r_tilde`: the radial coefficient, the orbit-sphere scale, and the fiber
/// scale. As `r_tilde -> 0` these tend to `1`, `1`, and `beta^2 r_tilde^2`.
pub fn edge_cone_coefficients(
    beta: f64,
    r_tilde: f64,
) -> Result<(f64, f64, f64), LebrunError> {
    if !(r_tilde > 0.0 && r_tilde.is_finite()) {
        return Err(LebrunError::ConeUnresolved(format!(
            "transverse radius must be positive (got {r_tilde})"
        )));
    }
    let field = cone_chart_metric(beta)?;
    let p = ChartPoint::new(vec![r_tilde, 1.2, 0.4, 0.9])?;
    let g = field.value(&p)?;
    let radial = g[(0, 0)];
    let sphere = 4.0 * g[(1, 1)];
    let fiber = 4.0 * g[(3, 3)];
    Ok((radial, sphere, fiber))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{weyl_split, Orientation};
    use crate::potential::kahler_form_axis;

    #[test]
    fn profile_vanishes_at_the_edge_exactly() {
        for beta in [0.3, 0.5, 1.0, 2.0, 2.7, 3.0, 5.0] {
            let prof = CoframeProfile::new(beta).unwrap();
            let v1 = prof.v(1.0 + f64::EPSILON).unwrap().value();
            assert!(v1.abs() < 1e-14, "V near 1 for beta={beta}: {v1}");
            let rr = Taylor5::from_derivatives([1.0, 1.0, 0.0, 0.0, 0.0]);
            let exact = rr
                .mul(&rr)
                .add_scalar(-1.0)
                .mul(&rr.mul(&rr).add_scalar(beta - 1.0))
                .value();
            assert_eq!(exact, 0.0, "factored numerator at r=1 for beta={beta}");
            for &r in &[1.01, 1.5, 2.0, 10.0, 100.0] {
                let v = prof.v(r).unwrap().value();
                assert!(v > 0.0, "V({r}) > 0 for beta={beta}");
            }
            let far = prof.v(1e6).unwrap().value();
            assert!((far - 1.0).abs() < 1e-11, "V -> 1 for beta={beta}: {far}");
        }
    }

    #[test]
    fn profile_matches_named_family_members() {
        // beta = 1 at r = 2
        let v = CoframeProfile::new(1.0).unwrap().v(2.0).unwrap().value();
        assert!((v - 0.75).abs() < 1e-15);
        // beta = 2 collapses to the Eguchi-Hanson profile 1 - r^{-4}
        let prof = CoframeProfile::new(2.0).unwrap();
        for &r in &[1.2, 2.0, 3.7] {
            let v = prof.v(r).unwrap().value();
            assert!((v - (1.0 - r.powi(-4))).abs() < 1e-14);
        }
        assert_eq!(prof.quotient_k(), Some(2));
        assert_eq!(CoframeProfile::new(2.5).unwrap().quotient_k(), None);
    }

    #[test]
    fn constant_profile_gives_the_flat_metric() {
        // With V = 1 the frame chart is flat space in polar coordinates:
        // the whole curvature pipeline must return zero.
        let field = frame_field_with("flat-frame".to_string(), |_| Jet2::constant(1.0, 4));
        for &(r, theta) in &[(1.5, 0.9), (3.0, 2.0), (7.0, 1.3)] {
            let p = ChartPoint::new(vec![r, theta, 0.7, 2.2]).unwrap();
            let report = curvature_at(&field, &p, curvature_step(r)).unwrap();
            assert!(report.scalar.abs() < 1e-9, "scalar {}", report.scalar);
            assert!(report.riemann_lower.max_abs() < 1e-9);
        }
    }

    #[test]
    fn frame_entries_at_the_equator() {
        let field = lebrun_metric(1.0, LebrunChart::Frame).unwrap();
        let p = ChartPoint::new(vec![2.0, PI / 2.0, 0.3, 1.0]).unwrap();
        let g = field.value(&p).unwrap();
        assert!((g[(0, 0)] - 1.0 / 0.75).abs() < 1e-12);
        assert!((g[(1, 1)] - 1.0).abs() < 1e-12);
        assert!((g[(2, 2)] - 1.0).abs() < 1e-12);
        assert!((g[(3, 3)] - 0.75).abs() < 1e-12);
        assert!(g[(2, 3)].abs() < 1e-12);
        let bad = ChartPoint::new(vec![0.9, 1.0, 0.0, 0.0]).unwrap();
        assert!(field.value(&bad).is_err());
        assert!(matches!(
            lebrun_metric(0.0, LebrunChart::Frame),
            Err(LebrunError::BadCone(_))
        ));
        let msg = match lebrun_metric(-1.0, LebrunChart::Frame) {
            Err(e) => e.to_string(),
            Ok(_) => panic!("negative cone parameter must be rejected"),
        };
        assert!(msg.contains("cone parameter must be positive"), "{msg}");
    }

    #[test]
    fn family_is_scalar_flat_and_anti_self_dual() {
        let (s, w) = scalar_flat_certificate(1.0, &[1.5, 2.0, 5.0]).unwrap();
        assert!(s < 1e-5, "beta=1 scalar {s}");
        assert!(w < 1e-5, "beta=1 W+ {w}");
        let (s, w) = scalar_flat_certificate(2.7, &[1.2, 3.0, 10.0]).unwrap();
        assert!(s < 1e-5, "beta=2.7 scalar {s}");
        assert!(w < 1e-5, "beta=2.7 W+ {w}");
    }

    #[test]
    fn anti_self_dual_means_other_half_is_visible() {
        // The curvature lives entirely in W- (plus the trace part): a flipped
        // orientation must show a visibly nonzero block for nonflat members.
        let field = lebrun_metric(3.0, LebrunChart::Frame).unwrap();
        let p = ChartPoint::new(vec![1.6, 1.1, 0.8, 2.0]).unwrap();
        let report = curvature_at(&field, &p, curvature_step(1.6)).unwrap();
        let (plus, minus) = weyl_split(&report, Orientation::Positive).unwrap();
        assert!(plus.norm() < 1e-6);
        assert!(minus.norm() > 0.01, "W- = {}", minus.norm());
    }

    #[test]
    fn corrupted_profile_fails_the_certificate() {
        // Every profile of the form 1 + a/r^2 + b/r^4 solves the
        // scalar-flatness equation of this ansatz, so the corruption must
        // leave that family: an r^{-3} term does, and the scalar curvature
        // sees it immediately.
        let beta = 1.0;
        let field = frame_field_with("corrupted".to_string(), move |rr| {
            let q = rr.recip();
            let base = rr
                .add_scalar(-1.0)
                .mul(&rr.add_scalar(beta - 1.0))
                .mul(&q)
                .mul(&q);
            base.add(&q.mul(&rr.sqrt().recip()).scale(0.1))
        });
        let p = ChartPoint::new(vec![1.5, 0.9, 0.3, 1.1]).unwrap();
        let report = curvature_at(&field, &p, curvature_step(1.5)).unwrap();
        assert!(report.scalar.abs() > 0.01, "corrupted scalar {}", report.scalar);
    }

    #[test]
    fn recovered_potential_matches_the_closed_form() {
        let phi = recover_potential(1.0, (1.05, 12.0), 1e-10).unwrap();
        for i in 0..12 {
            let r = 1.1 + (10.0 - 1.1) * i as f64 / 11.0;
            let z = r * r - 1.0;
            let expected = (z + 1.0) / z;
            let got = phi.d1(z).unwrap();
            assert!(
                (got - expected).abs() < 1e-8 * expected,
                "beta=1 at r={r}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn radial_change_of_variables_is_consistent() {
        // The 1e-10 consistency bar needs the integrator run two orders
        // tighter than the default.
        for &beta in &[1.0, 2.0, 3.0] {
            let phi = recover_potential(beta, (1.05, 12.0), 1e-12).unwrap();
            for i in 0..10 {
                let r = 1.2 + i as f64;
                let z = potential_radius(beta, r).unwrap().value();
                let d1 = phi.d1(z).unwrap();
                assert!(
                    (z * d1 - r * r).abs() < 1e-10 * r * r,
                    "beta={beta} r={r}: z phi' = {} vs r^2 = {}",
                    z * d1,
                    r * r
                );
            }
        }
    }

    #[test]
    fn recovered_potential_is_asymptotically_euclidean() {
        for &beta in &[1.0, 2.0, 3.0] {
            let phi = recover_potential(beta, (1.1, 2000.0), 1e-10).unwrap();
            let z = potential_radius(beta, 2000.0 * 0.999).unwrap().value();
            let d1 = phi.d1(z).unwrap();
            assert!((d1 - 1.0).abs() < 1e-6, "beta={beta}: phi' = {d1}");
        }
    }

    #[test]
    fn recovery_rejects_bad_input() {
        assert!(matches!(
            recover_potential(-2.0, (1.1, 5.0), 1e-10),
            Err(LebrunError::BadCone(_))
        ));
        let err = recover_potential(1.0, (0.8, 5.0), 1e-10).unwrap_err();
        assert!(err.to_string().contains("radial range"), "{err}");
    }

    #[test]
    fn frame_and_potential_charts_agree() {
        for &beta in &[1.0, 2.0, 3.0] {
            let frame = lebrun_metric(beta, LebrunChart::Frame).unwrap();
            let complex = lebrun_metric(beta, LebrunChart::Complex).unwrap();
            for &(r, theta, phi_a, psi) in
                &[(1.3, 0.9, 0.4, 1.2), (2.0, 1.7, 2.8, 4.1), (5.0, 2.4, 5.9, 0.6)]
            {
                let q = ChartPoint::new(vec![r, theta, phi_a, psi]).unwrap();
                let (p, jac) = complex_embedding(beta, &q).unwrap();
                assert!(jac.determinant() > 0.0, "orientation of the embedding");
                let g_frame = frame.value(&q).unwrap();
                let g_complex = complex.value(&p).unwrap();
                let pulled = jac.transpose() * g_complex * &jac;
                let rel = (&g_frame - &pulled).norm() / g_frame.norm();
                assert!(
                    rel < 1e-6,
                    "beta={beta} at r={r}: chart mismatch {rel:.3e}"
                );
            }
        }
    }

    #[test]
    fn ricci_form_wedge_vanishes_on_samples() {
        for &beta in &[1.0, 2.7] {
            let field = lebrun_metric(beta, LebrunChart::Complex).unwrap();
            for p in sample::chart_points(29, 6, 2, 2.5, 1.4) {
                let w = ricci_wedge_residual(&field, &p).unwrap();
                assert!(w < 1e-5, "beta={beta}: wedge {w:.3e}");
            }
        }
    }

    #[test]
    fn cone_angles_scale_with_the_parameter() {
        let a1 = cone_angle_estimate(1.0).unwrap();
        assert!((a1 - 2.0 * PI).abs() < 1e-4, "beta=1: {a1}");
        let ah = cone_angle_estimate(0.5).unwrap();
        assert!((ah - PI).abs() < 1e-3, "beta=0.5: {ah}");
        let a3 = cone_angle_estimate(3.0).unwrap();
        assert!((a3 - 6.0 * PI).abs() < 1e-2, "beta=3: {a3}");
        assert_eq!(EdgeConeChart::new(3.0).unwrap().cone_angle(), 6.0 * PI);
        assert_eq!(EdgeConeChart::new(3.0).unwrap().r_tilde(1.0).unwrap(), 0.0);
    }

    #[test]
    fn edge_cone_expansion_has_the_stated_leading_terms() {
        for &beta in &[0.5, 1.0, 2.7] {
            let rt = 1e-3;
            let (radial, sphere, fiber) = edge_cone_coefficients(beta, rt).unwrap();
            assert!((radial - 1.0).abs() < 1e-4, "beta={beta} radial {radial}");
            assert!((sphere - 1.0).abs() < 1e-4, "beta={beta} sphere {sphere}");
            let expected = beta * beta * rt * rt;
            assert!(
                (fiber - expected).abs() < 1e-4 * expected,
                "beta={beta} fiber {fiber} vs {expected}"
            );
        }
    }

    #[test]
    fn cyclic_quotients_close_up_for_integer_parameters() {
        assert!(zk_quotient_check(1).unwrap());
        assert!(zk_quotient_check(3).unwrap());
    }

    #[test]
    fn non_unitary_map_breaks_invariance() {
        let field = lebrun_metric(2.0, LebrunChart::Complex).unwrap();
        let skew = sample::non_unitary_rotation(2, 0.35);
        let defect = invariance_defect(&field, &skew, 1234).unwrap();
        assert!(defect > 1e-3, "non-unitary defect {defect}");
    }

    #[test]
    fn fiber_and_base_hermitian_coefficients_match_the_frame() {
        // On the first complex axis the potential metric splits into two
        // radial eigenvalues: phi' = r^2/z on the base plane and
        // phi' + z phi'' = d(z phi')/dz = d(r^2)/dz = r^2 V / z on the fiber.
        let beta = 2.0;
        let phi = recover_potential(beta, (1.05, 12.0), 1e-10).unwrap();
        for &r in &[1.4f64, 2.0, 3.0] {
            let z = potential_radius(beta, r).unwrap().value();
            let (fiber, base) = kahler_form_axis(&phi, z).unwrap();
            assert!((base * z - r * r).abs() < 1e-9 * r * r, "base at r={r}");
            let expected = r * r * v_value(beta, r) / z;
            assert!(
                (fiber - expected).abs() < 1e-8 * expected.abs().max(1.0),
                "fiber at r={r}: {fiber} vs {expected}"
            );
        }
    }
}
