//! Conformal compactification of potential metrics: the factor
//! `u = (z phi')^{-1}`, the compactified potential obtained by integrating
//! `-(z^2 phi')^{-1}`, and the numerical certificates tying the two charts
//! together (first-order system residuals, pullback of the Kahler form,
//! asymptotic decay rate).
//!
//! Everything here works with the inversion `z <-> xi = 1/z` from
//! [`crate::potential`]: the compactified potential is naturally a profile
//! in `xi` on the outer chart, and is exposed in both parametrizations.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::chart::{ChartError, ChartMetricField, ChartPoint};
use crate::jet::Jet2;
use crate::potential::{
    invert, inversion_jacobian, metric_from_potential, Domain, PotentialError, RadialPotential,
};
use crate::quad::{self, QuadError};
use crate::series::Taylor5;

/// Absolute quadrature tolerance for compactified-potential values.
pub const QUAD_ABS_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CompactifyError {
    #[error("metric degenerate, factor undefined: z phi' = {value:.6e} at z = {z}")]
    DegenerateFactor { z: f64, value: f64 },
    #[error("integral did not converge: {0}")]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("not ALE at sampled scales: {0}")]
    NotAle(String),
    #[error("bad samples: {0}")]
    BadSamples(String),
}

/// The conformal factor `u = (z phi')^{-1}` of a radial potential.
#[derive(Clone, Debug)]
pub struct ConformalFactor {
    source: RadialPotential,
}

impl ConformalFactor {
    pub fn new(source: &RadialPotential) -> Self {
        ConformalFactor { source: source.clone() }
    }

    pub fn source(&self) -> &RadialPotential {
        &self.source
    }

    /// `u(z)`. At `z = 0` the continuous extension `1/lim (z phi')` is used
    /// when that limit is positive (profiles with an exceptional orbit).
    pub fn value(&self, z: f64) -> Result<f64, CompactifyError> {
        Ok(self.jet2(z)?[0])
    }

    /// `(u, u', u'')` at `z`, exact from the potential's jets.
    pub fn jet2(&self, z: f64) -> Result<[f64; 3], CompactifyError> {
        if z == 0.0 && !self.source.domain().contains(0.0) && self.source.domain().lo == 0.0 {
            let (_, base) = crate::potential::quotient_profile(&self.source, 0.0)?;
            if base <= 0.0 {
                return Err(CompactifyError::DegenerateFactor { z, value: base });
            }
            // derivatives are not extended here, only the continuous value
            return Ok([1.0 / base, f64::NAN, f64::NAN]);
        }
        let t = self.source.jet(z)?;
        let d = t.derivatives();
        let b = z * d[1];
        if b <= 0.0 {
            return Err(CompactifyError::DegenerateFactor { z, value: b });
        }
        let b1 = d[1] + z * d[2];
        let b2 = 2.0 * d[2] + z * d[3];
        let u = 1.0 / b;
        let u1 = -b1 * u * u;
        let u2 = (2.0 * b1 * b1 - b * b2) * u * u * u;
        Ok([u, u1, u2])
    }

    /// The factor as an order-2 jet of chart coordinates at `p`.
    pub fn chart_jet(&self, p: &ChartPoint) -> Result<Jet2, ChartError> {
        let z = p.norm_sq();
        let outer = self
            .jet2(z)
            .map_err(|e| ChartError::OutsideDomain(e.to_string()))?;
        if !outer.iter().all(|v| v.is_finite()) {
            return Err(ChartError::OutsideDomain(format!(
                "conformal factor has no derivatives at z = {z}"
            )));
        }
        let dim = p.dim();
        let mut zj = Jet2::constant(0.0, dim);
        for i in 0..dim {
            let c = Jet2::coordinate(p.coords()[i], i, dim);
            zj = zj.add(&c.mul(&c));
        }
        Ok(zj.compose(outer))
    }
}

/// The conformally rescaled metric `u^2 g` as a chart field.
pub fn compactified_metric(phi: &RadialPotential, n_complex: usize) -> ChartMetricField {
    let base = metric_from_potential(phi, n_complex);
    let factor = ConformalFactor::new(phi);
    let label = format!("hat:{}", phi.label());
    base.conformal(label, move |p| factor.chart_jet(p))
}

/// The compactified potential as a profile in `xi = 1/z`: values by adaptive
/// quadrature of `-(z^2 phi')^{-1}` from the anchor, derivatives exact from
/// the chain rule (`d/dxi` of the compactified potential is `1/phi'(1/xi)`).
pub fn compactified_potential(
    phi: &RadialPotential,
    z0: f64,
) -> Result<RadialPotential, CompactifyError> {
    let source = phi.clone();
    if !source.domain().contains(z0) {
        return Err(CompactifyError::Potential(PotentialError::OutsideDomain {
            z: z0,
            domain: source.domain(),
        }));
    }
    let zdom = source.domain();
    let xi_domain = Domain::new(
        if zdom.hi.is_infinite() { 0.0 } else { 1.0 / zdom.hi },
        if zdom.lo == 0.0 { f64::INFINITY } else { 1.0 / zdom.lo },
    );
    let label = format!("hat({})", source.label());
    let cache: Arc<Mutex<HashMap<u64, f64>>> = Arc::new(Mutex::new(HashMap::new()));
    let quad_src = source.clone();
    Ok(RadialPotential::new(label, xi_domain, move |xi| {
        let z = 1.0 / xi;
        let cached = cache.lock().expect("quadrature cache lock").get(&xi.to_bits()).copied();
        let value = match cached {
            Some(v) => v,
            None => {
                let f = |s: f64| -> f64 {
                    match quad_src.jet(s) {
                        Ok(t) => -1.0 / (s * s * t.derivative(1)),
                        Err(_) => f64::NAN, // surfaces as a non-finite quadrature error
                    }
                };
                let q = quad::integrate(&f, z0, z, QUAD_ABS_TOL).map_err(|e| {
                    PotentialError::Evaluation(format!("integral did not converge: {e}"))
                })?;
                cache.lock().expect("quadrature cache lock").insert(xi.to_bits(), q.value);
                q.value
            }
        };
        // exact derivative series: d(hat phi)/dxi = 1 / phi'(z) with z = 1/xi
        let t = quad_src.jet(z)?;
        let d = t.derivatives();
        let z_series = Taylor5::variable(xi).recip();
        let dphi = z_series.compose([d[1], d[2], d[3], d[4], 0.0]);
        Ok(dphi.recip().integrate(value))
    }))
}

/// The compactified potential reparametrized as a profile of the original
/// radial variable `z` (used by the first-order system residuals).
pub fn compactified_potential_in_z(
    phi: &RadialPotential,
    z0: f64,
) -> Result<RadialPotential, CompactifyError> {
    let source = phi.clone();
    if !source.domain().contains(z0) {
        return Err(CompactifyError::Potential(PotentialError::OutsideDomain {
            z: z0,
            domain: source.domain(),
        }));
    }
    let label = format!("hat_z({})", source.label());
    let domain = source.domain();
    let cache: Arc<Mutex<HashMap<u64, f64>>> = Arc::new(Mutex::new(HashMap::new()));
    Ok(RadialPotential::new(label, domain, move |z| {
        let cached = cache.lock().expect("quadrature cache lock").get(&z.to_bits()).copied();
        let value = match cached {
            Some(v) => v,
            None => {
                let quad_src = source.clone();
                let f = move |s: f64| -> f64 {
                    match quad_src.jet(s) {
                        Ok(t) => -1.0 / (s * s * t.derivative(1)),
                        Err(_) => f64::NAN,
                    }
                };
                let q = quad::integrate(&f, z0, z, QUAD_ABS_TOL).map_err(|e| {
                    PotentialError::Evaluation(format!("integral did not converge: {e}"))
                })?;
                cache.lock().expect("quadrature cache lock").insert(z.to_bits(), q.value);
                q.value
            }
        };
        let t = source.jet(z)?;
        let d = t.derivatives();
        let z_series = Taylor5::variable(z);
        let dphi = Taylor5::from_derivatives([d[1], d[2], d[3], d[4], 0.0]);
        let integrand = z_series.mul(&z_series).mul(&dphi).recip().neg();
        Ok(integrand.integrate(value))
    }))
}

/// Residuals of the first-order compactification system at `z`, with the
/// compactified potential viewed as a function of `z`:
/// `r1 = u^2 (phi' + z phi'') - (hat' + z hat'')`, `r2 = u^2 phi' + hat'`.
pub fn verify_ode_system(
    phi: &RadialPotential,
    hat_in_z: &RadialPotential,
    z: f64,
) -> Result<(f64, f64), CompactifyError> {
    let t = phi.jet(z)?;
    let h = hat_in_z.jet(z)?;
    let d = t.derivatives();
    let e = h.derivatives();
    let b = z * d[1];
    if b <= 0.0 {
        return Err(CompactifyError::DegenerateFactor { z, value: b });
    }
    let u2 = 1.0 / (b * b);
    let r1 = u2 * (d[1] + z * d[2]) - (e[1] + z * e[2]);
    let r2 = u2 * d[1] + e[1];
    Ok((r1, r2))
}

fn kahler_form_matrix(field: &ChartMetricField, p: &ChartPoint) -> Result<DMatrix<f64>, ChartError> {
    let g = field.value(p)?;
    let d = g.nrows();
    let mut j = DMatrix::zeros(d, d);
    for c in 0..d / 2 {
        j[(2 * c, 2 * c + 1)] = -1.0;
        j[(2 * c + 1, 2 * c)] = 1.0;
    }
    Ok(j.transpose() * g)
}

/// Residual of the conformal pullback identity at the axis point
/// `(sqrt z, 0, ..., 0)`: the outer chart's Kahler form, pulled back through
/// the inversion, must equal `u^2` times the inner form.
pub fn verify_pullback_identity(
    phi: &RadialPotential,
    z: f64,
) -> Result<f64, CompactifyError> {
    let p = ChartPoint::new(vec![z.sqrt(), 0.0, 0.0, 0.0])
        .expect("axis point is a valid chart point");
    pullback_identity_residual(phi, &p)
}

/// The same residual at an arbitrary point. Away from the first-coordinate
/// axis this is genuinely nonzero; it is reported, never asserted small.
pub fn pullback_identity_residual(
    phi: &RadialPotential,
    p: &ChartPoint,
) -> Result<f64, CompactifyError> {
    let z = p.norm_sq();
    let hat = compactified_potential(phi, anchor_for(phi))?;
    let inner = metric_from_potential(phi, p.dim() / 2);
    let outer = metric_from_potential(&hat, p.dim() / 2);

    let q = invert(p)?;
    let a = inversion_jacobian(p)?;
    let omega_hat = kahler_form_matrix(&outer, &q)
        .map_err(|e| CompactifyError::BadSamples(e.to_string()))?;
    let pulled = a.transpose() * omega_hat * &a;

    let omega = kahler_form_matrix(&inner, p)
        .map_err(|e| CompactifyError::BadSamples(e.to_string()))?;
    let u = ConformalFactor::new(phi).value(z)?;
    Ok((pulled - omega.scale(u * u)).norm())
}

/// Anchor inside the profile's domain, biased toward 1 when available.
fn anchor_for(phi: &RadialPotential) -> f64 {
    let d = phi.domain();
    if d.contains(1.0) {
        1.0
    } else if d.hi.is_finite() {
        0.5 * (d.lo + d.hi)
    } else {
        d.lo + 1.0
    }
}

/// Least-squares decay exponent `tau` of `log ||g - identity||` against
/// `log r` along the first-coordinate axis. Flat input (defect at noise
/// level everywhere) reports `tau = infinity`.
pub fn ale_decay_rate(
    metric: &ChartMetricField,
    r_samples: &[f64],
) -> Result<f64, CompactifyError> {
    if r_samples.len() < 2 {
        return Err(CompactifyError::BadSamples(
            "need at least two radii".to_string(),
        ));
    }
    let mut rs = r_samples.to_vec();
    rs.sort_by(|a, b| a.partial_cmp(b).expect("radii must be comparable"));
    if !(rs[0] > 0.0) {
        return Err(CompactifyError::BadSamples("radii must be positive".to_string()));
    }
    if rs[rs.len() - 1] / rs[0] < 10.0 {
        return Err(CompactifyError::BadSamples(
            "samples must span at least one decade of r".to_string(),
        ));
    }
    let dim = metric.dim();
    let id = DMatrix::<f64>::identity(dim, dim);
    let mut defects = Vec::with_capacity(rs.len());
    for &r in &rs {
        let mut coords = vec![0.0; dim];
        coords[0] = r;
        let p = ChartPoint::new(coords).expect("axis point is valid");
        let g = metric
            .value(&p)
            .map_err(|e| CompactifyError::BadSamples(e.to_string()))?;
        defects.push((&g - &id).norm());
    }
    const NOISE_FLOOR: f64 = 1e-12;
    if defects.iter().all(|&d| d < NOISE_FLOOR) {
        return Ok(f64::INFINITY);
    }
    for i in 1..defects.len() {
        if defects[i] >= defects[i - 1] {
            return Err(CompactifyError::NotAle(format!(
                "defect does not decay between r = {} and r = {}",
                rs[i - 1],
                rs[i]
            )));
        }
    }
    let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = defects.iter().map(|d| d.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(-sxy / sxx)
}
