//! Radial Kahler potentials on punctured complex space and the structures
//! they induce: metrics, Kahler-form coefficients, the inversion map between
//! the inner and outer coordinate charts, and the pulled-back complex
//! structure.
//!
//! A potential is a scalar profile `phi` of the radial variable
//! `z = |z_1|^2 + ... + |z_n|^2`, carried as a degree-4 Taylor program so
//! that four exact derivatives are available to every consumer (curvature of
//! conformal rescalings needs all four).
//!
//! Index bookkeeping, used by every chart-facing function in the crate: the
//! complex point `(z_1, ..., z_n)` with `z_j = x_j + i y_j` is the real
//! vector `(x_1, y_1, ..., x_n, y_n)`; the Hermitian matrix
//! `h_{jk} = a δ_{jk} + b conj(z_j) z_k` (with `a = phi'`, `b = phi''`)
//! becomes the real symmetric metric
//!
//! ```text
//! g(∂x_j, ∂x_k) = a δ_jk + b (x_j x_k + y_j y_k)
//! g(∂x_j, ∂y_k) = b (x_j y_k - y_j x_k)
//! g(∂y_j, ∂y_k) = a δ_jk + b (x_j x_k + y_j y_k)
//! ```
//!
//! so the round-trip real → complex → real is the identity (checked on the
//! flat potential in the tests).

use nalgebra::DMatrix;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

use crate::chart::{
    ChartError, ChartMetricField, ChartPoint, ComplexStructureField, MetricJet, StructureJet,
};
use crate::expr::{self, ExprError};
use crate::jet::Jet2;
use crate::series::Taylor5;

/// Default potential corpus shipped with the repository.
pub const DEFAULT_CORPUS: &str = include_str!("../../../data/potentials.txt");

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("potential not defined here: z = {z} outside domain {domain}")]
    OutsideDomain { z: f64, domain: Domain },
    #[error("induced metric degenerate: {what} = {value:.6e} at z = {z}")]
    Degenerate { what: &'static str, value: f64, z: f64 },
    #[error("potential produced non-finite derivatives at z = {z}")]
    NonFinite { z: f64 },
    #[error(
        "jets inconsistent with finite differences at z = {z} \
         (relative error {relative_error:.3e})"
    )]
    JetInconsistent { z: f64, relative_error: f64 },
    #[error("inversion undefined at origin")]
    OriginInversion,
    #[error(transparent)]
    Expression(#[from] ExprError),
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error("{0}")]
    Evaluation(String),
}

/// Open interval of the radial variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "domain must be a nonempty open interval");
        Domain { lo, hi }
    }

    pub fn positive_reals() -> Self {
        Domain { lo: 0.0, hi: f64::INFINITY }
    }

    pub fn contains(&self, z: f64) -> bool {
        z > self.lo && z < self.hi
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.hi.is_infinite() {
            write!(f, "({}, inf)", self.lo)
        } else {
            write!(f, "({}, {})", self.lo, self.hi)
        }
    }
}

type ProfileEval = dyn Fn(f64) -> Result<Taylor5, PotentialError> + Send + Sync;

/// A radial profile: scalar function of `z` with four exact derivatives.
#[derive(Clone)]
pub struct RadialPotential {
    label: String,
    domain: Domain,
    eval: Arc<ProfileEval>,
}

impl fmt::Debug for RadialPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialPotential")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .finish()
    }
}

impl RadialPotential {
    pub fn new(
        label: impl Into<String>,
        domain: Domain,
        eval: impl Fn(f64) -> Result<Taylor5, PotentialError> + Send + Sync + 'static,
    ) -> Self {
        RadialPotential { label: label.into(), domain, eval: Arc::new(eval) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Degree-4 Taylor data `(phi, phi', phi'', phi''', phi'''')` at `z`.
    pub fn jet(&self, z: f64) -> Result<Taylor5, PotentialError> {
        if !self.domain.contains(z) {
            return Err(PotentialError::OutsideDomain { z, domain: self.domain });
        }
        let t = (self.eval)(z)?;
        if !t.is_finite() {
            return Err(PotentialError::NonFinite { z });
        }
        Ok(t)
    }

    pub fn value(&self, z: f64) -> Result<f64, PotentialError> {
        Ok(self.jet(z)?.value())
    }

    /// First derivative `phi'(z)`.
    pub fn d1(&self, z: f64) -> Result<f64, PotentialError> {
        Ok(self.jet(z)?.derivative(1))
    }

    /// Second derivative `phi''(z)`.
    pub fn d2(&self, z: f64) -> Result<f64, PotentialError> {
        Ok(self.jet(z)?.derivative(2))
    }

    /// Flat profile `phi(z) = z` (Euclidean metric).
    pub fn flat() -> Self {
        RadialPotential::new("flat", Domain::positive_reals(), |z| {
            Ok(Taylor5::variable(z))
        })
    }

    /// Blow-up profile `phi(z) = z + log z`.
    pub fn burns() -> Self {
        RadialPotential::new("burns", Domain::positive_reals(), |z| {
            let t = Taylor5::variable(z);
            Ok(t.add(&t.ln()))
        })
    }

    /// Projective-space profile `phi(z) = log(1 + z)`.
    pub fn fubini_study() -> Self {
        RadialPotential::new("fubini_study", Domain::positive_reals(), |z| {
            let t = Taylor5::variable(z);
            Ok(t.add_scalar(1.0).ln())
        })
    }

    /// Cotangent-bundle profile
    /// `phi(z) = sqrt(1 + z^2) + log z - log(1 + sqrt(1 + z^2))`.
    pub fn eguchi_hanson() -> Self {
        RadialPotential::new("eguchi_hanson", Domain::positive_reals(), |z| {
            let t = Taylor5::variable(z);
            let s = t.mul(&t).add_scalar(1.0).sqrt();
            Ok(s.add(&t.ln()).sub(&s.add_scalar(1.0).ln()))
        })
    }

    /// The four closed-form profiles above, in corpus order.
    pub fn builtins() -> Vec<RadialPotential> {
        vec![
            RadialPotential::flat(),
            RadialPotential::burns(),
            RadialPotential::fubini_study(),
            RadialPotential::eguchi_hanson(),
        ]
    }

    /// Parse a closed-form profile from the expression language and validate
    /// its positivity and jet consistency on a domain sweep.
    pub fn from_expression(
        label: impl Into<String>,
        source: &str,
        domain: Domain,
    ) -> Result<Self, PotentialError> {
        let parsed = expr::parse(source)?;
        let pot = RadialPotential::new(label, domain, move |z| Ok(parsed.eval_taylor(z)?));
        pot.validate()?;
        Ok(pot)
    }

    /// Rescale the profile values by a constant (`c * phi`).
    pub fn scaled(&self, c: f64) -> RadialPotential {
        let inner = self.eval.clone();
        RadialPotential {
            label: format!("{}*{}", self.label, c),
            domain: self.domain,
            eval: Arc::new(move |z| Ok(inner(z)?.scale(c))),
        }
    }

    /// Positivity of the induced metric coefficients and self-consistency of
    /// the jets under fourth-order differencing, sampled across the domain.
    pub fn validate(&self) -> Result<(), PotentialError> {
        let lo = if self.domain.lo.is_finite() {
            (self.domain.lo * 1.001).max(self.domain.lo + 1e-6).max(1e-3)
        } else {
            1e-3
        };
        let hi = if self.domain.hi.is_finite() { self.domain.hi * 0.999 } else { 1e3 };
        if !(lo < hi) {
            return Ok(()); // domain too small to sweep; per-point checks still apply
        }
        let samples = 20;
        for i in 0..samples {
            let t = i as f64 / (samples - 1) as f64;
            let z = lo * (hi / lo).powf(t);
            let jet = self.jet(z)?;
            let d1 = jet.derivative(1);
            let d2 = jet.derivative(2);
            if d1 <= 0.0 {
                return Err(PotentialError::Degenerate { what: "phi'", value: d1, z });
            }
            let fiber = d1 + z * d2;
            if fiber <= 0.0 {
                return Err(PotentialError::Degenerate { what: "(z phi')'", value: fiber, z });
            }
            // fourth-order central difference of phi against the jet's phi'
            let h = (1e-3 * z).min(0.25 * (z - self.domain.lo)).min(0.25 * (self.domain.hi - z));
            let v = |dz: f64| -> Result<f64, PotentialError> { self.value(z + dz) };
            let fd = (-v(2.0 * h)? + 8.0 * v(h)? - 8.0 * v(-h)? + v(-2.0 * h)?) / (12.0 * h);
            let rel = (fd - d1).abs() / (1.0 + d1.abs());
            if rel > 1e-6 {
                return Err(PotentialError::JetInconsistent { z, relative_error: rel });
            }
        }
        Ok(())
    }
}

/// One parsed corpus line.
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub source: String,
    pub domain: Domain,
}

fn parse_domain_text(text: &str, line: usize) -> Result<Domain, PotentialError> {
    let err = |message: String| PotentialError::Corpus { line, message };
    let inner = text
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| err(format!("domain `{text}` must look like (lo, hi)")))?;
    let mut parts = inner.splitn(2, ',');
    let lo_text = parts.next().unwrap_or("").trim();
    let hi_text = parts.next().unwrap_or("").trim();
    let lo: f64 = lo_text
        .parse()
        .map_err(|_| err(format!("bad lower endpoint `{lo_text}`")))?;
    let hi: f64 = if hi_text == "inf" {
        f64::INFINITY
    } else {
        hi_text
            .parse()
            .map_err(|_| err(format!("bad upper endpoint `{hi_text}`")))?
    };
    if !(lo < hi) {
        return Err(err(format!("empty domain ({lo}, {hi})")));
    }
    Ok(Domain { lo, hi })
}

/// Parse corpus text: one `name, expression, (lo, hi)` per line, `#` for
/// comments.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>, PotentialError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split(',').collect();
        if parts.len() < 4 {
            return Err(PotentialError::Corpus {
                line,
                message: "expected `name, expression, (lo, hi)`".to_string(),
            });
        }
        let name = parts[0].trim().to_string();
        let domain_text = format!("{},{}", parts[parts.len() - 2], parts[parts.len() - 1]);
        let source = parts[1..parts.len() - 2].join(",").trim().to_string();
        if name.is_empty() || source.is_empty() {
            return Err(PotentialError::Corpus {
                line,
                message: "name and expression must be nonempty".to_string(),
            });
        }
        let domain = parse_domain_text(domain_text.trim(), line)?;
        out.push(CorpusEntry { name, source, domain });
    }
    Ok(out)
}

/// Parse and build validated potentials from corpus text.
pub fn load_corpus(text: &str) -> Result<Vec<RadialPotential>, PotentialError> {
    parse_corpus(text)?
        .into_iter()
        .map(|e| RadialPotential::from_expression(e.name, &e.source, e.domain))
        .collect()
}

fn potential_chart_error(e: PotentialError) -> ChartError {
    ChartError::OutsideDomain(e.to_string())
}

/// Metric induced by a radial potential on the `2n`-dimensional chart, via
/// the Hermitian form `a δ_jk + b conj(z_j) z_k` with `a = phi'(z)`,
/// `b = phi''(z)` (see the module docs for the real layout).
pub fn metric_from_potential(phi: &RadialPotential, n_complex: usize) -> ChartMetricField {
    assert!(n_complex >= 2, "charts have complex dimension >= 2");
    let phi = phi.clone();
    let dim = 2 * n_complex;
    let label = format!("potential:{}", phi.label());
    ChartMetricField::new(dim, label, move |p: &ChartPoint| {
        let z = p.norm_sq();
        let t = phi.jet(z).map_err(potential_chart_error)?;
        let d = t.derivatives();
        // radial variable as an order-2 jet of the coordinates
        let mut zj = Jet2::constant(0.0, dim);
        let coord: Vec<Jet2> =
            (0..dim).map(|i| Jet2::coordinate(p.coords()[i], i, dim)).collect();
        for c in &coord {
            zj = zj.add(&c.mul(c));
        }
        let a = zj.compose([d[1], d[2], d[3]]);
        let b = zj.compose([d[2], d[3], d[4]]);
        Ok(MetricJet::from_entries(dim, |i, j| {
            let (ci, cj) = (i / 2, j / 2);
            match (i % 2, j % 2) {
                (0, 0) => {
                    // g(x_ci, x_cj)
                    let mut e =
                        b.mul(&coord[i].mul(&coord[j]).add(&coord[i + 1].mul(&coord[j + 1])));
                    if ci == cj {
                        e = e.add(&a);
                    }
                    e
                }
                (1, 1) => {
                    // g(y_ci, y_cj)
                    let mut e =
                        b.mul(&coord[i - 1].mul(&coord[j - 1]).add(&coord[i].mul(&coord[j])));
                    if ci == cj {
                        e = e.add(&a);
                    }
                    e
                }
                (0, 1) => {
                    // g(x_ci, y_cj) = b (x_ci y_cj - y_ci x_cj)
                    b.mul(&coord[i].mul(&coord[j]).sub(&coord[i + 1].mul(&coord[j - 1])))
                }
                _ => {
                    // g(y_ci, x_cj) = b (x_cj y_ci - y_cj x_ci)
                    b.mul(&coord[j].mul(&coord[i]).sub(&coord[j + 1].mul(&coord[i - 1])))
                }
            }
        }))
    })
}

/// Kahler-form coefficients on the first-coordinate axis:
/// `(phi' + z phi'', phi')`.
pub fn kahler_form_axis(
    phi: &RadialPotential,
    z: f64,
) -> Result<(f64, f64), PotentialError> {
    let t = phi.jet(z)?;
    let d1 = t.derivative(1);
    let d2 = t.derivative(2);
    Ok((d1 + z * d2, d1))
}

/// Cohomogeneity-one coefficients `((z phi')', z phi')`: the first scales
/// the circle-fiber direction, the second the projective base. At `z = 0`
/// the one-sided limit is taken through a short Taylor pullback, so profiles
/// that are singular at the origin but whose combination `z phi'` extends
/// (blow-up profiles) still report their exceptional-orbit values.
pub fn quotient_profile(
    phi: &RadialPotential,
    z: f64,
) -> Result<(f64, f64), PotentialError> {
    if phi.domain().contains(z) {
        let t = phi.jet(z)?;
        let d = t.derivatives();
        return Ok((d[1] + z * d[2], z * d[1]));
    }
    if z == 0.0 && phi.domain().lo == 0.0 {
        let eps = 1e-6;
        let t = phi.jet(eps)?;
        let d = t.derivatives();
        // base B = z phi': B' = phi' + z phi'', B'' = 2 phi'' + z phi'''
        let base_v = eps * d[1];
        let base_1 = d[1] + eps * d[2];
        let base_2 = 2.0 * d[2] + eps * d[3];
        // fiber F = B': F' = B'', F'' = 3 phi''' + z phi''''
        let fiber_2 = 3.0 * d[3] + eps * d[4];
        let base = base_v - eps * base_1 + 0.5 * eps * eps * base_2;
        let fiber = base_1 - eps * base_2 + 0.5 * eps * eps * fiber_2;
        return Ok((fiber, base));
    }
    Err(PotentialError::OutsideDomain { z, domain: phi.domain() })
}

/// The inversion between the inner and outer charts: conjugate the first
/// complex coordinate and divide everything by the radial variable. It is
/// an involution and swaps `z` with `1/z`.
pub fn invert(p: &ChartPoint) -> Result<ChartPoint, PotentialError> {
    let z = p.norm_sq();
    if z == 0.0 {
        return Err(PotentialError::OriginInversion);
    }
    let c = p.coords();
    let mut out = Vec::with_capacity(c.len());
    for (i, &v) in c.iter().enumerate() {
        let signed = if i == 1 { -v } else { v };
        out.push(signed / z);
    }
    ChartPoint::new(out).map_err(|_| PotentialError::OriginInversion)
}

/// Order-2 jets of the inversion's output coordinates. `conjugate_first`
/// selects between the chart map used throughout this module (conjugate the
/// first complex coordinate, then divide by the radial variable) and the
/// plain inversion `x / |x|^2`.
fn inversion_jets_impl(
    p: &ChartPoint,
    conjugate_first: bool,
) -> Result<Vec<Jet2>, PotentialError> {
    let z = p.norm_sq();
    if z == 0.0 {
        return Err(PotentialError::OriginInversion);
    }
    let dim = p.dim();
    let coord: Vec<Jet2> = (0..dim).map(|i| Jet2::coordinate(p.coords()[i], i, dim)).collect();
    let mut zj = Jet2::constant(0.0, dim);
    for c in &coord {
        zj = zj.add(&c.mul(c));
    }
    let inv = zj.recip();
    Ok((0..dim)
        .map(|i| {
            let out = coord[i].mul(&inv);
            if conjugate_first && i == 1 { out.neg() } else { out }
        })
        .collect())
}

fn inversion_jets(p: &ChartPoint) -> Result<Vec<Jet2>, PotentialError> {
    inversion_jets_impl(p, true)
}

/// Jacobian of the inversion at `p`.
pub fn inversion_jacobian(p: &ChartPoint) -> Result<DMatrix<f64>, PotentialError> {
    let jets = inversion_jets(p)?;
    let dim = p.dim();
    Ok(DMatrix::from_fn(dim, dim, |i, j| jets[i].grad[j]))
}

fn standard_j_matrix(dim: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(dim, dim);
    for c in 0..dim / 2 {
        j[(2 * c, 2 * c + 1)] = -1.0;
        j[(2 * c + 1, 2 * c)] = 1.0;
    }
    j
}

/// The constant standard complex structure (multiplication by i).
pub fn standard_structure(n_complex: usize) -> ComplexStructureField {
    let dim = 2 * n_complex;
    ComplexStructureField::new(dim, "standard-J", move |p: &ChartPoint| {
        let d = p.dim();
        let j = standard_j_matrix(d);
        Ok(StructureJet::from_entries(d, |r, c| Jet2::constant(j[(r, c)], d)))
    })
}

/// The standard structure of the inverted chart transported to inner
/// coordinates: `(D inv)^{-1} J_std (D inv)`. Defined away from the origin;
/// it squares to minus the identity everywhere but agrees with the standard
/// structure only along the first-coordinate axis, because the chart map is
/// holomorphic exactly there.
pub fn pullback_structure(n_complex: usize) -> ComplexStructureField {
    pulled_structure(n_complex, "pullback-J", true)
}

/// The complex structure induced by the plain inversion `x / |x|^2`. The
/// inversion reverses orientation, so this structure orients the chart
/// oppositely to the standard one. Rescaled metrics built by the
/// compactification carry it as their genuine Kahler structure at every
/// point, not just on the first-coordinate axis; `pullback_structure`, by
/// contrast, matches them only where its chart map is holomorphic.
pub fn outer_structure(n_complex: usize) -> ComplexStructureField {
    pulled_structure(n_complex, "outer-J", false)
}

fn pulled_structure(
    n_complex: usize,
    label: &'static str,
    conjugate_first: bool,
) -> ComplexStructureField {
    let dim = 2 * n_complex;
    ComplexStructureField::new(dim, label, move |p: &ChartPoint| {
        let jets = inversion_jets_impl(p, conjugate_first)
            .map_err(|e| ChartError::OutsideDomain(e.to_string()))?;
        let d = p.dim();
        let a = DMatrix::from_fn(d, d, |i, j| jets[i].grad[j]);
        let a_inv = a.clone().try_inverse().ok_or_else(|| {
            ChartError::OutsideDomain("inversion Jacobian singular".to_string())
        })?;
        let j_std = standard_j_matrix(d);
        let value = &a_inv * &j_std * &a;
        let mut first = Vec::with_capacity(d);
        for k in 0..d {
            let da = DMatrix::from_fn(d, d, |i, j| jets[i].hess_at(j, k));
            first.push(-&a_inv * &da * &a_inv * &j_std * &a + &a_inv * &j_std * &da);
        }
        Ok(StructureJet::from_entries(d, |r, c| {
            let mut jet = Jet2::constant(value[(r, c)], d);
            for k in 0..d {
                jet.grad[k] = first[k][(r, c)];
            }
            jet
        }))
    })
}

/// How far the inversion is from intertwining the two standard structures
/// at `p`: zero along the first-coordinate axis, nonzero generically.
pub fn commutation_defect(p: &ChartPoint) -> Result<f64, PotentialError> {
    let a = inversion_jacobian(p)?;
    let j = standard_j_matrix(p.dim());
    Ok((&j * &a - &a * &j).norm())
}
