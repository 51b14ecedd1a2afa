//! Chart-level tensor calculus on even-dimensional coordinate patches.
//!
//! Metric fields hand back order-2 jets of their components; everything
//! downstream (Christoffel symbols, Riemann, Ricci, scalar, Weyl halves,
//! Kahler defects) is exact arithmetic on those jets. Finite differences
//! appear in exactly one place: a consistency cross-check inside
//! [`curvature_at`] that guards against fields whose jets disagree with
//! their own values.
//!
//! Conventions, fixed across the crate:
//! * curvature sign `R(X,Y)Z = ∇_X ∇_Y Z − ∇_Y ∇_X Z − ∇_[X,Y] Z`, so the
//!   round sphere has positive scalar curvature;
//! * `Ric(X,Y) = tr(Z ↦ R(Z,X)Y)`, `scalar = tr_g Ric`;
//! * in real dimension 4 the coordinate order `(x1, y1, x2, y2)` is the
//!   positive orientation, and it is the Kahler orientation for the
//!   standard complex structure.

use nalgebra::{DMatrix, Matrix3};
use std::sync::Arc;
use thiserror::Error;

use crate::jet::Jet2;

/// Relative tolerance for the jet-versus-finite-difference guard.
pub const JET_FD_REL_TOL: f64 = 1e-5;
/// How exactly J^2 = -Id must hold before Kahler defects are meaningful.
pub const ALMOST_COMPLEX_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("chart point must have even dimension >= 4, got {0}")]
    BadDimension(usize),
    #[error("chart point has non-finite coordinates")]
    NonFinitePoint,
    #[error("dimension mismatch: field is {field}-dimensional, point is {point}-dimensional")]
    DimensionMismatch { field: usize, point: usize },
    #[error("point outside chart domain: {0}")]
    OutsideDomain(String),
    #[error("degenerate metric: smallest eigenvalue {min_eigenvalue:.6e}")]
    DegenerateMetric { min_eigenvalue: f64 },
    #[error(
        "metric field not C2-consistent: coordinate {coordinate} first derivative \
         disagrees with finite differences (relative error {relative_error:.3e})"
    )]
    NotC2Consistent { coordinate: usize, relative_error: f64 },
    #[error("self-duality undefined outside real dimension 4 (dimension {0})")]
    SelfDualityUndefined(usize),
    #[error("field is not an almost complex structure: |J^2 + Id| = {defect:.3e}")]
    NotAlmostComplex { defect: f64 },
    #[error("field evaluation produced non-finite components")]
    NonFiniteField,
    #[error("step size must be positive and finite, got {0}")]
    BadStep(f64),
}

/// A point of a coordinate chart. For complex charts the layout is
/// `(x1, y1, ..., xn, yn)`; frame charts reuse the same container.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self, ChartError> {
        if coords.len() < 4 || coords.len() % 2 != 0 {
            return Err(ChartError::BadDimension(coords.len()));
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(ChartError::NonFinitePoint);
        }
        Ok(ChartPoint { coords })
    }

    /// Build from complex coordinates `(x_j + i y_j)` given as pairs.
    pub fn from_complex(pairs: &[(f64, f64)]) -> Result<Self, ChartError> {
        let mut coords = Vec::with_capacity(2 * pairs.len());
        for &(x, y) in pairs {
            coords.push(x);
            coords.push(y);
        }
        ChartPoint::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Squared Euclidean norm; on complex charts this is the radial variable.
    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn shifted(&self, coordinate: usize, delta: f64) -> Self {
        let mut coords = self.coords.clone();
        coords[coordinate] += delta;
        ChartPoint { coords }
    }
}

/// Order-2 jet of a symmetric 2-tensor: one [`Jet2`] per upper-triangle entry.
#[derive(Clone, Debug)]
pub struct MetricJet {
    dim: usize,
    entries: Vec<Jet2>, // row-major upper triangle: (i, j >= i)
}

fn tri_index(dim: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * dim - a * (a + 1) / 2 + b
}

impl MetricJet {
    /// `entry(i, j)` is called once per `i <= j`.
    pub fn from_entries(
        dim: usize,
        mut entry: impl FnMut(usize, usize) -> Jet2,
    ) -> Self {
        let mut entries = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                let e = entry(i, j);
                debug_assert_eq!(e.dim(), dim);
                entries.push(e);
            }
        }
        MetricJet { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &Jet2 {
        &self.entries[tri_index(self.dim, i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.is_finite())
    }

    pub fn value_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.entry(i, j).val)
    }

    /// Matrix of first derivatives `∂_k g`.
    pub fn first_derivative(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.entry(i, j).grad[k])
    }

    /// Matrix of second derivatives `∂_k ∂_l g`.
    pub fn second_derivative(&self, k: usize, l: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.entry(i, j).hess_at(k, l))
    }

    /// Entrywise product with `u^2` for a scalar-factor jet `u`.
    pub fn conformal(&self, u: &Jet2) -> MetricJet {
        let u2 = u.mul(u);
        MetricJet {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e.mul(&u2)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> MetricJet {
        MetricJet {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e.scale(c)).collect(),
        }
    }
}

type MetricEval = dyn Fn(&ChartPoint) -> Result<MetricJet, ChartError> + Send + Sync;

/// A metric field on a chart: positive definite wherever queried, evaluated
/// as order-2 jets. Pure function of the point; safe to share across threads.
#[derive(Clone)]
pub struct ChartMetricField {
    dim: usize,
    label: String,
    eval: Arc<MetricEval>,
}

impl ChartMetricField {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        eval: impl Fn(&ChartPoint) -> Result<MetricJet, ChartError> + Send + Sync + 'static,
    ) -> Self {
        ChartMetricField { dim, label: label.into(), eval: Arc::new(eval) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn jet(&self, p: &ChartPoint) -> Result<MetricJet, ChartError> {
        if p.dim() != self.dim {
            return Err(ChartError::DimensionMismatch { field: self.dim, point: p.dim() });
        }
        let jet = (self.eval)(p)?;
        if !jet.is_finite() {
            return Err(ChartError::NonFiniteField);
        }
        Ok(jet)
    }

    pub fn value(&self, p: &ChartPoint) -> Result<DMatrix<f64>, ChartError> {
        Ok(self.jet(p)?.value_matrix())
    }

    /// Conformally rescaled field `u^2 g` for a pointwise factor jet.
    pub fn conformal(
        &self,
        label: impl Into<String>,
        factor: impl Fn(&ChartPoint) -> Result<Jet2, ChartError> + Send + Sync + 'static,
    ) -> ChartMetricField {
        let base = self.eval.clone();
        ChartMetricField {
            dim: self.dim,
            label: label.into(),
            eval: Arc::new(move |p| {
                let g = base(p)?;
                let u = factor(p)?;
                Ok(g.conformal(&u))
            }),
        }
    }

    /// Constant rescale `c^2 g`.
    pub fn scaled(&self, c: f64, label: impl Into<String>) -> ChartMetricField {
        let base = self.eval.clone();
        let c2 = c * c;
        ChartMetricField {
            dim: self.dim,
            label: label.into(),
            eval: Arc::new(move |p| Ok(base(p)?.scaled(c2))),
        }
    }
}

/// Order-1 data of an endomorphism field: value and first derivatives.
#[derive(Clone, Debug)]
pub struct StructureJet {
    dim: usize,
    entries: Vec<Jet2>, // full d*d, row-major: entry (i, j) = J^i_j
}

impl StructureJet {
    pub fn from_entries(dim: usize, mut entry: impl FnMut(usize, usize) -> Jet2) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(entry(i, j));
            }
        }
        StructureJet { dim, entries }
    }

    pub fn entry(&self, i: usize, j: usize) -> &Jet2 {
        &self.entries[i * self.dim + j]
    }

    pub fn value_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.entry(i, j).val)
    }

    pub fn first_derivative(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.entry(i, j).grad[k])
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.is_finite())
    }
}

type StructureEval = dyn Fn(&ChartPoint) -> Result<StructureJet, ChartError> + Send + Sync;

/// An almost complex structure field `J` with first derivatives.
#[derive(Clone)]
pub struct ComplexStructureField {
    dim: usize,
    label: String,
    eval: Arc<StructureEval>,
}

impl ComplexStructureField {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        eval: impl Fn(&ChartPoint) -> Result<StructureJet, ChartError> + Send + Sync + 'static,
    ) -> Self {
        ComplexStructureField { dim, label: label.into(), eval: Arc::new(eval) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn jet(&self, p: &ChartPoint) -> Result<StructureJet, ChartError> {
        if p.dim() != self.dim {
            return Err(ChartError::DimensionMismatch { field: self.dim, point: p.dim() });
        }
        let jet = (self.eval)(p)?;
        if !jet.is_finite() {
            return Err(ChartError::NonFiniteField);
        }
        Ok(jet)
    }

    pub fn value(&self, p: &ChartPoint) -> Result<DMatrix<f64>, ChartError> {
        Ok(self.jet(p)?.value_matrix())
    }
}

/// Rank-3 tensor with the first index distinguished: `t[k][i][j]`.
#[derive(Clone, Debug)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Tensor3 { dim, data: vec![0.0; dim * dim * dim] }
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[(k * self.dim + i) * self.dim + j] = v;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Rank-4 tensor: `t[l][i][j][k]`.
#[derive(Clone, Debug)]
pub struct Tensor4 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Self {
        Tensor4 { dim, data: vec![0.0; dim * dim * dim * dim] }
    }

    #[inline]
    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        self.data[((l * self.dim + i) * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn set(&mut self, l: usize, i: usize, j: usize, k: usize, v: f64) {
        self.data[((l * self.dim + i) * self.dim + j) * self.dim + k] = v;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Orientation flag for the self-dual / anti-self-dual splitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }
}

/// Pointwise curvature data of a metric field.
#[derive(Clone, Debug)]
pub struct CurvatureReport {
    pub dim: usize,
    /// Christoffel symbols, `christoffel[k][i][j] = Γ^k_{ij}`.
    pub christoffel: Tensor3,
    /// Curvature with one raised index, `riemann[l][i][j][k] = R^l_{ijk}`,
    /// antisymmetric in `(i, j)`.
    pub riemann: Tensor4,
    /// Fully lowered curvature, `riemann_lower[i][j][k][l] = g(R(e_i,e_j)e_k, e_l)`.
    pub riemann_lower: Tensor4,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    /// Metric value at the evaluation point (kept for frame constructions).
    pub metric: DMatrix<f64>,
    /// Weyl halves for the positive orientation; present only in dimension 4.
    pub weyl_plus: Option<Matrix3<f64>>,
    pub weyl_minus: Option<Matrix3<f64>>,
}

fn cholesky_or_min_eig(g: &DMatrix<f64>) -> Result<DMatrix<f64>, ChartError> {
    match g.clone().cholesky() {
        Some(chol) => Ok(chol.inverse()),
        None => {
            let eig = g.clone().symmetric_eigen();
            let min_eigenvalue = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            Err(ChartError::DegenerateMetric { min_eigenvalue })
        }
    }
}

/// Christoffel symbols and their first derivatives from a metric jet.
fn christoffel_with_derivative(jet: &MetricJet) -> Result<(Tensor3, Tensor4), ChartError> {
    let d = jet.dim();
    let g = jet.value_matrix();
    let g_inv = cholesky_or_min_eig(&g)?;
    let dg: Vec<DMatrix<f64>> = (0..d).map(|k| jet.first_derivative(k)).collect();
    // ∂_m g^{-1} = -g^{-1} (∂_m g) g^{-1}
    let dg_inv: Vec<DMatrix<f64>> = (0..d).map(|m| -(&g_inv * &dg[m] * &g_inv)).collect();

    let mut gamma = Tensor3::zeros(d);
    for k in 0..d {
        for i in 0..d {
            for j in i..d {
                let mut acc = 0.0;
                for l in 0..d {
                    acc += g_inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                let v = 0.5 * acc;
                gamma.set(k, i, j, v);
                gamma.set(k, j, i, v);
            }
        }
    }

    let mut dgamma = Tensor4::zeros(d); // dgamma[m][k][i][j] = ∂_m Γ^k_{ij}
    for m in 0..d {
        let d2: Vec<DMatrix<f64>> = (0..d).map(|k| jet.second_derivative(m, k)).collect();
        for k in 0..d {
            for i in 0..d {
                for j in i..d {
                    let mut acc = 0.0;
                    for l in 0..d {
                        acc += dg_inv[m][(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)])
                            + g_inv[(k, l)] * (d2[i][(j, l)] + d2[j][(i, l)] - d2[l][(i, j)]);
                    }
                    let v = 0.5 * acc;
                    dgamma.set(m, k, i, j, v);
                    dgamma.set(m, k, j, i, v);
                }
            }
        }
    }
    Ok((gamma, dgamma))
}

/// Full curvature data at `p`. The step `h` sizes the finite-difference
/// cross-check of the field's first derivatives (the jet itself is the
/// source of all derivatives used in the curvature).
pub fn curvature_at(
    field: &ChartMetricField,
    p: &ChartPoint,
    h: f64,
) -> Result<CurvatureReport, ChartError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(ChartError::BadStep(h));
    }
    let jet = field.jet(p)?;
    let d = jet.dim();
    let g = jet.value_matrix();
    let g_inv = cholesky_or_min_eig(&g)?;

    // 4th-order central differences of the metric values versus the jet.
    for k in 0..d {
        let gp2 = field.value(&p.shifted(k, 2.0 * h))?;
        let gp1 = field.value(&p.shifted(k, h))?;
        let gm1 = field.value(&p.shifted(k, -h))?;
        let gm2 = field.value(&p.shifted(k, -2.0 * h))?;
        let fd = (-&gp2 + 8.0 * &gp1 - 8.0 * &gm1 + &gm2) / (12.0 * h);
        let jet_d = jet.first_derivative(k);
        let rel = (&fd - &jet_d).norm() / (1.0 + jet_d.norm());
        if rel > JET_FD_REL_TOL {
            return Err(ChartError::NotC2Consistent { coordinate: k, relative_error: rel });
        }
    }

    let (gamma, dgamma) = christoffel_with_derivative(&jet)?;

    let mut riemann = Tensor4::zeros(d);
    for l in 0..d {
        for i in 0..d {
            for j in (i + 1)..d {
                for k in 0..d {
                    let mut v = dgamma.get(i, l, j, k) - dgamma.get(j, l, i, k);
                    for m in 0..d {
                        v += gamma.get(l, i, m) * gamma.get(m, j, k)
                            - gamma.get(l, j, m) * gamma.get(m, i, k);
                    }
                    riemann.set(l, i, j, k, v);
                    riemann.set(l, j, i, k, -v);
                }
            }
        }
    }

    let mut riemann_lower = Tensor4::zeros(d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut v = 0.0;
                    for m in 0..d {
                        v += g[(m, l)] * riemann.get(m, i, j, k);
                    }
                    riemann_lower.set(i, j, k, l, v);
                }
            }
        }
    }

    let mut ricci = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            let mut v = 0.0;
            for i in 0..d {
                v += riemann.get(i, i, j, k);
            }
            ricci[(j, k)] = v;
        }
    }
    // enforce the symmetry that holds analytically
    let ricci = 0.5 * (&ricci + ricci.transpose());

    let mut scalar = 0.0;
    for j in 0..d {
        for k in 0..d {
            scalar += g_inv[(j, k)] * ricci[(j, k)];
        }
    }

    let (weyl_plus, weyl_minus) = if d == 4 {
        let (wp, wm) = weyl_blocks(&riemann_lower, &g, Orientation::Positive)?;
        (Some(wp), Some(wm))
    } else {
        (None, None)
    };

    Ok(CurvatureReport {
        dim: d,
        christoffel: gamma,
        riemann,
        riemann_lower,
        ricci,
        scalar,
        metric: g,
        weyl_plus,
        weyl_minus,
    })
}

/// Orthonormal frame by Gram-Schmidt on the coordinate basis; columns of the
/// returned matrix are the frame vectors. Negative orientation negates the
/// last vector.
fn gram_schmidt_frame(g: &DMatrix<f64>, orientation: Orientation) -> Result<DMatrix<f64>, ChartError> {
    let d = g.nrows();
    let mut frame = DMatrix::<f64>::identity(d, d);
    for a in 0..d {
        let mut v = frame.column(a).clone_owned();
        for b in 0..a {
            let e = frame.column(b);
            let proj = (e.transpose() * g * &v)[(0, 0)];
            v -= proj * e.clone_owned();
        }
        let norm_sq = (v.transpose() * g * &v)[(0, 0)];
        if !(norm_sq > 0.0) {
            return Err(ChartError::DegenerateMetric { min_eigenvalue: norm_sq });
        }
        v /= norm_sq.sqrt();
        frame.set_column(a, &v);
    }
    if orientation == Orientation::Negative {
        let last = -frame.column(d - 1).clone_owned();
        frame.set_column(d - 1, &last);
    }
    Ok(frame)
}

const LAMBDA2_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2)];

fn weyl_blocks(
    riemann_lower: &Tensor4,
    g: &DMatrix<f64>,
    orientation: Orientation,
) -> Result<(Matrix3<f64>, Matrix3<f64>), ChartError> {
    let d = riemann_lower.dim();
    if d != 4 {
        return Err(ChartError::SelfDualityUndefined(d));
    }
    let frame = gram_schmidt_frame(g, orientation)?;

    // frame components of the lowered curvature
    let rf = |a: usize, b: usize, c: usize, e: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            let fia = frame[(i, a)];
            if fia == 0.0 {
                continue;
            }
            for j in 0..4 {
                let fjb = frame[(j, b)];
                if fjb == 0.0 {
                    continue;
                }
                for k in 0..4 {
                    let fkc = frame[(k, c)];
                    if fkc == 0.0 {
                        continue;
                    }
                    for l in 0..4 {
                        acc += fia * fjb * fkc * frame[(l, e)] * riemann_lower.get(i, j, k, l);
                    }
                }
            }
        }
        acc
    };

    // curvature operator on unit 2-forms, normalized so its trace is R/2
    let mut m = [[0.0f64; 6]; 6];
    for (idx_i, &(a, b)) in LAMBDA2_PAIRS.iter().enumerate() {
        for (idx_j, &(c, e)) in LAMBDA2_PAIRS.iter().enumerate() {
            m[idx_i][idx_j] = rf(a, b, e, c);
        }
    }

    let mut plus = Matrix3::zeros();
    let mut minus = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            plus[(i, j)] = 0.5 * (m[i][j] + m[i][j + 3] + m[i + 3][j] + m[i + 3][j + 3]);
            minus[(i, j)] = 0.5 * (m[i][j] - m[i][j + 3] - m[i + 3][j] + m[i + 3][j + 3]);
        }
    }
    let tp = plus.trace() / 3.0;
    let tm = minus.trace() / 3.0;
    for i in 0..3 {
        plus[(i, i)] -= tp;
        minus[(i, i)] -= tm;
    }
    Ok((plus, minus))
}

/// Self-dual and anti-self-dual Weyl blocks of a 4-dimensional report in the
/// requested orientation. Flipping the orientation swaps the blocks.
pub fn weyl_split(
    report: &CurvatureReport,
    orientation: Orientation,
) -> Result<(Matrix3<f64>, Matrix3<f64>), ChartError> {
    weyl_blocks(&report.riemann_lower, &report.metric, orientation)
}

/// How far `(g, J)` is from a Kahler pair at a point.
#[derive(Clone, Copy, Debug)]
pub struct KahlerDefect {
    /// `|g(J·, J·) − g|`.
    pub hermitian: f64,
    /// `|dω|` for the fundamental form `ω = g(J·, ·)`.
    pub closedness: f64,
    /// `|∇J|` in the metric's Levi-Civita connection.
    pub parallel: f64,
}

impl KahlerDefect {
    pub fn max(&self) -> f64 {
        self.hermitian.max(self.closedness).max(self.parallel)
    }
}

/// Hermitian, closedness, and parallelism defects of a metric/structure pair.
pub fn kahler_defect(
    metric: &ChartMetricField,
    structure: &ComplexStructureField,
    p: &ChartPoint,
) -> Result<KahlerDefect, ChartError> {
    let mj = metric.jet(p)?;
    let sj = structure.jet(p)?;
    let d = mj.dim();
    if sj.value_matrix().nrows() != d {
        return Err(ChartError::DimensionMismatch { field: d, point: sj.value_matrix().nrows() });
    }

    let j = sj.value_matrix();
    let j2_defect = (&j * &j + DMatrix::<f64>::identity(d, d)).norm();
    if j2_defect > ALMOST_COMPLEX_TOL {
        return Err(ChartError::NotAlmostComplex { defect: j2_defect });
    }

    let g = mj.value_matrix();
    cholesky_or_min_eig(&g)?;
    let hermitian = (j.transpose() * &g * &j - &g).norm();

    // coordinate derivatives of the fundamental form ω = g(J·, ·)
    let domega: Vec<DMatrix<f64>> = (0..d)
        .map(|l| {
            let dj = sj.first_derivative(l);
            let dg = mj.first_derivative(l);
            dj.transpose() * &g + j.transpose() * dg
        })
        .collect();

    let mut closedness_sq = 0.0;
    for l in 0..d {
        for i in (l + 1)..d {
            for jj in (i + 1)..d {
                let v = domega[l][(i, jj)] + domega[i][(jj, l)] + domega[jj][(l, i)];
                closedness_sq += v * v;
            }
        }
    }

    let (gamma, _) = christoffel_with_derivative(&mj)?;
    let mut parallel_sq = 0.0;
    for i in 0..d {
        let dj = sj.first_derivative(i);
        for k in 0..d {
            for jj in 0..d {
                let mut v = dj[(k, jj)];
                for m in 0..d {
                    v += gamma.get(k, i, m) * j[(m, jj)] - gamma.get(m, i, jj) * j[(k, m)];
                }
                parallel_sq += v * v;
            }
        }
    }

    Ok(KahlerDefect {
        hermitian,
        closedness: closedness_sq.sqrt(),
        parallel: parallel_sq.sqrt(),
    })
}

/// Laplace-Beltrami operator (divergence of gradient, negative spectrum on
/// compact manifolds) applied to a scalar function given by order-2 jets.
pub fn laplacian(
    metric: &ChartMetricField,
    p: &ChartPoint,
    f: &dyn Fn(&ChartPoint) -> Result<Jet2, ChartError>,
) -> Result<f64, ChartError> {
    let mj = metric.jet(p)?;
    let d = mj.dim();
    let fj = f(p)?;
    if fj.dim() != d {
        return Err(ChartError::DimensionMismatch { field: d, point: fj.dim() });
    }
    let g = mj.value_matrix();
    let g_inv = cholesky_or_min_eig(&g)?;
    let (gamma, _) = christoffel_with_derivative(&mj)?;
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut hess_cov = fj.hess_at(i, j);
            for k in 0..d {
                hess_cov -= gamma.get(k, i, j) * fj.grad[k];
            }
            acc += g_inv[(i, j)] * hess_cov;
        }
    }
    Ok(acc)
}

/// Euclidean metric field in `dim` coordinates.
pub fn euclidean_metric(dim: usize) -> ChartMetricField {
    ChartMetricField::new(dim, "euclidean", move |p| {
        let d = p.dim();
        Ok(MetricJet::from_entries(d, |i, j| {
            Jet2::constant(if i == j { 1.0 } else { 0.0 }, d)
        }))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> ChartPoint {
        ChartPoint::new(c.to_vec()).unwrap()
    }

    /// Conformally flat field `e^{2 x0} δ` in dimension 4: scalar curvature
    /// `-6 e^{-2 x0}` and vanishing Weyl tensor.
    fn conformally_flat() -> ChartMetricField {
        euclidean_metric(4).conformal("conformal-exp", |p| {
            let x0 = Jet2::coordinate(p.coords()[0], 0, 4);
            Ok(x0.exp())
        })
    }

    #[test]
    fn flat_metric_has_zero_curvature() {
        let field = euclidean_metric(4);
        let rep = curvature_at(&field, &pt(&[0.3, -1.2, 0.7, 2.0]), 1e-3).unwrap();
        assert!(rep.riemann.max_abs() < 1e-12);
        assert!(rep.scalar.abs() < 1e-12);
        assert!(rep.ricci.norm() < 1e-12);
        assert!(rep.weyl_plus.unwrap().norm() < 1e-12);
        assert!(rep.weyl_minus.unwrap().norm() < 1e-12);
    }

    #[test]
    fn conformally_flat_scalar_matches_closed_form() {
        let field = conformally_flat();
        for &x0 in &[0.0, 0.4, -0.3] {
            let p = pt(&[x0, 0.2, -0.5, 1.1]);
            let rep = curvature_at(&field, &p, 1e-4).unwrap();
            let expect = -6.0 * (-2.0 * x0).exp();
            assert!(
                (rep.scalar - expect).abs() < 1e-8 * (1.0 + expect.abs()),
                "x0={x0}: scalar {} vs {}",
                rep.scalar,
                expect
            );
        }
    }

    #[test]
    fn conformally_flat_weyl_vanishes() {
        let rep = curvature_at(&conformally_flat(), &pt(&[0.25, -0.8, 0.33, 0.9]), 1e-4).unwrap();
        assert!(rep.weyl_plus.unwrap().norm() < 1e-9);
        assert!(rep.weyl_minus.unwrap().norm() < 1e-9);
    }

    #[test]
    fn orientation_flip_swaps_weyl_blocks() {
        // a non-conformally-flat field: product-like warp in two coordinates
        let field = euclidean_metric(4).conformal("warp", |p| {
            let x0 = Jet2::coordinate(p.coords()[0], 0, 4);
            let x2 = Jet2::coordinate(p.coords()[2], 2, 4);
            Ok(x0.mul(&x0).add(&x2.sin()).add_scalar(2.0))
        });
        let rep = curvature_at(&field, &pt(&[0.4, 0.1, -0.2, 0.6]), 1e-4).unwrap();
        let (wp, wm) = weyl_split(&rep, Orientation::Positive).unwrap();
        let (fp, fm) = weyl_split(&rep, Orientation::Negative).unwrap();
        // flipping the last frame vector conjugates by diag(1, 1, -1)
        let s = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, -1.0));
        assert!((fp - s * wm * s).norm() < 1e-12);
        assert!((fm - s * wp * s).norm() < 1e-12);
        assert!((wp.trace()).abs() < 1e-10);
        assert!((wm.trace()).abs() < 1e-10);
    }

    #[test]
    fn scaling_leaves_raised_riemann_fixed_and_divides_scalar() {
        let field = conformally_flat();
        let p = pt(&[0.3, 0.5, -0.1, 0.8]);
        let base = curvature_at(&field, &p, 1e-4).unwrap();
        for &c in &[0.5f64, 2.0, 10.0] {
            let scaled = field.scaled(c, "scaled");
            let rep = curvature_at(&scaled, &p, 1e-4).unwrap();
            assert!((rep.scalar - base.scalar / (c * c)).abs() < 1e-8 * (1.0 + base.scalar.abs()));
            let mut max_diff = 0.0f64;
            for l in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        for k in 0..4 {
                            max_diff = max_diff.max(
                                (rep.riemann.get(l, i, j, k) - base.riemann.get(l, i, j, k)).abs(),
                            );
                        }
                    }
                }
            }
            assert!(max_diff < 1e-9, "c={c}: {max_diff}");
            assert!((rep.ricci.clone() - base.ricci.clone()).norm() < 1e-9);
        }
    }

    #[test]
    fn first_bianchi_identity_holds() {
        let rep = curvature_at(&conformally_flat(), &pt(&[0.1, 0.9, -0.4, 0.2]), 1e-4).unwrap();
        for l in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        let cyc = rep.riemann.get(l, i, j, k)
                            + rep.riemann.get(l, j, k, i)
                            + rep.riemann.get(l, k, i, j);
                        assert!(cyc.abs() < 1e-9, "bianchi {l}{i}{j}{k}: {cyc}");
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_metric_reports_offending_eigenvalue() {
        let field = ChartMetricField::new(4, "pinched", |p| {
            let d = p.dim();
            Ok(MetricJet::from_entries(d, |i, j| {
                let v = if i == j { if i == 3 { -0.25 } else { 1.0 } } else { 0.0 };
                Jet2::constant(v, d)
            }))
        });
        match curvature_at(&field, &pt(&[0.0, 0.0, 0.0, 1.0]), 1e-3) {
            Err(ChartError::DegenerateMetric { min_eigenvalue }) => {
                assert!((min_eigenvalue + 0.25).abs() < 1e-12);
            }
            other => panic!("expected degenerate metric, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_jets_are_rejected() {
        // value varies with x0 but the advertised gradient is zero
        let field = ChartMetricField::new(4, "liar", |p| {
            let d = p.dim();
            let x0 = p.coords()[0];
            Ok(MetricJet::from_entries(d, |i, j| {
                Jet2::constant(if i == j { 1.0 + 0.1 * x0 } else { 0.0 }, d)
            }))
        });
        match curvature_at(&field, &pt(&[0.2, 0.0, 0.0, 0.0]), 1e-3) {
            Err(ChartError::NotC2Consistent { coordinate, .. }) => assert_eq!(coordinate, 0),
            other => panic!("expected C2 inconsistency, got {other:?}"),
        }
    }

    #[test]
    fn self_duality_needs_dimension_four() {
        let field = euclidean_metric(6);
        let p = ChartPoint::new(vec![0.1; 6]).unwrap();
        let rep = curvature_at(&field, &p, 1e-3).unwrap();
        assert!(rep.weyl_plus.is_none());
        assert!(matches!(
            weyl_split(&rep, Orientation::Positive),
            Err(ChartError::SelfDualityUndefined(6))
        ));
    }

    #[test]
    fn laplacian_of_quadratic_in_flat_space() {
        let field = euclidean_metric(4);
        let f = |p: &ChartPoint| -> Result<Jet2, ChartError> {
            let d = p.dim();
            let mut acc = Jet2::constant(0.0, d);
            for i in 0..d {
                let c = Jet2::coordinate(p.coords()[i], i, d);
                acc = acc.add(&c.mul(&c));
            }
            Ok(acc)
        };
        let v = laplacian(&field, &pt(&[0.3, 1.0, -0.7, 0.1]), &f).unwrap();
        assert!((v - 8.0).abs() < 1e-12); // Δ|x|^2 = 2 dim
    }
}
