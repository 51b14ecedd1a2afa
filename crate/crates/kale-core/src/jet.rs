//! Multivariate forward-mode jets of order 2.
//!
//! A [`Jet2`] carries value, gradient, and full Hessian with respect to a
//! fixed set of chart coordinates. Metric components are evaluated in this
//! arithmetic, so the curvature pipeline receives exact first and second
//! derivatives of the defining formula; finite differences appear only as a
//! cross-check, never as the source of derivatives.

/// Order-2 jet in `dim` variables. Hessian is stored dense row-major and is
/// kept symmetric by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub val: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(val: f64, dim: usize) -> Self {
        Jet2 {
            val,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }

    /// The i-th coordinate function evaluated at `val`.
    pub fn coordinate(val: f64, i: usize, dim: usize) -> Self {
        let mut j = Jet2::constant(val, dim);
        j.grad[i] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    pub fn is_finite(&self) -> bool {
        self.val.is_finite()
            && self.grad.iter().all(|v| v.is_finite())
            && self.hess.iter().all(|v| v.is_finite())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        out.val += rhs.val;
        for (a, b) in out.grad.iter_mut().zip(&rhs.grad) {
            *a += b;
        }
        for (a, b) in out.hess.iter_mut().zip(&rhs.hess) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        out.val -= rhs.val;
        for (a, b) in out.grad.iter_mut().zip(&rhs.grad) {
            *a -= b;
        }
        for (a, b) in out.hess.iter_mut().zip(&rhs.hess) {
            *a -= b;
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.val *= s;
        for a in &mut out.grad {
            *a *= s;
        }
        for a in &mut out.hess {
            *a *= s;
        }
        out
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.val += s;
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let d = self.dim();
        let mut out = Jet2::constant(self.val * rhs.val, d);
        for i in 0..d {
            out.grad[i] = self.val * rhs.grad[i] + rhs.val * self.grad[i];
        }
        for i in 0..d {
            for j in i..d {
                let v = self.val * rhs.hess[i * d + j]
                    + rhs.val * self.hess[i * d + j]
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i];
                out.hess[i * d + j] = v;
                out.hess[j * d + i] = v;
            }
        }
        out
    }

    /// Chain rule for an outer scalar function with derivatives
    /// `[f(u), f'(u), f''(u)]` at this jet's value.
    pub fn compose(&self, f: [f64; 3]) -> Self {
        let d = self.dim();
        let mut out = Jet2::constant(f[0], d);
        for i in 0..d {
            out.grad[i] = f[1] * self.grad[i];
        }
        for i in 0..d {
            for j in i..d {
                let v = f[1] * self.hess[i * d + j] + f[2] * self.grad[i] * self.grad[j];
                out.hess[i * d + j] = v;
                out.hess[j * d + i] = v;
            }
        }
        out
    }

    pub fn recip(&self) -> Self {
        let u = self.val;
        self.compose([1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u)])
    }

    pub fn div(&self, rhs: &Self) -> Self {
        self.mul(&rhs.recip())
    }

    pub fn sqrt(&self) -> Self {
        let s = self.val.sqrt();
        self.compose([s, 0.5 / s, -0.25 / (s * self.val)])
    }

    pub fn ln(&self) -> Self {
        let u = self.val;
        self.compose([u.ln(), 1.0 / u, -1.0 / (u * u)])
    }

    pub fn exp(&self) -> Self {
        let e = self.val.exp();
        self.compose([e, e, e])
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.val.sin_cos();
        self.compose([s, c, -s])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.val.sin_cos();
        self.compose([c, -s, -c])
    }

    pub fn powi(&self, n: i32) -> Self {
        let u = self.val;
        let p = n as f64;
        self.compose([
            u.powi(n),
            p * u.powi(n - 1),
            p * (p - 1.0) * u.powi(n - 2),
        ])
    }
}
