//! Univariate truncated Taylor arithmetic of degree 4.
//!
//! A [`Taylor5`] holds the coefficients `c[k] = f^(k)(x0)/k!` of a function
//! expanded at a base point. Radial profiles (potentials, coframe factors)
//! are evaluated in this arithmetic so that every derivative up to fourth
//! order comes out of the defining formula itself rather than differencing.

/// Degree-4 truncated Taylor series: coefficients, not derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taylor5(pub [f64; 5]);

impl Taylor5 {
    pub const fn constant(c: f64) -> Self {
        Taylor5([c, 0.0, 0.0, 0.0, 0.0])
    }

    /// The identity function expanded at `x0`.
    pub const fn variable(x0: f64) -> Self {
        Taylor5([x0, 1.0, 0.0, 0.0, 0.0])
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// k-th derivative at the base point (k <= 4).
    pub fn derivative(&self, k: usize) -> f64 {
        const FACT: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];
        self.0[k] * FACT[k]
    }

    /// Derivatives `[f, f', f'', f''', f'''']` at the base point.
    pub fn derivatives(&self) -> [f64; 5] {
        [
            self.derivative(0),
            self.derivative(1),
            self.derivative(2),
            self.derivative(3),
            self.derivative(4),
        ]
    }

    /// Build from derivative values `[f, f', f'', f''', f'''']`.
    pub fn from_derivatives(d: [f64; 5]) -> Self {
        Taylor5([d[0], d[1], d[2] / 2.0, d[3] / 6.0, d[4] / 24.0])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut c = [0.0; 5];
        for k in 0..5 {
            c[k] = self.0[k] + rhs.0[k];
        }
        Taylor5(c)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut c = [0.0; 5];
        for k in 0..5 {
            c[k] = self.0[k] - rhs.0[k];
        }
        Taylor5(c)
    }

    pub fn neg(&self) -> Self {
        let mut c = self.0;
        for v in &mut c {
            *v = -*v;
        }
        Taylor5(c)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut c = self.0;
        for v in &mut c {
            *v *= s;
        }
        Taylor5(c)
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut c = self.0;
        c[0] += s;
        Taylor5(c)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut c = [0.0; 5];
        for i in 0..5 {
            for j in 0..5 - i {
                c[i + j] += self.0[i] * rhs.0[j];
            }
        }
        Taylor5(c)
    }

    /// Long division; the divisor's constant term must be nonzero.
    pub fn div(&self, rhs: &Self) -> Self {
        let b0 = rhs.0[0];
        let mut c = [0.0; 5];
        for k in 0..5 {
            let mut acc = self.0[k];
            for j in 0..k {
                acc -= c[j] * rhs.0[k - j];
            }
            c[k] = acc / b0;
        }
        Taylor5(c)
    }

    pub fn recip(&self) -> Self {
        Taylor5::constant(1.0).div(self)
    }

    /// Compose an outer scalar function given its derivatives
    /// `[f, f', f'', f''', f''''] ` at the inner value.
    ///
    /// Uses the Horner-free expansion f(g) = sum_m f^(m)(g0)/m! * (g-g0)^m,
    /// exact at this truncation order because (g-g0)^m starts at degree m.
    pub fn compose(&self, outer_derivs: [f64; 5]) -> Self {
        let mut h = *self;
        h.0[0] = 0.0;
        let mut pow = Taylor5::constant(1.0); // h^m
        let mut out = Taylor5::constant(outer_derivs[0]);
        let mut fact = 1.0;
        for m in 1..5 {
            fact *= m as f64;
            pow = pow.mul(&h);
            out = out.add(&pow.scale(outer_derivs[m] / fact));
        }
        out
    }

    pub fn ln(&self) -> Self {
        let u = self.0[0];
        self.compose([
            u.ln(),
            1.0 / u,
            -1.0 / (u * u),
            2.0 / (u * u * u),
            -6.0 / (u * u * u * u),
        ])
    }

    pub fn exp(&self) -> Self {
        let e = self.0[0].exp();
        self.compose([e, e, e, e, e])
    }

    pub fn sqrt(&self) -> Self {
        let u = self.0[0];
        let s = u.sqrt();
        self.compose([
            s,
            0.5 / s,
            -0.25 / (s * u),
            0.375 / (s * u * u),
            -0.9375 / (s * u * u * u),
        ])
    }

    /// Real power with arbitrary exponent; the base's constant term must be
    /// positive unless the exponent is a small integer (handled separately).
    pub fn powf(&self, p: f64) -> Self {
        let u = self.0[0];
        self.compose([
            u.powf(p),
            p * u.powf(p - 1.0),
            p * (p - 1.0) * u.powf(p - 2.0),
            p * (p - 1.0) * (p - 2.0) * u.powf(p - 3.0),
            p * (p - 1.0) * (p - 2.0) * (p - 3.0) * u.powf(p - 4.0),
        ])
    }

    pub fn powi(&self, mut n: i32) -> Self {
        if n == 0 {
            return Taylor5::constant(1.0);
        }
        let invert = n < 0;
        if invert {
            n = -n;
        }
        let mut base = *self;
        let mut acc = Taylor5::constant(1.0);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        if invert {
            acc.recip()
        } else {
            acc
        }
    }

    /// Antiderivative with prescribed constant term (degree-4 part of it).
    pub fn integrate(&self, c0: f64) -> Self {
        let mut c = [c0, 0.0, 0.0, 0.0, 0.0];
        for k in 0..4 {
            c[k + 1] = self.0[k] / (k + 1) as f64;
        }
        Taylor5(c)
    }
}
