//! Adaptive Dormand-Prince 5(4) integrator with dense output.
//!
//! Classic DOPRI5: embedded 4th-order error estimate, FSAL, and the standard
//! 4th-order continuous extension evaluated from five stored coefficient
//! vectors per accepted step. Supports integration in either direction.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (remaining span {span:.3e})")]
    StepUnderflow { t: f64, span: f64 },
    #[error("right-hand side returned a non-finite value at t = {t}")]
    NonFinite { t: f64 },
    #[error("query t = {t} outside the integrated range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

/// 5th-order weights minus 4th-order weights (error estimator).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Dense-output combination coefficients (continuous 4th-order extension).
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

struct Segment {
    t0: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

impl Segment {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        for i in 0..out.len() {
            out[i] = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + th1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + th1 * self.rcont[4][i])));
        }
    }
}

/// Continuous solution over the integrated span.
pub struct DenseOutput {
    segments: Vec<Segment>,
    t_start: f64,
    t_end: f64,
    dim: usize,
}

impl DenseOutput {
    pub fn span(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) -> Result<(), OdeError> {
        let (lo, hi) = if self.t_start <= self.t_end {
            (self.t_start, self.t_end)
        } else {
            (self.t_end, self.t_start)
        };
        let slack = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
        if t < lo - slack || t > hi + slack {
            return Err(OdeError::OutOfRange { t, lo, hi });
        }
        let dir = (self.t_end - self.t_start).signum();
        // binary search for the segment whose [t0, t0+h] covers t
        let mut a = 0usize;
        let mut b = self.segments.len();
        while b - a > 1 {
            let m = (a + b) / 2;
            if (t - self.segments[m].t0) * dir >= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        self.segments[a].eval(t, out);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Integrate `y' = f(t, y)` from `t0` to `t1`, storing dense output.
pub fn integrate_dense<F>(
    f: F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<DenseOutput, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let span = t1 - t0;
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut ytmp = vec![0.0; n];

    let rhs = |t: f64, y: &[f64], out: &mut [f64]| -> Result<(), OdeError> {
        f(t, y, out);
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(OdeError::NonFinite { t })
        }
    };

    let mut k1 = vec![0.0; n];
    rhs(t, &y, &mut k1)?;
    k[0].copy_from_slice(&k1);

    let mut h = dir * (span.abs() / 100.0).min(0.1).max(1e-8);
    let mut segments = Vec::new();
    let h_min = 1e-14 * span.abs().max(1.0);

    while (t1 - t) * dir > 0.0 {
        if h.abs() < h_min {
            return Err(OdeError::StepUnderflow { t, span: (t1 - t).abs() });
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        // stages 2..7
        for s in 0..6 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    acc += A[s][j] * kj[i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            rhs(t + C[s] * h, &ytmp, &mut k1)?;
            k[s + 1].copy_from_slice(&k1);
        }
        // ytmp currently holds the 5th-order solution (stage 7 input, FSAL)
        let ynew = ytmp.clone();
        // error estimate
        let mut err = 0.0f64;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sc = atol + rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / n as f64).sqrt();

        if err <= 1.0 {
            // accept: build dense coefficients
            let mut rcont: [Vec<f64>; 5] = [
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
            ];
            for i in 0..n {
                let dy = ynew[i] - y[i];
                let bspl = h * k[0][i] - dy;
                rcont[0][i] = y[i];
                rcont[1][i] = dy;
                rcont[2][i] = bspl;
                rcont[3][i] = dy - h * k[6][i] - bspl;
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    acc += D[j] * kj[i];
                }
                rcont[4][i] = h * acc;
            }
            segments.push(Segment { t0: t, h, rcont });
            t += h;
            y = ynew;
            let next = k[6].clone();
            k[0].copy_from_slice(&next); // FSAL
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }

    Ok(DenseOutput { segments, t_start: t0, t_end: t1, dim: n })
}
