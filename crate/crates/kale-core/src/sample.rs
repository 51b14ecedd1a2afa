//! Seeded random chart points and symmetry generators for invariance checks.
//!
//! All randomness in the crate flows through explicitly seeded generators so
//! every reported number is reproducible from its seed.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chart::ChartPoint;

/// Default radius below which chart points are not sampled (coordinate
/// degeneracies and exceptional sets live there).
pub const DEFAULT_EXCLUSION_RADIUS: f64 = 1e-2;

/// Seeded sample of points in the ball of the given radius, excluding a
/// small ball around the origin.
pub fn chart_points(
    seed: u64,
    count: usize,
    n_complex: usize,
    radius: f64,
    exclusion: f64,
) -> Vec<ChartPoint> {
    assert!(n_complex >= 2, "charts have complex dimension >= 2");
    assert!(radius > exclusion && exclusion >= 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 2 * n_complex;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let coords: Vec<f64> = (0..dim).map(|_| rng.random_range(-radius..radius)).collect();
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm <= exclusion || norm >= radius {
            continue;
        }
        out.push(ChartPoint::new(coords).expect("sampled coordinates are finite"));
    }
    out
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 bounded away from 0 so the log is finite
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Real 2n x 2n representation of a complex n x n matrix: each entry
/// `u + iv` becomes the block `[[u, -v], [v, u]]` acting on `(x_j, y_j)`.
pub fn real_representation(m: &DMatrix<Complex<f64>>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let e = m[(j, k)];
            out[(2 * j, 2 * k)] = e.re;
            out[(2 * j, 2 * k + 1)] = -e.im;
            out[(2 * j + 1, 2 * k)] = e.im;
            out[(2 * j + 1, 2 * k + 1)] = e.re;
        }
    }
    out
}

/// Haar-style random unitary in its real representation, via QR of a
/// complex Gaussian matrix.
pub fn random_unitary_real(seed: u64, n_complex: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n_complex, n_complex, |_, _| {
        Complex::new(standard_normal(&mut rng), standard_normal(&mut rng))
    });
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    // fix the phase ambiguity so the distribution does not depend on QR details
    for j in 0..n_complex {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex::new(1.0, 0.0) };
        for i in 0..n_complex {
            q[(i, j)] *= phase;
        }
    }
    real_representation(&q)
}

/// Real representation of the cyclic-group generator: rotation by `2π/k`
/// in every complex coordinate simultaneously.
pub fn cyclic_generator_real(k: u32, n_complex: usize) -> DMatrix<f64> {
    assert!(k >= 1);
    let angle = std::f64::consts::TAU / k as f64;
    let rot = Complex::new(angle.cos(), angle.sin());
    let m = DMatrix::from_fn(n_complex, n_complex, |i, j| {
        if i == j { rot } else { Complex::new(0.0, 0.0) }
    });
    real_representation(&m)
}

/// A special-orthogonal matrix that is NOT the real form of any unitary:
/// a rotation mixing `y_1` with `x_2`. It fails to commute with the
/// standard complex structure, so unitary-invariance checks must reject it.
pub fn non_unitary_rotation(n_complex: usize, angle: f64) -> DMatrix<f64> {
    assert!(n_complex >= 2);
    let dim = 2 * n_complex;
    let mut out = DMatrix::identity(dim, dim);
    let (c, s) = (angle.cos(), angle.sin());
    out[(1, 1)] = c;
    out[(1, 2)] = -s;
    out[(2, 1)] = s;
    out[(2, 2)] = c;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j_std(n: usize) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for c in 0..n {
            j[(2 * c, 2 * c + 1)] = -1.0;
            j[(2 * c + 1, 2 * c)] = 1.0;
        }
        j
    }

    #[test]
    fn sampled_points_respect_exclusion_and_seed() {
        let a = chart_points(7, 40, 2, 2.0, 1e-2);
        let b = chart_points(7, 40, 2, 2.0, 1e-2);
        assert_eq!(a, b);
        for p in &a {
            let r = p.norm_sq().sqrt();
            assert!(r > 1e-2 && r < 2.0);
        }
        let c = chart_points(8, 40, 2, 2.0, 1e-2);
        assert_ne!(a, c);
    }

    #[test]
    fn random_unitary_is_orthogonal_and_commutes_with_j() {
        for seed in [1u64, 2, 99] {
            let u = random_unitary_real(seed, 2);
            let id = DMatrix::<f64>::identity(4, 4);
            assert!((u.transpose() * &u - &id).norm() < 1e-12);
            let j = j_std(2);
            assert!((&u * &j - &j * &u).norm() < 1e-12);
        }
    }

    #[test]
    fn cyclic_generator_has_order_k() {
        for k in [1u32, 2, 3, 5] {
            let g = cyclic_generator_real(k, 2);
            let mut acc = DMatrix::<f64>::identity(4, 4);
            for _ in 0..k {
                acc = &acc * &g;
            }
            assert!((acc - DMatrix::<f64>::identity(4, 4)).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn non_unitary_rotation_breaks_j_commutation() {
        let m = non_unitary_rotation(2, 0.7);
        let id = DMatrix::<f64>::identity(4, 4);
        assert!((m.transpose() * &m - &id).norm() < 1e-12);
        let j = j_std(2);
        assert!((&m * &j - &j * &m).norm() > 0.5);
    }
}
