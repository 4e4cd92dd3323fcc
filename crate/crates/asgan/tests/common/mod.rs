//! Shared oracles for the integration suites. Everything here recomputes
//! expectations through independent routes (finite differences, naive
//! formulas, eigendecompositions) and must stay independent of the
//! implementation paths it checks.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central finite differences of a scalar function at `at`.
pub fn central_diff(f: &mut dyn FnMut(&[f64]) -> f64, at: &[f64], h: f64) -> Vec<f64> {
    let mut grads = Vec::with_capacity(at.len());
    let mut point = at.to_vec();
    for i in 0..at.len() {
        point[i] = at[i] + h;
        let plus = f(&point);
        point[i] = at[i] - h;
        let minus = f(&point);
        point[i] = at[i];
        grads.push((plus - minus) / (2.0 * h));
    }
    grads
}

/// Max elementwise relative error with a guarded denominator.
pub fn max_rel_err(a: &[f64], b: &[f64], guard: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(guard))
        .fold(0.0f64, f64::max)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

// ── 2×2 symmetric eigendecomposition route for the Fréchet oracle ────

/// Eigenvalues of a symmetric 2×2 [[a, b], [b, d]].
pub fn sym2_eigenvalues(a: f64, b: f64, d: f64) -> (f64, f64) {
    let tr = a + d;
    let det = a * d - b * b;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 + disc, tr / 2.0 - disc)
}

/// Matrix square root of a symmetric PSD 2×2 via eigendecomposition.
pub fn sym2_sqrt(a: f64, b: f64, d: f64) -> [f64; 4] {
    let (l1, l2) = sym2_eigenvalues(a, b, d);
    let (s1, s2) = (l1.max(0.0).sqrt(), l2.max(0.0).sqrt());
    if b.abs() < 1e-300 {
        return [a.max(0.0).sqrt(), 0.0, 0.0, d.max(0.0).sqrt()];
    }
    // Eigenvector for l1: (b, l1 - a) normalized.
    let (v1x, v1y) = (b, l1 - a);
    let n1 = (v1x * v1x + v1y * v1y).sqrt();
    let (u1x, u1y) = (v1x / n1, v1y / n1);
    // Orthogonal complement.
    let (u2x, u2y) = (-u1y, u1x);
    [
        s1 * u1x * u1x + s2 * u2x * u2x,
        s1 * u1x * u1y + s2 * u2x * u2y,
        s1 * u1y * u1x + s2 * u2y * u2x,
        s1 * u1y * u1y + s2 * u2y * u2y,
    ]
}

fn mat2_mul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// Gaussian-fit squared Wasserstein-2 distance via the eigendecomposition
/// route: Tr√(Σ₁Σ₂) computed as Tr√(Σ₁^½ Σ₂ Σ₁^½). Fits use population
/// covariance plus the same 1e-8 ridge the implementation applies.
pub fn frechet2d_eigen_oracle(real: &[f64], fake: &[f64]) -> f64 {
    let fit = |pts: &[f64]| -> ([f64; 2], [f64; 4]) {
        let n = (pts.len() / 2) as f64;
        let mut mu = [0.0; 2];
        for p in pts.chunks_exact(2) {
            mu[0] += p[0];
            mu[1] += p[1];
        }
        mu[0] /= n;
        mu[1] /= n;
        let mut c = [0.0; 4];
        for p in pts.chunks_exact(2) {
            let dx = p[0] - mu[0];
            let dy = p[1] - mu[1];
            c[0] += dx * dx;
            c[1] += dx * dy;
            c[2] += dy * dx;
            c[3] += dy * dy;
        }
        for v in c.iter_mut() {
            *v /= n;
        }
        c[0] += 1e-8;
        c[3] += 1e-8;
        (mu, c)
    };
    let (mu1, c1) = fit(real);
    let (mu2, c2) = fit(fake);
    let s1_half = sym2_sqrt(c1[0], c1[1], c1[3]);
    let inner = mat2_mul(&mat2_mul(&s1_half, &c2), &s1_half);
    // inner is symmetric PSD up to rounding
    let sym_b = 0.5 * (inner[1] + inner[2]);
    let sqrt_inner = sym2_sqrt(inner[0], sym_b, inner[3]);
    let tr_sqrt = sqrt_inner[0] + sqrt_inner[3];
    let dmu = (mu1[0] - mu2[0]).powi(2) + (mu1[1] - mu2[1]).powi(2);
    dmu + (c1[0] + c1[3]) + (c2[0] + c2[3]) - 2.0 * tr_sqrt
}
