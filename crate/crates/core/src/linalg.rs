//! Small dense kernels: vector helpers, Gram-Schmidt and one-sided Jacobi SVD.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn scale(a: &mut [f64], s: f64) {
    a.iter_mut().for_each(|v| *v *= s);
}

/// `a += s * b`
pub(crate) fn axpy(a: &mut [f64], s: f64, b: &[f64]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += s * y);
}

/// Fixed pseudo-random vector in `[-1, 1]^n`; identical on every platform
/// for the same `(n, stream)`.
pub(crate) fn fixed_vector(n: usize, stream: u64) -> Vec<f64> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(0x5EED_CAFE ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Removes the components of `v` along the orthonormal `basis` (two passes
/// of classical Gram-Schmidt) and returns the accumulated coefficients.
pub(crate) fn orthogonalize(basis: &[Vec<f64>], v: &mut [f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        let pass: Vec<f64> = basis.iter().map(|b| dot(b, v)).collect();
        for (b, &c) in basis.iter().zip(&pass) {
            axpy(v, -c, b);
        }
        coeffs.iter_mut().zip(&pass).for_each(|(acc, c)| *acc += c);
    }
    coeffs
}

/// A unit vector orthogonal to `basis`, drawn from the fixed stream.
/// Returns `None` when `basis` already spans the space.
pub(crate) fn fresh_orthonormal(
    basis: &[Vec<f64>],
    n: usize,
    stream: &mut u64,
) -> Option<Vec<f64>> {
    if basis.len() >= n {
        return None;
    }
    for _ in 0..8 {
        let mut v = fixed_vector(n, *stream);
        *stream += 1;
        let before = norm(&v);
        orthogonalize(basis, &mut v);
        let after = norm(&v);
        if after > 1e-8 * before {
            scale(&mut v, 1.0 / after);
            return Some(v);
        }
    }
    // Fall back to canonical vectors; one of them must survive.
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        orthogonalize(basis, &mut v);
        let nv = norm(&v);
        if nv > best_norm {
            best_norm = nv;
            best = Some(v);
        }
    }
    best.map(|mut v| {
        scale(&mut v, 1.0 / best_norm);
        v
    })
}

/// Thin SVD of a dense `m × n` matrix with `m ≥ n` by one-sided Jacobi.
///
/// Returns `(U, sigma, V)` with singular values sorted non-increasing,
/// `U` of size `m × n` with orthonormal columns and `V` orthogonal `n × n`.
pub(crate) fn jacobi_svd(b: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (m, n) = b.shape();
    assert!(m >= n, "jacobi_svd expects a tall or square matrix");
    let mut w = b.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let eps = f64::EPSILON;

    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let mut u = DMatrix::<f64>::zeros(m, n);
    let mut v_sorted = DMatrix::<f64>::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let mut filled: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut pending = Vec::new();
    let tiny = norms.iter().cloned().fold(0.0, f64::max) * eps * (m as f64);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        v_sorted.set_column(dst, &v.column(src));
        if s > tiny && s > 0.0 {
            sigma.push(s);
            let col: Vec<f64> = w.column(src).iter().map(|x| x / s).collect();
            filled.push(col);
        } else {
            sigma.push(if s > 0.0 { s } else { 0.0 });
            filled.push(Vec::new());
            pending.push(dst);
        }
    }
    // Complete U for (numerically) zero singular values.
    let mut stream = 0u64;
    for dst in pending {
        let basis: Vec<Vec<f64>> = filled.iter().filter(|c| !c.is_empty()).cloned().collect();
        filled[dst] =
            fresh_orthonormal(&basis, m, &mut stream).expect("m >= n leaves room for completion");
    }
    for (j, col) in filled.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            u[(i, j)] = x;
        }
    }
    (u, sigma, v_sorted)
}

fn rotate_columns(a: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..a.nrows() {
        let ap = a[(i, p)];
        let aq = a[(i, q)];
        a[(i, p)] = c * ap - s * aq;
        a[(i, q)] = s * ap + c * aq;
    }
}
