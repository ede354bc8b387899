//! Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization and
//! thick restarts.
//!
//! The factorization `A P = Q B` is kept exact at every step: each new
//! right vector `p` is mapped through `A` and expanded in the current left
//! basis `Q`, so `B = Qᵀ A P` is the Rayleigh-Ritz projection even after
//! restarts and breakdowns. Ritz residuals `‖Aᵀũ − σṽ‖` are evaluated
//! explicitly rather than through the recurrence.
//!
//! A Krylov space seeded with one vector cannot resolve multiplicities, so a
//! converged cycle is followed by one cycle seeded with a fresh vector
//! orthogonal to the locked Ritz vectors. The result is accepted only if that
//! cycle leaves the top-k values unchanged.

use nalgebra::DMatrix;

use super::SpectralError;
use crate::linalg::{self, axpy, jacobi_svd, norm, orthogonalize, scale};
use crate::sparse::CsrMatrix;

/// Raw singular triplets: `u` is `nrows × k`, `v` is `ncols × k`.
#[derive(Debug, Clone)]
pub(crate) struct Triplets {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
    pub cycles: usize,
}

pub(crate) fn lanczos_svd(
    a: &CsrMatrix,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Triplets, SpectralError> {
    let max = a.nrows().min(a.ncols());
    if k == 0 {
        return Err(SpectralError::ZeroRank);
    }
    if k > max {
        return Err(SpectralError::RankTooLarge { k, max });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(SpectralError::InvalidTolerance(tol));
    }
    if max_iter == 0 {
        return Err(SpectralError::NoConvergence {
            iterations: 0,
            residual: f64::INFINITY,
        });
    }

    // Work with the orientation whose column space is the smaller one, so the
    // right basis can always be completed to the full space.
    let transposed = a.ncols() > a.nrows();
    let op = if transposed { a.transpose() } else { a.clone() };
    let mut t = run(&op, k, tol, max_iter)?;
    if transposed {
        std::mem::swap(&mut t.u, &mut t.v);
    }
    fix_signs(&mut t.u, &mut t.v);
    Ok(t)
}

fn run(op: &CsrMatrix, k: usize, tol: f64, max_iter: usize) -> Result<Triplets, SpectralError> {
    let m = op.nrows();
    let n = op.ncols();
    let dim = n; // n <= m
    let cycle_dim = dim.min((2 * k + 10).max(k + 20));
    let anorm = op.frobenius_norm();
    let breakdown = 16.0 * f64::EPSILON * anorm.max(f64::MIN_POSITIVE);

    let mut stream = 1u64;
    let mut p_basis: Vec<Vec<f64>> = Vec::with_capacity(cycle_dim);
    let mut q_basis: Vec<Vec<f64>> = Vec::with_capacity(cycle_dim);
    // bcols[c] = coefficients of A p_c in the left basis
    let mut bcols: Vec<Vec<f64>> = Vec::with_capacity(cycle_dim);
    let mut pending: Option<Vec<f64>> = None;
    let mut verifying: Option<Vec<f64>> = None;
    let mut last_residual = f64::INFINITY;

    let mut av = vec![0.0; m];
    let mut atu = vec![0.0; n];

    for cycle in 1..=max_iter {
        while p_basis.len() < cycle_dim {
            let p = match pending.take() {
                Some(mut r) => {
                    orthogonalize(&p_basis, &mut r);
                    let nr = norm(&r);
                    if nr > breakdown {
                        scale(&mut r, 1.0 / nr);
                        r
                    } else {
                        fresh(&p_basis, n, &mut stream)
                    }
                }
                None => fresh(&p_basis, n, &mut stream),
            };
            let mut w = vec![0.0; m];
            op.mul_vec(&p, &mut w);
            let mut bcol = orthogonalize(&q_basis, &mut w);
            let alpha = norm(&w);
            let q = if alpha > breakdown {
                scale(&mut w, 1.0 / alpha);
                bcol.push(alpha);
                w
            } else {
                bcol.push(0.0);
                fresh(&q_basis, m, &mut stream)
            };
            let mut r = vec![0.0; n];
            op.tr_mul_vec(&q, &mut r);
            p_basis.push(p);
            q_basis.push(q);
            bcols.push(bcol);
            orthogonalize(&p_basis, &mut r);
            pending = Some(r);
        }

        let j = p_basis.len();
        let mut b = DMatrix::<f64>::zeros(j, j);
        for (c, col) in bcols.iter().enumerate() {
            for (r, &x) in col.iter().enumerate() {
                b[(r, c)] = x;
            }
        }
        let (ub, sb, vb) = jacobi_svd(&b);

        // Only the leading k pairs are checked and kept.
        let ritz_v: Vec<Vec<f64>> = (0..k)
            .map(|i| combine(&p_basis, vb.column(i).as_slice()))
            .collect();
        let ritz_u: Vec<Vec<f64>> = (0..k)
            .map(|i| combine(&q_basis, ub.column(i).as_slice()))
            .collect();

        let sigma_max = sb[0];
        let mut worst = 0.0f64;
        for i in 0..k {
            op.tr_mul_vec(&ritz_u[i], &mut atu);
            axpy(&mut atu, -sb[i], &ritz_v[i]);
            op.mul_vec(&ritz_v[i], &mut av);
            axpy(&mut av, -sb[i], &ritz_u[i]);
            worst = worst.max(norm(&atu).max(norm(&av)));
        }
        last_residual = if sigma_max > 0.0 {
            worst / sigma_max
        } else {
            0.0
        };
        let full_space = j == dim;
        let converged = full_space || last_residual <= tol;

        if converged {
            let top: Vec<f64> = sb[..k].to_vec();
            let settled = full_space
                || verifying.as_ref().is_some_and(|prev| {
                    prev.iter()
                        .zip(&top)
                        .all(|(x, y)| (x - y).abs() <= tol * sigma_max.max(f64::MIN_POSITIVE))
                });
            if settled {
                return Ok(Triplets {
                    u: columns(&ritz_u, m),
                    sigma: top,
                    v: columns(&ritz_v, n),
                    cycles: cycle,
                });
            }
            verifying = Some(top);
            pending = None;
        } else {
            verifying = None;
        }

        // Thick restart: keep the k leading Ritz pairs, B becomes diagonal.
        p_basis = ritz_v;
        q_basis = ritz_u;
        bcols = (0..k)
            .map(|i| {
                let mut col = vec![0.0; i + 1];
                col[i] = sb[i];
                col
            })
            .collect();
    }

    Err(SpectralError::NoConvergence {
        iterations: max_iter,
        residual: last_residual,
    })
}

fn fresh(basis: &[Vec<f64>], n: usize, stream: &mut u64) -> Vec<f64> {
    linalg::fresh_orthonormal(basis, n, stream).expect("basis is smaller than the space")
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (b, &c) in basis.iter().zip(coeffs) {
        axpy(&mut out, c, b);
    }
    out
}

fn columns(vectors: &[Vec<f64>], len: usize) -> DMatrix<f64> {
    DMatrix::from_fn(len, vectors.len(), |i, j| vectors[j][i])
}

/// Flips each singular pair so the largest-magnitude entry of the left
/// vector is positive (the first such entry on ties).
fn fix_signs(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for j in 0..u.ncols() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for &x in u.column(j).iter() {
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        if sign < 0.0 {
            u.column_mut(j).neg_mut();
            v.column_mut(j).neg_mut();
        }
    }
}
