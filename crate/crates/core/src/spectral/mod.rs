//! Truncated SVD of concept-feature matrices, the embedding space built on
//! it, and inference of missing assertions from the low-rank reconstruction.

mod lanczos;
mod space;

use std::cmp::Ordering;
use std::path::PathBuf;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::Concept;
use crate::matrix::{ConceptFeatureMatrix, Feature};
use crate::sparse::CsrMatrix;

pub use space::{
    build_space, build_space_with, clamp_rank, load_space, parse_space, AffectiveSpace, DEFAULT_K,
};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_TAU: f64 = 0.5;

/// Default restart-cycle budget for rank `k`.
pub fn default_max_iter(k: usize) -> usize {
    10 * k.max(1)
}

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("rank {k} exceeds the smaller matrix dimension {max}")]
    RankTooLarge { k: usize, max: usize },
    #[error("tolerance must be finite and positive, got {0}")]
    InvalidTolerance(f64),
    #[error("Lanczos did not converge after {iterations} restart cycles (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("concept {0:?} is not in the space")]
    UnknownConcept(String),
    #[error("concept {0:?} has an all-zero vector")]
    ZeroVector(String),
    #[error("axis {axis} out of range for a {k}-dimensional space")]
    AxisOutOfRange { axis: usize, k: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Rank-k factors `Ã = U_k Σ_k V_kᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TsvdResult {
    /// `rows × k`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Non-increasing, non-negative.
    pub sigma: Vec<f64>,
    /// `cols × k`, orthonormal columns.
    pub v: DMatrix<f64>,
    /// Lanczos restart cycles used.
    pub cycles: usize,
}

impl TsvdResult {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `Ã[i, j]`
    pub fn reconstruct_entry(&self, i: usize, j: usize) -> f64 {
        (0..self.rank())
            .map(|l| self.u[(i, l)] * self.sigma[l] * self.v[(j, l)])
            .sum()
    }

    /// Dense `U_k Σ_k V_kᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (l, s) in self.sigma.iter().enumerate() {
            us.column_mut(l).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

/// `max |MᵀM − I|` over all entries.
pub fn orthonormality_residual(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Top-k singular triplets of `a` by Lanczos bidiagonalization.
///
/// `max_iter` bounds the number of restart cycles; `tol` bounds the relative
/// Ritz residual `max(‖Aṽ − σũ‖, ‖Aᵀũ − σṽ‖) / σ₁`.
pub fn truncated_svd(
    a: &ConceptFeatureMatrix,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<TsvdResult, SpectralError> {
    truncated_svd_csr(&a.to_csr(), k, tol, max_iter)
}

/// [`truncated_svd`] on a bare sparse matrix.
pub fn truncated_svd_csr(
    a: &CsrMatrix,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<TsvdResult, SpectralError> {
    let t = lanczos::lanczos_svd(a, k, tol, max_iter)?;
    Ok(TsvdResult {
        u: t.u,
        sigma: t.sigma,
        v: t.v,
        cycles: t.cycles,
    })
}

/// A candidate assertion read off the low-rank reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub concept: Concept,
    pub feature: Feature,
    pub score: f64,
}

/// Forward features absent from `a` whose reconstructed value reaches `tau`,
/// best first. Ties are broken by concept, then feature.
pub fn infer_assertions(tsvd: &TsvdResult, a: &ConceptFeatureMatrix, tau: f64) -> Vec<Inference> {
    let forward: Vec<usize> = (0..a.ncols())
        .filter(|&j| a.cols()[j].is_forward())
        .collect();
    let mut found = Vec::new();
    for i in 0..a.nrows() {
        for &j in &forward {
            if a.get_ij(i, j).is_some() {
                continue;
            }
            let score = tsvd.reconstruct_entry(i, j);
            if score >= tau {
                found.push(Inference {
                    concept: a.rows()[i].clone(),
                    feature: a.cols()[j].clone(),
                    score,
                });
            }
        }
    }
    found.sort_by(|x, y| match y.score.total_cmp(&x.score) {
        Ordering::Equal => (&x.concept, &x.feature).cmp(&(&y.concept, &y.feature)),
        other => other,
    });
    found
}
