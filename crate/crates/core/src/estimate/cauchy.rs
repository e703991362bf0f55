//! Median-of-batch-solutions estimators.
//!
//! Each batch uses exactly `p` rows, so its solution error is a ratio of
//! Gaussians: for uncorrelated parents, coordinate `j` of the error is
//! `(σ_y/σ_j)·Cauchy(0, 1)`; in general the entries of `Lᵀ(Ã − A)` are
//! `σ_y·Cauchy(0, 1)` where `M = LLᵀ` is the parent covariance. Averaging such
//! errors does not concentrate, but their median does.

use nalgebra::{DMatrix, DVector};

use super::linalg::{batch_solve, coordinate_median};
use super::CoefficientEstimator;
use crate::error::{Error, Result};

/// Relative tolerance on the Cholesky pivots of the empirical parent covariance.
pub const CHOLESKY_TOLERANCE: f64 = 1e-12;

/// Solutions of the `⌊m/p⌋` consecutive `p × p` systems.
pub fn batch_solutions(parents: &DMatrix<f64>, target: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    let (m, p) = parents.shape();
    if p == 0 {
        return Ok(Vec::new());
    }
    let batches = m / p;
    if batches == 0 {
        return Err(Error::TooFewRows {
            required: p,
            available: m,
        });
    }
    Ok((0..batches)
        .map(|s| {
            let x = parents.rows(s * p, p).into_owned();
            let y = target.rows(s * p, p).into_owned();
            batch_solve(&x, &y)
        })
        .collect())
}

/// Coordinate-wise median of the raw batch solutions. Intended for polytrees,
/// where parents are uncorrelated.
pub fn cauchy_est_tree_node(parents: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
    if parents.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    Ok(coordinate_median(&batch_solutions(parents, target)?))
}

/// Medians taken in the basis whitened by the Cholesky factor of the empirical
/// parent covariance `M̂ = XᵀX/m` (all rows), then mapped back.
pub fn cauchy_est_node(parents: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, p) = parents.shape();
    if p == 0 {
        return Ok(DVector::zeros(0));
    }
    if m < p {
        return Err(Error::TooFewRows {
            required: p,
            available: m,
        });
    }
    let m_hat = parents.tr_mul(parents) / m as f64;
    let l = m_hat.clone().cholesky().ok_or(Error::CholeskyFailed)?.unpack();
    let scale = m_hat.diagonal().max();
    let min_pivot = l.diagonal().iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
    if !(min_pivot > CHOLESKY_TOLERANCE * scale) {
        return Err(Error::CholeskyFailed);
    }
    let lt = l.transpose();
    let whitened: Vec<_> = batch_solutions(parents, target)?.iter().map(|a| &lt * a).collect();
    let med = coordinate_median(&whitened);
    lt.solve_upper_triangular(&med).ok_or(Error::CholeskyFailed)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CauchyEstTree;

impl CoefficientEstimator for CauchyEstTree {
    fn name(&self) -> &'static str {
        "cauchy_est_tree"
    }

    fn min_samples(&self, parents: usize) -> usize {
        parents
    }

    fn estimate_node(&self, parents: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
        cauchy_est_tree_node(parents, target)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CauchyEst;

impl CoefficientEstimator for CauchyEst {
    fn name(&self) -> &'static str {
        "cauchy_est"
    }

    fn min_samples(&self, parents: usize) -> usize {
        parents + 1
    }

    fn estimate_node(&self, parents: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
        cauchy_est_node(parents, target)
    }
}
