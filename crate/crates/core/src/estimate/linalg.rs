//! Small dense solves and order statistics shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance on `XᵀX` below which a design is treated as singular.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Least-squares solution of `X Â ≈ B` via Householder QR.
///
/// Fails with [`Error::RankDeficient`] when some `R_jj²` falls below
/// `RANK_TOLERANCE · ‖R‖_F²` (a bound on `‖XᵀX‖`).
pub fn least_squares_node(x: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, p) = x.shape();
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: b.len(),
        });
    }
    if p == 0 {
        return Ok(DVector::zeros(0));
    }
    if m < p {
        return Err(Error::RankDeficient);
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.norm_squared();
    let min_pivot = r.diagonal().iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
    if !(scale > 0.0) || min_pivot <= RANK_TOLERANCE * scale {
        return Err(Error::RankDeficient);
    }
    let mut qtb = b.clone();
    qr.q_tr_mul(&mut qtb);
    let rhs = qtb.rows(0, p).into_owned();
    r.solve_upper_triangular(&rhs).ok_or(Error::RankDeficient)
}

/// Solves the square system built from exactly `p` samples.
///
/// Any solution is acceptable; when LU meets a (numerically) zero pivot the
/// minimum-norm least-squares solution is returned instead.
pub fn batch_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let p = x.nrows();
    debug_assert_eq!(x.ncols(), p);
    debug_assert_eq!(y.len(), p);
    let lu = x.clone().lu();
    let u = lu.u();
    let pivots = u.diagonal().map(f64::abs);
    let (lo, hi) = (pivots.min(), pivots.max());
    if lo > p as f64 * f64::EPSILON * hi {
        if let Some(sol) = lu.solve(y) {
            if sol.iter().all(|v| v.is_finite()) {
                return sol;
            }
        }
    }
    min_norm_solve(x, y)
}

fn min_norm_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let svd = x.clone().svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-12;
    svd.solve(y, cutoff).unwrap_or_else(|_| DVector::zeros(x.ncols()))
}

/// Median with the two central order statistics averaged for even lengths.
/// Reorders `values`.
pub fn median_in_place(values: &mut [f64]) -> f64 {
    let len = values.len();
    assert!(len > 0, "median of an empty slice");
    let mid = len / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if len % 2 == 1 {
        upper
    } else {
        let lower = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

pub fn median(values: &[f64]) -> f64 {
    median_in_place(&mut values.to_vec())
}

/// Coordinate-wise median of equally sized vectors.
pub fn coordinate_median(vectors: &[DVector<f64>]) -> DVector<f64> {
    let p = vectors.first().map_or(0, |v| v.len());
    let mut column = vec![0.0; vectors.len()];
    DVector::from_iterator(
        p,
        (0..p).map(|j| {
            for (slot, v) in column.iter_mut().zip(vectors) {
                *slot = v[j];
            }
            median_in_place(&mut column)
        }),
    )
}

/// Coordinate-wise mean; a single vector is returned unchanged.
pub fn coordinate_mean(vectors: &[DVector<f64>]) -> DVector<f64> {
    let mut iter = vectors.iter();
    let first = iter.next().expect("mean of no vectors").clone();
    let sum = iter.fold(first, |acc, v| acc + v);
    sum / vectors.len() as f64
}
