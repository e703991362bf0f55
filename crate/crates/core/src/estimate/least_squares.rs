use nalgebra::{DMatrix, DVector};

use super::linalg::{coordinate_mean, coordinate_median, least_squares_node};
use super::CoefficientEstimator;
use crate::error::{Error, Result};

/// Ordinary least squares over all coefficient-phase rows.
#[derive(Debug, Clone, Copy, Default)]
pub struct LeastSquares;

impl CoefficientEstimator for LeastSquares {
    fn name(&self) -> &'static str {
        "least_squares"
    }

    fn min_samples(&self, parents: usize) -> usize {
        parents
    }

    fn estimate_node(&self, parents: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
        least_squares_node(parents, target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregator {
    Mean,
    CoordinateMedian,
}

/// Least squares on `b = ⌊m/k⌋` disjoint consecutive batches of `k = p + extra`
/// rows, combined by mean or coordinate-wise median. Trailing rows that do not
/// fill a batch are ignored.
#[derive(Debug, Clone, Copy)]
pub struct BatchLeastSquares {
    pub extra: usize,
    pub aggregator: Aggregator,
}

impl BatchLeastSquares {
    pub fn averaged(extra: usize) -> Self {
        Self {
            extra,
            aggregator: Aggregator::Mean,
        }
    }

    pub fn median(extra: usize) -> Self {
        Self {
            extra,
            aggregator: Aggregator::CoordinateMedian,
        }
    }
}

impl CoefficientEstimator for BatchLeastSquares {
    fn name(&self) -> &'static str {
        match self.aggregator {
            Aggregator::Mean => "batch_avg",
            Aggregator::CoordinateMedian => "batch_med",
        }
    }

    fn min_samples(&self, parents: usize) -> usize {
        parents + self.extra
    }

    fn estimate_node(&self, parents: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
        let (m, p) = parents.shape();
        let k = p + self.extra;
        batch_least_squares(parents, target, k, self.aggregator).map_err(|e| match e {
            Error::TooFewRows { .. } => Error::TooFewRows {
                required: k,
                available: m,
            },
            e => e,
        })
    }
}

/// Per-batch least squares with batch size `k`, aggregated as requested.
/// Rank-deficient batches are skipped.
pub fn batch_least_squares(
    parents: &DMatrix<f64>,
    target: &DVector<f64>,
    k: usize,
    aggregator: Aggregator,
) -> Result<DVector<f64>> {
    let (m, p) = parents.shape();
    if k <= p {
        return Err(Error::BatchTooSmall { k, p });
    }
    let batches = m / k;
    if batches == 0 {
        return Err(Error::TooFewRows {
            required: k,
            available: m,
        });
    }
    let solutions: Vec<_> = (0..batches)
        .filter_map(|s| {
            let x = parents.rows(s * k, k).into_owned();
            let y = target.rows(s * k, k).into_owned();
            match least_squares_node(&x, &y) {
                Err(Error::RankDeficient) => None,
                other => Some(other),
            }
        })
        .collect::<Result<_>>()?;
    if solutions.is_empty() {
        return Err(Error::AllBatchesSkipped { batches });
    }
    Ok(match aggregator {
        Aggregator::Mean => coordinate_mean(&solutions),
        Aggregator::CoordinateMedian => coordinate_median(&solutions),
    })
}
