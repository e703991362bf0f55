use super::linalg::median_in_place;

/// Scale constant `1/Φ⁻¹(3/4)` making the MAD consistent for Gaussian noise.
pub const MAD_SCALE: f64 = 1.4826;

/// Maps the residuals of one node to a noise variance estimate.
pub trait VarianceEstimator: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;
    fn estimate(&self, residuals: &[f64]) -> f64;
}

/// Mean of squared residuals.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmpiricalVariance;

impl VarianceEstimator for EmpiricalVariance {
    fn name(&self) -> &'static str {
        "empirical"
    }

    fn estimate(&self, residuals: &[f64]) -> f64 {
        residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64
    }
}

/// Squared scaled median absolute deviation; robust to gross outliers.
#[derive(Debug, Clone, Copy, Default)]
pub struct MadVariance;

impl VarianceEstimator for MadVariance {
    fn name(&self) -> &'static str {
        "mad"
    }

    fn estimate(&self, residuals: &[f64]) -> f64 {
        mad_variance(residuals)
    }
}

pub fn mad_variance(residuals: &[f64]) -> f64 {
    let mut buf = residuals.to_vec();
    let center = median_in_place(&mut buf);
    for (b, r) in buf.iter_mut().zip(residuals) {
        *b = (r - center).abs();
    }
    let sigma = MAD_SCALE * median_in_place(&mut buf);
    sigma * sigma
}
