//! Two-phase parameter recovery on a known DAG.
//!
//! The first `⌊split·m⌋` rows feed a per-node coefficient estimator, the
//! remaining rows feed a variance estimator applied to the residuals
//! `Y − XÂ`. Estimators are trait objects looked up by name in an
//! [`EstimatorRegistry`], so the harness and CLI can select them from
//! configuration.

mod cauchy;
mod least_squares;
pub mod linalg;
mod variance;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use cauchy::{batch_solutions, cauchy_est_node, cauchy_est_tree_node, CauchyEst, CauchyEstTree};
pub use least_squares::{batch_least_squares, Aggregator, BatchLeastSquares, LeastSquares};
pub use linalg::{batch_solve, least_squares_node};
pub use variance::{mad_variance, EmpiricalVariance, MadVariance, VarianceEstimator, MAD_SCALE};

use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::model::{GaussianBayesNet, SampleMatrix};

/// Method name of the unstructured covariance baseline. It is not a
/// per-node estimator; see [`empirical_mle`].
pub const EMPIRICAL_MLE: &str = "empirical_mle";

/// Variance assigned to nodes whose recovered variance is not positive.
pub const DEGENERATE_VARIANCE_FLOOR: f64 = 1e-300;

/// Recovers the coefficient vector of one node from its parent block
/// (`m × p`, one column per parent in ascending index order) and target column.
pub trait CoefficientEstimator: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Coefficient-phase rows needed for a node with `parents` parents.
    fn min_samples(&self, parents: usize) -> usize;

    fn estimate_node(&self, parents: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>>;
}

pub type CoefficientFactory = fn(&FitConfig) -> Result<Box<dyn CoefficientEstimator>>;
pub type VarianceFactory = fn() -> Box<dyn VarianceEstimator>;

/// Name-indexed constructors for coefficient and variance estimators.
#[derive(Clone)]
pub struct EstimatorRegistry {
    coefficient: BTreeMap<&'static str, CoefficientFactory>,
    variance: BTreeMap<&'static str, VarianceFactory>,
}

impl fmt::Debug for EstimatorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EstimatorRegistry")
            .field("coefficient", &self.coefficient.keys().collect::<Vec<_>>())
            .field("variance", &self.variance.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

fn require_extra(config: &FitConfig) -> Result<usize> {
    match config.batch_extra {
        Some(x) if x >= 1 => Ok(x),
        _ => Err(Error::InvalidConfig(format!(
            "`{}` needs batch_extra >= 1",
            config.method
        ))),
    }
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self {
            coefficient: BTreeMap::new(),
            variance: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register_coefficient("least_squares", |_| Ok(Box::new(LeastSquares)));
        r.register_coefficient("batch_avg", |c| {
            Ok(Box::new(BatchLeastSquares::averaged(require_extra(c)?)))
        });
        r.register_coefficient("batch_med", |c| {
            Ok(Box::new(BatchLeastSquares::median(require_extra(c)?)))
        });
        r.register_coefficient("cauchy_est_tree", |_| Ok(Box::new(CauchyEstTree)));
        r.register_coefficient("cauchy_est", |_| Ok(Box::new(CauchyEst)));
        r.register_variance("empirical", || Box::new(EmpiricalVariance));
        r.register_variance("mad", || Box::new(MadVariance));
        r
    }

    pub fn register_coefficient(&mut self, name: &'static str, factory: CoefficientFactory) {
        self.coefficient.insert(name, factory);
    }

    pub fn register_variance(&mut self, name: &'static str, factory: VarianceFactory) {
        self.variance.insert(name, factory);
    }

    pub fn coefficient_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.coefficient.keys().copied()
    }

    pub fn variance_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.variance.keys().copied()
    }

    pub fn coefficient_estimator(&self, config: &FitConfig) -> Result<Box<dyn CoefficientEstimator>> {
        let factory = self
            .coefficient
            .get(config.method.as_str())
            .ok_or_else(|| Error::UnknownMethod(config.method.clone()))?;
        factory(config)
    }

    pub fn variance_estimator(&self, name: &str) -> Result<Box<dyn VarianceEstimator>> {
        self.variance
            .get(name)
            .map(|f| f())
            .ok_or_else(|| Error::UnknownMethod(name.to_string()))
    }

    /// Checks a configuration against this registry without fitting.
    pub fn validate(&self, config: &FitConfig) -> Result<()> {
        config.validate_split()?;
        self.variance_estimator(&config.variance_method)?;
        if config.method == EMPIRICAL_MLE {
            return Ok(());
        }
        self.coefficient_estimator(config).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub method: String,
    /// Batch size is `p + batch_extra` for the batch least-squares methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_extra: Option<usize>,
    /// Fraction of rows used for coefficients; the rest estimate variances.
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    pub variance_method: String,
}

fn default_split() -> f64 {
    0.5
}

impl FitConfig {
    pub fn new(method: impl Into<String>) -> Self {
        Self {
            method: method.into(),
            batch_extra: None,
            split_fraction: default_split(),
            variance_method: "empirical".into(),
        }
    }

    pub fn with_batch_extra(mut self, extra: usize) -> Self {
        self.batch_extra = Some(extra);
        self
    }

    pub fn with_split(mut self, fraction: f64) -> Self {
        self.split_fraction = fraction;
        self
    }

    pub fn with_variance(mut self, method: impl Into<String>) -> Self {
        self.variance_method = method.into();
        self
    }

    /// Display label, e.g. `batch_avg+20`.
    pub fn label(&self) -> String {
        match self.batch_extra {
            Some(x) if self.method.starts_with("batch_") => format!("{}+{}", self.method, x),
            _ => self.method.clone(),
        }
    }

    fn validate_split(&self) -> Result<()> {
        if self.split_fraction > 0.0 && self.split_fraction < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "split_fraction {} must lie in (0, 1)",
                self.split_fraction
            )))
        }
    }

    /// `(m₁, m₂)` for `m` rows.
    pub fn split(&self, m: usize) -> (usize, usize) {
        let m1 = (self.split_fraction * m as f64).floor() as usize;
        (m1.min(m), m - m1.min(m))
    }
}

/// Per-node coefficient vectors aligned with the parent lists.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientEstimates(Vec<Vec<f64>>);

impl CoefficientEstimates {
    pub fn new(dag: &Dag, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if coeffs.len() != dag.n() {
            return Err(Error::DimensionMismatch {
                expected: dag.n(),
                actual: coeffs.len(),
            });
        }
        for (i, a) in coeffs.iter().enumerate() {
            if a.len() != dag.in_degree(i) {
                return Err(Error::DimensionMismatch {
                    expected: dag.in_degree(i),
                    actual: a.len(),
                });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite.at_node(i));
            }
        }
        Ok(Self(coeffs))
    }

    /// The coefficients of a known model.
    pub fn of_model(gbn: &GaussianBayesNet) -> Self {
        Self((0..gbn.n()).map(|i| gbn.coeffs(i).to_vec()).collect())
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.0[i]
    }

    pub fn into_inner(self) -> Vec<Vec<f64>> {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub model: GaussianBayesNet,
    /// Nodes whose recovered variance was not positive and was floored.
    pub degenerate_nodes: Vec<usize>,
    pub coefficient_rows: usize,
    pub variance_rows: usize,
}

impl FittedModel {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_nodes.is_empty()
    }
}

/// Fits a model with the built-in estimators.
pub fn fit(dag: &Dag, data: &SampleMatrix, config: &FitConfig) -> Result<FittedModel> {
    fit_with(&EstimatorRegistry::with_builtins(), dag, data, config)
}

pub fn fit_with(
    registry: &EstimatorRegistry,
    dag: &Dag,
    data: &SampleMatrix,
    config: &FitConfig,
) -> Result<FittedModel> {
    if data.n() != dag.n() {
        return Err(Error::DimensionMismatch {
            expected: dag.n(),
            actual: data.n(),
        });
    }
    if config.method == EMPIRICAL_MLE {
        return Err(Error::InvalidConfig(
            "empirical_mle yields a covariance matrix, not a network; use empirical_mle()".into(),
        ));
    }
    config.validate_split()?;
    let estimator = registry.coefficient_estimator(config)?;
    let variance = registry.variance_estimator(&config.variance_method)?;

    let (m1, m2) = config.split(data.m());
    if m2 == 0 {
        return Err(Error::InsufficientSamples {
            node: 0,
            required: m1 + 1,
            available: data.m(),
        });
    }
    let coeff_rows = data.rows(0..m1);
    let var_rows = data.rows(m1..data.m());

    let coeffs = estimate_coefficients(estimator.as_ref(), dag, &coeff_rows)?;
    let variances = recover_variances(dag, &var_rows, &coeffs, variance.as_ref());

    let mut degenerate_nodes = Vec::new();
    let variances = variances
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            if v > 0.0 && v.is_finite() {
                v
            } else {
                degenerate_nodes.push(i);
                DEGENERATE_VARIANCE_FLOOR
            }
        })
        .collect();
    let model = GaussianBayesNet::new(dag.clone(), coeffs.into_inner(), variances)?;
    Ok(FittedModel {
        model,
        degenerate_nodes,
        coefficient_rows: m1,
        variance_rows: m2,
    })
}

/// Runs `estimator` on every node with at least one parent.
pub fn estimate_coefficients(
    estimator: &dyn CoefficientEstimator,
    dag: &Dag,
    data: &SampleMatrix,
) -> Result<CoefficientEstimates> {
    let coeffs = (0..dag.n())
        .map(|i| {
            let parents = dag.parents(i);
            if parents.is_empty() {
                return Ok(Vec::new());
            }
            let required = estimator.min_samples(parents.len());
            if data.m() < required {
                return Err(Error::InsufficientSamples {
                    node: i,
                    required,
                    available: data.m(),
                });
            }
            let x = data.select_columns(parents);
            let y = data.column(i);
            let a = estimator.estimate_node(&x, &y).map_err(|e| e.at_node(i))?;
            Ok(a.iter().copied().collect())
        })
        .collect::<Result<Vec<_>>>()?;
    CoefficientEstimates::new(dag, coeffs)
}

/// Residuals `Y − XÂ` of `node` over all rows of `data`; roots use `Â = 0`.
pub fn residuals(dag: &Dag, data: &SampleMatrix, coeffs: &CoefficientEstimates, node: usize) -> Vec<f64> {
    let parents = dag.parents(node);
    let a = coeffs.node(node);
    (0..data.m())
        .map(|r| {
            let fitted: f64 = parents.iter().zip(a).map(|(&j, &aj)| aj * data.get(r, j)).sum();
            data.get(r, node) - fitted
        })
        .collect()
}

fn recover_variances(
    dag: &Dag,
    data: &SampleMatrix,
    coeffs: &CoefficientEstimates,
    estimator: &dyn VarianceEstimator,
) -> Vec<f64> {
    (0..dag.n())
        .map(|i| estimator.estimate(&residuals(dag, data, coeffs, i)))
        .collect()
}

/// Mean squared residual per node. Zero is possible (exact fits) and is returned as is.
pub fn variance_recovery(dag: &Dag, data: &SampleMatrix, coeffs: &CoefficientEstimates) -> Vec<f64> {
    recover_variances(dag, data, coeffs, &EmpiricalVariance)
}

/// Per-node squared MAD of the residuals.
pub fn mad_variance_recovery(dag: &Dag, data: &SampleMatrix, coeffs: &CoefficientEstimates) -> Vec<f64> {
    recover_variances(dag, data, coeffs, &MadVariance)
}

/// Second-moment estimate `XᵀX / m` of the full covariance.
pub fn empirical_mle(data: &SampleMatrix) -> DMatrix<f64> {
    let x = data.matrix();
    x.tr_mul(x) / data.m() as f64
}
