//! Parameter learning for Gaussian Bayesian networks with known structure.
//!
//! Given a DAG and i.i.d. samples, [`estimate::fit`] recovers edge coefficients
//! and noise variances in two phases: a pluggable per-node coefficient estimator
//! (least squares, batched least squares, or Cauchy-median estimators) on one
//! part of the data, and a variance estimator on the residuals of the rest.
//! [`kl::kl_divergence`] scores a fitted network against ground truth through
//! its exact per-node decomposition.

pub mod dag;
pub mod datagen;
pub mod error;
pub mod estimate;
pub mod kl;
pub mod model;

pub use dag::{random_er_dag, random_tree_dag, Dag};
pub use datagen::{agnostic_pair, contaminated_sample, ContaminationSpec, NoiseLaw};
pub use error::{Error, Result};
pub use estimate::{
    empirical_mle, fit, fit_with, CoefficientEstimator, EstimatorRegistry, FitConfig, FittedModel, VarianceEstimator,
};
pub use kl::{gaussian_kl, kl_divergence, EvalReport};
pub use model::{random_gbn, GaussianBayesNet, SampleMatrix, VarianceSpec};
