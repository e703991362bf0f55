//! Experiment configuration, read from JSON.
//!
//! ```json
//! {
//!   "graph": { "type": "er", "n": 100, "d": 5 },
//!   "weight_range": [1.0, 2.0],
//!   "variances": { "type": "unit" },
//!   "scenario": { "type": "clean" },
//!   "methods": [
//!     { "method": "least_squares", "variance_method": "empirical" },
//!     { "method": "batch_avg", "batch_extra": 20, "variance_method": "empirical" }
//!   ],
//!   "sample_sizes": [1000, 2000, 3000, 4000, 5000],
//!   "repetitions": 20,
//!   "base_seed": 2021
//! }
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::collections::HashSet;
use std::path::Path;

use gbnlearn::estimate::EstimatorRegistry;
use gbnlearn::{ContaminationSpec, FitConfig, VarianceSpec};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Tree { n: usize },
    Er { n: usize, d: f64 },
}

impl GraphSpec {
    pub fn n(&self) -> usize {
        match *self {
            GraphSpec::Tree { n } | GraphSpec::Er { n, .. } => n,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GraphSpec::Tree { .. } => "tree",
            GraphSpec::Er { .. } => "er",
        }
    }

    /// Degree parameter written to result rows; trees have in-degree 1.
    pub fn degree(&self) -> f64 {
        match *self {
            GraphSpec::Tree { .. } => 1.0,
            GraphSpec::Er { d, .. } => d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    Clean,
    Contaminated {
        #[serde(default)]
        contamination: ContaminationSpec,
    },
    /// Overrides `variances`: listed nodes get `variance`, the rest 1.
    IllConditioned {
        nodes: Vec<usize>,
        #[serde(default = "tiny_variance")]
        variance: f64,
    },
    /// Fit on the true graph with `remove_edges` random edges deleted.
    Agnostic {
        remove_edges: usize,
    },
}

fn tiny_variance() -> f64 {
    1e-20
}

impl Scenario {
    pub fn name(&self) -> String {
        match self {
            Scenario::Clean => "clean".into(),
            Scenario::Contaminated { contamination } => {
                format!("contaminated_{}", contamination.noise_law.short_name())
            }
            Scenario::IllConditioned { .. } => "ill_conditioned".into(),
            Scenario::Agnostic { remove_edges } => format!("agnostic_{remove_edges}"),
        }
    }
}

/// One estimator entry. `variance_method` is required: the harness never
/// picks a variance estimator on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    /// Column value in the output; defaults to e.g. `batch_avg+20`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_extra: Option<usize>,
    #[serde(default = "half")]
    pub split_fraction: f64,
    pub variance_method: String,
}

fn half() -> f64 {
    0.5
}

impl MethodSpec {
    pub fn new(method: &str, variance_method: &str) -> Self {
        Self {
            label: None,
            method: method.into(),
            batch_extra: None,
            split_fraction: 0.5,
            variance_method: variance_method.into(),
        }
    }

    pub fn batch(method: &str, extra: usize, variance_method: &str) -> Self {
        Self {
            batch_extra: Some(extra),
            ..Self::new(method, variance_method)
        }
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            method: self.method.clone(),
            batch_extra: self.batch_extra,
            split_fraction: self.split_fraction,
            variance_method: self.variance_method.clone(),
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.fit_config().label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    #[serde(default = "default_weights")]
    pub weight_range: (f64, f64),
    #[serde(default = "unit")]
    pub variances: VarianceSpec,
    #[serde(default = "clean")]
    pub scenario: Scenario,
    pub methods: Vec<MethodSpec>,
    pub sample_sizes: Vec<usize>,
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Write fit wall-clock times. Off by default so output is reproducible byte for byte.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_weights() -> (f64, f64) {
    (1.0, 2.0)
}

fn unit() -> VarianceSpec {
    VarianceSpec::Unit
}

fn clean() -> Scenario {
    Scenario::Clean
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(BenchError::io(path))?;
        let config = Self::from_json(&text).map_err(|source| BenchError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::ConfigInvalid(msg));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.sample_sizes.is_empty() {
            return bad("sample_sizes is empty".into());
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) || self.sample_sizes[0] == 0 {
            return bad("sample_sizes must be positive and strictly increasing".into());
        }
        if self.methods.is_empty() {
            return bad("methods is empty".into());
        }
        let registry = EstimatorRegistry::with_builtins();
        let mut labels = HashSet::new();
        for m in &self.methods {
            let label = m.label();
            if !labels.insert(label.clone()) {
                return bad(format!("duplicate method label `{label}`"));
            }
            registry
                .validate(&m.fit_config())
                .map_err(|e| BenchError::ConfigInvalid(format!("method `{label}`: {e}")))?;
        }
        let n = self.graph.n();
        match self.graph {
            GraphSpec::Tree { n } if n < 2 => return bad("tree needs n >= 2".into()),
            GraphSpec::Er { n, d } if n == 0 || !(d > 0.0 && d <= n as f64) => {
                return bad(format!("er graph needs n >= 1 and 0 < d <= n, got n={n}, d={d}"))
            }
            _ => {}
        }
        let (lo, hi) = self.weight_range;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return bad(format!("weight_range [{lo}, {hi}) must satisfy 0 < lo < hi"));
        }
        match &self.scenario {
            Scenario::Contaminated { contamination } => contamination
                .validate(n)
                .map_err(|e| BenchError::ConfigInvalid(e.to_string()))?,
            Scenario::IllConditioned { nodes, variance } => {
                if let Some(bad_node) = nodes.iter().find(|&&i| i >= n) {
                    return bad(format!("ill-conditioned node {bad_node} out of range"));
                }
                if !(*variance > 0.0) {
                    return bad("ill-conditioned variance must be positive".into());
                }
            }
            Scenario::Agnostic { remove_edges } => {
                if let GraphSpec::Tree { n } = self.graph {
                    if *remove_edges > n - 1 {
                        return bad(format!("a tree on {n} nodes has fewer than {remove_edges} edges"));
                    }
                }
            }
            Scenario::Clean => {}
        }
        Ok(())
    }

    /// Variance assignment after applying the scenario.
    pub fn effective_variances(&self) -> VarianceSpec {
        match &self.scenario {
            Scenario::IllConditioned { nodes, variance } => VarianceSpec::IllConditioned {
                nodes: nodes.clone(),
                variance: *variance,
            },
            _ => self.variances.clone(),
        }
    }
}

/// Shipped presets: clean ER sweep, contaminated tree, agnostic tree.
pub mod presets {
    use super::*;

    const SIZES: [usize; 5] = [1000, 2000, 3000, 4000, 5000];

    pub fn clean_er() -> ExperimentConfig {
        ExperimentConfig {
            graph: GraphSpec::Er { n: 100, d: 5.0 },
            weight_range: (1.0, 2.0),
            variances: VarianceSpec::Unit,
            scenario: Scenario::Clean,
            methods: vec![
                MethodSpec::new("least_squares", "empirical"),
                MethodSpec::batch("batch_avg", 20, "empirical"),
                MethodSpec::batch("batch_med", 20, "empirical"),
                MethodSpec::new("cauchy_est_tree", "empirical"),
                MethodSpec::new("cauchy_est", "empirical"),
                MethodSpec::new("empirical_mle", "empirical"),
            ],
            sample_sizes: SIZES.to_vec(),
            repetitions: 20,
            base_seed: 2021,
            record_timing: false,
        }
    }

    pub fn contaminated_tree() -> ExperimentConfig {
        ExperimentConfig {
            graph: GraphSpec::Tree { n: 100 },
            scenario: Scenario::Contaminated {
                contamination: ContaminationSpec::default(),
            },
            methods: vec![
                MethodSpec::new("least_squares", "mad"),
                MethodSpec::batch("batch_avg", 20, "mad"),
                MethodSpec::batch("batch_med", 20, "mad"),
                MethodSpec::new("cauchy_est_tree", "mad"),
                MethodSpec::new("cauchy_est", "mad"),
            ],
            ..clean_er()
        }
    }

    pub fn agnostic_tree() -> ExperimentConfig {
        ExperimentConfig {
            graph: GraphSpec::Tree { n: 100 },
            scenario: Scenario::Agnostic { remove_edges: 4 },
            methods: vec![
                MethodSpec::new("least_squares", "empirical"),
                MethodSpec::batch("batch_avg", 20, "empirical"),
                MethodSpec::batch("batch_med", 20, "empirical"),
                MethodSpec::new("cauchy_est_tree", "empirical"),
                MethodSpec::new("cauchy_est", "empirical"),
            ],
            ..clean_er()
        }
    }

    pub fn by_name(name: &str) -> Option<ExperimentConfig> {
        match name {
            "clean-er" => Some(clean_er()),
            "contaminated-tree" => Some(contaminated_tree()),
            "agnostic" => Some(agnostic_tree()),
            _ => None,
        }
    }
}
