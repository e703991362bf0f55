//! Experimental scenarios: gross-error contamination and misspecified structure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::model::{GaussianBayesNet, SampleMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseLaw {
    Gaussian { mean: f64, var: f64 },
    Cauchy { loc: f64, scale: f64 },
}

impl NoiseLaw {
    pub fn short_name(&self) -> &'static str {
        match self {
            NoiseLaw::Gaussian { .. } => "gaussian",
            NoiseLaw::Cauchy { .. } => "cauchy",
        }
    }

    fn sampler(&self) -> Result<NoiseSampler> {
        match *self {
            NoiseLaw::Gaussian { mean, var } => Normal::new(mean, var.sqrt())
                .map(NoiseSampler::Gaussian)
                .map_err(|e| Error::InvalidSpec(e.to_string())),
            NoiseLaw::Cauchy { loc, scale } => Cauchy::new(loc, scale)
                .map(NoiseSampler::Cauchy)
                .map_err(|e| Error::InvalidSpec(e.to_string())),
        }
    }
}

enum NoiseSampler {
    Gaussian(Normal<f64>),
    Cauchy(Cauchy<f64>),
}

impl NoiseSampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSampler::Gaussian(d) => d.sample(rng),
            NoiseSampler::Cauchy(d) => d.sample(rng),
        }
    }
}

/// Which cells get their structural noise replaced, and by what.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContaminationSpec {
    #[serde(default = "default_fraction")]
    pub sample_fraction: f64,
    #[serde(default = "default_node_count")]
    pub node_count: usize,
    #[serde(default = "default_law")]
    pub noise_law: NoiseLaw,
    #[serde(default)]
    pub seed: u64,
}

fn default_fraction() -> f64 {
    0.05
}

fn default_node_count() -> usize {
    5
}

fn default_law() -> NoiseLaw {
    NoiseLaw::Gaussian { mean: 1000.0, var: 1.0 }
}

impl Default for ContaminationSpec {
    fn default() -> Self {
        Self {
            sample_fraction: default_fraction(),
            node_count: default_node_count(),
            noise_law: default_law(),
            seed: 0,
        }
    }
}

impl ContaminationSpec {
    /// A spec that touches nothing.
    pub fn none() -> Self {
        Self {
            sample_fraction: 0.0,
            node_count: 0,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sample_fraction) {
            return Err(Error::InvalidSpec(format!(
                "sample_fraction {} outside [0, 1]",
                self.sample_fraction
            )));
        }
        if self.node_count > n {
            return Err(Error::InvalidSpec(format!(
                "node_count {} exceeds {n} nodes",
                self.node_count
            )));
        }
        self.noise_law.sampler().map(|_| ())
    }

    /// `⌈fraction · m⌉`, guarding against round-up from representation error.
    pub fn row_count(&self, m: usize) -> usize {
        let exact = self.sample_fraction * m as f64;
        ((exact - 1e-9).ceil().max(0.0) as usize).min(m)
    }
}

/// Contaminated rows and nodes, both sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContaminationTargets {
    pub rows: Vec<usize>,
    pub nodes: Vec<usize>,
}

impl ContaminationTargets {
    pub fn contains(&self, row: usize, node: usize) -> bool {
        self.rows.binary_search(&row).is_ok() && self.nodes.binary_search(&node).is_ok()
    }
}

pub fn choose_contamination_targets<R: Rng + ?Sized>(
    spec: &ContaminationSpec,
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<ContaminationTargets> {
    spec.validate(n)?;
    let mut rows = rand::seq::index::sample(rng, m, spec.row_count(m)).into_vec();
    let mut nodes = rand::seq::index::sample(rng, n, spec.node_count).into_vec();
    rows.sort_unstable();
    nodes.sort_unstable();
    Ok(ContaminationTargets { rows, nodes })
}

/// Forward sampling where targeted cells draw their noise from `spec.noise_law`.
///
/// Targets and contaminating draws come from a generator seeded with `spec.seed`;
/// the clean noise stream comes from `rng` and is consumed identically whether or
/// not a cell is targeted. Contaminated values propagate to descendants through
/// the structural equations.
pub fn contaminated_sample<R: Rng + ?Sized>(
    gbn: &GaussianBayesNet,
    m: usize,
    spec: &ContaminationSpec,
    rng: &mut R,
) -> Result<(SampleMatrix, ContaminationTargets)> {
    let mut spec_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let targets = choose_contamination_targets(spec, gbn.n(), m, &mut spec_rng)?;
    let law = spec.noise_law.sampler()?;
    let data = gbn.sample_with(m, rng, |row, node| {
        targets.contains(row, node).then(|| law.draw(&mut spec_rng))
    });
    Ok((data, targets))
}

/// The data-generating graph and a sub-graph with `k` random edges removed for fitting.
pub fn agnostic_pair<R: Rng + ?Sized>(truth: &Dag, remove_edges: usize, rng: &mut R) -> Result<(Dag, Dag)> {
    let fit_dag = truth.remove_random_edges(remove_edges, rng)?;
    Ok((truth.clone(), fit_dag))
}
