//! Seeded experiment sweeps.

use std::time::Instant;

use gbnlearn::estimate::{EstimatorRegistry, EMPIRICAL_MLE};
use gbnlearn::{
    agnostic_pair, contaminated_sample, empirical_mle, fit_with, gaussian_kl, kl_divergence, random_er_dag, random_gbn,
    random_tree_dag, Dag, GaussianBayesNet, SampleMatrix,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, GraphSpec, MethodSpec, Scenario};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub graph: String,
    pub n: usize,
    pub d: f64,
    pub scenario: String,
    pub m: usize,
    pub rep: usize,
    pub seed: u64,
    /// `None` for degenerate rows.
    pub kl_total: Option<f64>,
    pub tv_upper: Option<f64>,
    pub fit_wall_ms: Option<f64>,
    pub degenerate: bool,
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of repetition `rep`; every random choice in that repetition derives from it.
pub fn rep_seed(base_seed: u64, rep: usize) -> u64 {
    splitmix64(splitmix64(base_seed) ^ rep as u64)
}

#[derive(Clone, Copy)]
enum Stream {
    Graph = 1,
    Model = 2,
    Edit = 3,
    Data = 4,
    Contamination = 5,
}

fn stream_seed(seed: u64, stream: Stream) -> u64 {
    splitmix64(seed.wrapping_add(stream as u64))
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, stream))
}

/// The generated instance of one repetition.
#[derive(Debug, Clone)]
pub struct Instance {
    pub truth: GaussianBayesNet,
    /// Structure handed to the estimators; differs from the truth in the agnostic scenario.
    pub fit_dag: Dag,
    /// Dataset of the largest sample size; smaller sizes use its leading rows.
    pub data: SampleMatrix,
}

pub fn generate_instance(config: &ExperimentConfig, seed: u64) -> Result<Instance> {
    let mut graph_rng = stream_rng(seed, Stream::Graph);
    let dag = match config.graph {
        GraphSpec::Tree { n } => random_tree_dag(n, &mut graph_rng)?,
        GraphSpec::Er { n, d } => random_er_dag(n, d, &mut graph_rng)?,
    };
    let truth = random_gbn(
        &dag,
        config.weight_range,
        &config.effective_variances(),
        &mut stream_rng(seed, Stream::Model),
    )?;
    let m_max = *config.sample_sizes.last().expect("validated non-empty");
    let mut data_rng = stream_rng(seed, Stream::Data);
    let (fit_dag, data) = match &config.scenario {
        Scenario::Clean | Scenario::IllConditioned { .. } => (dag, truth.sample(m_max, &mut data_rng)),
        Scenario::Contaminated { contamination } => {
            let spec = contamination.clone().with_seed(splitmix64(
                stream_seed(seed, Stream::Contamination) ^ contamination.seed,
            ));
            let (data, _) = contaminated_sample(&truth, m_max, &spec, &mut data_rng)?;
            (dag, data)
        }
        Scenario::Agnostic { remove_edges } => {
            let (_, fit_dag) = agnostic_pair(&dag, *remove_edges, &mut stream_rng(seed, Stream::Edit))?;
            (fit_dag, truth.sample(m_max, &mut data_rng))
        }
    };
    Ok(Instance { truth, fit_dag, data })
}

/// Outcome of one fit: KL to the truth, or `None` when the fit was degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub kl_total: Option<f64>,
    pub wall_ms: f64,
}

/// Fits `method` on `data` and scores it against `truth`.
///
/// Fit errors, floored variances and non-finite divergences all count as degenerate.
pub fn evaluate_method(
    registry: &EstimatorRegistry,
    truth: &GaussianBayesNet,
    fit_dag: &Dag,
    data: &SampleMatrix,
    method: &MethodSpec,
) -> Evaluation {
    let start = Instant::now();
    let cfg = method.fit_config();
    if cfg.method == EMPIRICAL_MLE {
        let sigma_hat = empirical_mle(data);
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let kl_total = gaussian_kl(&truth.covariance(), &sigma_hat).ok();
        return Evaluation {
            kl_total: kl_total.filter(|v| v.is_finite()),
            wall_ms,
        };
    }
    let fitted = fit_with(registry, fit_dag, data, &cfg);
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let kl_total = match fitted {
        Ok(fitted) if !fitted.is_degenerate() => {
            if fitted.model.dag() == truth.dag() {
                kl_divergence(truth, &fitted.model).ok().map(|r| r.kl_total)
            } else {
                gaussian_kl(&truth.covariance(), &fitted.model.covariance()).ok()
            }
        }
        _ => None,
    };
    Evaluation {
        kl_total: kl_total.filter(|v| v.is_finite()),
        wall_ms,
    }
}

fn run_rep(config: &ExperimentConfig, registry: &EstimatorRegistry, rep: usize) -> Result<Vec<(usize, ResultRow)>> {
    let seed = rep_seed(config.base_seed, rep);
    let instance = generate_instance(config, seed)?;
    let scenario = config.scenario.name();
    let mut rows = Vec::with_capacity(config.methods.len() * config.sample_sizes.len());
    for &m in &config.sample_sizes {
        let data = instance.data.prefix(m);
        for (idx, method) in config.methods.iter().enumerate() {
            let eval = evaluate_method(registry, &instance.truth, &instance.fit_dag, &data, method);
            let kl_total = eval.kl_total.map(|v| v.max(0.0));
            rows.push((
                idx,
                ResultRow {
                    method: method.label(),
                    graph: config.graph.kind().into(),
                    n: config.graph.n(),
                    d: config.graph.degree(),
                    scenario: scenario.clone(),
                    m,
                    rep,
                    seed,
                    kl_total,
                    tv_upper: kl_total.map(gbnlearn::kl::pinsker_tv_bound),
                    fit_wall_ms: config.record_timing.then_some(eval.wall_ms),
                    degenerate: kl_total.is_none(),
                },
            ));
        }
    }
    Ok(rows)
}

/// Runs every (repetition, sample size, method) cell.
///
/// Rows come back ordered by method (in config order), then `m`, then repetition,
/// independent of thread scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let registry = EstimatorRegistry::with_builtins();
    let per_rep: Vec<_> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| run_rep(config, &registry, rep))
        .collect::<Result<_>>()?;
    let mut rows: Vec<_> = per_rep.into_iter().flatten().collect();
    rows.sort_by_key(|(idx, r)| (*idx, r.m, r.rep));
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}
