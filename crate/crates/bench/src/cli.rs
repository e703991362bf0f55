use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use gbnlearn::estimate::EstimatorRegistry;
use gbnlearn::kl::{kl_divergence_with_budget, EvalReport};
use gbnlearn::{fit, gaussian_kl, kl_divergence, random_er_dag, random_gbn, random_tree_dag, Dag, FitConfig};
use gbnlearn::{GaussianBayesNet, VarianceSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{presets, ExperimentConfig};
use crate::error::BenchError;
use crate::harness::run_experiment;
use crate::io::{read_samples, write_samples};
use crate::output::{fmt_f64, write_all};
use crate::summary::summarize;

/// Overrides the `bench` output directory when `--out-dir` is absent.
pub const OUT_DIR_ENV: &str = "GBNLEARN_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "gbnlearn",
    version,
    about = "Parameter learning for Gaussian Bayesian networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GraphKind {
    Tree,
    Er,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a random DAG, a model on it and samples; writes dag.txt, model.txt, samples.csv.
    Generate {
        #[arg(long, value_enum, default_value = "tree")]
        graph: GraphKind,
        #[arg(long)]
        n: usize,
        /// Expected in-degree for ER graphs.
        #[arg(long, default_value_t = 5.0)]
        d: f64,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        weight_lo: f64,
        #[arg(long, default_value_t = 2.0)]
        weight_hi: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Fit a model on a known DAG; prints the model unless --out is given.
    Fit {
        #[arg(long)]
        dag: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long)]
        batch_extra: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        split: f64,
        /// Variance estimator: empirical or mad.
        #[arg(long)]
        variance: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the divergence of an estimated model from a true one.
    Eval {
        truth: PathBuf,
        estimate: PathBuf,
        /// Also report the per-node coefficient and variance checks at this tolerance.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run an experiment sweep and write results, summary and curve CSVs.
    Bench {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Built-in config: clean-er, contaminated-tree or agnostic.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Overrides the config's base_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List registered estimators.
    Methods,
}

struct Failure {
    code: i32,
    msg: String,
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        Failure {
            code: EXIT_DATA,
            msg: e.to_string(),
        }
    }
}

fn data_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_DATA,
        msg: format!("{}: {e}", path.display()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| data_err(path, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| data_err(path, e))
}

fn read_model(path: &Path) -> Result<GaussianBayesNet, Failure> {
    GaussianBayesNet::from_text(&read(path)?).map_err(|e| data_err(path, e))
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.msg);
            f.code
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Generate {
            graph,
            n,
            d,
            m,
            weight_lo,
            weight_hi,
            seed,
            out_dir,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let invalid = |e: gbnlearn::Error| Failure {
                code: EXIT_DATA,
                msg: e.to_string(),
            };
            let dag = match graph {
                GraphKind::Tree => random_tree_dag(n, &mut rng),
                GraphKind::Er => random_er_dag(n, d, &mut rng),
            }
            .map_err(invalid)?;
            let model = random_gbn(&dag, (weight_lo, weight_hi), &VarianceSpec::Unit, &mut rng).map_err(invalid)?;
            let data = model.sample(m, &mut rng);
            fs::create_dir_all(&out_dir).map_err(|e| data_err(&out_dir, e))?;
            write_file(&out_dir.join("dag.txt"), dag.to_text().as_bytes())?;
            write_file(&out_dir.join("model.txt"), model.to_text().as_bytes())?;
            let path = out_dir.join("samples.csv");
            let mut buf = Vec::new();
            write_samples(&mut buf, &data).map_err(|e| data_err(&path, e))?;
            write_file(&path, &buf)?;
            let _ = writeln!(out, "wrote {}", out_dir.display());
            Ok(())
        }
        Command::Fit {
            dag,
            data,
            method,
            batch_extra,
            split,
            variance,
            out: out_path,
        } => {
            let graph = Dag::from_text(&read(&dag)?).map_err(|e| data_err(&dag, e))?;
            let samples = fs::File::open(&data)
                .map_err(|e| data_err(&data, e))
                .and_then(|f| read_samples(f).map_err(|e| data_err(&data, e)))?;
            let cfg = FitConfig {
                method,
                batch_extra,
                split_fraction: split,
                variance_method: variance,
            };
            let fitted = fit(&graph, &samples, &cfg).map_err(|e| Failure {
                code: if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_DATA },
                msg: e.to_string(),
            })?;
            if fitted.is_degenerate() {
                let _ = writeln!(
                    err,
                    "warning: non-positive variance floored at nodes {:?}",
                    fitted.degenerate_nodes
                );
            }
            let text = fitted.model.to_text();
            match out_path {
                Some(path) => write_file(&path, text.as_bytes()),
                None => out.write_all(text.as_bytes()).map_err(|e| Failure {
                    code: EXIT_DATA,
                    msg: e.to_string(),
                }),
            }
        }
        Command::Eval { truth, estimate, eps } => {
            let p = read_model(&truth)?;
            let q = read_model(&estimate)?;
            let numerical = |e: gbnlearn::Error| Failure {
                code: if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_DATA },
                msg: e.to_string(),
            };
            if p.dag() == q.dag() {
                let report = match eps {
                    Some(eps) => kl_divergence_with_budget(&p, &q, eps),
                    None => kl_divergence(&p, &q),
                }
                .map_err(numerical)?;
                print_report(out, &report);
            } else {
                if p.n() != q.n() {
                    return Err(Failure {
                        code: EXIT_DATA,
                        msg: format!("models have {} and {} nodes", p.n(), q.n()),
                    });
                }
                let kl = gaussian_kl(&p.covariance(), &q.covariance()).map_err(numerical)?;
                let _ = writeln!(out, "kl_total {}", fmt_f64(kl));
                let _ = writeln!(out, "tv_upper {}", fmt_f64(gbnlearn::kl::pinsker_tv_bound(kl)));
            }
            Ok(())
        }
        Command::Bench {
            config,
            preset,
            out_dir,
            seed,
        } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => ExperimentConfig::load(&path)?,
                (None, Some(name)) => presets::by_name(&name).ok_or_else(|| Failure {
                    code: EXIT_USAGE,
                    msg: format!("unknown preset `{name}`"),
                })?,
                (None, None) => unreachable!("clap requires one of --config/--preset"),
            };
            if let Some(seed) = seed {
                cfg.base_seed = seed;
            }
            let dir = out_dir
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("bench-out"));
            let rows = run_experiment(&cfg)?;
            let summary = summarize(&rows)?;
            for path in write_all(&dir, &rows, &summary)? {
                let _ = writeln!(out, "wrote {}", path.display());
            }
            Ok(())
        }
        Command::Methods => {
            let registry = EstimatorRegistry::with_builtins();
            let _ = writeln!(
                out,
                "coefficient: {}",
                registry.coefficient_names().collect::<Vec<_>>().join(", ")
            );
            let _ = writeln!(
                out,
                "variance: {}",
                registry.variance_names().collect::<Vec<_>>().join(", ")
            );
            Ok(())
        }
    }
}

fn print_report(out: &mut dyn Write, report: &EvalReport) {
    let _ = writeln!(out, "kl_total {}", fmt_f64(report.kl_total));
    let _ = writeln!(out, "tv_upper {}", fmt_f64(report.tv_upper));
    for (i, d) in report.per_node_dcp.iter().enumerate() {
        let mut line = format!("node {i} {}", fmt_f64(*d));
        if let (Some(c1), Some(c2)) = (&report.condition1_satisfied, &report.condition2_satisfied) {
            line.push_str(&format!(" coeff_ok={} variance_ok={}", c1[i], c2[i]));
        }
        let _ = writeln!(out, "{line}");
    }
}
