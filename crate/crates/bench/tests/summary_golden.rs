//! Recomputes summary.csv from results.csv with an independent reader and compares.

use std::collections::BTreeMap;

use gbnlearn_bench::config::{presets, MethodSpec};
use gbnlearn_bench::output::write_all;
use gbnlearn_bench::{run_experiment, summarize, ExperimentConfig};

fn type7_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() as f64 - 1.0);
    let i = pos as usize;
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[i] * (1.0 - (pos - i as f64)) + sorted[i + 1] * (pos - i as f64)
}

#[test]
fn summary_matches_raw_rows() {
    let cfg = ExperimentConfig {
        methods: vec![
            MethodSpec::new("least_squares", "empirical"),
            MethodSpec::new("cauchy_est", "empirical"),
            MethodSpec::new("empirical_mle", "empirical"),
        ],
        graph: gbnlearn_bench::GraphSpec::Er { n: 30, d: 3.0 },
        // 20 rows cannot support the 30x30 covariance estimate, so some cells are degenerate.
        sample_sizes: vec![20, 300, 900],
        repetitions: 7,
        ..presets::clean_er()
    };
    let rows = run_experiment(&cfg).unwrap();
    let summary = summarize(&rows).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_all(dir.path(), &rows, &summary).unwrap();

    let raw = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut cells: BTreeMap<(String, usize), (Vec<f64>, usize)> = BTreeMap::new();
    for line in raw.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 12);
        let cell = cells.entry((f[0].to_string(), f[5].parse().unwrap())).or_default();
        if f[11] == "true" {
            assert_eq!(f[8], "");
            cell.1 += 1;
        } else {
            cell.0.push(f[8].parse().unwrap());
        }
    }
    assert!(cells.values().any(|c| c.1 > 0), "expected some degenerate rows");

    let written = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let mut lines = written.lines();
    assert_eq!(lines.next(), Some("method,m,mean_kl,median_kl,iqr_kl,degenerate_count"));
    let mut seen = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let (values, degenerate) = &cells[&(f[0].to_string(), f[1].parse().unwrap())];
        assert_eq!(f[5].parse::<usize>().unwrap(), *degenerate);
        if values.is_empty() {
            assert_eq!(&f[2..5], &["", "", ""]);
        } else {
            let mut v = values.clone();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let expect = [
                mean,
                type7_quantile(&v, 0.5),
                type7_quantile(&v, 0.75) - type7_quantile(&v, 0.25),
            ];
            for (got, want) in f[2..5].iter().zip(expect) {
                let got: f64 = got.parse().unwrap();
                assert!(
                    (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "{line}: {got} vs {want}"
                );
            }
        }
        seen += 1;
    }
    assert_eq!(seen, cells.len());
}

#[test]
fn larger_samples_help_least_squares_on_trees() {
    let cfg = ExperimentConfig {
        graph: gbnlearn_bench::GraphSpec::Tree { n: 50 },
        methods: vec![MethodSpec::new("least_squares", "empirical")],
        sample_sizes: vec![1000, 4000],
        ..presets::clean_er()
    };
    let summary = summarize(&run_experiment(&cfg).unwrap()).unwrap();
    let med: Vec<f64> = summary.iter().map(|s| s.stats.unwrap().median_kl).collect();
    assert!(med[1] < med[0], "{med:?}");
}
