use std::path::Path;
use std::process::{Command, Output};

use gbnlearn_bench::config::presets;
use gbnlearn_bench::ExperimentConfig;

fn gbnlearn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbnlearn"))
        .args(args)
        .env_remove("GBNLEARN_OUT_DIR")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let cfg = ExperimentConfig {
        sample_sizes: vec![200, 400],
        repetitions: 2,
        ..presets::agnostic_tree()
    };
    let file = dir.join("config.json");
    std::fs::write(&file, cfg.to_json()).unwrap();
    file
}

#[test]
fn generate_fit_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = gbnlearn(&[
        "generate",
        "--graph",
        "er",
        "--n",
        "8",
        "--d",
        "2",
        "--m",
        "2000",
        "--seed",
        "4",
        "--out-dir",
        path(d),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["dag.txt", "model.txt", "samples.csv"] {
        assert!(d.join(f).exists(), "{f}");
    }

    let fitted = d.join("fitted.txt");
    let out = gbnlearn(&[
        "fit",
        "--dag",
        path(&d.join("dag.txt")),
        "--data",
        path(&d.join("samples.csv")),
        "--method",
        "batch_avg",
        "--batch-extra",
        "10",
        "--variance",
        "empirical",
        "--out",
        path(&fitted),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let model = d.join("model.txt");
    let out = gbnlearn(&["eval", path(&model), path(&model)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("kl_total 0.0000000000000000e0\n"), "{text}");

    let out = gbnlearn(&["eval", path(&model), path(&fitted), "--eps", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let kl: f64 = text
        .lines()
        .next()
        .unwrap()
        .strip_prefix("kl_total ")
        .unwrap()
        .parse()
        .unwrap();
    assert!(kl > 0.0 && kl < 0.1, "{kl}");
    assert!(text.contains("coeff_ok="));
}

#[test]
fn eval_across_structures_uses_covariances() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("chain.txt");
    let empty = dir.path().join("empty.txt");
    std::fs::write(&chain, "nodes 2\n0 1.0\n1 1.0 0:1.0\n").unwrap();
    std::fs::write(&empty, "nodes 2\n0 1.0\n1 2.0\n").unwrap();
    let out = gbnlearn(&["eval", path(&chain), path(&empty)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    // KL(N(0,[[1,1],[1,2]]) || N(0,diag(1,2))) = ½(tr − 2 + ln 2 − ln 1) = ½ ln 2
    let kl: f64 = text
        .lines()
        .next()
        .unwrap()
        .strip_prefix("kl_total ")
        .unwrap()
        .parse()
        .unwrap();
    assert!((kl - 0.5 * 2f64.ln()).abs() < 1e-14, "{kl}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        gbnlearn(&["bench", "--config", path(&d.join("missing.json"))])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(gbnlearn(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gbnlearn(&["fit", "--dag", "x"]).status.code(), Some(1));
    assert_eq!(gbnlearn(&["--help"]).status.code(), Some(0));
    assert_eq!(gbnlearn(&["--version"]).status.code(), Some(0));

    let bad = d.join("bad.json");
    std::fs::write(&bad, r#"{"graph": {"type": "tree", "n": 5}, "surprise": true}"#).unwrap();
    let out = gbnlearn(&["bench", "--config", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("surprise"));

    let garbage = d.join("garbage.txt");
    std::fs::write(&garbage, "nodes two\n").unwrap();
    assert_eq!(
        gbnlearn(&["eval", path(&garbage), path(&garbage)]).status.code(),
        Some(2)
    );
}

#[test]
fn collinear_parents_are_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("dag.txt"), "3\n0 2\n1 2\n").unwrap();
    let mut csv = String::from("x0,x1,x2\n");
    for r in 0..40 {
        let v = (r as f64 * 0.37).sin();
        csv.push_str(&format!(
            "{v:?},{:?},{:?}\n",
            2.0 * v,
            3.0 * v + 0.01 * (r as f64).cos()
        ));
    }
    std::fs::write(d.join("x.csv"), csv).unwrap();
    let fit = |method: &str| {
        gbnlearn(&[
            "fit",
            "--dag",
            path(&d.join("dag.txt")),
            "--data",
            path(&d.join("x.csv")),
            "--method",
            method,
            "--variance",
            "empirical",
        ])
    };
    let out = fit("cauchy_est");
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Cholesky"));
    assert_eq!(fit("least_squares").status.code(), Some(3));
    assert_eq!(fit("no_such_method").status.code(), Some(2));
}

#[test]
fn bench_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = gbnlearn(&["bench", "--config", path(&config), "--out-dir", path(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert!(results.starts_with("method,graph,n,d,scenario,m,rep,seed,kl_total,tv_upper,fit_wall_ms,degenerate\n"));
    assert_eq!(results.lines().count(), 1 + 5 * 2 * 2);
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("method,m,mean_kl,median_kl,iqr_kl,degenerate_count\n"));
    for curve in [
        "least_squares",
        "batch_avg+20",
        "batch_med+20",
        "cauchy_est_tree",
        "cauchy_est",
    ] {
        let text = std::fs::read_to_string(out_dir.join("curves").join(format!("{curve}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 3, "{curve}");
    }
}

#[test]
fn env_var_sets_output_dir_and_seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let env_dir = dir.path().join("from_env");
    let run = |extra: &[&str], out: &Path| {
        let mut args = vec!["bench", "--config", path(&config)];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_gbnlearn"))
            .args(&args)
            .env("GBNLEARN_OUT_DIR", out)
            .output()
            .unwrap()
    };
    assert_eq!(run(&[], &env_dir).status.code(), Some(0));
    let base = std::fs::read(env_dir.join("results.csv")).unwrap();

    // An explicit flag wins over the environment.
    let flag_dir = dir.path().join("from_flag");
    assert_eq!(
        run(&["--out-dir", path(&flag_dir)], &env_dir.join("unused"))
            .status
            .code(),
        Some(0)
    );
    assert!(!env_dir.join("unused").exists());
    assert_eq!(std::fs::read(flag_dir.join("results.csv")).unwrap(), base);

    let seeded = dir.path().join("seeded");
    assert_eq!(run(&["--seed", "99"], &seeded).status.code(), Some(0));
    assert_ne!(std::fs::read(seeded.join("results.csv")).unwrap(), base);
}

#[test]
fn presets_run_by_name() {
    let out = gbnlearn(&["bench", "--preset", "nope"]);
    assert_eq!(out.status.code(), Some(1));
    let out = gbnlearn(&["methods"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("cauchy_est_tree") && text.contains("mad"));
}
