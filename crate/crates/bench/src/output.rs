//! CSV emission for results, summaries and per-method curves.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{BenchError, Result};
use crate::harness::ResultRow;
use crate::summary::SummaryRow;

pub const RESULTS_HEADER: [&str; 12] = [
    "method",
    "graph",
    "n",
    "d",
    "scenario",
    "m",
    "rep",
    "seed",
    "kl_total",
    "tv_upper",
    "fit_wall_ms",
    "degenerate",
];

pub const SUMMARY_HEADER: [&str; 6] = ["method", "m", "mean_kl", "median_kl", "iqr_kl", "degenerate_count"];

pub const CURVE_HEADER: [&str; 5] = ["m", "median_kl", "q25_kl", "q75_kl", "degenerate_count"];

/// Seventeen significant digits; round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn write_records<W: Write>(w: W, header: &[&str], records: impl Iterator<Item = Vec<String>>) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header)?;
    for rec in records {
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_results<W: Write>(w: W, rows: &[ResultRow]) -> csv::Result<()> {
    write_records(
        w,
        &RESULTS_HEADER,
        rows.iter().map(|r| {
            vec![
                r.method.clone(),
                r.graph.clone(),
                r.n.to_string(),
                fmt_f64(r.d),
                r.scenario.clone(),
                r.m.to_string(),
                r.rep.to_string(),
                r.seed.to_string(),
                fmt_opt(r.kl_total),
                fmt_opt(r.tv_upper),
                fmt_opt(r.fit_wall_ms),
                r.degenerate.to_string(),
            ]
        }),
    )
}

pub fn write_summary<W: Write>(w: W, rows: &[SummaryRow]) -> csv::Result<()> {
    write_records(
        w,
        &SUMMARY_HEADER,
        rows.iter().map(|s| {
            vec![
                s.method.clone(),
                s.m.to_string(),
                fmt_opt(s.stats.map(|c| c.mean_kl)),
                fmt_opt(s.stats.map(|c| c.median_kl)),
                fmt_opt(s.stats.map(|c| c.iqr_kl())),
                s.degenerate_count.to_string(),
            ]
        }),
    )
}

pub fn write_curve<W: Write>(w: W, method: &str, rows: &[SummaryRow]) -> csv::Result<()> {
    write_records(
        w,
        &CURVE_HEADER,
        rows.iter().filter(|s| s.method == method).map(|s| {
            vec![
                s.m.to_string(),
                fmt_opt(s.stats.map(|c| c.median_kl)),
                fmt_opt(s.stats.map(|c| c.q25_kl)),
                fmt_opt(s.stats.map(|c| c.q75_kl)),
                s.degenerate_count.to_string(),
            ]
        }),
    )
}

/// File stem for a method label, keeping `[A-Za-z0-9_+.-]`.
pub fn curve_file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_+.-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(BenchError::io(path))
}

/// Writes `results.csv`, `summary.csv` and `curves/<method>.csv` under `dir`.
pub fn write_all(dir: &Path, rows: &[ResultRow], summary: &[SummaryRow]) -> Result<Vec<PathBuf>> {
    let curves = dir.join("curves");
    fs::create_dir_all(&curves).map_err(BenchError::io(&curves))?;
    let mut written = Vec::new();

    let path = dir.join("results.csv");
    write_results(create(&path)?, rows).map_err(BenchError::csv(&path))?;
    written.push(path);

    let path = dir.join("summary.csv");
    write_summary(create(&path)?, summary).map_err(BenchError::csv(&path))?;
    written.push(path);

    let mut methods: Vec<&str> = Vec::new();
    for s in summary {
        if !methods.contains(&s.method.as_str()) {
            methods.push(&s.method);
        }
    }
    for method in methods {
        let path = curves.join(format!("{}.csv", curve_file_stem(method)));
        write_curve(create(&path)?, method, summary).map_err(BenchError::csv(&path))?;
        written.push(path);
    }
    Ok(written)
}
