use crate::error::{BenchError, Result};
use crate::harness::ResultRow;

/// Statistics of one (method, m) cell over its non-degenerate rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub m: usize,
    /// `None` when every row of the cell was degenerate.
    pub stats: Option<CellStats>,
    pub degenerate_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub mean_kl: f64,
    pub median_kl: f64,
    pub q25_kl: f64,
    pub q75_kl: f64,
}

impl CellStats {
    pub fn iqr_kl(&self) -> f64 {
        self.q75_kl - self.q25_kl
    }
}

/// Linear-interpolation quantile of sorted data (`(len-1)·q` positions).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn cell_stats(values: &[f64]) -> Option<CellStats> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(CellStats {
        mean_kl: sorted.iter().sum::<f64>() / sorted.len() as f64,
        median_kl: quantile_sorted(&sorted, 0.5),
        q25_kl: quantile_sorted(&sorted, 0.25),
        q75_kl: quantile_sorted(&sorted, 0.75),
    })
}

/// Groups rows by (method, m), keeping methods in order of first appearance and `m` ascending.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut out = Vec::new();
    for method in methods {
        let mut sizes: Vec<usize> = rows.iter().filter(|r| r.method == method).map(|r| r.m).collect();
        sizes.sort_unstable();
        sizes.dedup();
        for m in sizes {
            let cell: Vec<_> = rows.iter().filter(|r| r.method == method && r.m == m).collect();
            let values: Vec<f64> = cell
                .iter()
                .filter(|r| !r.degenerate)
                .filter_map(|r| r.kl_total)
                .collect();
            out.push(SummaryRow {
                method: method.to_string(),
                m,
                stats: cell_stats(&values),
                degenerate_count: cell.len() - values.len(),
            });
        }
    }
    Ok(out)
}
