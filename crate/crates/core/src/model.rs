//! Linear Gaussian structural equation models on a fixed DAG.
//!
//! Each node follows `X_i = A_i · X_{π_i} + η_i` with `η_i ~ N(0, σ_i²)`.

use std::fmt::Write as _;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dag::Dag;
use crate::error::{Error, Result};

/// Noise variance assignment used when drawing a random model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VarianceSpec {
    Unit,
    UniformRange {
        lo: f64,
        hi: f64,
    },
    /// Listed nodes get `variance` (typically 1e-20); all others get 1.
    IllConditioned {
        nodes: Vec<usize>,
        #[serde(default = "default_tiny_variance")]
        variance: f64,
    },
}

fn default_tiny_variance() -> f64 {
    1e-20
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBayesNet {
    dag: Dag,
    coeffs: Vec<Vec<f64>>,
    variances: Vec<f64>,
}

impl GaussianBayesNet {
    pub fn new(dag: Dag, coeffs: Vec<Vec<f64>>, variances: Vec<f64>) -> Result<Self> {
        let n = dag.n();
        for (len, what) in [(coeffs.len(), n), (variances.len(), n)] {
            if len != what {
                return Err(Error::DimensionMismatch {
                    expected: what,
                    actual: len,
                });
            }
        }
        for (node, a) in coeffs.iter().enumerate() {
            if a.len() != dag.in_degree(node) {
                return Err(Error::DimensionMismatch {
                    expected: dag.in_degree(node),
                    actual: a.len(),
                });
            }
            if let Some(&bad) = a.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "coefficient {bad} of node {node} is not finite"
                )));
            }
        }
        for (node, &value) in variances.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositiveVariance { node, value });
            }
        }
        Ok(Self { dag, coeffs, variances })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn n(&self) -> usize {
        self.dag.n()
    }

    /// Coefficients of `node`, aligned with `dag().parents(node)`.
    pub fn coeffs(&self, node: usize) -> &[f64] {
        &self.coeffs[node]
    }

    pub fn variance(&self, node: usize) -> f64 {
        self.variances[node]
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// `n × n` matrix `B` with `B[j, i] = a_{i←j}`.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            for (&j, &a) in self.dag.parents(i).iter().zip(&self.coeffs[i]) {
                b[(j, i)] = a;
            }
        }
        b
    }

    /// Exact model covariance, built node by node in topological order.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut sigma = DMatrix::zeros(n, n);
        let order = self.dag.topological_order();
        for (pos, &i) in order.iter().enumerate() {
            let parents = self.dag.parents(i);
            let a = &self.coeffs[i];
            for &j in &order[..pos] {
                let c: f64 = parents.iter().zip(a).map(|(&k, &ak)| ak * sigma[(k, j)]).sum();
                sigma[(i, j)] = c;
                sigma[(j, i)] = c;
            }
            let own: f64 = parents.iter().zip(a).map(|(&k, &ak)| ak * sigma[(k, i)]).sum();
            sigma[(i, i)] = own + self.variances[i];
        }
        sigma
    }

    /// Covariance of the parents of `node` (the `M_i` of the per-node KL term).
    pub fn parent_covariance(&self, node: usize) -> Result<DMatrix<f64>> {
        let sigma = self.covariance();
        self.parent_block(&sigma, node)
    }

    pub(crate) fn parent_block(&self, sigma: &DMatrix<f64>, node: usize) -> Result<DMatrix<f64>> {
        let parents = self.dag.parents(node);
        if parents.is_empty() {
            return Err(Error::NoParents(node));
        }
        Ok(sigma.select_rows(parents).select_columns(parents))
    }

    /// Draws `m` i.i.d. joint samples.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> SampleMatrix {
        self.sample_with(m, rng, |_, _| None)
    }

    /// Forward sampling where `noise_override(row, node)` may replace the structural noise
    /// of individual cells. The Gaussian draw for every cell is consumed regardless, so
    /// cells the override leaves alone are identical to plain [`sample`](Self::sample).
    pub fn sample_with<R, F>(&self, m: usize, rng: &mut R, mut noise_override: F) -> SampleMatrix
    where
        R: Rng + ?Sized,
        F: FnMut(usize, usize) -> Option<f64>,
    {
        let n = self.n();
        let stddev: Vec<f64> = self.variances.iter().map(|v| v.sqrt()).collect();
        let mut values = DMatrix::zeros(m, n);
        let mut row = vec![0.0; n];
        for r in 0..m {
            for &i in self.dag.topological_order() {
                let z: f64 = rng.sample(StandardNormal);
                let eta = noise_override(r, i).unwrap_or(stddev[i] * z);
                let mean: f64 = self
                    .dag
                    .parents(i)
                    .iter()
                    .zip(&self.coeffs[i])
                    .map(|(&j, &a)| a * row[j])
                    .sum();
                row[i] = mean + eta;
            }
            for (i, &v) in row.iter().enumerate() {
                values[(r, i)] = v;
            }
        }
        SampleMatrix { values }
    }

    /// Line format:
    ///
    /// ```text
    /// nodes 3
    /// 0 1.0
    /// 1 1.0 0:2.0
    /// 2 0.5 0:1.5 1:-0.25
    /// ```
    ///
    /// Each node line is `index variance parent:coefficient...`. Floats use the shortest
    /// representation that round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut out = format!("nodes {}\n", self.n());
        for i in 0..self.n() {
            let _ = write!(out, "{} {:?}", i, self.variances[i]);
            for (&j, &a) in self.dag.parents(i).iter().zip(&self.coeffs[i]) {
                let _ = write!(out, " {j}:{a:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing `nodes` header".into()))?;
        let n: usize = header
            .strip_prefix("nodes")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err(line, format!("expected `nodes <n>`, got `{header}`")))?;

        let mut edges = Vec::new();
        let mut terms: Vec<Option<(f64, Vec<(usize, f64)>)>> = vec![None; n];
        for (line, l) in lines {
            let mut fields = l.split_whitespace();
            let node: usize = fields
                .next()
                .and_then(|s| s.parse().ok())
                .filter(|&i| i < n)
                .ok_or_else(|| parse_err(line, format!("bad node index in `{l}`")))?;
            let variance: f64 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err(line, format!("bad variance in `{l}`")))?;
            let mut pairs = Vec::new();
            for f in fields {
                let (p, a) = f
                    .split_once(':')
                    .and_then(|(p, a)| Some((p.parse::<usize>().ok()?, a.parse::<f64>().ok()?)))
                    .ok_or_else(|| parse_err(line, format!("bad `parent:coefficient` term `{f}`")))?;
                edges.push((p, node));
                pairs.push((p, a));
            }
            if terms[node].replace((variance, pairs)).is_some() {
                return Err(parse_err(line, format!("node {node} listed twice")));
            }
        }
        let dag = Dag::new(n, &edges)?;
        let mut coeffs = Vec::with_capacity(n);
        let mut variances = Vec::with_capacity(n);
        for (i, t) in terms.into_iter().enumerate() {
            let (v, mut pairs) = t.ok_or_else(|| parse_err(0, format!("node {i} missing")))?;
            pairs.sort_by_key(|&(p, _)| p);
            coeffs.push(pairs.into_iter().map(|(_, a)| a).collect());
            variances.push(v);
        }
        Self::new(dag, coeffs, variances)
    }
}

/// Draws coefficients with uniform random sign and magnitude in `[lo, hi)`.
pub fn random_gbn<R: Rng + ?Sized>(
    dag: &Dag,
    weight_range: (f64, f64),
    variances: &VarianceSpec,
    rng: &mut R,
) -> Result<GaussianBayesNet> {
    let (lo, hi) = weight_range;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidRange { lo, hi });
    }
    let n = dag.n();
    let coeffs = (0..n)
        .map(|i| {
            (0..dag.in_degree(i))
                .map(|_| {
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    sign * rng.random_range(lo..hi)
                })
                .collect()
        })
        .collect();
    let vars = match variances {
        VarianceSpec::Unit => vec![1.0; n],
        VarianceSpec::UniformRange { lo, hi } => {
            if !(*lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::InvalidRange { lo: *lo, hi: *hi });
            }
            (0..n).map(|_| rng.random_range(*lo..*hi)).collect()
        }
        VarianceSpec::IllConditioned { nodes, variance } => {
            let mut v = vec![1.0; n];
            for &i in nodes {
                if i >= n {
                    return Err(Error::InvalidIndex { index: i, n });
                }
                v[i] = *variance;
            }
            v
        }
    };
    GaussianBayesNet::new(dag.clone(), coeffs, vars)
}

/// `m × n` observations, one joint draw per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    values: DMatrix<f64>,
}

impl SampleMatrix {
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("sample matrix contains NaN".into()));
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bad.len(),
            });
        }
        Self::from_matrix(DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]))
    }

    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[(row, col)]
    }

    pub fn column(&self, col: usize) -> DVector<f64> {
        self.values.column(col).into_owned()
    }

    /// Copy of a contiguous block of rows.
    pub fn rows(&self, range: Range<usize>) -> SampleMatrix {
        SampleMatrix {
            values: self.values.rows(range.start, range.len()).into_owned(),
        }
    }

    /// The first `m` rows.
    pub fn prefix(&self, m: usize) -> SampleMatrix {
        self.rows(0..m.min(self.m()))
    }

    /// Columns `cols` as an `m × cols.len()` matrix.
    pub fn select_columns(&self, cols: &[usize]) -> DMatrix<f64> {
        self.values.select_columns(cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain(a: f64) -> GaussianBayesNet {
        GaussianBayesNet::new(Dag::new(2, &[(0, 1)]).unwrap(), vec![vec![], vec![a]], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn construction_validates() {
        let dag = Dag::new(2, &[(0, 1)]).unwrap();
        assert!(matches!(
            GaussianBayesNet::new(dag.clone(), vec![vec![], vec![]], vec![1.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            GaussianBayesNet::new(dag, vec![vec![], vec![1.0]], vec![1.0, 0.0]),
            Err(Error::NonPositiveVariance { node: 1, value: 0.0 })
        );
    }

    #[test]
    fn random_weights_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dag = crate::dag::random_er_dag(30, 4.0, &mut rng).unwrap();
        let gbn = random_gbn(&dag, (1.0, 2.0), &VarianceSpec::Unit, &mut rng).unwrap();
        let mut signs = [0, 0];
        for i in 0..30 {
            for &a in gbn.coeffs(i) {
                assert!((1.0..2.0).contains(&a.abs()));
                signs[(a > 0.0) as usize] += 1;
            }
            assert_eq!(gbn.variance(i), 1.0);
        }
        assert!(signs[0] > 0 && signs[1] > 0);
        assert!(random_gbn(&dag, (2.0, 1.0), &VarianceSpec::Unit, &mut rng).is_err());
        assert!(random_gbn(&dag, (0.0, 1.0), &VarianceSpec::Unit, &mut rng).is_err());
    }

    #[test]
    fn ill_conditioned_variances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dag = crate::dag::random_tree_dag(100, &mut rng).unwrap();
        let spec = VarianceSpec::IllConditioned {
            nodes: vec![3, 7, 9],
            variance: 1e-20,
        };
        let gbn = random_gbn(&dag, (1.0, 2.0), &spec, &mut rng).unwrap();
        assert_eq!(gbn.variances().iter().filter(|&&v| v == 1e-20).count(), 3);
        assert_eq!(gbn.variances().iter().filter(|&&v| v == 1.0).count(), 97);
    }

    #[test]
    fn single_node_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gbn = random_gbn(&Dag::empty(1), (1.0, 2.0), &VarianceSpec::Unit, &mut rng).unwrap();
        assert!(gbn.coeffs(0).is_empty());
        assert_eq!(gbn.variance(0), 1.0);
    }

    #[test]
    fn chain_covariance_by_hand() {
        let sigma = chain(2.0).covariance();
        assert_eq!(sigma, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 5.0]));
    }

    #[test]
    fn independent_covariance_is_diagonal() {
        let gbn = GaussianBayesNet::new(Dag::empty(3), vec![vec![]; 3], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            gbn.covariance(),
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]))
        );
    }

    #[test]
    fn covariance_matches_matrix_inverse_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let dag = crate::dag::random_er_dag(8, 3.0, &mut rng).unwrap();
            let spec = VarianceSpec::UniformRange { lo: 0.5, hi: 2.0 };
            let gbn = random_gbn(&dag, (0.5, 1.5), &spec, &mut rng).unwrap();
            let b = gbn.weight_matrix();
            let inv = (DMatrix::identity(8, 8) - b.transpose()).try_inverse().unwrap();
            let d = DMatrix::from_diagonal(&DVector::from_column_slice(gbn.variances()));
            let expected = &inv * d * inv.transpose();
            let got = gbn.covariance();
            assert!((got - &expected).abs().max() < 1e-9 * expected.abs().max());
            assert!(gbn.covariance().cholesky().is_some());
        }
    }

    #[test]
    fn parent_covariance_blocks() {
        // 0 -> 1 (a = 2), both feed node 2
        let dag = Dag::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let gbn = GaussianBayesNet::new(dag, vec![vec![], vec![2.0], vec![1.0, 1.0]], vec![1.0; 3]).unwrap();
        assert_eq!(
            gbn.parent_covariance(2).unwrap(),
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 5.0])
        );
        assert_eq!(gbn.parent_covariance(1).unwrap(), DMatrix::from_element(1, 1, 1.0));
        assert_eq!(gbn.parent_covariance(0), Err(Error::NoParents(0)));

        let star = Dag::new(4, &[(0, 3), (1, 3), (2, 3)]).unwrap();
        let gbn = GaussianBayesNet::new(
            star,
            vec![vec![], vec![], vec![], vec![1.0, 1.0, 1.0]],
            vec![1.0, 2.0, 3.0, 1.0],
        )
        .unwrap();
        let m = gbn.parent_covariance(3).unwrap();
        assert_eq!(m, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0])));
    }

    #[test]
    fn near_degenerate_noise() {
        let gbn = GaussianBayesNet::new(Dag::empty(1), vec![vec![]], vec![1e-30]).unwrap();
        let x = gbn.sample(100, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(x.matrix().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn sampling_is_deterministic() {
        let gbn = chain(2.0);
        let a = gbn.sample(50, &mut ChaCha8Rng::seed_from_u64(4));
        let b = gbn.sample(50, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
    }

    #[test]
    fn chain_child_variance() {
        // Var(X_1) = a^2 + 1 = 5
        let x = chain(2.0).sample(1_000_000, &mut ChaCha8Rng::seed_from_u64(11));
        let col = x.column(1);
        let var = col.iter().map(|v| v * v).sum::<f64>() / col.len() as f64;
        assert!((var - 5.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn text_round_trip() {
        let dag = Dag::new(3, &[(0, 2), (1, 2)]).unwrap();
        let gbn = GaussianBayesNet::new(dag, vec![vec![], vec![], vec![1.5, -0.1]], vec![1.0, 0.3, 1e-20]).unwrap();
        let text = gbn.to_text();
        assert_eq!(text, "nodes 3\n0 1.0\n1 0.3\n2 1e-20 0:1.5 1:-0.1\n");
        assert_eq!(GaussianBayesNet::from_text(&text).unwrap(), gbn);
        assert!(GaussianBayesNet::from_text("nodes 2\n0 1.0\n").is_err());
        assert!(GaussianBayesNet::from_text("nodes 1\n0 -1.0\n").is_err());
    }
}
