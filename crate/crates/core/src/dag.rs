//! Directed acyclic graphs with a fixed node indexing.
//!
//! A [`Dag`] is validated once at construction and immutable afterwards. Parent
//! lists are kept sorted ascending; every coefficient vector in the crate is
//! aligned with that order.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    n: usize,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    order: Vec<usize>,
    labels: Option<Vec<String>>,
}

impl Dag {
    /// Validates `(parent, child)` pairs and builds the graph.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(from, to) in edges {
            for index in [from, to] {
                if index >= n {
                    return Err(Error::InvalidIndex { index, n });
                }
            }
            if from == to {
                return Err(Error::SelfLoop(from));
            }
            parents[to].push(from);
            children[from].push(to);
        }
        for (child, ps) in parents.iter_mut().enumerate() {
            ps.sort_unstable();
            if let Some(w) = ps.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateEdge(w[0], child));
            }
        }
        for cs in &mut children {
            cs.sort_unstable();
        }
        let order = kahn_order(&parents, &children).ok_or(Error::CycleDetected)?;
        Ok(Self {
            n,
            parents,
            children,
            order,
            labels: None,
        })
    }

    /// Graph on `n` nodes with no edges.
    pub fn empty(n: usize) -> Self {
        Self::new(n, &[]).expect("edgeless graph is always valid")
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.parents[node].len()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Largest in-degree `d`.
    pub fn max_in_degree(&self) -> usize {
        self.parents.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Mean in-degree `d_avg`.
    pub fn avg_in_degree(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.edge_count() as f64 / self.n as f64
    }

    /// All edges as `(parent, child)`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(child, ps)| ps.iter().map(move |&p| (p, child)))
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn has_edge(&self, parent: usize, child: usize) -> bool {
        self.parents
            .get(child)
            .is_some_and(|ps| ps.binary_search(&parent).is_ok())
    }

    /// Topological order; ties are broken by ascending node index.
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// True iff the undirected skeleton is a forest.
    pub fn is_polytree(&self) -> bool {
        if self.edge_count() + 1 > self.n.max(1) {
            return false;
        }
        let mut uf = UnionFind::new(self.n);
        self.edges().into_iter().all(|(a, b)| uf.union(a, b))
    }

    /// True if every edge of `self` is also an edge of `other`.
    pub fn is_subgraph_of(&self, other: &Dag) -> bool {
        self.n == other.n && self.edges().iter().all(|&(p, c)| other.has_edge(p, c))
    }

    /// A copy with `k` uniformly chosen edges deleted.
    pub fn remove_random_edges<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Dag> {
        let edges = self.edges();
        if k > edges.len() {
            return Err(Error::NotEnoughEdges {
                requested: k,
                available: edges.len(),
            });
        }
        let mut drop = vec![false; edges.len()];
        for i in rand::seq::index::sample(rng, edges.len(), k) {
            drop[i] = true;
        }
        let kept: Vec<_> = edges
            .into_iter()
            .zip(drop)
            .filter_map(|(e, d)| (!d).then_some(e))
            .collect();
        let mut dag = Dag::new(self.n, &kept)?;
        dag.labels = self.labels.clone();
        Ok(dag)
    }

    /// Line format: `n`, then one `parent child` pair per line in sorted order.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (p, c) in self.edges() {
            let _ = writeln!(out, "{p} {c}");
        }
        out
    }

    /// Parses the format written by [`Dag::to_text`]. Blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Dag> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing node count".into(),
        })?;
        let n: usize = header.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("expected node count, got `{header}`"),
        })?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let mut it = l.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(p)), Some(Ok(c)), None) => edges.push((p, c)),
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected `parent child`, got `{l}`"),
                    })
                }
            }
        }
        Dag::new(n, &edges)
    }
}

fn kahn_order(parents: &[Vec<usize>], children: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut remaining: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<usize>> = remaining
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(i, _)| Reverse(i))
        .collect();
    let mut order = Vec::with_capacity(parents.len());
    while let Some(Reverse(node)) = ready.pop() {
        order.push(node);
        for &c in &children[node] {
            remaining[c] -= 1;
            if remaining[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    (order.len() == parents.len()).then_some(order)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Uniform random labeled tree decoded from a Prüfer sequence, rooted at node 0
/// with every edge pointing away from the root (in-degree at most one).
pub fn random_tree_dag<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Dag> {
    if n < 2 {
        return Err(Error::InvalidSize(n));
    }
    let prufer: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut adjacency = vec![Vec::new(); n];
    for (a, b) in prufer_edges(&prufer, n) {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for nbrs in &mut adjacency {
        nbrs.sort_unstable();
    }

    let mut edges = Vec::with_capacity(n - 1);
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                edges.push((u, v));
                queue.push_back(v);
            }
        }
    }
    Dag::new(n, &edges)
}

fn prufer_edges(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut leaves: BTreeSet<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = leaves.pop_first().expect("a Prüfer sequence always leaves a leaf");
        edges.push((leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.insert(s);
        }
    }
    let last: Vec<_> = leaves.into_iter().collect();
    edges.push((last[0], last[1]));
    edges
}

/// Erdős–Rényi graph where each unordered pair appears with probability
/// `expected_degree / n`, oriented from the lower index to the higher.
pub fn random_er_dag<R: Rng + ?Sized>(n: usize, expected_degree: f64, rng: &mut R) -> Result<Dag> {
    if n == 0 {
        return Err(Error::InvalidSize(n));
    }
    if !(expected_degree > 0.0 && expected_degree <= n as f64) {
        return Err(Error::InvalidParameter(format!(
            "expected degree {expected_degree} must lie in (0, {n}]"
        )));
    }
    let p = expected_degree / n as f64;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Dag::new(n, &edges)
}
