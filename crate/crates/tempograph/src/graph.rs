//! Sparse graphs and the operators consumed by the graph convolutions:
//! symmetrically normalized adjacency, scaled Laplacian and forward/backward
//! random-walk transition matrices, plus a Watts-Strogatz generator for the
//! synthetic runtime benchmarks.

use rand::Rng;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use crate::autodiff::Tensor;
use crate::{Error, Result};

static GRAPH_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Directed weighted graph over a fixed node set, stored as an edge list.
/// Undirected graphs carry two directed entries per edge.
#[derive(Debug)]
pub struct Graph {
    id: u64,
    num_nodes: usize,
    edge_index: Vec<(usize, usize)>,
    edge_weight: Vec<f64>,
}

impl Graph {
    pub fn new(
        num_nodes: usize,
        edge_index: Vec<(usize, usize)>,
        edge_weight: Option<Vec<f64>>,
    ) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::InvalidGraph("node count must be positive".into()));
        }
        let edge_weight = edge_weight.unwrap_or_else(|| vec![1.0; edge_index.len()]);
        if edge_weight.len() != edge_index.len() {
            return Err(Error::InvalidGraph(format!(
                "{} edges but {} weights",
                edge_index.len(),
                edge_weight.len()
            )));
        }
        for &(s, t) in &edge_index {
            if s >= num_nodes || t >= num_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({s}, {t}) out of range for {num_nodes} nodes"
                )));
            }
        }
        for &w in &edge_weight {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidGraph(format!("invalid edge weight {w}")));
            }
        }
        Ok(Graph {
            id: GRAPH_COUNTER.fetch_add(1, Ordering::Relaxed),
            num_nodes,
            edge_index,
            edge_weight,
        })
    }

    /// Stable identity used as an operator-cache key.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edge_index.len()
    }

    pub fn edge_index(&self) -> &[(usize, usize)] {
        &self.edge_index
    }

    pub fn edge_weight(&self) -> &[f64] {
        &self.edge_weight
    }

    /// Weighted adjacency as a (row, col) -> weight map; parallel edges sum.
    fn weight_map(&self) -> HashMap<(usize, usize), f64> {
        let mut map = HashMap::with_capacity(self.edge_index.len());
        for (&(s, t), &w) in self.edge_index.iter().zip(&self.edge_weight) {
            *map.entry((s, t)).or_insert(0.0) += w;
        }
        map
    }
}

/// Kind tag of a precomputed sparse operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    SymNormAdjacency,
    ScaledLaplacian,
    RwOut,
    RwIn,
}

/// Precomputed sparse operator in coordinate format. Entries are
/// non-trainable: gradients flow through [`SparseOperator::apply`] to the
/// dense operand only.
#[derive(Debug)]
pub struct SparseOperator {
    kind: OperatorKind,
    num_nodes: usize,
    entries: Arc<Vec<(usize, usize, f64)>>,
    /// Same entries as `(col, row, value)` sorted by column, so the backward
    /// pass `O^T g` writes each output row once, sequentially, instead of
    /// scattering.
    entries_t: Arc<Vec<(usize, usize, f64)>>,
}

impl SparseOperator {
    pub fn identity(num_nodes: usize) -> Self {
        let entries: Vec<(usize, usize, f64)> = (0..num_nodes).map(|i| (i, i, 1.0)).collect();
        SparseOperator {
            kind: OperatorKind::SymNormAdjacency,
            num_nodes,
            entries: Arc::new(entries.clone()),
            entries_t: Arc::new(entries),
        }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Sparse-dense product `O * x`, recorded on the tape of `x`.
    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        if x.rows() != self.num_nodes {
            return Err(Error::ShapeMismatch {
                op: "spmm",
                lhs: format!("{0}x{0} operator", self.num_nodes),
                rhs: format!("{}x{}", x.rows(), x.cols()),
            });
        }
        let d = x.cols();
        let n = self.num_nodes;
        let mut out = crate::autodiff::pool::take_zeroed(n * d);
        for &(r, c, v) in self.entries.iter() {
            let xc = &x.data()[c * d..(c + 1) * d];
            let or = &mut out[r * d..(r + 1) * d];
            for j in 0..d {
                or[j] += v * xc[j];
            }
        }
        let entries_t = Arc::clone(&self.entries_t);
        Tensor::from_op(
            "spmm",
            n,
            d,
            out,
            vec![(
                x,
                crate::autodiff::tape::Edge::Fn(
                    n * d,
                    Box::new(move |g: &[f64], gx: &mut [f64]| {
                        // dL/dx += O^T * g, via the column-sorted entry list.
                        for &(c, r, v) in entries_t.iter() {
                            let gr = &g[r * d..(r + 1) * d];
                            let gc = &mut gx[c * d..(c + 1) * d];
                            for j in 0..d {
                                gc[j] += v * gr[j];
                            }
                        }
                    }),
                ),
            )],
        )
    }

    /// Dense form, for oracles and small-graph checks.
    pub fn to_dense(&self) -> Tensor {
        let n = self.num_nodes;
        let mut data = vec![0.0; n * n];
        for &(r, c, v) in self.entries.iter() {
            data[r * n + c] += v;
        }
        Tensor::from_vec(n, n, data).expect("operator entries are finite")
    }

    fn from_map(
        kind: OperatorKind,
        num_nodes: usize,
        map: HashMap<(usize, usize), f64>,
    ) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = map
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut entries_t: Vec<(usize, usize, f64)> =
            entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        entries_t.sort_unstable_by_key(|&(c, r, _)| (c, r));
        SparseOperator {
            kind,
            num_nodes,
            entries: Arc::new(entries),
            entries_t: Arc::new(entries_t),
        }
    }

    /// Sparse matrix-vector product used by the power iteration.
    fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_nodes];
        for &(r, c, w) in self.entries.iter() {
            out[r] += w * v[c];
        }
        out
    }
}

/// Symmetrically normalized adjacency `D^{-1/2} (A + sI) D^{-1/2}` with
/// `s = 1` when self-loops are requested. Zero-degree nodes yield zero rows.
pub fn sym_norm_adjacency(g: &Graph, add_self_loops: bool) -> SparseOperator {
    let mut map = g.weight_map();
    if add_self_loops {
        for i in 0..g.num_nodes() {
            *map.entry((i, i)).or_insert(0.0) += 1.0;
        }
    }
    let mut degree = vec![0.0; g.num_nodes()];
    for (&(s, _), &w) in &map {
        degree[s] += w;
    }
    let inv_sqrt: Vec<f64> = degree
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let normalized = map
        .into_iter()
        .map(|((s, t), w)| ((s, t), w * inv_sqrt[s] * inv_sqrt[t]))
        .collect();
    SparseOperator::from_map(OperatorKind::SymNormAdjacency, g.num_nodes(), normalized)
}

/// Policy for the spectral rescaling of the Laplacian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaMax {
    /// Use the supplied constant (2.0 is an upper bound for the normalized
    /// Laplacian spectrum).
    Fixed(f64),
    /// Estimate the largest eigenvalue by power iteration.
    Exact,
}

/// Scaled Laplacian `(2/lambda_max) L - I` with `L = I - D^{-1/2} A D^{-1/2}`
/// on the symmetrized weights.
pub fn scaled_laplacian(g: &Graph, lambda_max: LambdaMax) -> Result<SparseOperator> {
    if let LambdaMax::Fixed(l) = lambda_max {
        if l <= 0.0 || !l.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda_max must be positive, got {l}"
            )));
        }
    }
    let n = g.num_nodes();
    // Symmetrize by averaging W and W^T.
    let w = g.weight_map();
    let mut sym: HashMap<(usize, usize), f64> = HashMap::with_capacity(w.len());
    for (&(s, t), &v) in &w {
        let rev = w.get(&(t, s)).copied().unwrap_or(0.0);
        sym.insert((s, t), (v + rev) / 2.0);
        sym.insert((t, s), (v + rev) / 2.0);
    }
    let mut degree = vec![0.0; n];
    for (&(s, _), &v) in &sym {
        degree[s] += v;
    }
    let inv_sqrt: Vec<f64> = degree
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut laplacian: HashMap<(usize, usize), f64> = HashMap::with_capacity(sym.len() + n);
    for i in 0..n {
        laplacian.insert((i, i), 1.0);
    }
    for ((s, t), v) in sym {
        *laplacian.entry((s, t)).or_insert(0.0) -= v * inv_sqrt[s] * inv_sqrt[t];
    }
    let l = SparseOperator::from_map(OperatorKind::ScaledLaplacian, n, laplacian);
    let lmax = match lambda_max {
        LambdaMax::Fixed(v) => v,
        LambdaMax::Exact => estimate_lambda_max(&l),
    };
    let mut scaled: HashMap<(usize, usize), f64> = l
        .entries()
        .iter()
        .map(|&(r, c, v)| ((r, c), v * 2.0 / lmax))
        .collect();
    for i in 0..n {
        *scaled.entry((i, i)).or_insert(0.0) -= 1.0;
    }
    Ok(SparseOperator::from_map(
        OperatorKind::ScaledLaplacian,
        n,
        scaled,
    ))
}

/// Power iteration for the largest eigenvalue of a symmetric PSD operator:
/// 200 iterations or relative change below 1e-8, whichever comes first.
fn estimate_lambda_max(l: &SparseOperator) -> f64 {
    let n = l.num_nodes();
    // Deterministic start vector with no special alignment.
    let mut v: Vec<f64> = (0..n).map(|i| (0.7 + i as f64).sin() + 0.1).collect();
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut estimate = 0.0;
    for _ in 0..200 {
        let w = l.matvec(&v);
        let wnorm = norm(&w);
        if wnorm == 0.0 {
            return 2.0;
        }
        let rayleigh: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
            / v.iter().map(|a| a * a).sum::<f64>();
        v = w.iter().map(|x| x / wnorm).collect();
        let change = (rayleigh - estimate).abs();
        estimate = rayleigh;
        if change < 1e-8 * estimate.abs().max(1.0) {
            break;
        }
    }
    estimate
}

/// Forward and backward random-walk transition matrices `D_O^{-1} W` and
/// `D_I^{-1} W^T`. Zero-degree rows are all-zero.
pub fn random_walk_matrices(g: &Graph) -> (SparseOperator, SparseOperator) {
    let n = g.num_nodes();
    let w = g.weight_map();
    let mut out_degree = vec![0.0; n];
    let mut in_degree = vec![0.0; n];
    for (&(s, t), &v) in &w {
        out_degree[s] += v;
        in_degree[t] += v;
    }
    let mut rw_out = HashMap::with_capacity(w.len());
    let mut rw_in = HashMap::with_capacity(w.len());
    for (&(s, t), &v) in &w {
        if out_degree[s] > 0.0 {
            rw_out.insert((s, t), v / out_degree[s]);
        }
        if in_degree[t] > 0.0 {
            rw_in.insert((t, s), v / in_degree[t]);
        }
    }
    (
        SparseOperator::from_map(OperatorKind::RwOut, n, rw_out),
        SparseOperator::from_map(OperatorKind::RwIn, n, rw_in),
    )
}

/// Watts-Strogatz small-world graph: a ring lattice over `n` nodes with `k`
/// nearest neighbors, each edge's far endpoint rewired with probability `p`
/// to a uniform non-duplicate, non-self target. Undirected edges are stored
/// as two directed entries with weight 1.
pub fn watts_strogatz<R: Rng>(n: usize, k: usize, p: f64, rng: &mut R) -> Result<Graph> {
    if k % 2 != 0 {
        return Err(Error::InvalidParameter(format!("k must be even, got {k}")));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!(
            "k must be below n, got k={k}, n={n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "rewire probability must be in [0, 1], got {p}"
        )));
    }
    let mut neighbors: Vec<std::collections::HashSet<usize>> =
        vec![std::collections::HashSet::new(); n];
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n * k / 2);
    for i in 0..n {
        for off in 1..=k / 2 {
            let j = (i + off) % n;
            edges.push((i, j));
            neighbors[i].insert(j);
            neighbors[j].insert(i);
        }
    }
    for e in 0..edges.len() {
        if rng.random::<f64>() >= p {
            continue;
        }
        let (src, old) = edges[e];
        if neighbors[src].len() >= n - 1 {
            continue; // already connected to everyone
        }
        let target = loop {
            let t = rng.random_range(0..n);
            if t != src && !neighbors[src].contains(&t) {
                break t;
            }
        };
        neighbors[src].remove(&old);
        neighbors[old].remove(&src);
        neighbors[src].insert(target);
        neighbors[target].insert(src);
        edges[e] = (src, target);
    }
    let mut directed = Vec::with_capacity(edges.len() * 2);
    for (s, t) in edges {
        directed.push((s, t));
        directed.push((t, s));
    }
    Graph::new(n, directed, None)
}

/// Cache key for a precomputed operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorSpec {
    SymNormAdjacency { self_loops: bool },
    ScaledLaplacian { lambda_max_bits: Option<u64> },
    RwOut,
    RwIn,
}

impl OperatorSpec {
    pub fn scaled_laplacian(policy: LambdaMax) -> Self {
        OperatorSpec::ScaledLaplacian {
            lambda_max_bits: match policy {
                LambdaMax::Fixed(v) => Some(v.to_bits()),
                LambdaMax::Exact => None,
            },
        }
    }
}

/// Operator cache keyed by (graph identity, operator spec). Static-graph
/// signals therefore pay normalization once per training run.
#[derive(Default)]
pub struct OperatorCache {
    map: RwLock<HashMap<(u64, OperatorSpec), Arc<SparseOperator>>>,
}

impl OperatorCache {
    pub fn new() -> Self {
        OperatorCache::default()
    }

    pub fn get_or_build(&self, g: &Graph, spec: OperatorSpec) -> Result<Arc<SparseOperator>> {
        let key = (g.id(), spec);
        if let Some(op) = self.map.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(op));
        }
        let built = Arc::new(match spec {
            OperatorSpec::SymNormAdjacency { self_loops } => sym_norm_adjacency(g, self_loops),
            OperatorSpec::ScaledLaplacian { lambda_max_bits } => {
                let policy = match lambda_max_bits {
                    Some(bits) => LambdaMax::Fixed(f64::from_bits(bits)),
                    None => LambdaMax::Exact,
                };
                scaled_laplacian(g, policy)?
            }
            OperatorSpec::RwOut => random_walk_matrices(g).0,
            OperatorSpec::RwIn => random_walk_matrices(g).1,
        });
        let mut map = self.map.write().expect("cache lock");
        Ok(Arc::clone(map.entry(key).or_insert(built)))
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
