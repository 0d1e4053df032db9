//! Weighted undirected graphs and their shift operators.
//!
//! A [`Graph`] stores each undirected edge once (endpoints ordered, weight
//! positive) together with per-node adjacency lists for fast traversal. From a
//! graph, [`build_shift`] constructs one of three shift operators — adjacency,
//! Laplacian, or normalized Laplacian — as a sparse symmetric matrix whose
//! off-diagonal support is exactly the edge set. [`eigendecompose`] provides
//! the spectral decomposition used for frequency-domain verification.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Hard ceiling on node counts accepted from files, to keep parsing of
/// malformed inputs from attempting absurd allocations.
const MAX_FILE_NODES: usize = 1_000_000;

/// Resampling budget for connected random-graph generation.
const MAX_ER_ATTEMPTS: usize = 1000;

/// Off-diagonal Frobenius norm at which the Jacobi iteration stops.
const JACOBI_TOL: f64 = 1e-12;

/// Sweep cap for the Jacobi iteration.
const JACOBI_MAX_SWEEPS: usize = 100;

/// A weighted undirected graph without self-loops.
///
/// Edges are stored once per unordered pair as `(a, b, weight)` with `a < b`,
/// sorted lexicographically; adjacency lists are sorted by neighbor index.
/// Both orderings make every traversal in the crate deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize, f64)>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    /// Build a graph from an edge list. Endpoint order within a pair is
    /// irrelevant; duplicate pairs, self-loops, out-of-range indices, and
    /// non-positive or non-finite weights are rejected.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize, f64)]) -> Result<Graph> {
        if num_nodes == 0 {
            return Err(Error::Config("graph must have at least one node".into()));
        }
        let mut normalized: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
        for &(i, j, w) in edges {
            if i == j {
                return Err(Error::Config(format!("self-loop at node {i}")));
            }
            if i >= num_nodes || j >= num_nodes {
                return Err(Error::Config(format!(
                    "edge ({i}, {j}) out of range for {num_nodes} nodes"
                )));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::Config(format!(
                    "edge ({i}, {j}) has invalid weight {w}; weights must be finite and positive"
                )));
            }
            normalized.push((i.min(j), i.max(j), w));
        }
        normalized.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for pair in normalized.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(Error::Config(format!(
                    "duplicate edge ({}, {})",
                    pair[0].0, pair[0].1
                )));
            }
        }
        let mut neighbors = vec![Vec::new(); num_nodes];
        for &(a, b, w) in &normalized {
            neighbors[a].push((b, w));
            neighbors[b].push((a, w));
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(j, _)| j);
        }
        Ok(Graph {
            num_nodes,
            edges: normalized,
            neighbors,
        })
    }

    /// Number of nodes.
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(a, b, weight)` with `a < b`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Neighbors of `node` as `(neighbor, weight)`, sorted by neighbor index.
    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.neighbors[node]
    }

    /// Weighted degree of every node: entry `i` is the sum of weights of
    /// edges incident to `i`.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.num_nodes];
        for &(a, b, w) in &self.edges {
            d[a] += w;
            d[b] += w;
        }
        d
    }

    /// Whether every node is reachable from node 0 (true for the one-node
    /// graph).
    pub fn is_connected(&self) -> bool {
        !self.hop_distances(0).contains(&None)
    }

    /// Shortest-path hop distance from `start` to every node; `None` for
    /// unreachable nodes. Edge weights are ignored — only hop counts matter.
    pub fn hop_distances(&self, start: usize) -> Vec<Option<usize>> {
        assert!(start < self.num_nodes, "start node out of range");
        let mut dist = vec![None; self.num_nodes];
        dist[start] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let next = dist[i].unwrap() + 1;
            for &(j, _) in &self.neighbors[i] {
                if dist[j].is_none() {
                    dist[j] = Some(next);
                    queue.push_back(j);
                }
            }
        }
        dist
    }

    /// All nodes within `k` hops of `node`, including `node` itself, in
    /// ascending index order.
    pub fn k_hop_neighborhood(&self, node: usize, k: usize) -> Vec<usize> {
        self.hop_distances(node)
            .iter()
            .enumerate()
            .filter(|(_, d)| matches!(d, Some(h) if *h <= k))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Sample a connected Erdős–Rényi graph: each unordered pair is an edge
/// independently with probability `p` (weight 1.0), resampling until the
/// graph is connected. Deterministic for a fixed seed; fails after 1000
/// attempts.
pub fn generate_connected_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::Config(format!(
            "random graph needs at least 2 nodes, got {n}"
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!(
            "edge probability must be in (0, 1], got {p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ER_ATTEMPTS {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(p) {
                    edges.push((i, j, 1.0));
                }
            }
        }
        let g = Graph::from_edges(n, &edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Numeric(format!(
        "no connected graph found in {MAX_ER_ATTEMPTS} attempts (n={n}, p={p})"
    )))
}

/// Which matrix represents the graph in signal operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    /// The weighted adjacency matrix W.
    Adjacency,
    /// The combinatorial Laplacian D − W.
    Laplacian,
    /// The normalized Laplacian I − D^{-1/2} W D^{-1/2}.
    NormalizedLaplacian,
}

impl ShiftKind {
    /// Canonical lowercase token, used in files and on the command line.
    pub fn token(self) -> &'static str {
        match self {
            ShiftKind::Adjacency => "adjacency",
            ShiftKind::Laplacian => "laplacian",
            ShiftKind::NormalizedLaplacian => "normalized-laplacian",
        }
    }
}

impl std::fmt::Display for ShiftKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ShiftKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ShiftKind> {
        match s {
            "adjacency" => Ok(ShiftKind::Adjacency),
            "laplacian" => Ok(ShiftKind::Laplacian),
            "normalized-laplacian" | "normalized_laplacian" => Ok(ShiftKind::NormalizedLaplacian),
            other => Err(Error::Config(format!(
                "unknown shift kind {other:?}; expected adjacency, laplacian, or normalized-laplacian"
            ))),
        }
    }
}

/// A sparse symmetric N×N shift matrix built from a graph.
///
/// Off-diagonal entries exist only on edges; the diagonal may carry mass
/// depending on the kind. Rows store `(column, value)` sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOperator {
    num_nodes: usize,
    kind: ShiftKind,
    rows: Vec<Vec<(usize, f64)>>,
}

impl ShiftOperator {
    /// Number of nodes (matrix dimension).
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Which matrix this is.
    pub fn kind(&self) -> ShiftKind {
        self.kind
    }

    /// Sparse row `i` as `(column, value)` pairs sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// y = S·x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.num_nodes];
        self.apply_into(x, &mut y);
        y
    }

    /// y = S·x into a caller-provided buffer.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.num_nodes, "signal length mismatch");
        assert_eq!(y.len(), self.num_nodes, "output length mismatch");
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, v) in row {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    /// Dense row-major copy, for small-scale verification.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.num_nodes;
        let mut m = vec![0.0; n * n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[i * n + j] = v;
            }
        }
        m
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .fold(0.0, |m, &(_, v)| m.max(v.abs()))
    }

    /// Largest absolute eigenvalue (the operator 2-norm, since the matrix is
    /// symmetric), estimated by power iteration from a fixed pseudo-random
    /// start vector. Deterministic: identical input yields the identical
    /// estimate bit for bit.
    pub fn spectral_radius(&self) -> f64 {
        let n = self.num_nodes;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0001);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut x {
            *v /= norm;
        }
        let mut estimate = 0.0;
        let mut y = vec![0.0; n];
        for _ in 0..1000 {
            self.apply_into(&x, &mut y);
            let growth = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if growth == 0.0 {
                return 0.0;
            }
            for (xi, &yi) in x.iter_mut().zip(&y) {
                *xi = yi / growth;
            }
            let converged = (growth - estimate).abs() <= 1e-12 * growth.max(1.0);
            estimate = growth;
            if converged {
                break;
            }
        }
        estimate
    }

    /// A copy with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> ShiftOperator {
        let mut out = self.clone();
        for row in &mut out.rows {
            for entry in row {
                entry.1 *= factor;
            }
        }
        out
    }
}

/// Build the shift operator of the requested kind from a graph.
pub fn build_shift(g: &Graph, kind: ShiftKind) -> ShiftOperator {
    let n = g.num_nodes();
    let d = g.degrees();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        match kind {
            ShiftKind::Adjacency => {
                rows[i].extend(g.neighbors(i).iter().copied());
            }
            ShiftKind::Laplacian => {
                rows[i].push((i, d[i]));
                for &(j, w) in g.neighbors(i) {
                    rows[i].push((j, -w));
                }
                rows[i].sort_by_key(|&(c, _)| c);
            }
            ShiftKind::NormalizedLaplacian => {
                // Rows of isolated nodes are left entirely zero.
                if d[i] == 0.0 {
                    continue;
                }
                rows[i].push((i, 1.0));
                for &(j, w) in g.neighbors(i) {
                    rows[i].push((j, -w / (d[i] * d[j]).sqrt()));
                }
                rows[i].sort_by_key(|&(c, _)| c);
            }
        }
    }
    ShiftOperator {
        num_nodes: n,
        kind,
        rows,
    }
}

/// Build the shift operator of the requested kind, rescaled to unit spectral
/// radius.
///
/// Dividing the operator by its largest absolute eigenvalue is a pure change
/// of units: polynomials in the scaled operator express exactly the same
/// filter family as polynomials in the raw one, but repeated applications no
/// longer grow or shrink geometrically. Model layers and the diffusion used
/// to synthesize datasets both go through this constructor, so every consumer
/// agrees on the same matrix bit for bit. An operator with zero spectral
/// radius (an edgeless adjacency) is returned unscaled.
pub fn build_unit_radius_shift(g: &Graph, kind: ShiftKind) -> ShiftOperator {
    let shift = build_shift(g, kind);
    let radius = shift.spectral_radius();
    if radius > 0.0 {
        shift.scaled(1.0 / radius)
    } else {
        shift
    }
}

/// Spectral decomposition of a symmetric shift operator: S = V·diag(λ)·Vᵀ
/// with ascending eigenvalues and orthonormal columns of V.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    num_nodes: usize,
    eigenvalues: Vec<f64>,
    /// Column-major N×N: `vectors[k*n..(k+1)*n]` is the k-th eigenvector.
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    /// Matrix dimension.
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// The k-th eigenvector (unit length), paired with `eigenvalues()[k]`.
    pub fn eigenvector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.num_nodes..(k + 1) * self.num_nodes]
    }
}

/// Diagonalize a symmetric shift operator with a cyclic Jacobi iteration.
///
/// Sweeps rotate every upper-triangle pair in turn until the off-diagonal
/// Frobenius norm falls below 1e-12, with a cap of 100 sweeps; exceeding the
/// cap is reported as a numeric failure. Cost is O(N³) per sweep, intended
/// for verification at modest N rather than bulk computation.
pub fn eigendecompose(s: &ShiftOperator) -> Result<EigenDecomposition> {
    let n = s.num_nodes();
    let mut a = s.dense();
    let mut v = vec![0.0; n * n];
    for k in 0..n {
        v[k * n + k] = 1.0;
    }

    let mut sweeps = 0;
    while off_diagonal_frobenius(&a, n) > JACOBI_TOL {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "eigensolver did not converge within {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                // Rotation angle chosen to zero a[p][q]; the guarded branch
                // avoids overflow in theta² for extreme diagonal ratios.
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                let tau = sn / (1.0 + c);

                let app = a[p * n + p];
                let aqq = a[q * n + q];
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = arp - sn * (arq + tau * arp);
                    let new_rq = arq + sn * (arp - tau * arq);
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                // Accumulate the rotation into the eigenvector columns.
                for r in 0..n {
                    let vrp = v[p * n + r];
                    let vrq = v[q * n + r];
                    v[p * n + r] = vrp - sn * (vrq + tau * vrp);
                    v[q * n + r] = vrq + sn * (vrp - tau * vrq);
                }
            }
        }
    }

    let raw: Vec<f64> = (0..n).map(|k| a[k * n + k]).collect();
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("eigensolver produced a non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw[i].total_cmp(&raw[j]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(raw[src]);
        vectors[dst * n..(dst + 1) * n].copy_from_slice(&v[src * n..(src + 1) * n]);
    }
    Ok(EigenDecomposition {
        num_nodes: n,
        eigenvalues,
        vectors,
    })
}

fn off_diagonal_frobenius(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// Render a graph as text: a `graph <N>` header followed by one `i j weight`
/// line per edge in canonical order. [`parse_graph`] inverts this exactly.
pub fn format_graph(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph {}", g.num_nodes());
    for &(a, b, w) in g.edges() {
        let _ = writeln!(out, "{a} {b} {w}");
    }
    out
}

/// Parse the text form produced by [`format_graph`]. Blank lines are skipped
/// and `#` starts a comment that runs to the end of the line.
pub fn parse_graph(text: &str) -> Result<Graph> {
    const CTX: &str = "graph file";
    let mut num_nodes = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match num_nodes {
            None => {
                if fields.len() != 2 || fields[0] != "graph" {
                    return Err(Error::parse(CTX, line_no, "expected header `graph <N>`"));
                }
                let n: usize = fields[1]
                    .parse()
                    .map_err(|e| Error::parse(CTX, line_no, format!("bad node count: {e}")))?;
                if n == 0 {
                    return Err(Error::parse(CTX, line_no, "node count must be positive"));
                }
                if n > MAX_FILE_NODES {
                    return Err(Error::parse(
                        CTX,
                        line_no,
                        format!("node count {n} exceeds the supported maximum {MAX_FILE_NODES}"),
                    ));
                }
                num_nodes = Some(n);
            }
            Some(n) => {
                if fields.len() != 3 {
                    return Err(Error::parse(CTX, line_no, "expected edge line `i j weight`"));
                }
                let i: usize = fields[0]
                    .parse()
                    .map_err(|e| Error::parse(CTX, line_no, format!("bad node index: {e}")))?;
                let j: usize = fields[1]
                    .parse()
                    .map_err(|e| Error::parse(CTX, line_no, format!("bad node index: {e}")))?;
                let w: f64 = fields[2]
                    .parse()
                    .map_err(|e| Error::parse(CTX, line_no, format!("bad weight: {e}")))?;
                if i == j {
                    return Err(Error::parse(CTX, line_no, format!("self-loop at node {i}")));
                }
                if i >= n || j >= n {
                    return Err(Error::parse(
                        CTX,
                        line_no,
                        format!("edge ({i}, {j}) out of range for {n} nodes"),
                    ));
                }
                if !w.is_finite() || w <= 0.0 {
                    return Err(Error::parse(
                        CTX,
                        line_no,
                        format!("weight must be finite and positive, got {w}"),
                    ));
                }
                edges.push((i, j, w));
            }
        }
    }
    let n = num_nodes.ok_or_else(|| Error::parse(CTX, 0, "empty input"))?;
    Graph::from_edges(n, &edges).map_err(|e| match e {
        Error::Config(msg) => Error::parse(CTX, 0, msg),
        other => other,
    })
}

/// Write a graph to a file in the text format of [`format_graph`].
pub fn write_graph(g: &Graph, path: &Path) -> Result<()> {
    std::fs::write(path, format_graph(g)).map_err(|e| Error::File {
        path: path.display().to_string(),
        source: e,
    })
}

/// Read a graph from a file written by [`write_graph`].
pub fn read_graph(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::File {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_graph(&text)
}

/// 64-bit FNV-1a digest of the canonical text form, used to tie datasets and
/// saved models back to the topology they were built on.
pub fn graph_hash(g: &Graph) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in format_graph(g).as_bytes() {
        h ^= *byte as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}
