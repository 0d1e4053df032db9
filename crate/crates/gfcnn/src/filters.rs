//! Graph filters: node-invariant, node-varying, and the hybrid family that
//! shares taps within node groups.
//!
//! All three filters are polynomials in the shift operator applied to a
//! signal. They are evaluated iteratively — repeatedly shifting the signal
//! and accumulating scaled copies — so no matrix power is ever materialized
//! and the cost stays O(T·|E|) per signal. The hybrid family interposes a
//! grouping: every node is assigned to one of B groups built around the
//! highest-degree nodes, and nodes in a group share one tap vector.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{EigenDecomposition, Graph, ShiftOperator};

/// Taps of a node-invariant filter: one coefficient per power of S.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeInvariantTaps {
    taps: Vec<f64>,
}

impl NodeInvariantTaps {
    /// Wrap a tap vector h_0 … h_{T-1}; T must be at least 1.
    pub fn new(taps: Vec<f64>) -> Result<NodeInvariantTaps> {
        if taps.is_empty() {
            return Err(Error::Config("filter needs at least one tap".into()));
        }
        Ok(NodeInvariantTaps { taps })
    }

    /// Filter order T.
    pub fn order(&self) -> usize {
        self.taps.len()
    }

    /// The tap vector.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
}

/// Taps of a node-varying filter: an N×T matrix whose row i holds the
/// coefficients node i applies to the successive shifted signals.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVaryingTaps {
    num_nodes: usize,
    order: usize,
    taps: Vec<f64>,
}

impl NodeVaryingTaps {
    /// Wrap a row-major N×T tap matrix.
    pub fn new(num_nodes: usize, order: usize, taps: Vec<f64>) -> Result<NodeVaryingTaps> {
        if num_nodes == 0 || order == 0 {
            return Err(Error::Config("tap matrix dimensions must be positive".into()));
        }
        if taps.len() != num_nodes * order {
            return Err(Error::Dimension(format!(
                "tap matrix has {} entries, expected {num_nodes}x{order}",
                taps.len()
            )));
        }
        Ok(NodeVaryingTaps {
            num_nodes,
            order,
            taps,
        })
    }

    /// Node count N.
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Filter order T.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient applied by `node` at shift power `t`.
    pub fn tap(&self, node: usize, t: usize) -> f64 {
        self.taps[node * self.order + t]
    }
}

/// Assignment of every node to one of B groups, built around B selected
/// nodes. Equivalent to a binary N×B matrix with exactly one 1 per row;
/// selected node v_b sits in its own group b.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipMatrix {
    assignment: Vec<usize>,
    num_groups: usize,
    selected: Vec<usize>,
}

impl MembershipMatrix {
    /// Rebuild a membership from its serialized parts, re-validating every
    /// structural invariant. `selected` must be in ascending node order —
    /// the canonical group numbering.
    pub fn from_parts(assignment: Vec<usize>, selected: Vec<usize>) -> Result<MembershipMatrix> {
        let n = assignment.len();
        let b = selected.len();
        if n == 0 || b == 0 || b > n {
            return Err(Error::Config(format!(
                "invalid membership shape: {n} nodes, {b} groups"
            )));
        }
        for pair in selected.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::Config(
                    "selected nodes must be in strictly ascending order".into(),
                ));
            }
        }
        if *selected.last().unwrap() >= n {
            return Err(Error::Config("selected node out of range".into()));
        }
        for (grp, &v) in selected.iter().enumerate() {
            if assignment[v] != grp {
                return Err(Error::Config(format!(
                    "selected node {v} must be assigned to its own group {grp}"
                )));
            }
        }
        if assignment.iter().any(|&g| g >= b) {
            return Err(Error::Config("group index out of range".into()));
        }
        Ok(MembershipMatrix {
            assignment,
            num_groups: b,
            selected,
        })
    }

    /// Identity membership on `n` nodes: every node its own group.
    pub fn identity(n: usize) -> MembershipMatrix {
        MembershipMatrix {
            assignment: (0..n).collect(),
            num_groups: n,
            selected: (0..n).collect(),
        }
    }

    /// Number of nodes N.
    pub fn num_nodes(&self) -> usize {
        self.assignment.len()
    }

    /// Number of groups B.
    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    /// Group of each node, length N, values in [0, B).
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// The selected nodes in ascending index order; group b belongs to
    /// `selected()[b]`.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }
}

/// Taps of a hybrid filter: a B×T matrix of group taps plus the membership
/// that fans them out to nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridTaps {
    membership: MembershipMatrix,
    order: usize,
    taps: Vec<f64>,
}

impl HybridTaps {
    /// Wrap a row-major B×T tap matrix for the given membership.
    pub fn new(membership: MembershipMatrix, order: usize, taps: Vec<f64>) -> Result<HybridTaps> {
        if order == 0 {
            return Err(Error::Config("filter needs at least one tap".into()));
        }
        if taps.len() != membership.num_groups() * order {
            return Err(Error::Dimension(format!(
                "tap matrix has {} entries, expected {}x{order}",
                taps.len(),
                membership.num_groups()
            )));
        }
        Ok(HybridTaps {
            membership,
            order,
            taps,
        })
    }

    /// The node-to-group assignment this filter fans taps out through.
    pub fn membership(&self) -> &MembershipMatrix {
        &self.membership
    }

    /// Filter order T.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient applied by `group` at shift power `t`.
    pub fn tap(&self, group: usize, t: usize) -> f64 {
        self.taps[group * self.order + t]
    }
}

fn check_signal_len(s: &ShiftOperator, x: &[f64]) -> Result<()> {
    if x.len() != s.num_nodes() {
        return Err(Error::Dimension(format!(
            "signal has {} entries, shift operator has {} nodes",
            x.len(),
            s.num_nodes()
        )));
    }
    Ok(())
}

/// Run `accumulate(t, S^t x)` for t = 0 … order-1, shifting iteratively.
pub(crate) fn for_each_shift(
    s: &ShiftOperator,
    x: &[f64],
    order: usize,
    mut accumulate: impl FnMut(usize, &[f64]),
) {
    let mut cur = x.to_vec();
    let mut next = vec![0.0; x.len()];
    for t in 0..order {
        if t > 0 {
            s.apply_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        accumulate(t, &cur);
    }
}

/// Apply a node-invariant filter: Σ_t h_t S^t x.
pub fn apply_node_invariant(
    s: &ShiftOperator,
    taps: &NodeInvariantTaps,
    x: &[f64],
) -> Result<Vec<f64>> {
    check_signal_len(s, x)?;
    let mut y = vec![0.0; x.len()];
    for_each_shift(s, x, taps.order(), |t, shifted| {
        let h = taps.taps()[t];
        for (yi, &si) in y.iter_mut().zip(shifted) {
            *yi += h * si;
        }
    });
    Ok(y)
}

/// Apply a node-varying filter: Σ_t diag(h_t) S^t x, where column t of the
/// tap matrix scales the t-times-shifted signal node by node.
pub fn apply_node_varying(
    s: &ShiftOperator,
    taps: &NodeVaryingTaps,
    x: &[f64],
) -> Result<Vec<f64>> {
    check_signal_len(s, x)?;
    if taps.num_nodes() != s.num_nodes() {
        return Err(Error::Dimension(format!(
            "tap matrix has {} rows, shift operator has {} nodes",
            taps.num_nodes(),
            s.num_nodes()
        )));
    }
    let mut y = vec![0.0; x.len()];
    for_each_shift(s, x, taps.order(), |t, shifted| {
        for (i, (yi, &si)) in y.iter_mut().zip(shifted).enumerate() {
            *yi += taps.tap(i, t) * si;
        }
    });
    Ok(y)
}

/// Apply a hybrid filter: Σ_t diag(c_t) S^t x, where c_t gathers each node's
/// group tap through the membership assignment.
pub fn apply_hybrid(s: &ShiftOperator, taps: &HybridTaps, x: &[f64]) -> Result<Vec<f64>> {
    check_signal_len(s, x)?;
    if taps.membership().num_nodes() != s.num_nodes() {
        return Err(Error::Dimension(format!(
            "membership covers {} nodes, shift operator has {} nodes",
            taps.membership().num_nodes(),
            s.num_nodes()
        )));
    }
    let assignment = taps.membership().assignment();
    let mut y = vec![0.0; x.len()];
    for_each_shift(s, x, taps.order(), |t, shifted| {
        for (i, (yi, &si)) in y.iter_mut().zip(shifted).enumerate() {
            *yi += taps.tap(assignment[i], t) * si;
        }
    });
    Ok(y)
}

/// Group the nodes of `g` into `b` groups for hybrid filtering.
///
/// The b highest-degree nodes are selected (degree ties broken by a seeded
/// uniform draw); groups are numbered by ascending node index of the
/// selected set, so b = N yields the identity assignment. Every other node
/// joins the group of the selected node it shares the heaviest direct edge
/// with; a node with no edge to any selected node joins the nearest selected
/// node by hop distance. All ties are broken by seeded uniform draws, so the
/// result is deterministic for a fixed (graph, b, seed).
pub fn build_membership(g: &Graph, b: usize, seed: u64) -> Result<MembershipMatrix> {
    let n = g.num_nodes();
    if b == 0 || b > n {
        return Err(Error::Config(format!(
            "group count must be in [1, {n}], got {b}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degrees = g.degrees();
    let tiebreak: Vec<u64> = (0..n).map(|_| rng.random()).collect();
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by(|&i, &j| {
        degrees[j]
            .total_cmp(&degrees[i])
            .then(tiebreak[i].cmp(&tiebreak[j]))
    });
    let mut selected: Vec<usize> = by_degree[..b].to_vec();
    selected.sort_unstable();

    let mut assignment = vec![usize::MAX; n];
    for (grp, &v) in selected.iter().enumerate() {
        assignment[v] = grp;
    }
    for i in 0..n {
        if assignment[i] != usize::MAX {
            continue;
        }
        // Candidate groups sharing the heaviest direct edge with node i.
        let mut best = f64::NEG_INFINITY;
        let mut candidates: Vec<usize> = Vec::new();
        for (grp, &v) in selected.iter().enumerate() {
            let found = g.neighbors(i).binary_search_by_key(&v, |&(j, _)| j);
            if let Ok(pos) = found {
                let w = g.neighbors(i)[pos].1;
                if w > best {
                    best = w;
                    candidates.clear();
                }
                if w == best {
                    candidates.push(grp);
                }
            }
        }
        if candidates.is_empty() {
            // No direct edge to any selected node: fall back to the nearest
            // selected node by hop distance.
            let dist = g.hop_distances(i);
            let mut best_hops = usize::MAX;
            for (grp, &v) in selected.iter().enumerate() {
                if let Some(h) = dist[v] {
                    if h < best_hops {
                        best_hops = h;
                        candidates.clear();
                    }
                    if h == best_hops {
                        candidates.push(grp);
                    }
                }
            }
            if candidates.is_empty() {
                return Err(Error::Config(format!(
                    "node {i} cannot reach any selected node; graph is disconnected"
                )));
            }
        }
        assignment[i] = if candidates.len() == 1 {
            candidates[0]
        } else {
            candidates[rng.random_range(0..candidates.len())]
        };
    }
    Ok(MembershipMatrix {
        assignment,
        num_groups: b,
        selected,
    })
}

/// Graph Fourier transform Vᵀx: project a signal onto the eigenvector basis.
pub fn gft(decomp: &EigenDecomposition, x: &[f64]) -> Result<Vec<f64>> {
    let n = decomp.num_nodes();
    if x.len() != n {
        return Err(Error::Dimension(format!(
            "signal has {} entries, decomposition has {n} nodes",
            x.len()
        )));
    }
    Ok((0..n)
        .map(|k| {
            decomp
                .eigenvector(k)
                .iter()
                .zip(x)
                .map(|(v, xi)| v * xi)
                .sum()
        })
        .collect())
}

/// Inverse transform V·x̃: reassemble a signal from spectral coefficients.
pub fn inverse_gft(decomp: &EigenDecomposition, coeffs: &[f64]) -> Result<Vec<f64>> {
    let n = decomp.num_nodes();
    if coeffs.len() != n {
        return Err(Error::Dimension(format!(
            "coefficient vector has {} entries, decomposition has {n} nodes",
            coeffs.len()
        )));
    }
    let mut x = vec![0.0; n];
    for (k, &c) in coeffs.iter().enumerate() {
        for (xi, &v) in x.iter_mut().zip(decomp.eigenvector(k)) {
            *xi += c * v;
        }
    }
    Ok(x)
}

/// Frequency response of a node-invariant filter: entry k is Σ_t h_t λ_k^t,
/// evaluated by Horner's rule.
pub fn frequency_response(taps: &NodeInvariantTaps, eigenvalues: &[f64]) -> Vec<f64> {
    eigenvalues
        .iter()
        .map(|&lambda| {
            let mut r = 0.0;
            for &h in taps.taps().iter().rev() {
                r = r * lambda + h;
            }
            r
        })
        .collect()
}
