//! Shared dense-matrix oracles for the integration suites.
//!
//! Everything here recomputes quantities from first principles — dense N×N
//! matrices assembled straight from the edge list, explicit matrix powers,
//! two-pass statistics — so the sparse iterative code under test is checked
//! against an independent path, not against itself.

#![allow(dead_code)]

use gfcnn::graph::{Graph, ShiftKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense row-major shift matrix assembled directly from the edge list.
pub fn dense_shift(g: &Graph, kind: ShiftKind) -> Vec<f64> {
    let n = g.num_nodes();
    let mut w = vec![0.0; n * n];
    let mut deg = vec![0.0; n];
    for &(a, b, weight) in g.edges() {
        w[a * n + b] = weight;
        w[b * n + a] = weight;
        deg[a] += weight;
        deg[b] += weight;
    }
    match kind {
        ShiftKind::Adjacency => w,
        ShiftKind::Laplacian => {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] = if i == j { deg[i] } else { 0.0 } - w[i * n + j];
                }
            }
            m
        }
        ShiftKind::NormalizedLaplacian => {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let norm = if deg[i] > 0.0 && deg[j] > 0.0 {
                        w[i * n + j] / (deg[i].sqrt() * deg[j].sqrt())
                    } else {
                        0.0
                    };
                    let eye = if i == j && deg[i] > 0.0 { 1.0 } else { 0.0 };
                    m[i * n + j] = eye - norm;
                }
            }
            m
        }
    }
}

/// Dense n×n matrix product.
pub fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

/// Dense matrix-vector product.
pub fn matvec(m: &[f64], x: &[f64], n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            y[i] += m[i * n + j] * x[j];
        }
    }
    y
}

/// Dense t-th matrix power (t = 0 gives the identity).
pub fn matpow(m: &[f64], t: usize, n: usize) -> Vec<f64> {
    let mut p = identity(n);
    for _ in 0..t {
        p = matmul(&p, m, n);
    }
    p
}

/// Dense identity matrix.
pub fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// Largest absolute entry-wise difference.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// A deterministic random signal in [-1, 1].
pub fn random_signal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
}

/// A deterministic random tap vector in [-1, 1].
pub fn random_taps(len: usize, seed: u64) -> Vec<f64> {
    random_signal(len, seed)
}
