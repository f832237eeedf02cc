//! Helpers shared by the integration suites: independent dense oracles and
//! seeded graph generators. The oracles stay deliberately naive; they verify
//! the sparse implementations, never the other way around.
#![allow(dead_code)] // each test target uses its own subset

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sddchol::SparseSym;

/// Dense LU solve with partial pivoting; the direct-solve oracle.
pub fn dense_solve(a: &SparseSym, b: &[f64]) -> Vec<f64> {
    let n = a.n();
    let mut m = vec![vec![0.0; n]; n];
    for (i, j, v) in a.entries() {
        m[i][j] = v;
    }
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        x.swap(col, pivot);
        let d = m[col][col];
        assert!(d.abs() > 1e-14, "oracle: singular matrix at column {col}");
        for row in col + 1..n {
            let f = m[row][col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= m[col][col];
        for row in 0..col {
            x[row] -= m[row][col] * x[col];
        }
    }
    x
}

/// Dense G Gᵀ of a factor's triangular part, in permuted coordinates.
pub fn ggt_dense(g: &sddchol::LowerTri) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut out = vec![vec![0.0; n]; n];
    for k in 0..n {
        let col: Vec<(usize, f64)> = g.col(k).collect();
        for &(i, vi) in &col {
            for &(j, vj) in &col {
                out[i][j] += vi * vj;
            }
        }
    }
    out
}

/// Random connected weighted graph Laplacian: a random spanning tree plus
/// `extra` random edges, weights uniform in (0, 1].
pub fn random_connected_laplacian(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> SparseSym {
    let mut triples = Vec::new();
    let mut off = vec![0.0; n];
    let mut present: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    let add = |triples: &mut Vec<(usize, usize, f64)>, off: &mut Vec<f64>, present: &mut std::collections::HashSet<(usize, usize)>, i: usize, j: usize, w: f64| {
        let key = (i.min(j), i.max(j));
        if present.insert(key) {
            triples.push((key.0, key.1, -w));
            off[i] += w;
            off[j] += w;
        }
    };
    for i in 1..n {
        let j = rng.random_range(0..i);
        let w = 1.0 - rng.random::<f64>(); // (0, 1]
        add(&mut triples, &mut off, &mut present, i, j, w);
    }
    for _ in 0..extra {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            let w = 1.0 - rng.random::<f64>();
            add(&mut triples, &mut off, &mut present, i, j, w);
        }
    }
    for i in 0..n {
        triples.push((i, i, off[i]));
    }
    SparseSym::from_coo(n, &triples).unwrap()
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Union-find connectivity check over an explicit vertex set.
pub fn edges_connect(vertices: &[usize], edges: &[(usize, usize, f64)]) -> bool {
    let index: std::collections::HashMap<usize, usize> =
        vertices.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut parent: Vec<usize> = (0..vertices.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(i, j, _) in edges {
        let (a, b) = (find(&mut parent, index[&i]), find(&mut parent, index[&j]));
        parent[a] = b;
    }
    let root = find(&mut parent, 0);
    (0..vertices.len()).all(|k| find(&mut parent, k) == root)
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
