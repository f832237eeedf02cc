//! Sequential randomized Cholesky over an elimination graph, plus the SDDM
//! wrapper that factors the one-row Laplacian extension and strips the
//! extension row back off.
//!
//! The evolving Schur complement is held as a weighted graph: the diagonal of
//! a live vertex IS the sum of its incident weights (Laplacian structure is
//! preserved by every update), so pivots are computed as exact neighbor-weight
//! sums rather than drifting incremental updates.

use std::collections::HashMap;

use crate::classify::{classify, MatrixKind, DEFAULT_CLASSIFY_TOL};
use crate::ordering::OrderingSpec;
use crate::sampling::{sample_clique, EdgeList, RngStream, Star};
use crate::sparse::{LowerTri, Perm, SparseSym};
use crate::{Error, Result};

/// Merged weights this far below either endpoint's degree are dropped
/// symmetrically when duplicates merge.
const MERGE_DROP_RTOL: f64 = 1e-14;

/// Mutable weighted-adjacency view of the evolving Schur complement.
/// Adjacency is symmetric (eager insert/delete on both endpoints) and weights
/// are positive; `w = -l_ij`.
#[derive(Debug, Clone)]
pub struct ElimGraph {
    adj: Vec<HashMap<usize, f64>>,
    deg_cache: Vec<f64>,
    alive: Vec<bool>,
    /// Decrement-by-one ledger: initial distinct pairs, minus the star size of
    /// every eliminated vertex, plus every sampled edge (counted even when its
    /// weight merges into an existing entry). Equals M - k after k steps
    /// exactly when every step samples (star size - 1) edges.
    edge_count: usize,
    /// Distinct unordered pairs currently present (<= edge_count).
    live_pairs: usize,
    dropped: u64,
}

impl ElimGraph {
    /// Build from a matrix with nonpositive off-diagonals; diagonal entries
    /// are ignored (the Laplacian diagonal is implied by the weights).
    pub fn from_matrix(l: &SparseSym) -> Result<Self> {
        let n = l.n();
        let mut g = ElimGraph {
            adj: vec![HashMap::new(); n],
            deg_cache: vec![0.0; n],
            alive: vec![true; n],
            edge_count: 0,
            live_pairs: 0,
            dropped: 0,
        };
        for (i, j, v) in l.entries() {
            if i >= j {
                continue;
            }
            if v > 0.0 {
                return Err(Error::WrongClass { expected: "nonpositive off-diagonals", got: format!("entry ({i},{j}) = {v}") });
            }
            let w = -v;
            g.adj[i].insert(j, w);
            g.adj[j].insert(i, w);
            g.deg_cache[i] += w;
            g.deg_cache[j] += w;
            g.live_pairs += 1;
        }
        g.edge_count = g.live_pairs;
        Ok(g)
    }

    /// Remove vertex `v` and its incident edges, returning its star with
    /// neighbors sorted ascending by (weight, id) and the pivot as the exact
    /// sorted-order weight sum.
    pub fn take_star(&mut self, v: usize) -> Star {
        let mut neighbors: Vec<(usize, f64)> = self.adj[v].iter().map(|(&u, &w)| (u, w)).collect();
        neighbors.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        for &(u, w) in &neighbors {
            self.adj[u].remove(&v);
            self.deg_cache[u] -= w;
        }
        self.adj[v] = HashMap::new();
        self.deg_cache[v] = 0.0;
        self.alive[v] = false;
        self.edge_count -= neighbors.len();
        self.live_pairs -= neighbors.len();
        let deg = neighbors.iter().map(|&(_, w)| w).sum();
        Star { center: v, neighbors, deg }
    }

    /// Merge sampled edges in, summing weights on duplicates.
    pub fn insert_edges(&mut self, edges: &EdgeList) {
        self.edge_count += edges.len();
        for &(i, j, w) in &edges.edges {
            debug_assert!(self.alive[i] && self.alive[j] && i != j);
            match self.adj[i].get_mut(&j) {
                Some(e) => {
                    let merged = *e + w;
                    *e = merged;
                    *self.adj[j].get_mut(&i).expect("adjacency must be symmetric") = merged;
                    self.deg_cache[i] += w;
                    self.deg_cache[j] += w;
                    if merged < MERGE_DROP_RTOL * self.deg_cache[i].min(self.deg_cache[j]) {
                        self.adj[i].remove(&j);
                        self.adj[j].remove(&i);
                        self.deg_cache[i] -= merged;
                        self.deg_cache[j] -= merged;
                        self.live_pairs -= 1;
                        self.dropped += 1;
                    }
                }
                None => {
                    self.adj[i].insert(j, w);
                    self.adj[j].insert(i, w);
                    self.deg_cache[i] += w;
                    self.deg_cache[j] += w;
                    self.live_pairs += 1;
                }
            }
        }
    }

    /// The decrement-by-one ledger count (see field docs).
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Distinct pairs currently stored.
    pub fn live_pairs(&self) -> usize {
        self.live_pairs
    }

    pub fn dropped_edges(&self) -> u64 {
        self.dropped
    }

    pub fn is_alive(&self, v: usize) -> bool {
        self.alive[v]
    }

    /// Exact current diagonal of a live vertex (sorted-order weight sum).
    pub fn degree(&self, v: usize) -> f64 {
        let mut ws: Vec<f64> = self.adj[v].values().copied().collect();
        ws.sort_unstable_by(f64::total_cmp);
        ws.iter().sum()
    }
}

/// Current edge count of the elimination graph (the decrement-by-one ledger).
pub fn schur_edge_count(g: &ElimGraph) -> usize {
    g.edge_count()
}

/// Which system the factor preconditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    /// Factor of a singular Laplacian: last column empty, pair with the
    /// span{1} projection in PCG.
    Laplacian,
    /// Nonsingular leading block of an extended-Laplacian factor.
    Sddm,
}

impl FactorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FactorKind::Laplacian => "laplacian",
            FactorKind::Sddm => "sddm",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FactorMeta {
    pub seed: u64,
    pub ordering: String,
    pub nd_levels: Option<u32>,
    pub dropped_edges: u64,
    /// Residual diagonal at the never-eliminated final vertex.
    pub final_diag: f64,
}

impl Default for FactorMeta {
    fn default() -> Self {
        FactorMeta { seed: 0, ordering: "external".into(), nd_levels: None, dropped_edges: 0, final_diag: 0.0 }
    }
}

/// Permutation plus lower-triangular factor in permuted coordinates, with the
/// extension row when built from an SDDM embedding.
#[derive(Debug, Clone)]
pub struct CholFactor {
    pub perm: Perm,
    pub g: LowerTri,
    /// G2: the extension row of the extended-Laplacian factor, as
    /// (permuted column, value) pairs.
    pub ext_row: Option<Vec<(usize, f64)>>,
    pub kind: FactorKind,
    pub meta: FactorMeta,
}

impl CholFactor {
    pub fn fill_nnz(&self) -> usize {
        2 * self.g.nnz()
    }
}

/// Stepwise elimination driver. `factor_laplacian` runs it to completion; the
/// property tests step it manually to watch the graph.
pub struct Elimination {
    graph: ElimGraph,
    perm: Perm,
    cols: Vec<Vec<(usize, f64)>>,
    step: usize,
    n: usize,
}

impl Elimination {
    pub fn new(l: &SparseSym, p: &Perm) -> Result<Self> {
        let n = l.n();
        if p.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.n() });
        }
        let class = classify(l, DEFAULT_CLASSIFY_TOL);
        if class.kind != MatrixKind::Laplacian {
            return Err(Error::WrongClass { expected: "Laplacian", got: class.kind.as_str().into() });
        }
        if !class.irreducible {
            return Err(Error::Reducible);
        }
        Ok(Elimination {
            graph: ElimGraph::from_matrix(l)?,
            perm: p.clone(),
            cols: vec![Vec::new(); n],
            step: 0,
            n,
        })
    }

    pub fn graph(&self) -> &ElimGraph {
        &self.graph
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn remaining(&self) -> usize {
        (self.n - 1).saturating_sub(self.step)
    }

    /// Eliminate the next vertex in permuted order: emit its scaled column,
    /// delete its star, sample the clique replacement back in.
    pub fn step(&mut self, rng: &mut RngStream) -> Result<()> {
        debug_assert!(self.step < self.n - 1);
        let k = self.step;
        let v = self.perm.old_of(k);
        let star = self.graph.take_star(v);
        if !star.deg.is_finite() || star.deg <= 0.0 {
            return Err(Error::BrokenPivot { step: k, value: star.deg });
        }
        let scale = star.deg.sqrt();
        let mut col = Vec::with_capacity(star.neighbors.len() + 1);
        col.push((k, scale));
        for &(u, w) in &star.neighbors {
            col.push((self.perm.new_of(u), -w / scale));
        }
        col[1..].sort_unstable_by_key(|&(row, _)| row);
        debug_assert!(col[1..].iter().all(|&(row, _)| row > k));
        self.cols[k] = col;

        let sampled = sample_clique(&star, rng)?;
        self.graph.insert_edges(&sampled);
        self.step += 1;
        Ok(())
    }

    pub fn finish(mut self, rng: &mut RngStream) -> Result<CholFactor> {
        while self.step < self.n.saturating_sub(1) {
            self.step(rng)?;
        }
        let final_diag = if self.n > 0 {
            self.graph.degree(self.perm.old_of(self.n - 1))
        } else {
            0.0
        };
        let dropped = self.graph.dropped_edges();
        let g = assemble_lower(self.n, self.cols);
        Ok(CholFactor {
            perm: self.perm,
            g,
            ext_row: None,
            kind: FactorKind::Laplacian,
            meta: FactorMeta { dropped_edges: dropped, final_diag, ..FactorMeta::default() },
        })
    }
}

pub(crate) fn assemble_lower(n: usize, cols: Vec<Vec<(usize, f64)>>) -> LowerTri {
    let mut col_ptr = Vec::with_capacity(n + 1);
    col_ptr.push(0usize);
    let nnz: usize = cols.iter().map(|c| c.len()).sum();
    let mut row_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    for col in &cols {
        for &(i, v) in col {
            row_idx.push(i);
            values.push(v);
        }
        col_ptr.push(row_idx.len());
    }
    LowerTri::from_parts(n, col_ptr, row_idx, values).expect("elimination emits valid lower-triangular columns")
}

/// Randomized Cholesky of an irreducible Laplacian under the given
/// elimination order. The final vertex is never eliminated; its column is
/// empty and its residual diagonal lands in `meta.final_diag`.
pub fn factor_laplacian(l: &SparseSym, p: &Perm, rng: &mut RngStream) -> Result<CholFactor> {
    Elimination::new(l, p)?.finish(rng)
}

/// Randomized Cholesky preconditioner for an SDDM matrix: factor the
/// (n+1)-sized Laplacian extension with the extension vertex pinned last,
/// return the nonsingular leading block plus the extension row.
pub fn factor_sddm(a: &SparseSym, ordering: &OrderingSpec, rng: &mut RngStream) -> Result<CholFactor> {
    let class = classify(a, DEFAULT_CLASSIFY_TOL);
    if class.kind != MatrixKind::Sddm {
        return Err(Error::WrongClass { expected: "SDDM", got: class.kind.as_str().into() });
    }
    let n = a.n();
    let ext = crate::classify::extend_sddm(a)?;

    let perm_a = ordering.order_matrix(a)?;
    let mut fwd = perm_a.forward_slice().to_vec();
    fwd.push(n); // extension vertex pinned last
    let perm_ext = Perm::from_forward(fwd)?;

    let f = factor_laplacian(&ext, &perm_ext, rng)?;

    // Split off the extension row; the extension's own (empty) column is the
    // dropped final column.
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut ext_row = Vec::new();
    for (i, j, v) in f.g.entries() {
        debug_assert!(j < n, "extension column must be empty");
        if i < n {
            cols[j].push((i, v));
        } else {
            ext_row.push((j, v));
        }
    }
    let g = assemble_lower(n, cols);
    Ok(CholFactor {
        perm: perm_a,
        g,
        ext_row: Some(ext_row),
        kind: FactorKind::Sddm,
        meta: FactorMeta { ordering: ordering.name(), nd_levels: ordering.nd_levels(), ..f.meta },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::{OrderingKind, OrderingSpec};

    fn path_laplacian(n: usize) -> SparseSym {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.push((i, i + 1, -1.0));
        }
        for i in 0..n {
            t.push((i, i, if i == 0 || i == n - 1 { 1.0 } else { 2.0 }));
        }
        SparseSym::from_coo(n, &t).unwrap()
    }

    fn ggt_dense(g: &LowerTri) -> Vec<Vec<f64>> {
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

    fn frobenius_diff(a: &SparseSym, m: &[Vec<f64>], p: &Perm) -> (f64, f64) {
        // compare m (permuted coords) against a
        let n = a.n();
        let mut dense_a = vec![vec![0.0; n]; n];
        for (i, j, v) in a.entries() {
            dense_a[p.new_of(i)][p.new_of(j)] = v;
        }
        let mut diff = 0.0;
        let mut norm = 0.0;
        for i in 0..n {
            for j in 0..n {
                diff += (dense_a[i][j] - m[i][j]).powi(2);
                norm += dense_a[i][j].powi(2);
            }
        }
        (diff.sqrt(), norm.sqrt())
    }

    #[test]
    fn k2_factors_exactly() {
        let l = path_laplacian(2);
        let f = factor_laplacian(&l, &Perm::identity(2), &mut RngStream::new(0)).unwrap();
        let col0: Vec<(usize, f64)> = f.g.col(0).collect();
        assert_eq!(col0, vec![(0, 1.0), (1, -1.0)]);
        assert_eq!(f.g.col(1).count(), 0);
        let m = ggt_dense(&f.g);
        assert_eq!(m, vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert_eq!(f.meta.final_diag, 0.0);
    }

    #[test]
    fn path_factorization_is_exact() {
        // every eliminated vertex on a path has <= 2 neighbors, so sampling
        // is deterministic and exact: G G' = L
        for n in [3usize, 10, 37] {
            let l = path_laplacian(n);
            let f = factor_laplacian(&l, &Perm::identity(n), &mut RngStream::new(17)).unwrap();
            let (diff, norm) = frobenius_diff(&l, &ggt_dense(&f.g), &f.perm);
            assert!(diff <= 1e-12 * norm, "n={n}: {diff} vs {norm}");
        }
    }

    #[test]
    fn star_graph_breakdown_free() {
        // center 0 with 3 leaves
        let l = SparseSym::from_coo(
            4,
            &[(0, 0, 3.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 1.0), (0, 1, -1.0), (0, 2, -1.0), (0, 3, -1.0)],
        )
        .unwrap();
        for seed in 0..20 {
            let f = factor_laplacian(&l, &Perm::identity(4), &mut RngStream::new(seed)).unwrap();
            for k in 0..3 {
                let (row, diag) = f.g.col(k).next().unwrap();
                assert_eq!(row, k);
                assert!(diag > 0.0);
            }
            assert!(f.meta.final_diag.abs() <= 1e-12 * 3.0);
        }
    }

    #[test]
    fn columns_sum_to_zero() {
        let l = path_laplacian(20);
        let f = factor_laplacian(&l, &Perm::identity(20), &mut RngStream::new(3)).unwrap();
        for k in 0..20 {
            let col: Vec<(usize, f64)> = f.g.col(k).collect();
            let sum: f64 = col.iter().map(|&(_, v)| v).sum();
            let norm: f64 = col.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
            assert!(sum.abs() <= 1e-10 * norm.max(1e-300), "column {k}: sum {sum}");
        }
    }

    #[test]
    fn edge_ledger_decrements_by_one() {
        let l = path_laplacian(4);
        let mut e = Elimination::new(&l, &Perm::identity(4)).unwrap();
        assert_eq!(schur_edge_count(e.graph()), 3);
        let mut rng = RngStream::new(1);
        e.step(&mut rng).unwrap();
        assert_eq!(schur_edge_count(e.graph()), 2);
        e.step(&mut rng).unwrap();
        assert_eq!(schur_edge_count(e.graph()), 1);
    }

    #[test]
    fn edge_ledger_on_random_connected_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..10 {
            let n = rng.random_range(5..60usize);
            let mut t = Vec::new();
            let mut off = vec![0.0; n];
            let add_edge = |t: &mut Vec<(usize, usize, f64)>, off: &mut Vec<f64>, i: usize, j: usize, w: f64| {
                t.push((i.min(j), i.max(j), -w));
                off[i] += w;
                off[j] += w;
            };
            for i in 1..n {
                let j = rng.random_range(0..i);
                add_edge(&mut t, &mut off, i, j, rng.random_range(0.1..2.0));
            }
            for _ in 0..n {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i != j && !t.iter().any(|&(a, b, _)| (a, b) == (i.min(j), i.max(j))) {
                    add_edge(&mut t, &mut off, i, j, rng.random_range(0.1..2.0));
                }
            }
            for i in 0..n {
                t.push((i, i, off[i]));
            }
            let l = SparseSym::from_coo(n, &t).unwrap();
            let m = (l.nnz() - n) / 2;
            let mut e = Elimination::new(&l, &Perm::identity(n)).unwrap();
            let mut stream = RngStream::new(trial);
            for k in 1..n {
                e.step(&mut stream).unwrap();
                assert_eq!(schur_edge_count(e.graph()), m - k);
                assert!(e.graph().live_pairs() <= m - k);
            }
        }
    }

    #[test]
    fn factorization_is_deterministic() {
        let l = path_laplacian(30);
        let a = factor_laplacian(&l, &Perm::identity(30), &mut RngStream::new(9)).unwrap();
        let b = factor_laplacian(&l, &Perm::identity(30), &mut RngStream::new(9)).unwrap();
        assert_eq!(a.g, b.g);
    }

    #[test]
    fn rejects_non_laplacian_and_reducible() {
        let sddm = SparseSym::from_coo(2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 1, 2.0)]).unwrap();
        assert!(matches!(
            factor_laplacian(&sddm, &Perm::identity(2), &mut RngStream::new(0)),
            Err(Error::WrongClass { .. })
        ));
        let two = SparseSym::from_coo(
            4,
            &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, -1.0), (2, 2, 1.0), (3, 3, 1.0), (2, 3, -1.0)],
        )
        .unwrap();
        assert!(matches!(
            factor_laplacian(&two, &Perm::identity(4), &mut RngStream::new(0)),
            Err(Error::Reducible)
        ));
    }

    #[test]
    fn sddm_factor_of_k3_extension_is_exact() {
        let a = SparseSym::from_coo(2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 1, 2.0)]).unwrap();
        let spec = OrderingSpec::new(OrderingKind::Natural);
        let f = factor_sddm(&a, &spec, &mut RngStream::new(0)).unwrap();
        assert_eq!(f.kind, FactorKind::Sddm);
        assert!(f.ext_row.is_some());
        // every column of the leading block keeps a positive diagonal
        for k in 0..2 {
            let (row, d) = f.g.col(k).next().unwrap();
            assert_eq!(row, k);
            assert!(d > 0.0);
        }
        let m = ggt_dense(&f.g);
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = [[2.0, -1.0], [-1.0, 2.0]][i][j];
                assert!((v - want).abs() <= 1e-12, "({i},{j}) {v}");
            }
        }
    }

    #[test]
    fn sddm_factor_accepts_reducible_input() {
        let a = SparseSym::from_coo(2, &[(0, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let f = factor_sddm(&a, &OrderingSpec::new(OrderingKind::Natural), &mut RngStream::new(4)).unwrap();
        let m = ggt_dense(&f.g);
        assert!((m[0][0] - 1.0).abs() <= 1e-12);
        assert!((m[1][1] - 2.0).abs() <= 1e-12);
        assert!(m[0][1].abs() <= 1e-12);
    }

    #[test]
    fn martingale_mean_small() {
        // cheap version of the acceptance run: 5-vertex Laplacian, the mean
        // of G G' over seeds approaches L
        let l = SparseSym::from_coo(
            5,
            &[
                (0, 1, -1.0),
                (0, 2, -2.0),
                (1, 2, -1.0),
                (1, 3, -0.5),
                (2, 4, -1.5),
                (3, 4, -1.0),
                (0, 0, 3.0),
                (1, 1, 2.5),
                (2, 2, 4.5),
                (3, 3, 1.5),
                (4, 4, 2.5),
            ],
        )
        .unwrap();
        let trials = 20_000;
        let mut mean = vec![vec![0.0; 5]; 5];
        for seed in 0..trials {
            let f = factor_laplacian(&l, &Perm::identity(5), &mut RngStream::new(seed)).unwrap();
            let m = ggt_dense(&f.g);
            for i in 0..5 {
                for j in 0..5 {
                    mean[i][j] += m[i][j] / trials as f64;
                }
            }
        }
        let mut dense_l = vec![vec![0.0; 5]; 5];
        for (i, j, v) in l.entries() {
            dense_l[i][j] = v;
        }
        for i in 0..5 {
            for j in 0..5 {
                assert!(
                    (mean[i][j] - dense_l[i][j]).abs() <= 0.05,
                    "entry ({i},{j}): mean {} want {}",
                    mean[i][j],
                    dense_l[i][j]
                );
            }
        }
    }
}
