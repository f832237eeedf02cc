//! Task-tree parallel randomized Cholesky: leaf blocks factor concurrently,
//! each task ships the sampled edges that land entirely outside its block up
//! to its parent, and separator tasks run after both children join.
//!
//! Determinism does not depend on scheduling: every task draws from its own
//! stream seeded by (seed, node id), children's buffers merge in fixed
//! left-then-right order, and tasks write disjoint column ranges. A fixed
//! (tree, seed) therefore produces byte-identical factors at any worker
//! count.

use std::collections::HashMap;

use crate::classify::{classify, extend_sddm, MatrixKind, DEFAULT_CLASSIFY_TOL};
use crate::factor::{assemble_lower, CholFactor, FactorKind, FactorMeta};
use crate::ordering::{tree_to_perm, NdTree};
use crate::sampling::{sample_clique, EdgeList, RngStream, Star};
use crate::sparse::{Perm, SparseSym};
use crate::{Error, Result};

/// Sampled edges whose endpoints both lie outside the producing task's
/// block, merged and sorted; the child-to-parent handoff unit.
#[derive(Debug, Clone, Default)]
pub struct SchurBuffer {
    pub edges: Vec<(usize, usize, f64)>,
}

/// Split an edge list against an index block: an edge goes to the first list
/// iff either endpoint is in the block (needed by the current node), else to
/// the second (needed by ancestors). C1 + C2 = C exactly.
pub fn separate_edges(block: &[usize], c: &EdgeList) -> (EdgeList, EdgeList) {
    let inside: std::collections::HashSet<usize> = block.iter().copied().collect();
    let mut c1 = Vec::new();
    let mut c2 = Vec::new();
    for &(i, j, w) in &c.edges {
        if inside.contains(&i) || inside.contains(&j) {
            c1.push((i, j, w));
        } else {
            c2.push((i, j, w));
        }
    }
    (EdgeList { edges: c1 }, EdgeList { edges: c2 })
}

#[derive(Debug, Clone, Copy)]
pub struct ParOptions {
    pub workers: usize,
    pub pin_cores: bool,
}

impl Default for ParOptions {
    fn default() -> Self {
        ParOptions { workers: 1, pin_cores: false }
    }
}

/// Execution plan: waves of node ids; tasks within a wave may run
/// concurrently, waves run in order. Children always land in an earlier wave
/// than their parent; leaves are distributed round-robin over workers.
pub fn task_schedule(tree: &NdTree, workers: usize) -> Vec<Vec<usize>> {
    let workers = workers.max(1);
    let mut waves = Vec::new();
    for level in tree.levels_bottom_up() {
        for chunk in level.chunks(workers) {
            waves.push(chunk.to_vec());
        }
    }
    waves
}

#[derive(Debug, Default, Clone)]
pub(crate) struct TaskCounters {
    pub initial_edges: usize,
    pub received_edges: usize,
    pub passthrough_edges: usize,
    pub eliminated_star_edges: usize,
    pub kept_clique_edges: usize,
    pub shipped_clique_edges: usize,
    pub merged_pairs: usize,
    pub eliminations: usize,
}

/// Insert an edge into the block-local adjacency (one- or two-sided depending
/// on which endpoints are in [lo, hi)); returns true when the pair already
/// existed and the weights merged.
fn insert_block_edge(adj: &mut [HashMap<usize, f64>], lo: usize, hi: usize, i: usize, j: usize, w: f64) -> bool {
    let mut merged = false;
    if i >= lo && i < hi {
        match adj[i - lo].entry(j) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                *e.get_mut() += w;
                merged = true;
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(w);
            }
        }
    }
    if j >= lo && j < hi {
        match adj[j - lo].entry(i) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                *e.get_mut() += w;
                merged = true;
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(w);
            }
        }
    }
    merged
}

struct TaskOutput {
    cols: Vec<Vec<(usize, f64)>>,
    buffer: SchurBuffer,
    final_diag: Option<f64>,
    counters: TaskCounters,
}

struct TaskContext<'a> {
    /// permuted position range owned by each node
    ranges: Vec<(usize, usize)>,
    /// initial edges per owner node, in permuted coordinates
    initial: Vec<Vec<(usize, usize, f64)>>,
    tree: &'a NdTree,
    seed: u64,
    n: usize,
}

const TASK_STREAM_BASE: u64 = 2;

/// Run one node task: merge child buffers and initial edges into a private
/// working graph, eliminate the block in permuted order, ship the leftovers.
fn run_task(ctx: &TaskContext<'_>, node: usize, left: &SchurBuffer, right: &SchurBuffer) -> Result<TaskOutput> {
    let (lo, hi) = ctx.ranges[node];
    let width = hi - lo;
    let mut adj: Vec<HashMap<usize, f64>> = vec![HashMap::new(); width];
    let mut out: HashMap<(usize, usize), f64> = HashMap::new();
    let mut out_order: Vec<(usize, usize)> = Vec::new();
    let mut counters = TaskCounters::default();

    let in_block = |v: usize| v >= lo && v < hi;

    counters.initial_edges = ctx.initial[node].len();
    counters.received_edges = left.edges.len() + right.edges.len();
    let incoming = ctx.initial[node]
        .iter()
        .chain(left.edges.iter())
        .chain(right.edges.iter());
    for &(i, j, w) in incoming {
        if in_block(i) || in_block(j) {
            if insert_block_edge(&mut adj, lo, hi, i, j, w) {
                counters.merged_pairs += 1;
            }
        } else {
            counters.passthrough_edges += 1;
            let key = (i.min(j), i.max(j));
            if let std::collections::hash_map::Entry::Vacant(e) = out.entry(key) {
                e.insert(w);
                out_order.push(key);
            } else {
                *out.get_mut(&key).unwrap() += w;
            }
        }
    }

    let mut rng = RngStream::substream(ctx.seed, TASK_STREAM_BASE + node as u64);
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); width];
    let mut final_diag = None;

    for k in lo..hi {
        // the globally last position is never eliminated
        if k == ctx.n - 1 {
            let mut ws: Vec<f64> = adj[k - lo].values().copied().collect();
            ws.sort_unstable_by(f64::total_cmp);
            final_diag = Some(ws.iter().sum());
            continue;
        }
        let mut neighbors: Vec<(usize, f64)> = adj[k - lo].drain().collect();
        neighbors.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        for &(u, _) in &neighbors {
            if in_block(u) {
                adj[u - lo].remove(&k);
            }
        }
        let deg: f64 = neighbors.iter().map(|&(_, w)| w).sum();
        if !deg.is_finite() || deg <= 0.0 {
            return Err(Error::BrokenPivot { step: k, value: deg });
        }
        counters.eliminations += 1;
        counters.eliminated_star_edges += neighbors.len();

        let scale = deg.sqrt();
        let mut col = Vec::with_capacity(neighbors.len() + 1);
        col.push((k, scale));
        for &(u, w) in &neighbors {
            col.push((u, -w / scale));
        }
        col[1..].sort_unstable_by_key(|&(row, _)| row);
        cols[k - lo] = col;

        let star = Star { center: k, neighbors, deg };
        let sampled = sample_clique(&star, &mut rng)?;
        for &(i, j, w) in &sampled.edges {
            if in_block(i) || in_block(j) {
                counters.kept_clique_edges += 1;
                if insert_block_edge(&mut adj, lo, hi, i, j, w) {
                    counters.merged_pairs += 1;
                }
            } else {
                counters.shipped_clique_edges += 1;
                let key = (i.min(j), i.max(j));
                if let std::collections::hash_map::Entry::Vacant(e) = out.entry(key) {
                    e.insert(w);
                    out_order.push(key);
                } else {
                    *out.get_mut(&key).unwrap() += w;
                }
            }
        }
    }

    debug_assert!(adj.iter().all(|m| m.is_empty()), "block elimination must consume its graph");

    out_order.sort_unstable();
    let edges = out_order.into_iter().map(|key| (key.0, key.1, out[&key])).collect();
    Ok(TaskOutput { cols, buffer: SchurBuffer { edges }, final_diag, counters })
}

#[cfg(target_os = "linux")]
fn pin_to_core(core: usize) {
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_ZERO(&mut set);
        libc::CPU_SET(core % libc::CPU_SETSIZE as usize, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set);
    }
}

#[cfg(not(target_os = "linux"))]
fn pin_to_core(_core: usize) {}

pub(crate) fn execute_tree(
    l: &SparseSym,
    tree: &NdTree,
    seed: u64,
    opts: &ParOptions,
) -> Result<(Perm, Vec<Vec<(usize, f64)>>, f64, Vec<TaskCounters>)> {
    let n = l.n();
    if tree.n() != n {
        return Err(Error::TreeMismatch(format!("tree covers {} indices, matrix has {n}", tree.n())));
    }
    let perm = tree_to_perm(tree)?;

    // node ranges in permuted coordinates and per-vertex owners
    let node_count = tree.node_count();
    let mut ranges = vec![(0usize, 0usize); node_count];
    let mut node_of = vec![usize::MAX; n];
    let mut depth = vec![0u32; node_count];
    {
        let mut cursor = 0usize;
        fn walk(tree: &NdTree, node: usize, d: u32, cursor: &mut usize, ranges: &mut [(usize, usize)], depth: &mut [u32]) {
            depth[node] = d;
            if let Some((lc, rc)) = tree.children(node) {
                walk(tree, lc, d + 1, cursor, ranges, depth);
                walk(tree, rc, d + 1, cursor, ranges, depth);
            }
            let lo = *cursor;
            *cursor += tree.indices(node).len();
            ranges[node] = (lo, *cursor);
        }
        walk(tree, 0, 0, &mut cursor, &mut ranges, &mut depth);
    }
    // ranges are assigned post-order, so each node's own block sits after its
    // subtree; recompute owners from the permutation directly
    for (node, &(lo, hi)) in ranges.iter().enumerate() {
        node_of[lo..hi].fill(node);
    }

    // distribute initial edges to the deeper endpoint's node
    let mut initial: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); node_count];
    for (i, j, v) in l.entries() {
        if i >= j {
            continue;
        }
        if v > 0.0 {
            return Err(Error::WrongClass { expected: "nonpositive off-diagonals", got: format!("entry ({i},{j}) = {v}") });
        }
        let (pi, pj) = (perm.new_of(i), perm.new_of(j));
        let (a, b) = (node_of[pi], node_of[pj]);
        let owner = if depth[a] >= depth[b] { a } else { b };
        let (mut up, target) = if owner == a { (a, b) } else { (b, a) };
        while up != target && up != 0 {
            up = (up - 1) / 2;
        }
        if up != target {
            return Err(Error::TreeMismatch(format!("edge ({i},{j}) joins unrelated tree blocks")));
        }
        initial[owner].push((pi, pj, -v));
    }

    let ctx = TaskContext { ranges, initial, tree, seed, n };
    let waves = task_schedule(tree, opts.workers);
    let mut results: Vec<Option<TaskOutput>> = (0..node_count).map(|_| None).collect();

    for wave in waves {
        let empty = SchurBuffer::default();
        let mut outputs: Vec<(usize, Result<TaskOutput>)> = Vec::with_capacity(wave.len());
        let buffers: Vec<(usize, SchurBuffer, SchurBuffer)> = wave
            .iter()
            .map(|&node| {
                let (lb, rb) = match ctx.tree.children(node) {
                    Some((lc, rc)) => (
                        results[lc].as_ref().map(|r| r.buffer.clone()).unwrap_or_default(),
                        results[rc].as_ref().map(|r| r.buffer.clone()).unwrap_or_default(),
                    ),
                    None => (empty.clone(), empty.clone()),
                };
                (node, lb, rb)
            })
            .collect();

        if opts.workers <= 1 || wave.len() <= 1 {
            for (node, lb, rb) in &buffers {
                outputs.push((*node, run_task(&ctx, *node, lb, rb)));
            }
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = buffers
                    .iter()
                    .enumerate()
                    .map(|(slot, (node, lb, rb))| {
                        let ctx_ref = &ctx;
                        let pin = opts.pin_cores;
                        scope.spawn(move || {
                            if pin {
                                pin_to_core(slot);
                            }
                            (*node, run_task(ctx_ref, *node, lb, rb))
                        })
                    })
                    .collect();
                for h in handles {
                    outputs.push(h.join().expect("task thread panicked"));
                }
            });
        }

        for (node, out) in outputs {
            results[node] = Some(out?);
        }
    }

    let root = results[0].as_ref().expect("root task must run");
    debug_assert!(root.buffer.edges.is_empty(), "nothing lies outside the root block");
    let final_diag = root.final_diag.unwrap_or(0.0);

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut counters = Vec::with_capacity(node_count);
    for node in 0..node_count {
        let out = results[node].take().expect("all tasks ran");
        let (lo, _) = ctx.ranges[node];
        for (offset, col) in out.cols.into_iter().enumerate() {
            cols[lo + offset] = col;
        }
        counters.push(out.counters);
    }
    Ok((perm, cols, final_diag, counters))
}

/// Parallel randomized Cholesky of an irreducible Laplacian over a
/// nested-dissection task tree.
pub fn par_factor_laplacian(l: &SparseSym, tree: &NdTree, seed: u64, opts: &ParOptions) -> Result<CholFactor> {
    let class = classify(l, DEFAULT_CLASSIFY_TOL);
    if class.kind != MatrixKind::Laplacian {
        return Err(Error::WrongClass { expected: "Laplacian", got: class.kind.as_str().into() });
    }
    if !class.irreducible {
        return Err(Error::Reducible);
    }
    let (perm, cols, final_diag, _) = execute_tree(l, tree, seed, opts)?;
    let g = assemble_lower(l.n(), cols);
    Ok(CholFactor {
        perm,
        g,
        ext_row: None,
        kind: FactorKind::Laplacian,
        meta: FactorMeta { seed, final_diag, ordering: "nd".into(), nd_levels: Some(tree.levels()), ..FactorMeta::default() },
    })
}

/// Parallel SDDM preconditioner: extend, pin the extension vertex into the
/// root separator, factor in parallel, strip the extension row back off.
pub fn par_factor_sddm(a: &SparseSym, tree: &NdTree, seed: u64, opts: &ParOptions) -> Result<CholFactor> {
    let class = classify(a, DEFAULT_CLASSIFY_TOL);
    if class.kind != MatrixKind::Sddm {
        return Err(Error::WrongClass { expected: "SDDM", got: class.kind.as_str().into() });
    }
    let n = a.n();
    let ext = extend_sddm(a)?;
    let mut ext_tree = tree.clone();
    ext_tree.append_to_root(n);

    let (perm_ext, cols_ext, final_diag, _) = execute_tree(&ext, &ext_tree, seed, opts)?;

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut ext_row = Vec::new();
    for (k, col) in cols_ext.into_iter().enumerate() {
        if k == n {
            debug_assert!(col.is_empty());
            continue;
        }
        for (i, v) in col {
            if i < n {
                cols[k].push((i, v));
            } else {
                ext_row.push((k, v));
            }
        }
    }
    let g = assemble_lower(n, cols);
    let mut fwd = Vec::with_capacity(n);
    for old in 0..n {
        fwd.push(perm_ext.new_of(old));
    }
    let perm = Perm::from_forward(fwd)?;
    Ok(CholFactor {
        perm,
        g,
        ext_row: Some(ext_row),
        kind: FactorKind::Sddm,
        meta: FactorMeta { seed, final_diag, ordering: "nd".into(), nd_levels: Some(tree.levels()), ..FactorMeta::default() },
    })
}
