//! Fill-reducing orderings: exact minimum degree over a quotient graph,
//! recursive-bisection nested dissection (with minimum degree inside the
//! leaves), and the natural/random orderings used for comparisons.
//!
//! The partitioner is built in: BFS level sets grown from a pseudo-peripheral
//! vertex pick the cut, the separator is the smaller endpoint set of the cut
//! edges, and the leftover components are re-packed greedily onto the two
//! sides. An externally computed permutation can be supplied instead.

use crate::sampling::RngStream;
use crate::sparse::{Perm, SparseSym};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingKind {
    Natural,
    Random,
    MinDegree,
    NestedDissection,
    /// Externally supplied elimination order.
    External,
}

#[derive(Debug, Clone)]
pub struct OrderingSpec {
    pub kind: OrderingKind,
    /// Separator levels for nested dissection (>= 1).
    pub nd_levels: u32,
    /// Seed for the random ordering.
    pub seed: u64,
    /// The elimination order for `External`.
    pub external: Option<Perm>,
}

impl OrderingSpec {
    pub fn new(kind: OrderingKind) -> Self {
        OrderingSpec { kind, nd_levels: 1, seed: 0, external: None }
    }

    pub fn nd(levels: u32) -> Self {
        OrderingSpec { kind: OrderingKind::NestedDissection, nd_levels: levels, seed: 0, external: None }
    }

    pub fn random(seed: u64) -> Self {
        OrderingSpec { kind: OrderingKind::Random, nd_levels: 1, seed, external: None }
    }

    pub fn external(perm: Perm) -> Self {
        OrderingSpec { kind: OrderingKind::External, nd_levels: 1, seed: 0, external: Some(perm) }
    }

    pub fn name(&self) -> String {
        match self.kind {
            OrderingKind::Natural => "natural".into(),
            OrderingKind::Random => "random".into(),
            OrderingKind::MinDegree => "mindeg".into(),
            OrderingKind::NestedDissection => "nd".into(),
            OrderingKind::External => "external".into(),
        }
    }

    pub fn nd_levels(&self) -> Option<u32> {
        matches!(self.kind, OrderingKind::NestedDissection).then_some(self.nd_levels)
    }

    /// The permutation alone (tree discarded for ND).
    pub fn order_matrix(&self, a: &SparseSym) -> Result<Perm> {
        Ok(self.order_with_tree(a)?.0)
    }

    pub fn order_with_tree(&self, a: &SparseSym) -> Result<(Perm, Option<NdTree>)> {
        let n = a.n();
        match self.kind {
            OrderingKind::Natural => Ok((Perm::identity(n), None)),
            OrderingKind::Random => {
                let mut order: Vec<usize> = (0..n).collect();
                let mut rng = RngStream::substream(self.seed, 1);
                for i in (1..n).rev() {
                    let j = rng.uniform_index(i + 1);
                    order.swap(i, j);
                }
                Ok((Perm::from_inverse(order)?, None))
            }
            OrderingKind::MinDegree => Ok((mindeg_order(a), None)),
            OrderingKind::NestedDissection => {
                let tree = build_nd_tree(a, self.nd_levels)?;
                let perm = tree_to_perm(&tree)?;
                Ok((perm, Some(tree)))
            }
            OrderingKind::External => {
                let p = self.external.clone().ok_or_else(|| Error::Ordering("no external permutation supplied".into()))?;
                if p.n() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: p.n() });
                }
                Ok((p, None))
            }
        }
    }
}

/// Local-index adjacency view of a vertex subset.
struct SubGraph {
    /// local -> original index
    verts: Vec<usize>,
    adj: Vec<Vec<u32>>,
}

impl SubGraph {
    fn whole(a: &SparseSym) -> Self {
        let n = a.n();
        let mut adj = vec![Vec::new(); n];
        for j in 0..n {
            for (i, _) in a.col(j) {
                if i != j {
                    adj[j].push(i as u32);
                }
            }
        }
        SubGraph { verts: (0..n).collect(), adj }
    }

    fn induced(&self, locals: &[u32]) -> SubGraph {
        let mut map = vec![u32::MAX; self.adj.len()];
        for (new, &old) in locals.iter().enumerate() {
            map[old as usize] = new as u32;
        }
        let verts = locals.iter().map(|&l| self.verts[l as usize]).collect();
        let adj = locals
            .iter()
            .map(|&l| {
                self.adj[l as usize]
                    .iter()
                    .filter_map(|&u| (map[u as usize] != u32::MAX).then_some(map[u as usize]))
                    .collect()
            })
            .collect();
        SubGraph { verts, adj }
    }

    fn len(&self) -> usize {
        self.verts.len()
    }
}

// ---------------------------------------------------------------------------
// exact minimum degree on a quotient graph
// ---------------------------------------------------------------------------

const LIVE: u8 = 0;
const MERGED: u8 = 1;
const ELIMINATED: u8 = 2;

struct MinDegree {
    avar: Vec<Vec<u32>>,
    ael: Vec<Vec<u32>>,
    evars: Vec<Vec<u32>>,
    elem_dead: Vec<bool>,
    state: Vec<u8>,
    size: Vec<u32>,
    members: Vec<Vec<u32>>,
    degree: Vec<u32>,
    mark: Vec<u32>,
    stamp: u32,
    live_count: u32,
}

impl MinDegree {
    fn new(adj: &[Vec<u32>]) -> Self {
        let n = adj.len();
        MinDegree {
            avar: adj.to_vec(),
            ael: vec![Vec::new(); n],
            evars: vec![Vec::new(); n],
            elem_dead: vec![false; n],
            state: vec![LIVE; n],
            size: vec![1; n],
            members: vec![Vec::new(); n],
            degree: adj.iter().map(|a| a.len() as u32).collect(),
            mark: vec![0; n],
            stamp: 0,
            live_count: n as u32,
        }
    }

    fn bump(&mut self) -> u32 {
        self.stamp += 1;
        self.stamp
    }

    fn output_supervar(&self, p: u32, out: &mut Vec<u32>) {
        let mut group = vec![p];
        group.extend_from_slice(&self.members[p as usize]);
        group.sort_unstable();
        out.extend_from_slice(&group);
    }

    /// Reachable set of pivot p: live variables adjacent directly or through
    /// p's elements.
    fn reach_of(&mut self, p: u32) -> Vec<u32> {
        let stamp = self.bump();
        self.mark[p as usize] = stamp;
        let mut reach = Vec::new();
        for &u in &self.avar[p as usize] {
            if self.state[u as usize] == LIVE && self.mark[u as usize] != stamp {
                self.mark[u as usize] = stamp;
                reach.push(u);
            }
        }
        for &e in &self.ael[p as usize] {
            if self.elem_dead[e as usize] {
                continue;
            }
            for &u in &self.evars[e as usize] {
                if self.state[u as usize] == LIVE && self.mark[u as usize] != stamp {
                    self.mark[u as usize] = stamp;
                    reach.push(u);
                }
            }
        }
        reach.sort_unstable();
        reach
    }

    /// Exact external degree of v in original-vertex units.
    fn exact_degree(&mut self, v: u32) -> u32 {
        let stamp = self.bump();
        self.mark[v as usize] = stamp;
        let mut deg = 0u32;
        for &u in &self.avar[v as usize] {
            if self.state[u as usize] == LIVE && self.mark[u as usize] != stamp {
                self.mark[u as usize] = stamp;
                deg += self.size[u as usize];
            }
        }
        for k in 0..self.ael[v as usize].len() {
            let e = self.ael[v as usize][k];
            for i in 0..self.evars[e as usize].len() {
                let u = self.evars[e as usize][i];
                if self.state[u as usize] == LIVE && self.mark[u as usize] != stamp {
                    self.mark[u as usize] = stamp;
                    deg += self.size[u as usize];
                }
            }
        }
        deg
    }

    fn eliminate(&mut self, p: u32, heap: &mut std::collections::BinaryHeap<std::cmp::Reverse<(u32, u32)>>, out: &mut Vec<u32>) {
        let reach = self.reach_of(p);

        // p's elements are absorbed into the new element p
        for &e in &std::mem::take(&mut self.ael[p as usize]) {
            self.elem_dead[e as usize] = true;
            self.evars[e as usize] = Vec::new();
        }
        self.avar[p as usize] = Vec::new();
        self.state[p as usize] = ELIMINATED;
        self.live_count -= self.size[p as usize];
        self.output_supervar(p, out);
        self.evars[p as usize] = reach.clone();

        // prune each boundary variable: drop edges now covered by element p,
        // drop dead elements, link the new element
        let stamp = self.bump();
        for &v in &reach {
            self.mark[v as usize] = stamp;
        }
        for &v in &reach {
            let state = &self.state;
            let mark = &self.mark;
            self.avar[v as usize].retain(|&u| state[u as usize] == LIVE && mark[u as usize] != stamp);
            let elem_dead = &self.elem_dead;
            self.ael[v as usize].retain(|&e| !elem_dead[e as usize]);
            self.ael[v as usize].push(p);
            self.avar[v as usize].sort_unstable();
            self.ael[v as usize].sort_unstable();
        }

        // compact element boundaries touched this round to live entries
        let mut touched: Vec<u32> = reach.iter().flat_map(|&v| self.ael[v as usize].iter().copied()).collect();
        touched.sort_unstable();
        touched.dedup();
        for e in touched {
            let state = &self.state;
            self.evars[e as usize].retain(|&u| state[u as usize] == LIVE);
        }

        // supervariable detection: group boundary variables with identical
        // pruned adjacency (their mutual edges are gone, so plain equality)
        let mut buckets: std::collections::HashMap<u64, Vec<u32>> = std::collections::HashMap::new();
        for &v in &reach {
            let mut h = 1469598103934665603u64;
            for &u in &self.avar[v as usize] {
                h = (h ^ (u as u64 + 1)).wrapping_mul(1099511628211);
            }
            h = h.wrapping_add(0x9e3779b97f4a7c15);
            for &e in &self.ael[v as usize] {
                h = (h ^ (e as u64 + 1)).wrapping_mul(1099511628211);
            }
            buckets.entry(h).or_default().push(v);
        }
        for group in buckets.values() {
            if group.len() < 2 {
                continue;
            }
            let mut group = group.clone();
            group.sort_unstable();
            let mut reps: Vec<u32> = Vec::new();
            'outer: for &w in &group {
                if self.state[w as usize] != LIVE {
                    continue;
                }
                for &r in &reps {
                    if self.avar[w as usize] == self.avar[r as usize] && self.ael[w as usize] == self.ael[r as usize] {
                        // merge w into r
                        self.state[w as usize] = MERGED;
                        self.size[r as usize] += self.size[w as usize];
                        let mut absorbed = std::mem::take(&mut self.members[w as usize]);
                        absorbed.push(w);
                        self.members[r as usize].extend_from_slice(&absorbed);
                        self.avar[w as usize] = Vec::new();
                        self.ael[w as usize] = Vec::new();
                        continue 'outer;
                    }
                }
                reps.push(w);
            }
        }

        // exact degrees for the surviving boundary variables
        for &v in &reach {
            if self.state[v as usize] != LIVE {
                continue;
            }
            let d = self.exact_degree(v);
            self.degree[v as usize] = d;
            heap.push(std::cmp::Reverse((d, v)));
        }
    }
}

/// Exact minimum-degree elimination order on local adjacency; ties broken by
/// smallest id, indistinguishable vertices eliminated together.
fn mindeg_local(adj: &[Vec<u32>]) -> Vec<u32> {
    let n = adj.len();
    let mut md = MinDegree::new(adj);
    let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<(u32, u32)>> = (0..n as u32)
        .map(|v| std::cmp::Reverse((md.degree[v as usize], v)))
        .collect();
    let mut out: Vec<u32> = Vec::with_capacity(n);

    while let Some(std::cmp::Reverse((d, p))) = heap.pop() {
        if md.state[p as usize] != LIVE || d != md.degree[p as usize] {
            continue;
        }
        // Once the minimum is adjacent to everything else, eliminating it
        // turns the remainder into a clique: the rest of an exact MD order is
        // (size desc, id asc).
        if d == md.live_count - md.size[p as usize] && d > 0 {
            md.output_supervar(p, &mut out);
            let mut rest: Vec<u32> = (0..n as u32).filter(|&v| v != p && md.state[v as usize] == LIVE).collect();
            rest.sort_unstable_by(|&a, &b| {
                md.size[b as usize].cmp(&md.size[a as usize]).then(a.cmp(&b))
            });
            for v in rest {
                md.output_supervar(v, &mut out);
            }
            break;
        }
        md.eliminate(p, &mut heap, &mut out);
    }
    debug_assert_eq!(out.len(), n);
    out
}

/// Exact minimum-degree ordering of the whole matrix.
pub fn mindeg_order(a: &SparseSym) -> Perm {
    let sub = SubGraph::whole(a);
    let order = mindeg_local(&sub.adj);
    Perm::from_inverse(order.into_iter().map(|v| v as usize).collect())
        .expect("minimum degree emits each vertex exactly once")
}

// ---------------------------------------------------------------------------
// bisection
// ---------------------------------------------------------------------------

pub const DEFAULT_BALANCE: f64 = 0.6;

#[derive(Debug, Clone)]
pub struct Bisection {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub separator: Vec<usize>,
}

/// Split the matrix graph into left / right / separator with no left-right
/// edges, aiming for max(|left|, |right|) <= balance * (|left| + |right|).
pub fn bisect(a: &SparseSym, balance: f64) -> Bisection {
    let sub = SubGraph::whole(a);
    let (l, r, s) = bisect_sub(&sub, balance);
    Bisection {
        left: to_original(&sub, l),
        right: to_original(&sub, r),
        separator: to_original(&sub, s),
    }
}

fn to_original(sub: &SubGraph, locals: Vec<u32>) -> Vec<usize> {
    let mut v: Vec<usize> = locals.into_iter().map(|l| sub.verts[l as usize]).collect();
    v.sort_unstable();
    v
}

fn components_local(adj: &[Vec<u32>], active: impl Fn(u32) -> bool) -> Vec<Vec<u32>> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    let mut stack = Vec::new();
    for s in 0..n as u32 {
        if seen[s as usize] || !active(s) {
            continue;
        }
        seen[s as usize] = true;
        stack.push(s);
        let mut comp = vec![];
        while let Some(u) = stack.pop() {
            comp.push(u);
            for &v in &adj[u as usize] {
                if active(v) && !seen[v as usize] {
                    seen[v as usize] = true;
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Greedily pack whole components onto the lighter of two sides.
fn pack_components(mut comps: Vec<Vec<u32>>) -> (Vec<u32>, Vec<u32>) {
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a.first().cmp(&b.first())));
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for c in comps {
        if left.len() <= right.len() {
            left.extend(c);
        } else {
            right.extend(c);
        }
    }
    (left, right)
}

/// (vertex, level) pairs in BFS order from `root`.
fn bfs_levels(adj: &[Vec<u32>], root: u32) -> Vec<(u32, u32)> {
    let mut level = vec![u32::MAX; adj.len()];
    let mut order = Vec::new();
    level[root as usize] = 0;
    order.push((root, 0));
    let mut head = 0;
    while head < order.len() {
        let (u, lu) = order[head];
        head += 1;
        for &v in &adj[u as usize] {
            if level[v as usize] == u32::MAX {
                level[v as usize] = lu + 1;
                order.push((v, lu + 1));
            }
        }
    }
    order
}

fn bisect_sub(sub: &SubGraph, balance: f64) -> (Vec<u32>, Vec<u32>, Vec<u32>) {
    let n = sub.len();
    if n == 0 {
        return (vec![], vec![], vec![]);
    }
    if n == 1 {
        return (vec![0], vec![], vec![]);
    }

    let comps = components_local(&sub.adj, |_| true);
    if comps.len() > 1 {
        let largest = comps.iter().map(|c| c.len()).max().unwrap();
        if (largest as f64) <= balance * n as f64 {
            let (l, r) = pack_components(comps);
            return (l, r, vec![]);
        }
        // split the dominant component, then pack the rest around it
        let big = comps.iter().max_by_key(|c| c.len()).unwrap().clone();
        let big_sub = sub.induced(&big);
        let (bl, br, bs) = bisect_connected(&big_sub, balance);
        let mut left: Vec<u32> = bl.into_iter().map(|l| big[l as usize]).collect();
        let mut right: Vec<u32> = br.into_iter().map(|l| big[l as usize]).collect();
        let sep: Vec<u32> = bs.into_iter().map(|l| big[l as usize]).collect();
        let mut others: Vec<Vec<u32>> = comps.into_iter().filter(|c| c != &big).collect();
        others.sort_by(|a, b| b.len().cmp(&a.len()).then(a.first().cmp(&b.first())));
        for c in others {
            if left.len() <= right.len() {
                left.extend(c);
            } else {
                right.extend(c);
            }
        }
        return (left, right, sep);
    }

    bisect_connected(sub, balance)
}

fn bisect_connected(sub: &SubGraph, balance: f64) -> (Vec<u32>, Vec<u32>, Vec<u32>) {
    let n = sub.len();

    // pseudo-peripheral root: start anywhere, jump to the farthest vertex twice
    let mut root = 0u32;
    for _ in 0..2 {
        let order = bfs_levels(&sub.adj, root);
        let max_level = order.last().unwrap().1;
        root = order
            .iter()
            .filter(|&&(_, l)| l == max_level)
            .map(|&(v, _)| v)
            .min()
            .unwrap();
    }

    let order = bfs_levels(&sub.adj, root);
    let max_level = order.last().unwrap().1;
    let mut level = vec![0u32; n];
    let mut level_size = vec![0usize; max_level as usize + 1];
    for &(v, l) in &order {
        level[v as usize] = l;
        level_size[l as usize] += 1;
    }
    if max_level == 0 {
        // no BFS depth (complete graph on <= ... ): split arbitrarily but verify edges
        // cannot happen for n > 1 connected, since root has neighbors at level 1
        unreachable!("connected graph with more than one vertex has BFS depth");
    }

    // candidate separators at every cut, from either side of the cut
    #[derive(Clone)]
    struct Cand {
        feasible: bool,
        sep_len: usize,
        imbalance: usize,
        cut: u32,
        take_upper: bool,
    }
    let mut best: Option<Cand> = None;
    let mut prefix = 0usize;
    for cut in 0..max_level {
        prefix += level_size[cut as usize];
        let suffix = n - prefix;
        for take_upper in [false, true] {
            let sep_len = (0..n as u32)
                .filter(|&v| {
                    let lv = level[v as usize];
                    if take_upper {
                        lv == cut + 1 && sub.adj[v as usize].iter().any(|&u| level[u as usize] == cut)
                    } else {
                        lv == cut && sub.adj[v as usize].iter().any(|&u| level[u as usize] == cut + 1)
                    }
                })
                .count();
            let (l, r) = if take_upper { (prefix, suffix - sep_len) } else { (prefix - sep_len, suffix) };
            let total = l + r;
            let feasible = total == 0 || l.max(r) as f64 <= balance * total as f64;
            let cand = Cand { feasible, sep_len, imbalance: l.abs_diff(r), cut, take_upper };
            let better = match &best {
                None => true,
                Some(b) => {
                    (cand.feasible, std::cmp::Reverse(cand.sep_len), std::cmp::Reverse(cand.imbalance))
                        > (b.feasible, std::cmp::Reverse(b.sep_len), std::cmp::Reverse(b.imbalance))
                }
            };
            if better {
                best = Some(cand);
            }
        }
    }
    let best = best.unwrap();

    let mut sep = Vec::new();
    let mut in_sep = vec![false; n];
    for v in 0..n as u32 {
        let lv = level[v as usize];
        let hit = if best.take_upper {
            lv == best.cut + 1 && sub.adj[v as usize].iter().any(|&u| level[u as usize] == best.cut)
        } else {
            lv == best.cut && sub.adj[v as usize].iter().any(|&u| level[u as usize] == best.cut + 1)
        };
        if hit {
            in_sep[v as usize] = true;
            sep.push(v);
        }
    }

    // re-pack the remaining components greedily: separator removal may have
    // split a side further, and packing whole components keeps the no-cross
    // property while improving balance
    let comps = components_local(&sub.adj, |v| !in_sep[v as usize]);
    let (left, right) = pack_components(comps);
    (left, right, sep)
}

// ---------------------------------------------------------------------------
// nested-dissection tree
// ---------------------------------------------------------------------------

/// Full binary tree of `levels` separator levels; internal nodes hold their
/// separator, leaves hold a minimum-degree-ordered index block. Doubles as
/// the parallel task graph. Node ids are heap order: root 0, children of i at
/// 2i+1 / 2i+2.
#[derive(Debug, Clone)]
pub struct NdTree {
    levels: u32,
    n: usize,
    /// per-node owned indices (original ids); leaves in elimination order,
    /// separators ascending
    blocks: Vec<Vec<usize>>,
}

impl NdTree {
    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        (1 << (self.levels + 1)) - 1
    }

    pub fn leaf_count(&self) -> usize {
        1 << self.levels
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node >= (1 << self.levels) - 1
    }

    pub fn children(&self, node: usize) -> Option<(usize, usize)> {
        (!self.is_leaf(node)).then_some((2 * node + 1, 2 * node + 2))
    }

    pub fn indices(&self, node: usize) -> &[usize] {
        &self.blocks[node]
    }

    /// Leaf node ids, left to right.
    pub fn leaves(&self) -> std::ops::Range<usize> {
        (1 << self.levels) - 1..self.node_count()
    }

    /// Node ids grouped by depth, deepest first.
    pub fn levels_bottom_up(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for depth in (0..=self.levels).rev() {
            let lo = (1usize << depth) - 1;
            let hi = (1usize << (depth + 1)) - 1;
            out.push((lo..hi).collect());
        }
        out
    }

    /// Append a vertex to the root separator (used to pin the SDDM extension
    /// vertex last).
    pub(crate) fn append_to_root(&mut self, v: usize) {
        self.blocks[0].push(v);
        self.n += 1;
    }
}

/// Recursive-bisection nested dissection to `levels` separator levels, then
/// minimum degree inside each leaf.
pub fn build_nd_tree(a: &SparseSym, levels: u32) -> Result<NdTree> {
    if levels < 1 {
        return Err(Error::Ordering("nested dissection needs at least one level".into()));
    }
    let n = a.n();
    if (1usize << levels) > n {
        return Err(Error::Ordering(format!("graph of size {n} too small for {levels} dissection levels")));
    }
    let node_count = (1usize << (levels + 1)) - 1;
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); node_count];
    let first_leaf = (1usize << levels) - 1;

    fn recurse(sub: SubGraph, node: usize, first_leaf: usize, balance: f64, blocks: &mut [Vec<usize>]) {
        if node >= first_leaf {
            let order = mindeg_local(&sub.adj);
            blocks[node] = order.into_iter().map(|l| sub.verts[l as usize]).collect();
            return;
        }
        let (l, r, s) = bisect_sub(&sub, balance);
        let mut sep: Vec<usize> = s.iter().map(|&x| sub.verts[x as usize]).collect();
        sep.sort_unstable();
        blocks[node] = sep;
        let left = sub.induced(&l);
        let right = sub.induced(&r);
        recurse(left, 2 * node + 1, first_leaf, balance, blocks);
        recurse(right, 2 * node + 2, first_leaf, balance, blocks);
    }

    recurse(SubGraph::whole(a), 0, first_leaf, DEFAULT_BALANCE, &mut blocks);
    Ok(NdTree { levels, n, blocks })
}

/// Post-order concatenation of the tree blocks as an elimination order:
/// leaves first, separators bottom-up, root separator last.
pub fn tree_to_perm(t: &NdTree) -> Result<Perm> {
    let mut order = Vec::with_capacity(t.n());
    fn post(t: &NdTree, node: usize, order: &mut Vec<usize>) {
        if let Some((l, r)) = t.children(node) {
            post(t, l, order);
            post(t, r, order);
        }
        order.extend_from_slice(t.indices(node));
    }
    post(t, 0, &mut order);
    Perm::from_inverse(order)
}
