//! Shortest-path engines on scaled integer weights.
//!
//! Everything here is deterministic: heaps order by (distance, vertex id),
//! path extraction descends greedily to the smallest-id neighbor on a
//! geodesic, so ties always resolve to the lexicographically smallest vertex
//! sequence.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::graph::{MetricGraph, VertexId};
use crate::num::{SDist, Thresh, INF};

/// Epoch-stamped sparse distance map; reusable across many small searches
/// without clearing a full-size table each time.
pub struct SparseDist {
    stamp: Vec<u32>,
    epoch: u32,
    dist: Vec<SDist>,
    touched: Vec<VertexId>,
}

impl SparseDist {
    pub fn new(n: usize) -> Self {
        SparseDist {
            stamp: vec![0; n],
            epoch: 0,
            dist: vec![INF; n],
            touched: Vec::new(),
        }
    }

    pub fn begin(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            // wrapped: invalidate everything explicitly
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.touched.clear();
    }

    #[inline]
    pub fn set(&mut self, v: VertexId, d: SDist) {
        if self.stamp[v] != self.epoch {
            self.stamp[v] = self.epoch;
            self.touched.push(v);
        }
        self.dist[v] = d;
    }

    #[inline]
    pub fn get(&self, v: VertexId) -> SDist {
        if self.stamp[v] == self.epoch {
            self.dist[v]
        } else {
            INF
        }
    }

    #[inline]
    pub fn contains(&self, v: VertexId) -> bool {
        self.stamp[v] == self.epoch && self.dist[v] != INF
    }

    /// Vertices assigned a finite distance in the current epoch, in settle order.
    pub fn touched(&self) -> &[VertexId] {
        &self.touched
    }
}

/// Full single/multi-source Dijkstra; fills `dist` (resized as needed).
pub fn dijkstra_full(g: &MetricGraph, sources: &[VertexId], dist: &mut Vec<SDist>) {
    let n = g.vertex_count();
    dist.clear();
    dist.resize(n, INF);
    let mut heap: BinaryHeap<Reverse<(SDist, VertexId)>> = BinaryHeap::new();
    for &s in sources {
        if dist[s] != 0 {
            dist[s] = 0;
            heap.push(Reverse((0, s)));
        }
    }
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for (w, e) in g.neighbors(v) {
            let nd = d + g.edge_weight(e);
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((nd, w)));
            }
        }
    }
}

/// Single-pair Dijkstra with early exit; returns the scaled distance.
pub fn dijkstra_pair(g: &MetricGraph, from: VertexId, to: VertexId, sd: &mut SparseDist) -> SDist {
    sd.begin();
    let mut heap: BinaryHeap<Reverse<(SDist, VertexId)>> = BinaryHeap::new();
    sd.set(from, 0);
    heap.push(Reverse((0, from)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > sd.get(v) {
            continue;
        }
        if v == to {
            return d;
        }
        for (w, e) in g.neighbors(v) {
            let nd = d + g.edge_weight(e);
            if nd < sd.get(w) {
                sd.set(w, nd);
                heap.push(Reverse((nd, w)));
            }
        }
    }
    INF
}

/// Bound mode for truncated searches.
#[derive(Clone, Copy)]
pub enum Bound<'a> {
    /// Settle vertices with distance strictly below the threshold (open ball).
    Below(&'a Thresh),
    /// Settle vertices with distance at most the threshold (closed ball).
    AtMost(&'a Thresh),
    /// No bound (full search), but through the sparse map.
    None,
}

impl Bound<'_> {
    #[inline]
    fn admits(&self, d: SDist) -> bool {
        match self {
            Bound::Below(t) => t.below(d),
            Bound::AtMost(t) => t.at_most(d),
            Bound::None => true,
        }
    }
}

/// Multi-source truncated Dijkstra into a sparse map. Only vertices admitted
/// by the bound are settled (and appear in `sd.touched()`).
pub fn dijkstra_bounded(
    g: &MetricGraph,
    sources: impl IntoIterator<Item = VertexId>,
    bound: Bound,
    sd: &mut SparseDist,
) {
    sd.begin();
    let mut heap: BinaryHeap<Reverse<(SDist, VertexId)>> = BinaryHeap::new();
    for s in sources {
        if bound.admits(0) && sd.get(s) != 0 {
            sd.set(s, 0);
            heap.push(Reverse((0, s)));
        }
    }
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > sd.get(v) {
            continue;
        }
        for (w, e) in g.neighbors(v) {
            let nd = d + g.edge_weight(e);
            if nd < sd.get(w) && bound.admits(nd) {
                sd.set(w, nd);
                heap.push(Reverse((nd, w)));
            }
        }
    }
}

/// Restricted multi-source Dijkstra: edges only traverse vertices admitted by
/// `alive`. Used for path-metric distances inside a subspace and for searches
/// in the complement of a removed set.
pub fn dijkstra_restricted(
    g: &MetricGraph,
    sources: impl IntoIterator<Item = VertexId>,
    alive: impl Fn(VertexId) -> bool,
    sd: &mut SparseDist,
) {
    sd.begin();
    let mut heap: BinaryHeap<Reverse<(SDist, VertexId)>> = BinaryHeap::new();
    for s in sources {
        if alive(s) && sd.get(s) != 0 {
            sd.set(s, 0);
            heap.push(Reverse((0, s)));
        }
    }
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > sd.get(v) {
            continue;
        }
        for (w, e) in g.neighbors(v) {
            if !alive(w) {
                continue;
            }
            let nd = d + g.edge_weight(e);
            if nd < sd.get(w) {
                sd.set(w, nd);
                heap.push(Reverse((nd, w)));
            }
        }
    }
}

/// Lexicographically smallest geodesic from `from` to `to`, given a full
/// distance table computed FROM `to` (i.e. `dist[v] = d(v, to)`).
///
/// Greedy descent: at each step move to the smallest-id neighbor that stays
/// on some geodesic. This yields the lex-min vertex sequence among all
/// geodesics.
pub fn lex_geodesic(
    g: &MetricGraph,
    from: VertexId,
    to: VertexId,
    dist_to: &[SDist],
) -> Option<Vec<VertexId>> {
    if dist_to[from] == INF {
        return None;
    }
    let mut path = vec![from];
    let mut cur = from;
    while cur != to {
        let d = dist_to[cur];
        let mut best: Option<VertexId> = None;
        for (w, e) in g.neighbors(cur) {
            let wt = g.edge_weight(e);
            if dist_to[w] != INF && dist_to[w] + wt == d {
                best = Some(match best {
                    Some(b) if b <= w => b,
                    _ => w,
                });
            }
        }
        let nxt = best.expect("distance table inconsistent with graph");
        path.push(nxt);
        cur = nxt;
    }
    Some(path)
}

/// Same descent against a sparse multi-source table: walks from `from`
/// (strictly decreasing distance) until reaching some source (distance 0).
pub fn lex_descent_to_sources(
    g: &MetricGraph,
    from: VertexId,
    sd: &SparseDist,
) -> Option<Vec<VertexId>> {
    if sd.get(from) == INF {
        return None;
    }
    let mut path = vec![from];
    let mut cur = from;
    while sd.get(cur) != 0 {
        let d = sd.get(cur);
        let mut best: Option<VertexId> = None;
        for (w, e) in g.neighbors(cur) {
            let wt = g.edge_weight(e);
            let dw = sd.get(w);
            if dw != INF && dw + wt == d {
                best = Some(match best {
                    Some(b) if b <= w => b,
                    _ => w,
                });
            }
        }
        let nxt = best.expect("sparse table inconsistent with graph");
        path.push(nxt);
        cur = nxt;
    }
    Some(path)
}

/// BFS reachability test with a blocked predicate. Hop-based (ignores
/// weights); suitable for connectivity questions only.
pub fn reachable(
    g: &MetricGraph,
    from: VertexId,
    to: VertexId,
    blocked: impl Fn(VertexId) -> bool,
    seen: &mut SparseDist,
) -> bool {
    if blocked(from) || blocked(to) {
        return false;
    }
    seen.begin();
    let mut queue = std::collections::VecDeque::new();
    seen.set(from, 0);
    queue.push_back(from);
    while let Some(v) = queue.pop_front() {
        if v == to {
            return true;
        }
        for (w, _) in g.neighbors(v) {
            if seen.get(w) == INF && !blocked(w) {
                seen.set(w, 0);
                queue.push_back(w);
            }
        }
    }
    false
}

/// BFS path avoiding blocked vertices; returns the vertex sequence or None.
/// Deterministic: neighbors expand in adjacency order, parent of each vertex
/// is fixed at first reach.
pub fn bfs_path_avoiding(
    g: &MetricGraph,
    from: VertexId,
    to: VertexId,
    blocked: impl Fn(VertexId) -> bool,
    seen: &mut SparseDist,
) -> Option<Vec<VertexId>> {
    if blocked(from) || blocked(to) {
        return None;
    }
    seen.begin();
    let n = g.vertex_count();
    let mut parent: Vec<u32> = vec![u32::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    seen.set(from, 0);
    queue.push_back(from);
    let mut found = false;
    'outer: while let Some(v) = queue.pop_front() {
        for (w, _) in g.neighbors(v) {
            if seen.get(w) == INF && !blocked(w) {
                seen.set(w, 0);
                parent[w] = v as u32;
                if w == to {
                    found = true;
                    break 'outer;
                }
                queue.push_back(w);
            }
        }
    }
    if !found && from != to {
        return None;
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = parent[cur] as usize;
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

/// Label connected components of the subgraph induced by `alive`.
/// Returns (labels, count); removed vertices get `u32::MAX`. Component ids
/// are assigned in order of their smallest vertex id.
pub fn components(g: &MetricGraph, alive: impl Fn(VertexId) -> bool) -> (Vec<u32>, usize) {
    let n = g.vertex_count();
    let mut label = vec![u32::MAX; n];
    let mut count = 0u32;
    let mut stack = Vec::new();
    for v in 0..n {
        if !alive(v) || label[v] != u32::MAX {
            continue;
        }
        label[v] = count;
        stack.push(v);
        while let Some(x) = stack.pop() {
            for (w, _) in g.neighbors(x) {
                if alive(w) && label[w] == u32::MAX {
                    label[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    (label, count as usize)
}
