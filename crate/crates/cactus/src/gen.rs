//! Deterministic graph family generators. Every randomized family takes a
//! seed and reproduces the same edge list for the same seed.

use num_rational::Rational64;
use num_traits::{One, Signed};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::graph::MetricGraph;
use crate::num::Len;

fn unit() -> Len {
    Len::one()
}

pub fn cycle(n: usize) -> Result<MetricGraph, Error> {
    if n < 3 {
        return Err(Error::BadParameter(format!("cycle needs n >= 3, got {n}")));
    }
    MetricGraph::new(n, (0..n).map(|i| (i, (i + 1) % n, unit())).collect())
}

/// Path with `edges` unit edges (edges + 1 vertices).
pub fn path(edges: usize) -> Result<MetricGraph, Error> {
    if edges < 1 {
        return Err(Error::BadParameter("path needs at least one edge".into()));
    }
    MetricGraph::new(edges + 1, (0..edges).map(|i| (i, i + 1, unit())).collect())
}

/// w x h vertex grid, unit edges, row-major vertex ids.
pub fn grid(w: usize, h: usize) -> Result<MetricGraph, Error> {
    if w < 1 || h < 1 || w * h < 2 {
        return Err(Error::BadParameter(format!("grid {w}x{h} too small")));
    }
    let id = |x: usize, y: usize| y * w + x;
    let mut edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                edges.push((id(x, y), id(x + 1, y), unit()));
            }
            if y + 1 < h {
                edges.push((id(x, y), id(x, y + 1), unit()));
            }
        }
    }
    MetricGraph::new(w * h, edges)
}

/// Two branch vertices 0, 1 joined by three internally disjoint arms of
/// `arm_edges` unit edges each.
pub fn theta(arm_edges: usize) -> Result<MetricGraph, Error> {
    if arm_edges < 2 {
        return Err(Error::BadParameter(
            "theta arms need at least 2 edges to stay simple".into(),
        ));
    }
    let mut edges = Vec::new();
    let mut next = 2;
    for _ in 0..3 {
        let mut prev = 0;
        for k in 0..arm_edges {
            if k + 1 == arm_edges {
                edges.push((prev, 1, unit()));
            } else {
                edges.push((prev, next, unit()));
                prev = next;
                next += 1;
            }
        }
    }
    MetricGraph::new(next, edges)
}

/// Complete tree: every internal vertex has `branching` children, all leaves
/// at depth `depth`. Unit edges, breadth-first ids, root 0.
pub fn tree(depth: usize, branching: usize) -> Result<MetricGraph, Error> {
    if branching < 1 || depth < 1 {
        return Err(Error::BadParameter("tree needs depth, branching >= 1".into()));
    }
    let mut edges = Vec::new();
    let mut level = vec![0usize];
    let mut next = 1;
    for _ in 0..depth {
        let mut nxt_level = Vec::new();
        for &v in &level {
            for _ in 0..branching {
                edges.push((v, next, unit()));
                nxt_level.push(next);
                next += 1;
            }
        }
        level = nxt_level;
    }
    MetricGraph::new(next, edges)
}

/// A path of `stick` edges with a `cycle_n`-cycle attached at the far end.
/// Vertex `stick` is the attachment point.
pub fn lollipop(stick: usize, cycle_n: usize) -> Result<MetricGraph, Error> {
    if stick < 1 || cycle_n < 3 {
        return Err(Error::BadParameter("lollipop needs stick >= 1, cycle >= 3".into()));
    }
    let mut edges: Vec<(usize, usize, Len)> = (0..stick).map(|i| (i, i + 1, unit())).collect();
    let base = stick;
    let first_new = stick + 1;
    let mut prev = base;
    for k in 0..cycle_n {
        if k + 1 == cycle_n {
            edges.push((prev, base, unit()));
        } else {
            edges.push((prev, first_new + k, unit()));
            prev = first_new + k;
        }
    }
    MetricGraph::new(stick + cycle_n, edges)
}

/// Two cycles sharing exactly vertex 0.
pub fn figure_eight(n1: usize, n2: usize) -> Result<MetricGraph, Error> {
    if n1 < 3 || n2 < 3 {
        return Err(Error::BadParameter("figure eight needs both cycles >= 3".into()));
    }
    let mut edges = Vec::new();
    let mut prev = 0;
    for k in 0..n1 {
        if k + 1 == n1 {
            edges.push((prev, 0, unit()));
        } else {
            edges.push((prev, k + 1, unit()));
            prev = k + 1;
        }
    }
    let off = n1 - 1;
    prev = 0;
    for k in 0..n2 {
        if k + 1 == n2 {
            edges.push((prev, 0, unit()));
        } else {
            edges.push((prev, off + k + 1, unit()));
            prev = off + k + 1;
        }
    }
    MetricGraph::new(n1 + n2 - 1, edges)
}

#[derive(Clone, Debug)]
pub struct CactusParams {
    pub cycle_count: usize,
    /// edges per cycle, inclusive range
    pub cycle_len: (usize, usize),
    /// edges per connecting tree segment, inclusive range
    pub tree_len: (usize, usize),
    /// extra pendant tree paths after the cycles
    pub pendants: usize,
    /// minimum hop distance between distinct branch vertices
    pub branch_sep: usize,
    pub max_vertices: usize,
}

impl Default for CactusParams {
    fn default() -> Self {
        CactusParams {
            cycle_count: 4,
            cycle_len: (40, 60),
            tree_len: (10, 20),
            pendants: 2,
            branch_sep: 10,
            max_vertices: 300,
        }
    }
}

/// Random cactus: cycles and pendant paths attached through fresh tree
/// segments, with attachment points kept `branch_sep` hops away from every
/// earlier branch vertex. Unit edges; always a cactus by construction.
pub fn random_cactus(p: &CactusParams, seed: u64) -> Result<MetricGraph, Error> {
    if p.cycle_len.0 < 3 || p.cycle_len.0 > p.cycle_len.1 {
        return Err(Error::BadParameter("cycle length range invalid".into()));
    }
    if p.tree_len.0 < 1 || p.tree_len.0 > p.tree_len.1 {
        return Err(Error::BadParameter("tree length range invalid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new()];
    let mut edges: Vec<(usize, usize, Len)> = Vec::new();
    let mut branch_verts: Vec<usize> = Vec::new();

    let add_edge = |adj: &mut Vec<Vec<usize>>, edges: &mut Vec<(usize, usize, Len)>, u: usize, v: usize| {
        while adj.len() <= u.max(v) {
            adj.push(Vec::new());
        }
        adj[u].push(v);
        adj[v].push(u);
        edges.push((u, v, unit()));
    };

    // hop distances to the nearest branch vertex
    let hops_to_branches = |adj: &Vec<Vec<usize>>, branch: &[usize]| -> Vec<usize> {
        let mut d = vec![usize::MAX; adj.len()];
        let mut q = std::collections::VecDeque::new();
        for &b in branch {
            d[b] = 0;
            q.push_back(b);
        }
        while let Some(v) = q.pop_front() {
            for &w in &adj[v] {
                if d[w] == usize::MAX {
                    d[w] = d[v] + 1;
                    q.push_back(w);
                }
            }
        }
        d
    };

    for feature in 0..(p.cycle_count + p.pendants) {
        let is_cycle = feature < p.cycle_count;
        let conn = rng.gen_range(p.tree_len.0..=p.tree_len.1);
        let cyc = rng.gen_range(p.cycle_len.0..=p.cycle_len.1);
        let need = conn + if is_cycle { cyc - 1 } else { 0 };
        if adj.len() + need > p.max_vertices {
            continue;
        }
        // eligible attachment points
        let mut candidates: Vec<usize> = (0..adj.len()).collect();
        candidates.shuffle(&mut rng);
        let attach = if branch_verts.is_empty() {
            Some(candidates[0])
        } else {
            let d = hops_to_branches(&adj, &branch_verts);
            candidates.into_iter().find(|&v| d[v] >= p.branch_sep)
        };
        let Some(attach) = attach else { continue };

        // connector path
        let mut prev = attach;
        for _ in 0..conn {
            let v = adj.len();
            add_edge(&mut adj, &mut edges, prev, v);
            prev = v;
        }
        let hub = prev;
        if is_cycle {
            let mut cur = hub;
            for k in 0..cyc {
                if k + 1 == cyc {
                    add_edge(&mut adj, &mut edges, cur, hub);
                } else {
                    let v = adj.len();
                    add_edge(&mut adj, &mut edges, cur, v);
                    cur = v;
                }
            }
        }
        branch_verts.push(attach);
        branch_verts.push(hub);
    }
    MetricGraph::new(adj.len(), edges)
}

/// Hexagonal-lattice disk: a center vertex surrounded by `rings` concentric
/// rings, ring i carrying 6i vertices, triangulated by radial edges. Edge
/// weights are seeded rationals in [lo, hi], quantized to quarter steps.
pub fn planar_disk(rings: usize, lo: Len, hi: Len, seed: u64) -> Result<MetricGraph, Error> {
    if rings < 1 {
        return Err(Error::BadParameter("disk needs at least one ring".into()));
    }
    if lo > hi || !lo.is_positive() {
        return Err(Error::BadParameter("weight range invalid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = |rng: &mut ChaCha8Rng| -> Len {
        if lo == hi {
            return lo;
        }
        let k = rng.gen_range(0..=4u8) as i64;
        lo + (hi - lo) * Rational64::new(k, 4)
    };
    // ring i starts at 1 + 3 i (i-1), holds 6 i vertices
    let idx = |i: usize, j: usize| 1 + 3 * i * (i - 1) + j % (6 * i);
    let mut edges = Vec::new();
    // ring edges
    for i in 1..=rings {
        for j in 0..6 * i {
            edges.push((idx(i, j), idx(i, j + 1), weight(&mut rng)));
        }
    }
    // center spokes
    for j in 0..6 {
        edges.push((0, idx(1, j), weight(&mut rng)));
    }
    // radial edges ring i -> i+1; corner vertices get a third spoke,
    // which triangulates the annulus between consecutive rings
    for i in 1..rings {
        for j in 0..6 * i {
            let side = j / i;
            let off = j % i;
            let p = side * (i + 1) + off;
            edges.push((idx(i, j), idx(i + 1, p), weight(&mut rng)));
            edges.push((idx(i, j), idx(i + 1, p + 1), weight(&mut rng)));
            if off == 0 {
                edges.push((idx(i, j), idx(i + 1, p + 6 * (i + 1) - 1), weight(&mut rng)));
            }
        }
    }
    MetricGraph::new(1 + 3 * rings * (rings + 1), edges)
}

/// Unit cycle with `chords` random chords of random integer lengths 1..=3;
/// returns the graph and the base cycle's vertex sequence.
pub fn random_chorded_cycle(
    n: usize,
    chords: usize,
    seed: u64,
) -> Result<(MetricGraph, Vec<usize>), Error> {
    if n < 5 {
        return Err(Error::BadParameter("chorded cycle needs n >= 5".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize, Len)> = (0..n).map(|i| (i, (i + 1) % n, unit())).collect();
    let mut used: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    let mut placed = 0;
    let mut attempts = 0;
    while placed < chords && attempts < 50 * (chords + 1) {
        attempts += 1;
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let (a, b) = (a.min(b), a.max(b));
        let gap = (b - a).min(n - (b - a));
        if gap < 2 {
            continue;
        }
        if !used.insert((a, b)) {
            continue;
        }
        let len = rng.gen_range(1..=3i64);
        edges.push((a, b, Rational64::from_integer(len)));
        placed += 1;
    }
    Ok((MetricGraph::new(n, edges)?, (0..n).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_shapes() {
        assert_eq!(cycle(8).unwrap().vertex_count(), 8);
        assert_eq!(path(10).unwrap().vertex_count(), 11);
        assert_eq!(grid(5, 4).unwrap().edge_count(), 4 * 4 + 5 * 3);
        let t = theta(30).unwrap();
        assert_eq!(t.vertex_count(), 2 + 3 * 29);
        assert_eq!(t.degree(0), 3);
        assert_eq!(t.degree(1), 3);
        let tr = tree(3, 2).unwrap();
        assert_eq!(tr.vertex_count(), 15);
        assert_eq!(tr.edge_count(), 14);
        let l = lollipop(100, 300).unwrap();
        assert_eq!(l.vertex_count(), 400);
        assert_eq!(l.degree(100), 3);
        let f = figure_eight(300, 300).unwrap();
        assert_eq!(f.vertex_count(), 599);
        assert_eq!(f.degree(0), 4);
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(cycle(2).is_err());
        assert!(path(0).is_err());
        assert!(theta(1).is_err());
        assert!(lollipop(0, 5).is_err());
        assert!(planar_disk(0, Len::one(), Len::one(), 0).is_err());
    }

    #[test]
    fn random_cactus_is_deterministic() {
        let p = CactusParams::default();
        let a = random_cactus(&p, 7).unwrap();
        let b = random_cactus(&p, 7).unwrap();
        assert_eq!(a.vertex_count(), b.vertex_count());
        let ea: Vec<_> = a.edges().iter().map(|e| (e.u, e.v, e.len)).collect();
        let eb: Vec<_> = b.edges().iter().map(|e| (e.u, e.v, e.len)).collect();
        assert_eq!(ea, eb);
        let c = random_cactus(&p, 8).unwrap();
        let ec: Vec<_> = c.edges().iter().map(|e| (e.u, e.v, e.len)).collect();
        assert_ne!(ea, ec);
        assert!(a.vertex_count() <= p.max_vertices);
    }

    #[test]
    fn random_cactus_keeps_branches_apart() {
        let p = CactusParams::default();
        for seed in 0..5 {
            let g = random_cactus(&p, seed).unwrap();
            let branch: Vec<usize> =
                (0..g.vertex_count()).filter(|&v| g.degree(v) >= 3).collect();
            for (i, &u) in branch.iter().enumerate() {
                for &v in &branch[i + 1..] {
                    let d = g.dist_vertices(u, v);
                    assert!(
                        d >= p.branch_sep as u64 * g.scale(),
                        "branch vertices {u},{v} are {d} apart (seed {seed})"
                    );
                }
            }
        }
    }

    #[test]
    fn disk_structure() {
        let g = planar_disk(3, Len::one(), Len::one(), 1).unwrap();
        assert_eq!(g.vertex_count(), 1 + 3 * 3 * 4);
        assert_eq!(g.degree(0), 6);
        // ring counts: 6 + 12 + 18 ring edges, 6 spokes, radials between rings
        let d1 = planar_disk(5, Rational64::new(3, 4), Rational64::new(5, 4), 9).unwrap();
        let d2 = planar_disk(5, Rational64::new(3, 4), Rational64::new(5, 4), 9).unwrap();
        let e1: Vec<_> = d1.edges().iter().map(|e| (e.u, e.v, e.len)).collect();
        let e2: Vec<_> = d2.edges().iter().map(|e| (e.u, e.v, e.len)).collect();
        assert_eq!(e1, e2);
        for e in d1.edges() {
            assert!(e.len >= Rational64::new(3, 4) && e.len <= Rational64::new(5, 4));
        }
    }

    #[test]
    fn disk_is_locally_triangulated() {
        // every radial-adjacent pair of consecutive inner-ring vertices
        // shares a neighbor on the outer ring
        let g = planar_disk(4, Len::one(), Len::one(), 3).unwrap();
        let idx = |i: usize, j: usize| 1 + 3 * i * (i - 1) + j % (6 * i);
        for i in 1..4usize {
            for j in 0..6 * i {
                let a = idx(i, j);
                let b = idx(i, j + 1);
                let na: Vec<usize> = g.neighbors(a).map(|(w, _)| w).collect();
                let nb: Vec<usize> = g.neighbors(b).map(|(w, _)| w).collect();
                let shared = na
                    .iter()
                    .any(|x| nb.contains(x) && *x >= idx(i + 1, 0));
                assert!(shared, "ring {i} pair ({a},{b}) shares no outer neighbor");
            }
        }
    }

    #[test]
    fn chorded_cycle_shape() {
        let (g, base) = random_chorded_cycle(20, 4, 11).unwrap();
        assert_eq!(base.len(), 20);
        assert!(g.edge_count() > 20 && g.edge_count() <= 24);
        let (g2, _) = random_chorded_cycle(20, 4, 11).unwrap();
        let e1: Vec<_> = g.edges().iter().map(|e| (e.u, e.v, e.len)).collect();
        let e2: Vec<_> = g2.edges().iter().map(|e| (e.u, e.v, e.len)).collect();
        assert_eq!(e1, e2);
    }
}
