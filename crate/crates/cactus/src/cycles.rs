//! Simple cycles, the geodesic-circle predicate, short arcs, and fillings.
//!
//! A cycle here is a cyclic sequence of lattice vertices. Filling splits a
//! cycle along geodesic chords until every region bounds a geodesic circle;
//! the region tree is recorded abstractly, no planar embedding is computed.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::dijkstra::{self, Bound, SparseDist};
use crate::error::Error;
use crate::graph::{MetricGraph, VertexId};
use crate::num::{fmt_len, SDist};

/// A simple cycle: at least 3 distinct vertices, consecutive pairs (wrapping)
/// joined by edges.
#[derive(Clone, Debug)]
pub struct Cycle {
    verts: Vec<VertexId>,
    /// prefix[i] = along-cycle length from verts[0] to verts[i]; prefix[n] = total
    prefix: Vec<SDist>,
}

impl Cycle {
    pub fn new(g: &MetricGraph, verts: Vec<VertexId>) -> Result<Self, Error> {
        if verts.len() < 3 {
            return Err(Error::Precondition(format!(
                "a cycle needs at least 3 vertices, got {}",
                verts.len()
            )));
        }
        let mut sorted = verts.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Precondition("cycle repeats a vertex".into()));
        }
        let n = verts.len();
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0);
        for i in 0..n {
            let (u, v) = (verts[i], verts[(i + 1) % n]);
            let e = g.find_edge(u, v).ok_or_else(|| {
                Error::Precondition(format!("consecutive cycle vertices {u},{v} are not adjacent"))
            })?;
            prefix.push(prefix[i] + g.edge_weight(e));
        }
        Ok(Cycle { verts, prefix })
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.verts
    }

    pub fn vertex_count(&self) -> usize {
        self.verts.len()
    }

    /// Total length (scaled).
    pub fn total_len(&self) -> SDist {
        *self.prefix.last().unwrap()
    }

    pub fn position_of(&self, v: VertexId) -> Option<usize> {
        self.verts.iter().position(|&u| u == v)
    }

    /// Along-cycle distance between positions i and j: the shorter arc.
    pub fn arc_dist(&self, i: usize, j: usize) -> SDist {
        let (i, j) = (i.min(j), i.max(j));
        let fwd = self.prefix[j] - self.prefix[i];
        fwd.min(self.total_len() - fwd)
    }

    /// Length of the arc from position i forward (increasing positions,
    /// wrapping) to position j.
    pub fn forward_len(&self, i: usize, j: usize) -> SDist {
        if i <= j {
            self.prefix[j] - self.prefix[i]
        } else {
            self.total_len() - (self.prefix[i] - self.prefix[j])
        }
    }

    /// Vertices from position i forward to position j, inclusive.
    pub fn forward_verts(&self, i: usize, j: usize) -> Vec<VertexId> {
        let n = self.verts.len();
        let mut out = Vec::new();
        let mut k = i;
        loop {
            out.push(self.verts[k]);
            if k == j {
                break;
            }
            k = (k + 1) % n;
        }
        out
    }

    /// True iff the cycle embeds isometrically: every vertex pair's shorter
    /// arc realizes the graph distance.
    pub fn is_geodesic_circle(&self, g: &MetricGraph) -> bool {
        self.scan_defect(g, true).defect == 0
    }

    /// The pair of cycle positions maximizing (along-cycle distance minus
    /// graph distance). Ties resolve to the lexicographically smallest
    /// position pair. Defect 0 iff the cycle is a geodesic circle.
    pub fn max_defect_pair(&self, g: &MetricGraph) -> DefectPair {
        self.scan_defect(g, false)
    }

    fn scan_defect(&self, g: &MetricGraph, early_exit: bool) -> DefectPair {
        // graph distance never exceeds the arc distance, which is at most
        // total/2, so a closed half-length ball from each vertex settles
        // every pair the scan needs
        let half = crate::num::unscale(self.total_len(), g.scale()) / 2;
        let t = g.thresh(half).expect("non-negative");
        let mut sd = SparseDist::new(g.vertex_count());
        let mut best = DefectPair {
            i: 0,
            j: 1,
            defect: 0,
        };
        let n = self.verts.len();
        for i in 0..n {
            dijkstra::dijkstra_bounded(g, [self.verts[i]], Bound::AtMost(&t), &mut sd);
            for j in (i + 1)..n {
                let along = self.arc_dist(i, j);
                let dg = sd.get(self.verts[j]);
                debug_assert!(dg <= along, "cycle arc is a path, distance cannot exceed it");
                let defect = along - dg;
                if defect > best.defect {
                    best = DefectPair { i, j, defect };
                    if early_exit {
                        return best;
                    }
                }
            }
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DefectPair {
    pub i: usize,
    pub j: usize,
    /// scaled length
    pub defect: SDist,
}

/// An arc of a cycle: the vertex run from one endpoint to the other.
#[derive(Clone, Debug)]
pub struct Arc {
    pub verts: Vec<VertexId>,
    /// scaled length
    pub len: SDist,
    /// true when the arc runs in the cycle's forward orientation from the
    /// first requested endpoint
    pub forward: bool,
}

/// The shorter of the two arcs joining two cycle vertices; an exact tie
/// returns the forward arc from x.
pub fn short_arc(c: &Cycle, x: VertexId, y: VertexId) -> Result<Arc, Error> {
    let i = c
        .position_of(x)
        .ok_or_else(|| Error::NotInGraph(format!("v{x} not on cycle")))?;
    let j = c
        .position_of(y)
        .ok_or_else(|| Error::NotInGraph(format!("v{y} not on cycle")))?;
    let fwd = c.forward_len(i, j);
    let bwd = c.total_len() - fwd;
    if fwd <= bwd {
        Ok(Arc {
            verts: c.forward_verts(i, j),
            len: fwd,
            forward: true,
        })
    } else {
        let mut verts = c.forward_verts(j, i);
        verts.reverse();
        Ok(Arc {
            verts,
            len: bwd,
            forward: false,
        })
    }
}

/// Erase loops from a closed walk, yielding a simple cycle when at least a
/// triangle survives. Keeps the earliest occurrence of each vertex.
pub fn simple_cycle_from_walk(g: &MetricGraph, walk: &[VertexId]) -> Result<Cycle, Error> {
    if walk.len() < 2 {
        return Err(Error::Precondition("walk too short to bound a cycle".into()));
    }
    let mut w = walk.to_vec();
    if w.first() == w.last() {
        w.pop();
    }
    let mut on_stack: Vec<Option<usize>> = vec![None; g.vertex_count()];
    let mut stack: Vec<VertexId> = Vec::new();
    for &v in &w {
        if let Some(pos) = on_stack[v] {
            for popped in stack.drain(pos + 1..) {
                on_stack[popped] = None;
            }
        } else {
            on_stack[v] = Some(stack.len());
            stack.push(v);
        }
    }
    Cycle::new(g, stack)
}

// ---------------------------------------------------------------------------
// fillings
// ---------------------------------------------------------------------------

/// One node of a filling's region tree.
#[derive(Clone, Debug)]
pub struct Region {
    pub cycle: Cycle,
    pub depth: usize,
    /// geodesic chord this region was split along (internal nodes only)
    pub chord: Option<Vec<VertexId>>,
    pub children: Option<(usize, usize)>,
}

/// Region tree of a filling: the root is the input cycle, every leaf bounds
/// a geodesic circle, every internal node was split by a geodesic chord.
#[derive(Debug)]
pub struct Filling {
    pub regions: Vec<Region>,
    pub splits: usize,
}

impl Filling {
    pub fn root(&self) -> &Region {
        &self.regions[0]
    }

    pub fn leaf_indices(&self) -> Vec<usize> {
        (0..self.regions.len())
            .filter(|&i| self.regions[i].children.is_none())
            .collect()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Region> {
        self.regions.iter().filter(|r| r.children.is_none())
    }

    pub fn dump(&self, g: &MetricGraph) -> FillingDump {
        FillingDump {
            splits: self.splits,
            regions: self
                .regions
                .iter()
                .map(|r| RegionDump {
                    cycle: r.cycle.vertices().to_vec(),
                    length: fmt_len(&g.unscale(r.cycle.total_len())),
                    depth: r.depth,
                    chord: r.chord.clone(),
                    children: r.children.map(|(a, b)| [a, b]),
                })
                .collect(),
        }
    }

    /// DOT rendering of the region tree, regions colored by depth.
    pub fn to_dot(&self, g: &MetricGraph) -> String {
        const PALETTE: [&str; 6] = [
            "lightblue", "palegreen", "khaki", "lightpink", "plum", "lightsalmon",
        ];
        let mut s = String::from("graph filling {\n  node [style=filled];\n");
        for (i, r) in self.regions.iter().enumerate() {
            s.push_str(&format!(
                "  r{} [label=\"len {}\\n{} verts\", fillcolor={}];\n",
                i,
                fmt_len(&g.unscale(r.cycle.total_len())),
                r.cycle.vertex_count(),
                PALETTE[r.depth % PALETTE.len()]
            ));
        }
        for (i, r) in self.regions.iter().enumerate() {
            if let Some((a, b)) = r.children {
                s.push_str(&format!("  r{i} -- r{a};\n  r{i} -- r{b};\n"));
            }
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Debug, Serialize)]
pub struct FillingDump {
    pub splits: usize,
    pub regions: Vec<RegionDump>,
}

#[derive(Debug, Serialize)]
pub struct RegionDump {
    pub cycle: Vec<VertexId>,
    pub length: String,
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chord: Option<Vec<VertexId>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub children: Option<[usize; 2]>,
}

/// Fill a cycle: repeatedly split the highest-defect region along a geodesic
/// chord between its max-defect pair until every leaf is a geodesic circle.
///
/// The chord geodesic may touch the region boundary at interior points; the
/// split then uses its maximal-defect excursion (a subpath meeting the
/// boundary only at its endpoints), which always exists and makes both
/// children strictly shorter than the parent. Splits are capped at
/// (initial length / min edge weight); exceeding the cap is an error.
pub fn fill(g: &MetricGraph, root: Cycle) -> Result<Filling, Error> {
    let min_w: SDist = (0..g.edge_count()).map(|e| g.edge_weight(e)).min().unwrap();
    let cap = (root.total_len() / min_w) as usize;

    let mut regions: Vec<Region> = Vec::new();
    // (defect, Reverse(region index)): pop highest defect, ties to the
    // earliest-created region
    let mut queue: BinaryHeap<(SDist, Reverse<usize>)> = BinaryHeap::new();
    let root_pair = root.max_defect_pair(g);
    regions.push(Region {
        cycle: root,
        depth: 0,
        chord: None,
        children: None,
    });
    if root_pair.defect > 0 {
        queue.push((root_pair.defect, Reverse(0)));
    }
    let mut pairs: Vec<DefectPair> = vec![root_pair];
    let mut splits = 0usize;
    let mut dist_to: Vec<SDist> = Vec::new();

    while let Some((_, Reverse(idx))) = queue.pop() {
        if splits == cap {
            return Err(Error::FillBound { bound: cap as u64 });
        }
        splits += 1;
        let pair = pairs[idx];
        let (chord, p, q) = {
            let region = &regions[idx].cycle;
            let (from, to) = (region.vertices()[pair.i], region.vertices()[pair.j]);
            dijkstra::dijkstra_full(g, &[to], &mut dist_to);
            let geo = dijkstra::lex_geodesic(g, from, to, &dist_to)
                .expect("connected graph admits a geodesic");
            let exc = max_defect_excursion(region, &geo, g);
            let (s, e) = exc.expect("positive region defect forces a positive-defect excursion");
            let chord: Vec<VertexId> = geo[s..=e].to_vec();
            let p0 = region.position_of(chord[0]).unwrap();
            let q0 = region.position_of(*chord.last().unwrap()).unwrap();
            if p0 <= q0 {
                (chord, p0, q0)
            } else {
                let mut c = chord;
                c.reverse();
                (c, q0, p0)
            }
        };
        let depth = regions[idx].depth;
        let interior = &chord[1..chord.len() - 1];

        let mut verts_a = regions[idx].cycle.forward_verts(p, q);
        verts_a.extend(interior.iter().rev());
        let child_a = Cycle::new(g, verts_a)?;

        let mut verts_b = regions[idx].cycle.forward_verts(q, p);
        verts_b.extend(interior.iter());
        let child_b = Cycle::new(g, verts_b)?;

        let parent_len = regions[idx].cycle.total_len();
        debug_assert!(child_a.total_len() < parent_len);
        debug_assert!(child_b.total_len() < parent_len);

        for child in [child_a, child_b] {
            let cpair = child.max_defect_pair(g);
            let cidx = regions.len();
            regions.push(Region {
                cycle: child,
                depth: depth + 1,
                chord: None,
                children: None,
            });
            pairs.push(cpair);
            if cpair.defect > 0 {
                queue.push((cpair.defect, Reverse(cidx)));
            }
        }
        let (a, b) = (regions.len() - 2, regions.len() - 1);
        regions[idx].children = Some((a, b));
        regions[idx].chord = Some(chord);
    }
    Ok(Filling { regions, splits })
}

/// Among the geodesic's excursions (maximal subpaths meeting the region only
/// at their endpoints), find the one with the largest positive defect
/// (along-cycle distance between its endpoints minus its own length).
/// Returns index bounds into `geo`, or None when no excursion has positive
/// defect (only possible when the whole pair's defect is zero).
fn max_defect_excursion(
    region: &Cycle,
    geo: &[VertexId],
    g: &MetricGraph,
) -> Option<(usize, usize)> {
    let touches: Vec<usize> = geo
        .iter()
        .enumerate()
        .filter(|(_, v)| region.position_of(**v).is_some())
        .map(|(k, _)| k)
        .collect();
    let mut best: Option<(SDist, usize, usize)> = None;
    for w in touches.windows(2) {
        let (s, e) = (w[0], w[1]);
        let mut sub_len: SDist = 0;
        for k in s..e {
            let eid = g.find_edge(geo[k], geo[k + 1]).unwrap();
            sub_len += g.edge_weight(eid);
        }
        let pi = region.position_of(geo[s]).unwrap();
        let pj = region.position_of(geo[e]).unwrap();
        let along = region.arc_dist(pi, pj);
        if along > sub_len {
            let defect = along - sub_len;
            if best.is_none_or(|(bd, _, _)| defect > bd) {
                best = Some((defect, s, e));
            }
        }
    }
    best.map(|(_, s, e)| (s, e))
}
