//! Finite weighted graphs as geodesic metric spaces.
//!
//! A `MetricGraph` is a connected multigraph-free weighted graph with exact
//! rational edge lengths. Distances are realized by paths through vertices
//! and (conceptually) edge interiors; searches discretize edge interiors by
//! subdividing every edge at a configurable granularity (`Lattice`), which is
//! an isometric refinement, so all comparisons stay exact.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::dijkstra::{self, Bound, SparseDist};
use crate::error::Error;
use crate::num::{fmt_len, parse_len, serde_len, Len, SDist, Thresh, INF};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Clone, Debug)]
pub struct EdgeRec {
    pub u: VertexId,
    pub v: VertexId,
    pub len: Len,
    w: SDist,
}

/// Connected weighted graph with positive rational edge lengths.
/// No self-loops, no parallel edges.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    n: usize,
    edges: Vec<EdgeRec>,
    scale: u64,
    adj_off: Vec<u32>,
    adj: Vec<(u32, u32)>,
}

impl MetricGraph {
    pub fn new(n: usize, edge_list: Vec<(VertexId, VertexId, Len)>) -> Result<Self, Error> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph must have at least one vertex".into()));
        }
        let mut seen: HashMap<(VertexId, VertexId), ()> = HashMap::new();
        let mut scale: u64 = 1;
        for &(u, v, len) in &edge_list {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u},{v}) references a vertex >= {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if !len.is_positive() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u},{v}) has non-positive length {}",
                    fmt_len(&len)
                )));
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key, ()).is_some() {
                return Err(Error::InvalidGraph(format!(
                    "parallel edge between {} and {}",
                    key.0, key.1
                )));
            }
            let den = *len.denom() as u64;
            scale = num_integer::lcm(scale, den);
            if scale > (1 << 40) {
                return Err(Error::InvalidGraph(
                    "edge-length denominators too diverse; common scale exceeds 2^40".into(),
                ));
            }
        }
        let mut edges = Vec::with_capacity(edge_list.len());
        let mut total: u128 = 0;
        for (u, v, len) in edge_list {
            let (u, v) = (u.min(v), u.max(v));
            let w = (*len.numer() as u64) * (scale / (*len.denom() as u64));
            total += w as u128;
            edges.push(EdgeRec { u, v, len, w });
        }
        if total > (u64::MAX / 8) as u128 {
            return Err(Error::InvalidGraph(
                "total scaled edge length too large for exact integer arithmetic".into(),
            ));
        }
        // CSR adjacency
        let mut deg = vec![0u32; n];
        for e in &edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        let mut adj_off = vec![0u32; n + 1];
        for i in 0..n {
            adj_off[i + 1] = adj_off[i] + deg[i];
        }
        let mut adj = vec![(0u32, 0u32); adj_off[n] as usize];
        let mut cursor: Vec<u32> = adj_off[..n].to_vec();
        for (eid, e) in edges.iter().enumerate() {
            adj[cursor[e.u] as usize] = (e.v as u32, eid as u32);
            cursor[e.u] += 1;
            adj[cursor[e.v] as usize] = (e.u as u32, eid as u32);
            cursor[e.v] += 1;
        }
        // adjacency sorted by neighbor id for deterministic iteration
        for v in 0..n {
            let span = adj_off[v] as usize..adj_off[v + 1] as usize;
            adj[span].sort_unstable();
        }
        let g = MetricGraph {
            n,
            edges,
            scale,
            adj_off,
            adj,
        };
        let (_, comps) = dijkstra::components(&g, |_| true);
        if comps != 1 {
            return Err(Error::Disconnected { components: comps });
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeRec] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &EdgeRec {
        &self.edges[e]
    }

    #[inline]
    pub fn edge_weight(&self, e: EdgeId) -> SDist {
        self.edges[e].w
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = (VertexId, EdgeId)> + '_ {
        self.adj[self.adj_off[v] as usize..self.adj_off[v + 1] as usize]
            .iter()
            .map(|&(w, e)| (w as usize, e as usize))
    }

    pub fn degree(&self, v: VertexId) -> usize {
        (self.adj_off[v + 1] - self.adj_off[v]) as usize
    }

    pub fn find_edge(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.neighbors(u).find(|&(w, _)| w == v).map(|(_, e)| e)
    }

    /// Threshold helper bound to this graph's scale.
    pub fn thresh(&self, r: Len) -> Result<Thresh, Error> {
        Thresh::new(r, self.scale)
    }

    /// Convert a scaled distance back to a rational length.
    pub fn unscale(&self, d: SDist) -> Len {
        crate::num::unscale(d, self.scale)
    }

    /// Scale a rational to this graph's integer lattice if it is exactly
    /// representable there.
    pub fn to_scaled(&self, r: Len) -> Option<SDist> {
        if r.is_negative() {
            return None;
        }
        let num = *r.numer() as u64;
        let den = *r.denom() as u64;
        if !self.scale.is_multiple_of(den) {
            return None;
        }
        Some(num * (self.scale / den))
    }

    pub fn min_edge_len(&self) -> Len {
        self.edges
            .iter()
            .map(|e| e.len)
            .min()
            .expect("graph has no edges")
    }

    pub fn total_len(&self) -> Len {
        self.edges.iter().map(|e| e.len).fold(Len::zero(), |a, b| a + b)
    }

    /// Scaled distance between two vertices.
    pub fn dist_vertices(&self, u: VertexId, v: VertexId) -> SDist {
        let mut sd = SparseDist::new(self.n);
        dijkstra::dijkstra_pair(self, u, v, &mut sd)
    }

    /// Eccentricity of a vertex (scaled).
    pub fn eccentricity(&self, v: VertexId) -> SDist {
        let mut dist = Vec::new();
        dijkstra::dijkstra_full(self, &[v], &mut dist);
        dist.into_iter().max().unwrap_or(0)
    }

    /// Exact diameter (scaled). Quadratic; intended for modest graphs.
    pub fn diameter(&self) -> SDist {
        let mut dist = Vec::new();
        let mut best = 0;
        for v in 0..self.n {
            dijkstra::dijkstra_full(self, &[v], &mut dist);
            best = best.max(*dist.iter().max().unwrap());
        }
        best
    }

    /// Cheap upper bound on the diameter: twice the eccentricity of vertex 0.
    pub fn diameter_upper_bound(&self) -> SDist {
        2 * self.eccentricity(0)
    }
}

// ---------------------------------------------------------------------------
// points
// ---------------------------------------------------------------------------

/// A point of the metric space: a vertex, or a point strictly inside an edge
/// (offset measured from the smaller endpoint).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRef {
    Vertex(VertexId),
    OnEdge {
        edge: (VertexId, VertexId),
        #[serde(with = "serde_len")]
        offset: Len,
    },
}

impl PointRef {
    /// Validate against a graph and normalize: edge endpoints ordered, offset
    /// strictly interior; an offset hitting an endpoint collapses to Vertex.
    pub fn normalized(&self, g: &MetricGraph) -> Result<PointRef, Error> {
        match *self {
            PointRef::Vertex(v) => {
                if v >= g.vertex_count() {
                    Err(Error::NotInGraph(format!("v{v}")))
                } else {
                    Ok(PointRef::Vertex(v))
                }
            }
            PointRef::OnEdge { edge: (a, b), offset } => {
                let eid = g
                    .find_edge(a, b)
                    .ok_or_else(|| Error::NotInGraph(format!("edge ({a},{b})")))?;
                let rec = g.edge(eid);
                // offset is measured from the given first endpoint
                let off_from_min = if a <= b { offset } else { rec.len - offset };
                if off_from_min.is_negative() || off_from_min > rec.len {
                    return Err(Error::BadParameter(format!(
                        "offset {} outside edge of length {}",
                        fmt_len(&offset),
                        fmt_len(&rec.len)
                    )));
                }
                if off_from_min.is_zero() {
                    Ok(PointRef::Vertex(rec.u))
                } else if off_from_min == rec.len {
                    Ok(PointRef::Vertex(rec.v))
                } else {
                    Ok(PointRef::OnEdge {
                        edge: (rec.u, rec.v),
                        offset: off_from_min,
                    })
                }
            }
        }
    }
}

impl fmt::Display for PointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointRef::Vertex(v) => write!(f, "v{v}"),
            PointRef::OnEdge { edge: (u, v), offset } => {
                write!(f, "e({u},{v})@{}", fmt_len(offset))
            }
        }
    }
}

/// Exact distance between two points (vertices or edge-interior points).
pub fn distance(g: &MetricGraph, p: &PointRef, q: &PointRef) -> Result<Len, Error> {
    let p = p.normalized(g)?;
    let q = q.normalized(g)?;
    let mut sd = SparseDist::new(g.vertex_count());
    let d = match (&p, &q) {
        (PointRef::Vertex(a), PointRef::Vertex(b)) => {
            g.unscale(dijkstra::dijkstra_pair(g, *a, *b, &mut sd))
        }
        (PointRef::Vertex(a), PointRef::OnEdge { edge: (u, v), offset })
        | (PointRef::OnEdge { edge: (u, v), offset }, PointRef::Vertex(a)) => {
            let eid = g.find_edge(*u, *v).unwrap();
            let elen = g.edge(eid).len;
            let du = g.unscale(dijkstra::dijkstra_pair(g, *a, *u, &mut sd)) + *offset;
            let dv = g.unscale(dijkstra::dijkstra_pair(g, *a, *v, &mut sd)) + (elen - *offset);
            du.min(dv)
        }
        (
            PointRef::OnEdge { edge: (u1, v1), offset: t1 },
            PointRef::OnEdge { edge: (u2, v2), offset: t2 },
        ) => {
            let e1 = g.find_edge(*u1, *v1).unwrap();
            let e2 = g.find_edge(*u2, *v2).unwrap();
            let l1 = g.edge(e1).len;
            let l2 = g.edge(e2).len;
            let mut best: Option<Len> = None;
            if e1 == e2 {
                best = Some((*t1 - *t2).abs());
            }
            // through endpoints
            for (a, ta) in [(*u1, *t1), (*v1, l1 - *t1)] {
                for (b, tb) in [(*u2, *t2), (*v2, l2 - *t2)] {
                    let d = g.unscale(dijkstra::dijkstra_pair(g, a, b, &mut sd)) + ta + tb;
                    best = Some(match best {
                        Some(cur) if cur <= d => cur,
                        _ => d,
                    });
                }
            }
            best.unwrap()
        }
    };
    Ok(d)
}

/// A geodesic between two points, tie-broken to the lexicographically
/// smallest vertex sequence (endpoint edge-points included as given).
pub fn shortest_path(g: &MetricGraph, p: &PointRef, q: &PointRef) -> Result<Vec<PointRef>, Error> {
    let p = p.normalized(g)?;
    let q = q.normalized(g)?;
    // Entry candidates: (vertex, extra length to reach it from the point).
    let entries = |pt: &PointRef| -> Vec<(VertexId, Len)> {
        match pt {
            PointRef::Vertex(v) => vec![(*v, Len::zero())],
            PointRef::OnEdge { edge: (u, v), offset } => {
                let eid = g.find_edge(*u, *v).unwrap();
                let elen = g.edge(eid).len;
                vec![(*u, *offset), (*v, elen - *offset)]
            }
        }
    };
    // Same-edge special case: the direct segment inside the edge.
    let mut best: Option<(Len, Vec<PointRef>)> = None;
    if let (
        PointRef::OnEdge { edge: e1, offset: t1 },
        PointRef::OnEdge { edge: e2, offset: t2 },
    ) = (&p, &q)
    {
        if e1 == e2 {
            best = Some(((*t1 - *t2).abs(), vec![p.clone(), q.clone()]));
        }
    }
    let mut dist_to_b: Vec<SDist> = Vec::new();
    for (b, tb) in entries(&q) {
        dijkstra::dijkstra_full(g, &[b], &mut dist_to_b);
        for (a, ta) in entries(&p) {
            if dist_to_b[a] == INF {
                continue;
            }
            let total = ta + g.unscale(dist_to_b[a]) + tb;
            let replace = match &best {
                None => true,
                Some((cur, _)) => total < *cur,
            };
            if replace {
                let core = dijkstra::lex_geodesic(g, a, b, &dist_to_b).unwrap();
                let mut refs: Vec<PointRef> = Vec::with_capacity(core.len() + 2);
                if p != PointRef::Vertex(a) {
                    refs.push(p.clone());
                }
                refs.extend(core.iter().map(|&v| PointRef::Vertex(v)));
                if q != PointRef::Vertex(b) {
                    refs.push(q.clone());
                }
                best = Some((total, refs));
            }
        }
    }
    Ok(best.expect("connected graph must admit a path").1)
}

// ---------------------------------------------------------------------------
// subdivision lattice
// ---------------------------------------------------------------------------

/// Sub-edge structure for one source edge after subdivision.
#[derive(Clone, Debug)]
struct EdgeSubdiv {
    /// number of segments (>= 1)
    segments: usize,
    /// id of the first interior lattice vertex (ordered from edge.u);
    /// unused when segments == 1
    first_interior: VertexId,
}

/// An isometric refinement of a source graph: every edge split into segments
/// of length at most `granularity`. Source vertices keep their ids; interior
/// lattice vertices are appended after them in (edge id, position) order.
pub struct Lattice {
    pub graph: MetricGraph,
    pub granularity: Len,
    source_n: usize,
    origin: Vec<PointRef>,
    subdiv: Vec<EdgeSubdiv>,
}

impl Lattice {
    pub fn source_vertex_count(&self) -> usize {
        self.source_n
    }

    /// The source-graph point a lattice vertex stands for.
    pub fn point(&self, v: VertexId) -> PointRef {
        self.origin[v].clone()
    }

    /// Is this lattice vertex a vertex of the source graph?
    pub fn is_source_vertex(&self, v: VertexId) -> bool {
        v < self.source_n
    }

    /// Find the lattice vertex for a source point, if the point lies on the
    /// lattice (vertices always do; edge points only at multiples of the
    /// segment length).
    pub fn locate(&self, g: &MetricGraph, p: &PointRef) -> Result<VertexId, Error> {
        let p = p.normalized(g)?;
        match p {
            PointRef::Vertex(v) => Ok(v),
            PointRef::OnEdge { edge: (u, v), offset } => {
                let eid = g
                    .find_edge(u, v)
                    .ok_or_else(|| Error::NotInGraph(format!("edge ({u},{v})")))?;
                let sub = &self.subdiv[eid];
                let seg_len = g.edge(eid).len / Len::from_integer(sub.segments as i64);
                let idx = offset / seg_len;
                if !idx.is_integer() {
                    return Err(Error::BadParameter(format!(
                        "point e({u},{v})@{} does not lie on the granularity lattice",
                        fmt_len(&offset)
                    )));
                }
                let k = *idx.numer() as usize;
                if k == 0 {
                    Ok(u)
                } else if k == sub.segments {
                    Ok(v)
                } else {
                    Ok(sub.first_interior + k - 1)
                }
            }
        }
    }
}

/// Default search granularity: half the minimum edge length.
pub fn default_granularity(g: &MetricGraph) -> Len {
    g.min_edge_len() / Len::from_integer(2)
}

/// Subdivide each edge into segments of length at most `granularity`.
/// The result is isometric to the source graph.
pub fn subdivide(g: &MetricGraph, granularity: Len) -> Result<Lattice, Error> {
    if !granularity.is_positive() {
        return Err(Error::BadParameter("granularity must be positive".into()));
    }
    let n0 = g.vertex_count();
    let mut origin: Vec<PointRef> = (0..n0).map(PointRef::Vertex).collect();
    let mut subdiv = Vec::with_capacity(g.edge_count());
    let mut edges: Vec<(VertexId, VertexId, Len)> = Vec::new();
    let mut next = n0;
    for (eid, e) in g.edges().iter().enumerate() {
        let ratio = e.len / granularity;
        let segments = {
            let c = ratio.ceil();
            (*c.numer() as usize).max(1)
        };
        let seg_len = e.len / Len::from_integer(segments as i64);
        if segments == 1 {
            edges.push((e.u, e.v, e.len));
            subdiv.push(EdgeSubdiv {
                segments: 1,
                first_interior: 0,
            });
            continue;
        }
        let first_interior = next;
        let mut prev = e.u;
        for k in 1..segments {
            let vid = next;
            next += 1;
            origin.push(PointRef::OnEdge {
                edge: (e.u, e.v),
                offset: seg_len * Len::from_integer(k as i64),
            });
            edges.push((prev, vid, seg_len));
            prev = vid;
        }
        edges.push((prev, e.v, seg_len));
        subdiv.push(EdgeSubdiv {
            segments,
            first_interior,
        });
        let _ = eid;
    }
    let graph = MetricGraph::new(next, edges)?;
    Ok(Lattice {
        graph,
        granularity,
        source_n: n0,
        origin,
        subdiv,
    })
}

// ---------------------------------------------------------------------------
// subspaces
// ---------------------------------------------------------------------------

/// Which metric a subspace carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMode {
    /// Distances of the ambient graph.
    Induced,
    /// Distances within the subspace only; +inf across components.
    Path,
}

/// A set of lattice vertices with a metric mode.
#[derive(Clone, Debug)]
pub struct SubSpace {
    pub vertices: Vec<VertexId>,
    pub mode: MetricMode,
}

impl SubSpace {
    pub fn new(mut vertices: Vec<VertexId>, mode: MetricMode) -> Self {
        vertices.sort_unstable();
        vertices.dedup();
        SubSpace { vertices, mode }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    /// Distance between two member vertices under this subspace's mode
    /// (scaled; INF when separated in path mode).
    pub fn dist(&self, g: &MetricGraph, u: VertexId, v: VertexId) -> SDist {
        let mut sd = SparseDist::new(g.vertex_count());
        match self.mode {
            MetricMode::Induced => dijkstra::dijkstra_pair(g, u, v, &mut sd),
            MetricMode::Path => {
                dijkstra::dijkstra_restricted(g, [u], |x| self.contains(x), &mut sd);
                sd.get(v)
            }
        }
    }

    /// Diameter under the subspace's mode, with a realizing pair.
    /// Deterministic: among maximal pairs picks the lexicographically
    /// smallest (u, v) with u < v. Returns None for fewer than 2 vertices
    /// or an unreachable pair in path mode.
    pub fn diameter_pair(&self, g: &MetricGraph) -> Option<(VertexId, VertexId, SDist)> {
        if self.vertices.len() < 2 {
            return None;
        }
        let mut sd = SparseDist::new(g.vertex_count());
        let mut best: Option<(VertexId, VertexId, SDist)> = None;
        for &u in &self.vertices {
            match self.mode {
                MetricMode::Induced => {
                    dijkstra::dijkstra_bounded(g, [u], Bound::None, &mut sd);
                }
                MetricMode::Path => {
                    dijkstra::dijkstra_restricted(g, [u], |x| self.contains(x), &mut sd);
                }
            }
            for &v in &self.vertices {
                if v <= u {
                    continue;
                }
                let d = sd.get(v);
                if d == INF {
                    return None;
                }
                let better = match best {
                    None => true,
                    Some((bu, bv, bd)) => d > bd || (d == bd && (u, v) < (bu, bv)),
                };
                if better {
                    best = Some((u, v, d));
                }
            }
        }
        best
    }
}

/// Open metric neighborhood of a vertex set, discretized on the lattice:
/// all lattice vertices at distance strictly less than `m`.
pub fn neighborhood(
    lat: &Lattice,
    sources: &[VertexId],
    m: Len,
    sd: &mut SparseDist,
) -> Result<SubSpace, Error> {
    if sources.is_empty() {
        return Err(Error::EmptySet("neighborhood of an empty set".into()));
    }
    let t = lat.graph.thresh(m)?;
    dijkstra::dijkstra_bounded(&lat.graph, sources.iter().copied(), Bound::Below(&t), sd);
    Ok(SubSpace::new(sd.touched().to_vec(), MetricMode::Induced))
}

/// Connected components of the lattice minus a removed vertex set, each with
/// the path metric. Ordered by smallest member vertex.
pub fn components_minus(lat: &Lattice, removed: &SubSpace) -> Vec<SubSpace> {
    let (labels, count) = dijkstra::components(&lat.graph, |v| !removed.contains(v));
    let mut buckets: Vec<Vec<VertexId>> = vec![Vec::new(); count];
    for (v, &l) in labels.iter().enumerate() {
        if l != u32::MAX {
            buckets[l as usize].push(v);
        }
    }
    buckets
        .into_iter()
        .map(|b| SubSpace::new(b, MetricMode::Path))
        .collect()
}

/// Metric boundary: the vertices of component `y` at distance exactly `r`
/// from `basis`. Validates that `y` is indeed a component of the lattice
/// minus the open r-neighborhood of `basis`.
pub fn boundary(
    lat: &Lattice,
    y: &SubSpace,
    basis: &[VertexId],
    r: Len,
    sd: &mut SparseDist,
) -> Result<Vec<VertexId>, Error> {
    let nb = neighborhood(lat, basis, r, sd)?;
    let comps = components_minus(lat, &nb);
    if !comps.iter().any(|c| c.vertices == y.vertices) {
        return Err(Error::SubspaceMismatch(
            "the given subspace is not a component of the complement of the stated neighborhood"
                .into(),
        ));
    }
    let t = lat.graph.thresh(r)?;
    dijkstra::dijkstra_bounded(
        &lat.graph,
        basis.iter().copied(),
        Bound::AtMost(&t),
        sd,
    );
    let mut out: Vec<VertexId> = y
        .vertices
        .iter()
        .copied()
        .filter(|&v| t.exactly(sd.get(v)))
        .collect();
    out.sort_unstable();
    Ok(out)
}

// ---------------------------------------------------------------------------
// edge-list file format and DOT export
// ---------------------------------------------------------------------------

/// Read the edge-list format:
/// ```text
/// # vertices N
/// u v length
/// ```
/// Lengths are decimals or `p/q` fractions. Blank lines and further `#`
/// comments are ignored.
pub fn read_edge_list<R: BufRead>(mut r: R) -> Result<MetricGraph, Error> {
    let mut line = String::new();
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            break;
        }
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("vertices") {
                let v = v.trim();
                n = Some(
                    v.parse()
                        .map_err(|_| Error::Parse(format!("bad vertex count '{v}'")))?,
                );
            }
            continue;
        }
        let mut it = t.split_whitespace();
        let (u, v, l) = match (it.next(), it.next(), it.next(), it.next()) {
            (Some(u), Some(v), Some(l), None) => (u, v, l),
            _ => return Err(Error::Parse(format!("bad edge line '{t}'"))),
        };
        let u: usize = u
            .parse()
            .map_err(|_| Error::Parse(format!("bad vertex id '{u}'")))?;
        let v: usize = v
            .parse()
            .map_err(|_| Error::Parse(format!("bad vertex id '{v}'")))?;
        edges.push((u, v, parse_len(l)?));
    }
    let n = n.ok_or_else(|| Error::Parse("missing '# vertices N' header".into()))?;
    MetricGraph::new(n, edges)
}

pub fn load_edge_list(path: &Path) -> Result<MetricGraph, Error> {
    let f = std::fs::File::open(path)?;
    read_edge_list(std::io::BufReader::new(f))
}

pub fn write_edge_list<W: Write>(g: &MetricGraph, mut w: W) -> Result<(), Error> {
    writeln!(w, "# vertices {}", g.vertex_count())?;
    for e in g.edges() {
        writeln!(w, "{} {} {}", e.u, e.v, fmt_len(&e.len))?;
    }
    Ok(())
}

pub fn save_edge_list(g: &MetricGraph, path: &Path) -> Result<(), Error> {
    let mut f = std::fs::File::create(path)?;
    write_edge_list(g, &mut f)?;
    Ok(())
}

/// Graphviz DOT rendering with edge lengths as labels.
pub fn to_dot(g: &MetricGraph, name: &str) -> String {
    let mut s = String::new();
    s.push_str(&format!("graph {name} {{\n  node [shape=point];\n"));
    for e in g.edges() {
        s.push_str(&format!(
            "  {} -- {} [label=\"{}\"];\n",
            e.u,
            e.v,
            fmt_len(&e.len)
        ));
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::unscale;
    use num_rational::Rational64;

    fn rat(n: i64) -> Len {
        Rational64::from_integer(n)
    }

    pub fn cycle_graph(n: usize) -> MetricGraph {
        let edges = (0..n).map(|i| (i, (i + 1) % n, rat(1))).collect();
        MetricGraph::new(n, edges).unwrap()
    }

    pub fn path_graph(edges_n: usize) -> MetricGraph {
        let edges = (0..edges_n).map(|i| (i, i + 1, rat(1))).collect();
        MetricGraph::new(edges_n + 1, edges).unwrap()
    }

    pub fn grid_graph(w: usize, h: usize) -> MetricGraph {
        let id = |x: usize, y: usize| y * w + x;
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if x + 1 < w {
                    edges.push((id(x, y), id(x + 1, y), rat(1)));
                }
                if y + 1 < h {
                    edges.push((id(x, y), id(x, y + 1), rat(1)));
                }
            }
        }
        MetricGraph::new(w * h, edges).unwrap()
    }

    /// Oracle: exhaustive simple-path minimum length. Exponential; tiny
    /// graphs only. Independent of the Dijkstra engines.
    fn brute_force_distance(g: &MetricGraph, from: VertexId, to: VertexId) -> Option<Len> {
        fn rec(
            g: &MetricGraph,
            cur: VertexId,
            to: VertexId,
            seen: &mut Vec<bool>,
            acc: Len,
            best: &mut Option<Len>,
        ) {
            if cur == to {
                *best = Some(match *best {
                    Some(b) if b <= acc => b,
                    _ => acc,
                });
                return;
            }
            for (w, e) in g.neighbors(cur) {
                if !seen[w] {
                    seen[w] = true;
                    rec(g, w, to, seen, acc + g.edge(e).len, best);
                    seen[w] = false;
                }
            }
        }
        let mut seen = vec![false; g.vertex_count()];
        seen[from] = true;
        let mut best = None;
        rec(g, from, to, &mut seen, Len::zero(), &mut best);
        best
    }

    #[test]
    fn rejects_malformed_graphs() {
        assert!(matches!(
            MetricGraph::new(2, vec![(0, 0, rat(1))]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            MetricGraph::new(2, vec![(0, 1, rat(1)), (1, 0, rat(2))]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            MetricGraph::new(2, vec![(0, 1, rat(0))]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            MetricGraph::new(3, vec![(0, 1, rat(1))]),
            Err(Error::Disconnected { .. })
        ));
    }

    #[test]
    fn cycle_distance_antipodal() {
        let g = cycle_graph(8);
        let d = distance(&g, &PointRef::Vertex(0), &PointRef::Vertex(4)).unwrap();
        assert_eq!(d, rat(4));
        assert_eq!(brute_force_distance(&g, 0, 4).unwrap(), rat(4));
    }

    #[test]
    fn path_endpoint_distance() {
        let g = path_graph(10);
        let d = distance(&g, &PointRef::Vertex(0), &PointRef::Vertex(10)).unwrap();
        assert_eq!(d, rat(10));
    }

    #[test]
    fn chord_shortcuts_cycle() {
        // 8-cycle with a unit chord between 0 and 4.
        let mut edges: Vec<(usize, usize, Len)> =
            (0..8).map(|i| (i, (i + 1) % 8, rat(1))).collect();
        edges.push((0, 4, rat(1)));
        let g = MetricGraph::new(8, edges).unwrap();
        let d = distance(&g, &PointRef::Vertex(0), &PointRef::Vertex(4)).unwrap();
        let oracle = brute_force_distance(&g, 0, 4).unwrap();
        assert_eq!(oracle, rat(1));
        assert_eq!(d, rat(1));
    }

    #[test]
    fn edge_interior_distances() {
        let g = path_graph(2); // 0 -1- 1 -1- 2
        let p = PointRef::OnEdge {
            edge: (0, 1),
            offset: Rational64::new(1, 4),
        };
        let q = PointRef::OnEdge {
            edge: (1, 2),
            offset: Rational64::new(1, 2),
        };
        assert_eq!(
            distance(&g, &p, &q).unwrap(),
            Rational64::new(5, 4)
        );
        // same edge, direct segment
        let r = PointRef::OnEdge {
            edge: (0, 1),
            offset: Rational64::new(3, 4),
        };
        assert_eq!(distance(&g, &p, &r).unwrap(), Rational64::new(1, 2));
    }

    #[test]
    fn lex_geodesic_on_cycle_takes_low_side() {
        let g = cycle_graph(8);
        let path = shortest_path(&g, &PointRef::Vertex(0), &PointRef::Vertex(4)).unwrap();
        let ids: Vec<_> = path
            .iter()
            .map(|p| match p {
                PointRef::Vertex(v) => *v,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(ids, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn lex_geodesic_on_grid_is_row_first() {
        let g = grid_graph(5, 5);
        // corners 0=(0,0) and 24=(4,4); distance 8; lex-min goes along row 0 first
        let path = shortest_path(&g, &PointRef::Vertex(0), &PointRef::Vertex(24)).unwrap();
        let ids: Vec<_> = path
            .iter()
            .map(|p| match p {
                PointRef::Vertex(v) => *v,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(ids.len(), 9);
        assert_eq!(ids, vec![0, 1, 2, 3, 4, 9, 14, 19, 24]);
        let d = distance(&g, &PointRef::Vertex(0), &PointRef::Vertex(24)).unwrap();
        assert_eq!(d, rat(8));
    }

    #[test]
    fn subdivision_is_isometric() {
        let g = cycle_graph(4);
        let lat = subdivide(&g, Rational64::new(1, 4)).unwrap();
        assert_eq!(lat.graph.vertex_count(), 16);
        let d = lat.graph.dist_vertices(0, 2);
        assert_eq!(unscale(d, lat.graph.scale()), rat(2));
        // all source-vertex pairs agree
        for u in 0..4 {
            for v in 0..4 {
                let d0 = g.dist_vertices(u, v);
                let d1 = lat.graph.dist_vertices(u, v);
                assert_eq!(g.unscale(d0), lat.graph.unscale(d1));
            }
        }
    }

    #[test]
    fn subdivision_single_edge() {
        let g = path_graph(1);
        let lat = subdivide(&g, Rational64::new(1, 2)).unwrap();
        assert_eq!(lat.graph.vertex_count(), 3);
        assert_eq!(lat.graph.edge_count(), 2);
        let mid = lat.point(2);
        assert_eq!(
            mid,
            PointRef::OnEdge {
                edge: (0, 1),
                offset: Rational64::new(1, 2)
            }
        );
        assert_eq!(lat.locate(&g, &mid).unwrap(), 2);
    }

    #[test]
    fn neighborhood_is_strictly_open() {
        let g = cycle_graph(8);
        let lat = subdivide(&g, Rational64::new(1, 2)).unwrap();
        let mut sd = SparseDist::new(lat.graph.vertex_count());
        let nb = neighborhood(&lat, &[0], rat(2), &mut sd).unwrap();
        // lattice points at distance < 2 from vertex 0: 0, ±1/2, ±1, ±3/2
        assert_eq!(nb.len(), 7);
        // source vertices inside: 7, 0, 1 only
        let src: Vec<_> = nb
            .vertices
            .iter()
            .copied()
            .filter(|&v| lat.is_source_vertex(v))
            .collect();
        assert_eq!(src, vec![0, 1, 7]);
        // whole space once m exceeds the diameter
        let all = neighborhood(&lat, &[0], rat(100), &mut sd).unwrap();
        assert_eq!(all.len(), lat.graph.vertex_count());
    }

    #[test]
    fn neighborhood_grid_center() {
        let g = grid_graph(5, 5);
        let lat = subdivide(&g, Rational64::new(1, 2)).unwrap();
        let mut sd = SparseDist::new(lat.graph.vertex_count());
        let center = 12; // (2,2)
        let nb = neighborhood(&lat, &[center], Rational64::new(3, 2), &mut sd).unwrap();
        let src: Vec<_> = nb
            .vertices
            .iter()
            .copied()
            .filter(|&v| lat.is_source_vertex(v))
            .collect();
        // center plus its 4 neighbors; strict < keeps distance-2 vertices out
        assert_eq!(src, vec![7, 11, 12, 13, 17]);
        assert_eq!(nb.len(), 9); // + 4 half-edge points at 1/2
    }

    #[test]
    fn components_after_removal() {
        let g = path_graph(10);
        let lat = subdivide(&g, Rational64::new(1, 2)).unwrap();
        let mut sd = SparseDist::new(lat.graph.vertex_count());
        let nb = neighborhood(&lat, &[5], rat(1), &mut sd).unwrap();
        let comps = components_minus(&lat, &nb);
        assert_eq!(comps.len(), 2);

        let g = cycle_graph(8);
        let lat = subdivide(&g, Rational64::new(1, 2)).unwrap();
        let mut sd = SparseDist::new(lat.graph.vertex_count());
        let nb = neighborhood(&lat, &[0], rat(1), &mut sd).unwrap();
        assert_eq!(components_minus(&lat, &nb).len(), 1);
        let mut both = neighborhood(&lat, &[0], rat(1), &mut sd).unwrap().vertices;
        both.extend(neighborhood(&lat, &[4], rat(1), &mut sd).unwrap().vertices);
        let nb2 = SubSpace::new(both, MetricMode::Induced);
        assert_eq!(components_minus(&lat, &nb2).len(), 2);
    }

    #[test]
    fn boundary_on_cycle() {
        let g = cycle_graph(20);
        let lat = subdivide(&g, Rational64::new(1, 2)).unwrap();
        let mut sd = SparseDist::new(lat.graph.vertex_count());
        let nb = neighborhood(&lat, &[0], rat(5), &mut sd).unwrap();
        let comps = components_minus(&lat, &nb);
        assert_eq!(comps.len(), 1);
        let b = boundary(&lat, &comps[0], &[0], rat(5), &mut sd).unwrap();
        // exactly the two source vertices 5 and 15
        assert_eq!(b, vec![5, 15]);
    }

    #[test]
    fn boundary_rejects_wrong_component() {
        let g = cycle_graph(20);
        let lat = subdivide(&g, Rational64::new(1, 2)).unwrap();
        let mut sd = SparseDist::new(lat.graph.vertex_count());
        let fake = SubSpace::new(vec![9, 10, 11], MetricMode::Path);
        assert!(matches!(
            boundary(&lat, &fake, &[0], rat(5), &mut sd),
            Err(Error::SubspaceMismatch(_))
        ));
    }

    #[test]
    fn boundary_on_star() {
        // star with 3 rays of lengths 3, 4, 5 (unit edges), center 0
        let mut edges = Vec::new();
        let mut next = 1;
        for ray_len in [3usize, 4, 5] {
            let mut prev = 0;
            for _ in 0..ray_len {
                edges.push((prev, next, rat(1)));
                prev = next;
                next += 1;
            }
        }
        let g = MetricGraph::new(next, edges).unwrap();
        let lat = subdivide(&g, Rational64::new(1, 2)).unwrap();
        let mut sd = SparseDist::new(lat.graph.vertex_count());
        let nb = neighborhood(&lat, &[0], rat(2), &mut sd).unwrap();
        let comps = components_minus(&lat, &nb);
        assert_eq!(comps.len(), 3);
        for c in &comps {
            let b = boundary(&lat, c, &[0], rat(2), &mut sd).unwrap();
            assert_eq!(b.len(), 1, "one boundary point per ray");
        }
    }

    #[test]
    fn subspace_path_metric_disconnects() {
        let g = cycle_graph(8);
        let lat = subdivide(&g, rat(1)).unwrap();
        // two opposite arcs as one subspace: path metric separates them
        let sub = SubSpace::new(vec![1, 2, 3, 5, 6, 7], MetricMode::Path);
        assert_eq!(sub.dist(&lat.graph, 1, 3), 2 * lat.graph.scale());
        assert_eq!(sub.dist(&lat.graph, 1, 5), INF);
        let ind = SubSpace::new(vec![1, 2, 3, 5, 6, 7], MetricMode::Induced);
        assert_eq!(ind.dist(&lat.graph, 1, 5), 4 * lat.graph.scale());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = grid_graph(3, 3);
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let g2 = read_edge_list(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(g.vertex_count(), g2.vertex_count());
        assert_eq!(g.edge_count(), g2.edge_count());
        for (a, b) in g.edges().iter().zip(g2.edges().iter()) {
            assert_eq!((a.u, a.v, a.len), (b.u, b.v, b.len));
        }
    }

    #[test]
    fn edge_list_rejects_junk() {
        let text = "# vertices 2\n0 1 1\n0 1 nonsense\n";
        assert!(read_edge_list(std::io::Cursor::new(text.as_bytes())).is_err());
        let text = "0 1 1\n";
        assert!(read_edge_list(std::io::Cursor::new(text.as_bytes())).is_err());
    }

    #[test]
    fn rational_weights_stay_exact() {
        let edges = vec![
            (0, 1, Rational64::new(1, 3)),
            (1, 2, Rational64::new(1, 7)),
            (0, 2, Rational64::new(1, 2)),
        ];
        let g = MetricGraph::new(3, edges).unwrap();
        assert_eq!(g.scale(), 42);
        let d = distance(&g, &PointRef::Vertex(0), &PointRef::Vertex(2)).unwrap();
        // 1/3 + 1/7 = 10/21 < 1/2
        assert_eq!(d, Rational64::new(10, 21));
    }
}
