//! Cactus approximation builder. Starting from a basepoint, carve the graph
//! into nested components at radius `big_m`, grow a point or circle node for
//! each component, and join the nodes into a cactus together with the map
//! sending cactus vertices back into the source graph. `audit_inequalities`
//! replays a finished build against the metric bounds each step relies on.

use std::collections::HashSet;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::cycles::{self, Cycle, Filling};
use crate::dijkstra::{self, Bound, SparseDist};
use crate::error::Error;
use crate::graph::{MetricGraph, MetricMode, SubSpace, VertexId};
use crate::num::{fmt_len, Len, SDist};

/// What a node of the approximation is made of: a single vertex or a cycle of
/// the source graph.
#[derive(Clone, Debug)]
pub enum NodeKind {
    Point(VertexId),
    Circle(Cycle),
}

/// One node of the approximation tree.
#[derive(Clone, Debug)]
pub struct Node {
    pub level: usize,
    pub kind: NodeKind,
    /// vertex of this node the connecting edge starts from
    pub basepoint: VertexId,
    /// vertex on the parent node the connecting edge lands on
    pub parent_attach: Option<VertexId>,
    /// vertices of this node where child connecting edges land
    pub exit_points: Vec<VertexId>,
    pub parent: Option<usize>,
    pub connecting_edge_length: Len,
}

impl Node {
    pub fn vertex_set(&self) -> Vec<VertexId> {
        match &self.kind {
            NodeKind::Point(y) => vec![*y],
            NodeKind::Circle(c) => c.vertices().to_vec(),
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.kind, NodeKind::Circle(_))
    }
}

/// A component carved at some level, with the exact-radius vertices that
/// connect it back to its parent node.
#[derive(Clone, Debug)]
pub struct LevelGraph {
    pub level: usize,
    pub component: SubSpace,
    /// component vertices at distance exactly the carving radius from the
    /// parent node, sorted
    pub boundary: Vec<VertexId>,
    /// index of the node grown from this component
    pub node: usize,
    /// boundary diameter pair when the component took the circle case
    pub circle_pair: Option<(VertexId, VertexId)>,
}

/// Outcome of classifying a carved component by its boundary spread.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classification {
    Point(VertexId),
    Circle { a: VertexId, b: VertexId },
}

/// Finished approximation: the cactus graph, its node tree, the carved
/// components, and the vertex map back into the source graph.
#[derive(Debug)]
pub struct CactusApprox {
    pub cactus: MetricGraph,
    pub nodes: Vec<Node>,
    pub levels: Vec<LevelGraph>,
    /// cactus vertex to source vertex
    pub h: Vec<VertexId>,
    /// per node, cactus vertex ids in the node's own vertex order
    pub node_vertex_ids: Vec<Vec<usize>>,
    pub base: VertexId,
    pub m: Len,
    pub big_m: Len,
}

impl CactusApprox {
    /// Cactus vertex carrying source vertex `v` of node `node`, if `v` lies
    /// on that node.
    pub fn cactus_vertex(&self, node: usize, v: VertexId) -> Option<usize> {
        match &self.nodes[node].kind {
            NodeKind::Point(y) => (*y == v).then(|| self.node_vertex_ids[node][0]),
            NodeKind::Circle(c) => c.position_of(v).map(|k| self.node_vertex_ids[node][k]),
        }
    }

    /// Distance between two cactus vertices, in cactus scale.
    pub fn cactus_dist(&self, u: usize, v: usize) -> SDist {
        let mut sd = SparseDist::new(self.cactus.vertex_count());
        dijkstra::dijkstra_pair(&self.cactus, u, v, &mut sd)
    }
}

/// Decide whether a carved component gets a point node or a circle node: the
/// circle case fires when the boundary has induced diameter at least
/// `big_m / 10`. The point case picks the smallest boundary vertex; the
/// circle case returns the boundary diameter pair.
pub fn classify_component(
    g: &MetricGraph,
    lg: &LevelGraph,
    big_m: Len,
) -> Result<Classification, Error> {
    if lg.boundary.is_empty() {
        return Err(Error::EmptyBoundary {
            radius: fmt_len(&big_m),
        });
    }
    if lg.boundary.len() == 1 {
        return Ok(Classification::Point(lg.boundary[0]));
    }
    let sub = SubSpace::new(lg.boundary.clone(), MetricMode::Induced);
    let (a, b, d) = sub
        .diameter_pair(g)
        .expect("two boundary vertices in a connected graph");
    let t = g.thresh(big_m / 10)?;
    if t.below(d) {
        Ok(Classification::Point(lg.boundary[0]))
    } else {
        Ok(Classification::Circle { a, b })
    }
}

fn descend_last(g: &MetricGraph, from: VertexId, sd: &SparseDist) -> VertexId {
    *dijkstra::lex_descent_to_sources(g, from, sd)
        .expect("source set reachable in a connected graph")
        .last()
        .unwrap()
}

/// Search for a geodesic circle passing within `100 m` of both boundary
/// vertices `a` and `b` of the carved component `z`.
///
/// The candidate curve glues four pieces: descents from `a` and `b` to the
/// parent node, trimmed where they come `100 m` close to each other, a
/// connector between the trimmed ends (or a parent arc when they stay far),
/// and a path joining `a` to `b` inside the component. The curve is filled by
/// geodesic chords; the designated leaf is the one riding the in-component
/// path. If it misses `a` or `b`, every leaf is scanned, then leaves of two
/// fallback curves, before giving up.
pub fn find_circle_node(
    g: &MetricGraph,
    parent: &Node,
    parent_index: usize,
    z: &LevelGraph,
    a: VertexId,
    b: VertexId,
    m: Len,
    big_m: Len,
) -> Result<Cycle, Error> {
    if a == b || !z.component.contains(a) || !z.component.contains(b) {
        return Err(Error::Precondition(format!(
            "circle search needs two distinct component vertices, got {a} and {b}"
        )));
    }
    let mut sd = SparseDist::new(g.vertex_count());
    let spread = dijkstra::dijkstra_pair(g, a, b, &mut sd);
    if !g.thresh(big_m / 10)?.at_least(spread) {
        return Err(Error::Precondition(format!(
            "boundary pair {a}, {b} spans less than a tenth of the carving radius"
        )));
    }

    let reach = m * 100;
    let t_reach = g.thresh(reach)?;
    let not_found = |detail: String| Error::CircleNotFound {
        parent: parent_index,
        detail,
    };

    // descents from the pair down to the parent node
    let mut sd_parent = SparseDist::new(g.vertex_count());
    dijkstra::dijkstra_bounded(g, parent.vertex_set(), Bound::None, &mut sd_parent);
    let alpha_full = dijkstra::lex_descent_to_sources(g, a, &sd_parent)
        .expect("parent node reachable");
    let beta_full = dijkstra::lex_descent_to_sources(g, b, &sd_parent)
        .expect("parent node reachable");

    let mut sd_beta = SparseDist::new(g.vertex_count());
    dijkstra::dijkstra_bounded(
        g,
        beta_full.iter().copied(),
        Bound::AtMost(&t_reach),
        &mut sd_beta,
    );

    let near = alpha_full.iter().any(|&v| t_reach.below(sd_beta.get(v)));
    let (alpha, beta, connector) = if near {
        // trim the descent from a at its first vertex within reach of the
        // other descent and bridge across
        let cut = alpha_full
            .iter()
            .position(|&v| t_reach.at_most(sd_beta.get(v)))
            .expect("a strictly close vertex is at most reach away");
        let alpha = alpha_full[..=cut].to_vec();
        let bridge = dijkstra::lex_descent_to_sources(g, alpha[cut], &sd_beta)
            .expect("bounded table covers the bridge");
        let b1 = *bridge.last().unwrap();
        let bpos = beta_full
            .iter()
            .position(|&v| v == b1)
            .expect("bridge ends on the other descent");
        (alpha, beta_full[..=bpos].to_vec(), bridge)
    } else {
        // descents stay apart all the way down; connect their endpoints
        // along the parent
        let a1 = *alpha_full.last().unwrap();
        let b1 = *beta_full.last().unwrap();
        let connector = if a1 == b1 {
            vec![a1]
        } else {
            match &parent.kind {
                NodeKind::Point(_) => vec![a1],
                NodeKind::Circle(c) => cycles::short_arc(c, a1, b1)?.verts,
            }
        };
        (alpha_full.clone(), beta_full.clone(), connector)
    };

    // path joining the pair inside the component
    let mut sd_comp = SparseDist::new(g.vertex_count());
    dijkstra::dijkstra_restricted(g, [b], |v| z.component.contains(v), &mut sd_comp);
    let gamma = dijkstra::lex_descent_to_sources(g, a, &sd_comp)
        .ok_or_else(|| not_found(format!("{a} and {b} do not connect inside the component")))?;

    // closed walk a -> b (inside) -> down beta -> across -> up alpha -> a
    let mut walk = gamma.clone();
    walk.extend_from_slice(&beta[1..]);
    walk.extend(connector.iter().rev().skip(1));
    walk.extend(alpha.iter().rev().skip(1));

    let mut sd_a = SparseDist::new(g.vertex_count());
    let mut sd_b = SparseDist::new(g.vertex_count());
    dijkstra::dijkstra_bounded(g, [a], Bound::AtMost(&t_reach), &mut sd_a);
    dijkstra::dijkstra_bounded(g, [b], Bound::AtMost(&t_reach), &mut sd_b);
    let qualifies = |c: &Cycle| {
        c.vertices().iter().any(|&v| t_reach.at_most(sd_a.get(v)))
            && c.vertices().iter().any(|&v| t_reach.at_most(sd_b.get(v)))
    };
    let best_qualifying = |f: &Filling| -> Option<Cycle> {
        f.leaf_indices()
            .into_iter()
            .filter(|&i| qualifies(&f.regions[i].cycle))
            .max_by_key(|&i| (f.regions[i].cycle.total_len(), std::cmp::Reverse(i)))
            .map(|i| f.regions[i].cycle.clone())
    };

    let root = cycles::simple_cycle_from_walk(g, &walk)
        .map_err(|e| not_found(format!("candidate curve collapsed: {e}")))?;
    let filling = cycles::fill(g, root).map_err(|e| not_found(format!("filling aborted: {e}")))?;

    // designated leaf: the one sharing the most vertices with the
    // in-component path
    let on_gamma: HashSet<VertexId> = gamma.iter().copied().collect();
    let designated = filling
        .leaf_indices()
        .into_iter()
        .max_by_key(|&i| {
            let c = &filling.regions[i].cycle;
            let shared = c.vertices().iter().filter(|v| on_gamma.contains(v)).count();
            (shared, c.total_len(), std::cmp::Reverse(i))
        })
        .expect("filling has at least one leaf");
    if qualifies(&filling.regions[designated].cycle) {
        return Ok(filling.regions[designated].cycle.clone());
    }
    if let Some(c) = best_qualifying(&filling) {
        return Ok(c);
    }

    // fallback curves: the in-component path closed by a geodesic, and the
    // outer three pieces closed the same way
    let mut row: Vec<SDist> = Vec::new();
    dijkstra::dijkstra_full(g, &[a], &mut row);
    if let Some(geo) = dijkstra::lex_geodesic(g, b, a, &row) {
        let mut inner = gamma.clone();
        inner.extend_from_slice(&geo[1..]);
        let mut outer = alpha.clone();
        outer.extend_from_slice(&connector[1..]);
        outer.extend(beta.iter().rev().skip(1));
        outer.extend_from_slice(&geo[1..]);
        for walk in [inner, outer] {
            let Ok(cyc) = cycles::simple_cycle_from_walk(g, &walk) else {
                continue;
            };
            let Ok(f) = cycles::fill(g, cyc) else { continue };
            if let Some(c) = best_qualifying(&f) {
                return Ok(c);
            }
        }
    }

    Err(not_found(format!(
        "no filling leaf within {} of both {a} and {b}",
        fmt_len(&reach)
    )))
}

/// Build the cactus approximation of `g` around basepoint `base` at inner
/// scale `m` and carving radius `big_m`.
pub fn build_cactus(
    g: &MetricGraph,
    base: VertexId,
    m: Len,
    big_m: Len,
) -> Result<CactusApprox, Error> {
    if !m.is_positive() || !big_m.is_positive() {
        return Err(Error::BadParameter(format!(
            "scales must be positive, got m = {}, M = {}",
            fmt_len(&m),
            fmt_len(&big_m)
        )));
    }
    if base >= g.vertex_count() {
        return Err(Error::NotInGraph(format!("basepoint vertex {base}")));
    }
    let t_m = g.thresh(big_m)?;
    let diam = g.unscale(g.diameter());
    let cap = (diam / (big_m * 4 / 5)).ceil().to_integer() as usize + 1;

    let mut nodes = vec![Node {
        level: 0,
        kind: NodeKind::Point(base),
        basepoint: base,
        parent_attach: None,
        exit_points: Vec::new(),
        parent: None,
        connecting_edge_length: Len::zero(),
    }];
    let whole = SubSpace::new((0..g.vertex_count()).collect(), MetricMode::Path);
    let mut levels = vec![LevelGraph {
        level: 0,
        component: whole.clone(),
        boundary: vec![base],
        node: 0,
        circle_pair: None,
    }];

    let mut active: Vec<(usize, SubSpace)> = vec![(0, whole)];
    let mut level = 0usize;
    let mut sd = SparseDist::new(g.vertex_count());
    while !active.is_empty() {
        level += 1;
        if level > cap {
            return Err(Error::NonTermination { cap });
        }
        let mut next_active = Vec::new();
        for (parent_idx, parent_comp) in std::mem::take(&mut active) {
            dijkstra::dijkstra_bounded(g, nodes[parent_idx].vertex_set(), Bound::None, &mut sd);
            let (label, count) =
                dijkstra::components(g, |v| parent_comp.contains(v) && t_m.at_least(sd.get(v)));
            let mut buckets: Vec<Vec<VertexId>> = vec![Vec::new(); count];
            for &v in &parent_comp.vertices {
                if label[v] != u32::MAX {
                    buckets[label[v] as usize].push(v);
                }
            }
            for verts in buckets {
                let boundary: Vec<VertexId> = verts
                    .iter()
                    .copied()
                    .filter(|&v| t_m.exactly(sd.get(v)))
                    .collect();
                let component = SubSpace::new(verts, MetricMode::Path);
                let node_idx = nodes.len();
                let mut lg = LevelGraph {
                    level,
                    component: component.clone(),
                    boundary,
                    node: node_idx,
                    circle_pair: None,
                };
                let (kind, basepoint, conn_sd) = match classify_component(g, &lg, big_m)? {
                    Classification::Point(y) => (NodeKind::Point(y), y, sd.get(y)),
                    Classification::Circle { a, b } => {
                        lg.circle_pair = Some((a, b));
                        let circle = find_circle_node(
                            g,
                            &nodes[parent_idx],
                            parent_idx,
                            &lg,
                            a,
                            b,
                            m,
                            big_m,
                        )?;
                        debug_assert!(circle.is_geodesic_circle(g));
                        let (d, s) = circle
                            .vertices()
                            .iter()
                            .map(|&v| (sd.get(v), v))
                            .min()
                            .unwrap();
                        (NodeKind::Circle(circle), s, d)
                    }
                };
                let exit = descend_last(g, basepoint, &sd);
                nodes.push(Node {
                    level,
                    kind,
                    basepoint,
                    parent_attach: Some(exit),
                    exit_points: Vec::new(),
                    parent: Some(parent_idx),
                    connecting_edge_length: g.unscale(conn_sd),
                });
                nodes[parent_idx].exit_points.push(exit);
                next_active.push((node_idx, component));
                levels.push(lg);
            }
        }
        active = next_active;
    }

    // assemble the cactus: parents come first, so attachment vertices exist
    let mut h: Vec<VertexId> = Vec::new();
    let mut node_cvs: Vec<Vec<usize>> = Vec::with_capacity(nodes.len());
    let mut c_edges: Vec<(usize, usize, Len)> = Vec::new();
    for node in &nodes {
        let parent_cv = node.parent.map(|p| {
            let at = node.parent_attach.expect("child records its attachment");
            match &nodes[p].kind {
                NodeKind::Point(_) => node_cvs[p][0],
                NodeKind::Circle(c) => {
                    node_cvs[p][c.position_of(at).expect("attachment lies on the parent")]
                }
            }
        });
        match &node.kind {
            NodeKind::Point(y) => {
                let cv = h.len();
                h.push(*y);
                if let Some(pcv) = parent_cv {
                    c_edges.push((pcv, cv, node.connecting_edge_length));
                }
                node_cvs.push(vec![cv]);
            }
            NodeKind::Circle(c) => {
                let q = c.vertex_count();
                let bpos = c.position_of(node.basepoint).expect("basepoint on circle");
                let identified = node.connecting_edge_length.is_zero() && parent_cv.is_some();
                let mut cvs = vec![0usize; q];
                for (k, &v) in c.vertices().iter().enumerate() {
                    if identified && k == bpos {
                        cvs[k] = parent_cv.unwrap();
                    } else {
                        cvs[k] = h.len();
                        h.push(v);
                    }
                }
                for k in 0..q {
                    let u = c.vertices()[k];
                    let v = c.vertices()[(k + 1) % q];
                    let e = g.find_edge(u, v).expect("circle follows graph edges");
                    c_edges.push((cvs[k], cvs[(k + 1) % q], g.unscale(g.edge_weight(e))));
                }
                if !identified {
                    if let Some(pcv) = parent_cv {
                        c_edges.push((pcv, cvs[bpos], node.connecting_edge_length));
                    }
                }
                node_cvs.push(cvs);
            }
        }
    }
    let cactus = MetricGraph::new(h.len(), c_edges)?;

    Ok(CactusApprox {
        cactus,
        nodes,
        levels,
        h,
        node_vertex_ids: node_cvs,
        base,
        m,
        big_m,
    })
}

/// One audited inequality: how many instances were checked, how many failed,
/// and the worst slack seen (negative means a violation).
#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: &'static str,
    pub instances: usize,
    pub failures: usize,
    #[serde(with = "crate::num::serde_len_opt")]
    pub worst_slack: Option<Len>,
}

/// Audit of a finished build against the metric inequalities behind it.
#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    #[serde(with = "crate::num::serde_len")]
    pub m: Len,
    #[serde(with = "crate::num::serde_len")]
    pub big_m: Len,
    pub checks: Vec<CheckLine>,
    pub failures: usize,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.failures == 0
    }

    pub fn check(&self, name: &str) -> Option<&CheckLine> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tally {
    name: &'static str,
    instances: usize,
    failures: usize,
    worst: Option<Len>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            instances: 0,
            failures: 0,
            worst: None,
        }
    }

    /// Record a slack; the instance fails when the slack is negative.
    fn add(&mut self, slack: Len) {
        self.instances += 1;
        if slack.is_negative() {
            self.failures += 1;
        }
        self.worst = Some(match self.worst {
            Some(w) if w <= slack => w,
            _ => slack,
        });
    }

    /// Record a slack for a strict bound; zero slack already fails.
    fn add_strict(&mut self, slack: Len) {
        self.instances += 1;
        if !slack.is_positive() {
            self.failures += 1;
        }
        self.worst = Some(match self.worst {
            Some(w) if w <= slack => w,
            _ => slack,
        });
    }

    fn line(self) -> CheckLine {
        CheckLine {
            name: self.name,
            instances: self.instances,
            failures: self.failures,
            worst_slack: self.worst,
        }
    }
}

fn induced_diam(g: &MetricGraph, verts: Vec<VertexId>) -> SDist {
    if verts.len() < 2 {
        return 0;
    }
    SubSpace::new(verts, MetricMode::Induced)
        .diameter_pair(g)
        .map(|(_, _, d)| d)
        .unwrap_or(0)
}

/// Re-examine a finished build: every inequality the construction leans on is
/// instantiated over all applicable node, component, and vertex tuples, with
/// pass and fail counts and the worst margin per check. Pure audit; the build
/// is not modified.
pub fn audit_inequalities(g: &MetricGraph, approx: &CactusApprox) -> AuditReport {
    let m = approx.m;
    let bm = approx.big_m;
    let nodes = &approx.nodes;
    let levels = &approx.levels;
    let un = |d: SDist| g.unscale(d);
    let unc = |d: SDist| approx.cactus.unscale(d);

    let mut lg_of = vec![usize::MAX; nodes.len()];
    for (li, lg) in levels.iter().enumerate() {
        lg_of[lg.node] = li;
    }
    let circles: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].is_circle()).collect();
    let circle_of = |i: usize| -> &Cycle {
        match &nodes[i].kind {
            NodeKind::Circle(c) => c,
            NodeKind::Point(_) => unreachable!("filtered to circle nodes"),
        }
    };

    let mut sd = SparseDist::new(g.vertex_count());
    let mut sd2 = SparseDist::new(g.vertex_count());
    let mut checks = Vec::new();

    // every circle grown around a point node bulges outward: distance from
    // the point grows along the circle, up to a 100 m correction
    let mut t = Tally::new("radial_growth");
    for &i in &circles {
        let Some(p) = nodes[i].parent else { continue };
        let NodeKind::Point(z) = nodes[p].kind else {
            continue;
        };
        let c = circle_of(i);
        dijkstra::dijkstra_bounded(g, [z], Bound::None, &mut sd);
        let (r, near) = c.vertices().iter().map(|&v| (sd.get(v), v)).min().unwrap();
        let npos = c.position_of(near).unwrap();
        for (k, &x) in c.vertices().iter().enumerate() {
            let arc = c.arc_dist(k, npos);
            t.add(un(sd.get(x)) - un(r) - un(arc) + m * 100);
        }
    }
    checks.push(t.line());

    // pair preconditions shared by the two circle-pair checks
    let pair_applies = |i: usize, j: usize, sd: &mut SparseDist| -> bool {
        let ci = circle_of(i);
        let cj = circle_of(j);
        let long = |c: &Cycle| un(c.total_len()) >= bm / 10;
        if !long(ci) || !long(cj) {
            return false;
        }
        dijkstra::dijkstra_bounded(g, cj.vertices().iter().copied(), Bound::None, sd);
        ci.vertices().iter().any(|&s| un(sd.get(s)) >= bm / 100)
    };

    // vertices of one long circle near another long circle stay bunched
    let mut t = Tally::new("near_set_span");
    for &i in &circles {
        for &j in &circles {
            if i == j || !pair_applies(i, j, &mut sd) {
                continue;
            }
            let ci = circle_of(i);
            let near: Vec<VertexId> = ci
                .vertices()
                .iter()
                .copied()
                .filter(|&x| un(sd.get(x)) <= m * 10)
                .collect();
            for (ai, &x) in near.iter().enumerate() {
                for &y in near.iter().skip(ai + 1) {
                    let d = dijkstra::dijkstra_pair(g, x, y, &mut sd2);
                    t.add(m * 30 - un(d));
                }
            }
        }
    }
    checks.push(t.line());

    // distance between two long circles splits into closest approach plus
    // arcs to the closest points, up to a 1000 m correction
    let mut t = Tally::new("twin_circle_additivity");
    for &i in &circles {
        for &j in &circles {
            if i == j || !pair_applies(i, j, &mut sd) {
                continue;
            }
            let ci = circle_of(i);
            let cj = circle_of(j);
            let (r, e1) = ci.vertices().iter().map(|&v| (sd.get(v), v)).min().unwrap();
            let p = descend_last(g, e1, &sd);
            let e1pos = ci.position_of(e1).unwrap();
            let ppos = cj.position_of(p).unwrap();
            for (k, &x) in ci.vertices().iter().enumerate() {
                dijkstra::dijkstra_bounded(g, [x], Bound::None, &mut sd2);
                let arc_x = ci.arc_dist(k, e1pos);
                for (l, &y) in cj.vertices().iter().enumerate() {
                    let arc_y = cj.arc_dist(ppos, l);
                    t.add(un(sd2.get(y)) - un(r) - un(arc_x) - un(arc_y) + m * 1000);
                }
            }
        }
    }
    checks.push(t.line());

    // in the circle case, every boundary vertex sits near the spread pair
    let mut t = Tally::new("boundary_two_cover");
    for lg in levels {
        let Some((a, b)) = lg.circle_pair else { continue };
        dijkstra::dijkstra_bounded(g, [a], Bound::None, &mut sd);
        dijkstra::dijkstra_bounded(g, [b], Bound::None, &mut sd2);
        for &c in &lg.boundary {
            t.add(bm / 10 - un(sd.get(c).min(sd2.get(c))));
        }
    }
    checks.push(t.line());

    // a circle meets its own component in a part of diameter at least M / 20
    let mut t = Tally::new("core_overlap_floor");
    for &i in &circles {
        let c = circle_of(i);
        let lg = &levels[lg_of[i]];
        let inter: Vec<VertexId> = c
            .vertices()
            .iter()
            .copied()
            .filter(|&v| lg.component.contains(v))
            .collect();
        t.add(un(induced_diam(g, inter)) - bm / 20);
    }
    checks.push(t.line());

    // a circle grown inside a circle parent reaches past it: the antipode of
    // the basepoint is farther than M while the basepoint is closer
    let mut t = Tally::new("antipode_split");
    for &i in &circles {
        let Some(p) = nodes[i].parent else { continue };
        let NodeKind::Circle(parent_circle) = &nodes[p].kind else {
            continue;
        };
        let c = circle_of(i);
        dijkstra::dijkstra_bounded(
            g,
            parent_circle.vertices().iter().copied(),
            Bound::None,
            &mut sd,
        );
        let s = nodes[i].basepoint;
        let spos = c.position_of(s).unwrap();
        let total = c.total_len();
        let (_, q) = (0..c.vertex_count())
            .map(|k| (total.abs_diff(2 * c.forward_len(spos, k)), c.vertices()[k]))
            .min()
            .unwrap();
        t.add_strict(un(sd.get(q)) - bm);
        t.add_strict(bm - un(sd.get(s)));
    }
    checks.push(t.line());

    // a circle barely enters sibling components: overlap stays below 100 m
    // under a point parent and 2000 m under a circle parent
    let mut t = Tally::new("sibling_overlap_cap");
    for &i in &circles {
        let Some(p) = nodes[i].parent else { continue };
        let cap = match nodes[p].kind {
            NodeKind::Point(_) => m * 100,
            NodeKind::Circle(_) => m * 2000,
        };
        let c = circle_of(i);
        let own = lg_of[i];
        for (li, sib) in levels.iter().enumerate() {
            if li == own || sib.level != nodes[i].level || nodes[sib.node].parent != Some(p) {
                continue;
            }
            let inter: Vec<VertexId> = c
                .vertices()
                .iter()
                .copied()
                .filter(|&v| sib.component.contains(v))
                .collect();
            t.add(cap - un(induced_diam(g, inter)));
        }
    }
    checks.push(t.line());

    // consecutive carved boundaries stay at least 8 M / 10 apart
    let mut t = Tally::new("level_gap_floor");
    for lg in levels.iter().filter(|lg| lg.level >= 1) {
        let p = nodes[lg.node].parent.unwrap();
        let parent_lg = &levels[lg_of[p]];
        dijkstra::dijkstra_bounded(g, parent_lg.boundary.iter().copied(), Bound::None, &mut sd);
        let dmin = lg.boundary.iter().map(|&v| sd.get(v)).min();
        if let Some(dmin) = dmin {
            t.add(un(dmin) - bm * 4 / 5);
        }
    }
    checks.push(t.line());

    // a node pokes out of its own component by at most 3 M
    let mut t = Tally::new("node_spill_cap");
    for (i, node) in nodes.iter().enumerate() {
        if node.level == 0 {
            continue;
        }
        let lg = &levels[lg_of[i]];
        let outside: Vec<VertexId> = node
            .vertex_set()
            .into_iter()
            .filter(|&v| !lg.component.contains(v))
            .collect();
        t.add(bm * 3 - un(induced_diam(g, outside)));
    }
    checks.push(t.line());

    // cactus distance between nodes tracks graph distance between their
    // boundaries within a factor of two, sampled at the nearest node
    // vertices of qualifying boundary points
    let qual = bm / 10 + m * 100;
    let mut t = Tally::new("boundary_distance_comparison");
    let mut sd3 = SparseDist::new(g.vertex_count());
    for lg in levels.iter().filter(|lg| lg.level >= 1) {
        let p = nodes[lg.node].parent.unwrap();
        let parent_lg = &levels[lg_of[p]];
        dijkstra::dijkstra_bounded(g, nodes[p].vertex_set(), Bound::None, &mut sd);
        dijkstra::dijkstra_bounded(g, nodes[lg.node].vertex_set(), Bound::None, &mut sd2);
        for &x in &parent_lg.boundary {
            if un(sd.get(x)) > qual {
                continue;
            }
            let cv_x = approx
                .cactus_vertex(p, descend_last(g, x, &sd))
                .expect("descent ends on the parent node");
            dijkstra::dijkstra_bounded(g, [x], Bound::None, &mut sd3);
            for &y in &lg.boundary {
                if un(sd2.get(y)) > qual {
                    continue;
                }
                let cv_y = approx
                    .cactus_vertex(lg.node, descend_last(g, y, &sd2))
                    .expect("descent ends on the child node");
                let dxy = un(sd3.get(y));
                let dc = unc(approx.cactus_dist(cv_x, cv_y));
                t.add((dxy * 2 - dc).min(dc - dxy / 2));
            }
        }
    }
    checks.push(t.line());

    // sibling circles under one component: cactus distance between their
    // near-boundary vertices is at most the boundary distance plus 5 M
    let mut t = Tally::new("sibling_detour_cap");
    for (li, lgi) in levels.iter().enumerate() {
        if lgi.level == 0 || !nodes[lgi.node].is_circle() {
            continue;
        }
        for lgj in levels.iter().skip(li + 1) {
            if lgj.level != lgi.level
                || !nodes[lgj.node].is_circle()
                || nodes[lgj.node].parent != nodes[lgi.node].parent
            {
                continue;
            }
            dijkstra::dijkstra_bounded(g, nodes[lgi.node].vertex_set(), Bound::None, &mut sd);
            dijkstra::dijkstra_bounded(g, nodes[lgj.node].vertex_set(), Bound::None, &mut sd2);
            for &y in &lgi.boundary {
                if un(sd.get(y)) > qual {
                    continue;
                }
                let cv_x = approx
                    .cactus_vertex(lgi.node, descend_last(g, y, &sd))
                    .expect("descent ends on its node");
                dijkstra::dijkstra_bounded(g, [y], Bound::None, &mut sd3);
                for &z in &lgj.boundary {
                    if un(sd2.get(z)) > qual {
                        continue;
                    }
                    let cv_z = approx
                        .cactus_vertex(lgj.node, descend_last(g, z, &sd2))
                        .expect("descent ends on its node");
                    let dc = unc(approx.cactus_dist(cv_x, cv_z));
                    t.add(un(sd3.get(z)) + bm * 5 - dc);
                }
            }
        }
    }
    checks.push(t.line());

    let failures = checks.iter().map(|c| c.failures).sum();
    AuditReport {
        m,
        big_m: bm,
        checks,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    fn len(n: i64) -> Len {
        Len::from_integer(n)
    }

    /// Center 0 with three rays of four unit edges each; ray r holds
    /// vertices 1 + 4r .. 4 + 4r outward.
    fn star() -> MetricGraph {
        let mut edges = Vec::new();
        for r in 0..3usize {
            let first = 1 + 4 * r;
            edges.push((0, first, len(1)));
            for k in 0..3 {
                edges.push((first + k, first + k + 1, len(1)));
            }
        }
        MetricGraph::new(13, edges).unwrap()
    }

    fn carved_level(g: &MetricGraph, base: VertexId, big_m: Len) -> LevelGraph {
        let t = g.thresh(big_m).unwrap();
        let mut sd = SparseDist::new(g.vertex_count());
        dijkstra::dijkstra_bounded(g, [base], Bound::None, &mut sd);
        let verts: Vec<VertexId> =
            (0..g.vertex_count()).filter(|&v| t.at_least(sd.get(v))).collect();
        let boundary = verts.iter().copied().filter(|&v| t.exactly(sd.get(v))).collect();
        LevelGraph {
            level: 1,
            component: SubSpace::new(verts, MetricMode::Path),
            boundary,
            node: 1,
            circle_pair: None,
        }
    }

    #[test]
    fn star_rays_become_point_chains() {
        let g = star();
        let approx = build_cactus(&g, 0, len(1), len(2)).unwrap();
        assert_eq!(approx.nodes.len(), 7);
        assert!(approx.nodes.iter().all(|n| !n.is_circle()));
        let conns: Vec<Len> = approx
            .nodes
            .iter()
            .map(|n| n.connecting_edge_length)
            .collect();
        assert_eq!(conns, vec![len(0), len(2), len(2), len(2), len(2), len(2), len(2)]);
        assert_eq!(approx.h, vec![0, 2, 6, 10, 4, 8, 12]);
        assert_eq!(approx.cactus.vertex_count(), 7);
        assert_eq!(approx.cactus.edge_count(), 6);
        assert_eq!(approx.cactus.total_len(), len(12));
        // every source vertex lies within the carving radius of the image
        let mut sd = SparseDist::new(g.vertex_count());
        dijkstra::dijkstra_bounded(&g, approx.h.iter().copied(), Bound::None, &mut sd);
        for v in 0..g.vertex_count() {
            assert!(g.unscale(sd.get(v)) < len(2));
        }
    }

    #[test]
    fn wide_boundary_takes_circle_case() {
        let g = gen::cycle(300).unwrap();
        let lg = carved_level(&g, 0, len(20));
        assert_eq!(lg.boundary, vec![20, 280]);
        let class = classify_component(&g, &lg, len(20)).unwrap();
        assert_eq!(class, Classification::Circle { a: 20, b: 280 });
    }

    #[test]
    fn single_boundary_vertex_takes_point_case() {
        let g = star();
        let lg = LevelGraph {
            level: 1,
            component: SubSpace::new(vec![2, 3, 4], MetricMode::Path),
            boundary: vec![2],
            node: 1,
            circle_pair: None,
        };
        let class = classify_component(&g, &lg, len(2)).unwrap();
        assert_eq!(class, Classification::Point(2));
    }

    #[test]
    fn classify_requires_boundary() {
        let g = gen::path(4).unwrap();
        let lg = LevelGraph {
            level: 1,
            component: SubSpace::new(vec![2, 3, 4], MetricMode::Path),
            boundary: Vec::new(),
            node: 1,
            circle_pair: None,
        };
        let err = classify_component(&g, &lg, len(2)).unwrap_err();
        assert!(matches!(err, Error::EmptyBoundary { .. }));
    }

    #[test]
    fn circle_search_recovers_cycle() {
        let g = gen::cycle(300).unwrap();
        let lg = carved_level(&g, 0, len(20));
        let root = Node {
            level: 0,
            kind: NodeKind::Point(0),
            basepoint: 0,
            parent_attach: None,
            exit_points: Vec::new(),
            parent: None,
            connecting_edge_length: len(0),
        };
        let c = find_circle_node(&g, &root, 0, &lg, 20, 280, len(1), len(20)).unwrap();
        assert_eq!(c.vertex_count(), 300);
        assert_eq!(c.total_len(), 300);
        assert!(c.is_geodesic_circle(&g));
    }

    #[test]
    fn cycle_build_identifies_basepoint() {
        let g = gen::cycle(300).unwrap();
        let approx = build_cactus(&g, 0, len(1), len(20)).unwrap();
        assert_eq!(approx.nodes.len(), 2);
        assert_eq!(approx.levels.len(), 2);
        assert_eq!(approx.levels[1].boundary, vec![20, 280]);
        assert_eq!(approx.levels[1].circle_pair, Some((20, 280)));
        let node = &approx.nodes[1];
        assert!(node.is_circle());
        assert_eq!(node.connecting_edge_length, len(0));
        assert_eq!(node.basepoint, 0);
        assert_eq!(node.parent_attach, Some(0));
        assert_eq!(approx.cactus.vertex_count(), 300);
        assert_eq!(approx.cactus.edge_count(), 300);
        assert_eq!(approx.cactus.total_len(), len(300));
        assert_eq!(approx.h[0], 0);
    }

    #[test]
    fn figure_eight_grows_two_circles() {
        let g = gen::figure_eight(300, 300).unwrap();
        let approx = build_cactus(&g, 0, len(1), len(20)).unwrap();
        assert_eq!(approx.nodes.len(), 3);
        assert!(!approx.nodes[0].is_circle());
        for node in &approx.nodes[1..] {
            assert!(node.is_circle());
            assert_eq!(node.parent, Some(0));
            assert_eq!(node.connecting_edge_length, len(0));
            assert_eq!(node.basepoint, 0);
        }
        assert_eq!(approx.cactus.vertex_count(), 599);
        assert_eq!(approx.cactus.edge_count(), 600);
    }

    #[test]
    fn lollipop_chains_points_then_circle() {
        let g = gen::lollipop(100, 300).unwrap();
        let approx = build_cactus(&g, 0, len(1), len(20)).unwrap();
        assert_eq!(approx.nodes.len(), 7);
        let kinds: Vec<bool> = approx.nodes.iter().map(|n| n.is_circle()).collect();
        assert_eq!(kinds, vec![false, false, false, false, false, false, true]);
        let conns: Vec<Len> = approx
            .nodes
            .iter()
            .map(|n| n.connecting_edge_length)
            .collect();
        assert_eq!(
            conns,
            vec![len(0), len(20), len(20), len(20), len(20), len(20), len(0)]
        );
        assert_eq!(&approx.h[..6], &[0, 20, 40, 60, 80, 100]);
        assert_eq!(approx.levels[6].boundary, vec![120, 380]);
        assert_eq!(approx.cactus.vertex_count(), 305);
        assert_eq!(approx.cactus.edge_count(), 305);
        assert_eq!(approx.cactus.total_len(), len(400));
        // the map contracts every cactus edge
        let mut sd = SparseDist::new(g.vertex_count());
        for e in approx.cactus.edges() {
            let du = dijkstra::dijkstra_pair(&g, approx.h[e.u], approx.h[e.v], &mut sd);
            assert!(g.unscale(du) <= e.len);
        }
    }

    #[test]
    fn path_build_is_point_chain() {
        let g = gen::path(200).unwrap();
        let approx = build_cactus(&g, 0, len(1), len(40)).unwrap();
        assert_eq!(approx.nodes.len(), 6);
        assert!(approx.nodes.iter().all(|n| !n.is_circle()));
        assert_eq!(approx.h, vec![0, 40, 80, 120, 160, 200]);
        assert_eq!(approx.cactus.vertex_count(), 6);
        assert_eq!(approx.cactus.edge_count(), 5);
        assert_eq!(approx.cactus.total_len(), len(200));
    }

    #[test]
    fn fractional_radius_misses_lattice() {
        let g = gen::path(10).unwrap();
        let err = build_cactus(&g, 0, len(1), Len::new(3, 2)).unwrap_err();
        assert!(matches!(err, Error::EmptyBoundary { .. }));
    }

    #[test]
    fn audit_cycle_build_passes() {
        let g = gen::cycle(300).unwrap();
        let approx = build_cactus(&g, 0, len(1), len(20)).unwrap();
        let report = audit_inequalities(&g, &approx);
        assert!(report.all_pass(), "unexpected failures: {report:?}");
        let radial = report.check("radial_growth").unwrap();
        assert_eq!(radial.instances, 300);
        assert_eq!(radial.worst_slack, Some(len(100)));
        let cover = report.check("boundary_two_cover").unwrap();
        assert_eq!(cover.instances, 2);
        assert_eq!(cover.worst_slack, Some(len(2)));
        assert_eq!(report.check("level_gap_floor").unwrap().worst_slack, Some(len(4)));
        assert_eq!(report.check("node_spill_cap").unwrap().worst_slack, Some(len(22)));
        assert_eq!(
            report.check("core_overlap_floor").unwrap().worst_slack,
            Some(len(149))
        );
        assert_eq!(
            report.check("boundary_distance_comparison").unwrap().worst_slack,
            Some(len(10))
        );
    }

    #[test]
    fn audit_figure_eight_twin_circles() {
        let g = gen::figure_eight(300, 300).unwrap();
        let approx = build_cactus(&g, 0, len(1), len(20)).unwrap();
        let report = audit_inequalities(&g, &approx);
        assert!(report.all_pass(), "unexpected failures: {report:?}");
        let radial = report.check("radial_growth").unwrap();
        assert_eq!(radial.instances, 600);
        assert_eq!(radial.worst_slack, Some(len(100)));
        let twin = report.check("twin_circle_additivity").unwrap();
        assert_eq!(twin.instances, 180_000);
        assert_eq!(twin.worst_slack, Some(len(1000)));
        let near = report.check("near_set_span").unwrap();
        assert_eq!(near.instances, 420);
        assert_eq!(near.worst_slack, Some(len(10)));
    }

    #[test]
    fn grid_build_aborts_at_level_cap() {
        // the carve keeps finding small squares near the previous node, so
        // levels accumulate without exhausting the grid
        let g = gen::grid(20, 20).unwrap();
        let err = build_cactus(&g, 0, Len::new(1, 50), len(2)).unwrap_err();
        assert!(matches!(err, Error::NonTermination { cap: 25 }));
    }
}
