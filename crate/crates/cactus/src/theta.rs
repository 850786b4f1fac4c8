//! Fat theta curves: verification, search, and extraction from a failed
//! separation.
//!
//! A theta curve is two vertices joined by three arcs. It is M-fat for a
//! chosen split of each arc into a head, an open middle, and a tail when the
//! middles of different arcs stay M apart, no middle touches any head or
//! tail, and the heads as a group stay 2M from the tails as a group. All
//! comparisons are exact rational at the current granularity.
//!
//! The extraction pipeline turns an inseparable far pair into such a curve:
//! probe balls along a geodesic leave a detour (`find_bridge`), the detour is
//! straightened until shortcuts run out, and the stable picture collapses
//! either to a pinch near the geodesic or to a genuinely spread third path
//! (`violation_to_theta`).

use std::collections::{HashMap, HashSet};

use num_traits::Signed;

use crate::dijkstra::{self, Bound, SparseDist};
use crate::error::Error;
use crate::graph::{Lattice, MetricGraph, VertexId};
use crate::num::{floor_to_lattice_pos, Len, SDist, Thresh, INF};

/// Two vertices joined by three arcs, each a simple path in the graph. Arcs
/// may share interior vertices with each other; `embedded` reports whether
/// they do not.
#[derive(Debug, Clone)]
pub struct ThetaCurve {
    pub a: VertexId,
    pub b: VertexId,
    pub arcs: [Vec<VertexId>; 3],
}

impl ThetaCurve {
    pub fn new(
        g: &MetricGraph,
        a: VertexId,
        b: VertexId,
        arcs: [Vec<VertexId>; 3],
    ) -> Result<Self, Error> {
        if a == b {
            return Err(Error::ThetaConstruction(
                "theta vertices must be distinct".into(),
            ));
        }
        for (i, arc) in arcs.iter().enumerate() {
            if arc.len() < 2 || arc[0] != a || *arc.last().unwrap() != b {
                return Err(Error::ThetaConstruction(format!(
                    "arc {i} must run from vertex {a} to vertex {b}"
                )));
            }
            let mut seen = HashSet::with_capacity(arc.len());
            for &v in arc {
                if !seen.insert(v) {
                    return Err(Error::ThetaConstruction(format!(
                        "arc {i} revisits vertex {v}"
                    )));
                }
            }
            for step in arc.windows(2) {
                if g.find_edge(step[0], step[1]).is_none() {
                    return Err(Error::ThetaConstruction(format!(
                        "arc {i} steps from {} to {} without an edge",
                        step[0], step[1]
                    )));
                }
            }
        }
        Ok(ThetaCurve { a, b, arcs })
    }

    /// True when the three arcs meet only at the two theta vertices.
    pub fn embedded(&self) -> bool {
        let interior = |arc: &Vec<VertexId>| -> HashSet<VertexId> {
            arc[1..arc.len() - 1].iter().copied().collect()
        };
        let sets: Vec<HashSet<VertexId>> = self.arcs.iter().map(interior).collect();
        sets[0].is_disjoint(&sets[1])
            && sets[0].is_disjoint(&sets[2])
            && sets[1].is_disjoint(&sets[2])
    }
}

/// Head/tail boundary of one arc: the head is `arc[..=alpha_end]`, the tail
/// is `arc[beta_start..]`, and the open middle is what lies strictly between.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArcSplit {
    pub alpha_end: usize,
    pub beta_start: usize,
}

/// A theta curve together with the claimed fatness and the splits that are
/// supposed to realize it.
#[derive(Debug, Clone)]
pub struct FatThetaWitness {
    pub theta: ThetaCurve,
    pub fatness: Len,
    pub splits: [ArcSplit; 3],
}

/// A detour certificate: a geodesic `gamma`, two short posts `left` and
/// `right` of length at most `reach` anchoring it, and a middle path `mid`
/// whose interior stays more than `reach` away from the geodesic while its
/// anchors sit at least `m` apart.
#[derive(Debug, Clone)]
pub struct Bridge {
    pub gamma: Vec<VertexId>,
    /// Post from the near end of `mid` down to the geodesic.
    pub left: Vec<VertexId>,
    /// The detour itself; first and last vertices are the post tops.
    pub mid: Vec<VertexId>,
    /// Post from the far end of `mid` down to the geodesic.
    pub right: Vec<VertexId>,
    pub m: Len,
    pub reach: Len,
}

impl Bridge {
    pub fn l1(&self) -> VertexId {
        self.mid[0]
    }
    pub fn r1(&self) -> VertexId {
        *self.mid.last().unwrap()
    }
    pub fn l2(&self) -> VertexId {
        *self.left.last().unwrap()
    }
    pub fn r2(&self) -> VertexId {
        *self.right.last().unwrap()
    }
}

/// Cap on endpoint pairs tried by `search_fat_theta`, most distant first.
#[derive(Debug, Clone, Copy)]
pub struct SearchBudget {
    pub pairs: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { pairs: 2000 }
    }
}

/// Cumulative scaled arc length at each vertex of a path.
fn positions(g: &MetricGraph, path: &[VertexId]) -> Vec<SDist> {
    let mut pos = Vec::with_capacity(path.len());
    let mut acc: SDist = 0;
    pos.push(0);
    for step in path.windows(2) {
        let e = g
            .find_edge(step[0], step[1])
            .expect("path steps must follow edges");
        acc += g.edge_weight(e);
        pos.push(acc);
    }
    pos
}

/// Remove loops from a walk, keeping the earliest visit of each vertex.
fn loop_erase(walk: &[VertexId]) -> Vec<VertexId> {
    let mut out: Vec<VertexId> = Vec::with_capacity(walk.len());
    let mut at: HashMap<VertexId, usize> = HashMap::new();
    for &v in walk {
        if let Some(&i) = at.get(&v) {
            for &w in &out[i + 1..] {
                at.remove(&w);
            }
            out.truncate(i + 1);
        } else {
            at.insert(v, out.len());
            out.push(v);
        }
    }
    out
}

/// Slice of `path` walked from index `i` to index `j` inclusive, in either
/// direction.
fn walk_between(path: &[VertexId], i: usize, j: usize) -> Vec<VertexId> {
    if i <= j {
        path[i..=j].to_vec()
    } else {
        path[j..=i].iter().rev().copied().collect()
    }
}

/// Check the three fatness conditions exactly. Malformed splits (indices
/// past the arc) are an error; an empty middle is an honest `false`.
pub fn verify_fat_theta(g: &MetricGraph, w: &FatThetaWitness) -> Result<bool, Error> {
    if !w.fatness.is_positive() {
        return Err(Error::BadParameter("fatness must be positive".into()));
    }
    for (i, arc) in w.theta.arcs.iter().enumerate() {
        let sp = w.splits[i];
        if sp.alpha_end >= arc.len() || sp.beta_start >= arc.len() {
            return Err(Error::ThetaConstruction(format!(
                "split on arc {i} points past the end of the arc"
            )));
        }
    }
    let t_fat = g.thresh(w.fatness)?;
    let t_double = g.thresh(w.fatness * 2)?;
    let mut heads: Vec<&[VertexId]> = Vec::with_capacity(3);
    let mut mids: Vec<&[VertexId]> = Vec::with_capacity(3);
    let mut tails: Vec<&[VertexId]> = Vec::with_capacity(3);
    for (arc, sp) in w.theta.arcs.iter().zip(w.splits.iter()) {
        if sp.alpha_end + 1 >= sp.beta_start {
            return Ok(false);
        }
        heads.push(&arc[..=sp.alpha_end]);
        mids.push(&arc[sp.alpha_end + 1..sp.beta_start]);
        tails.push(&arc[sp.beta_start..]);
    }
    // no middle may touch any head or tail, own arc included
    let ends: HashSet<VertexId> = heads
        .iter()
        .chain(tails.iter())
        .flat_map(|part| part.iter().copied())
        .collect();
    if mids.iter().any(|mid| mid.iter().any(|v| ends.contains(v))) {
        return Ok(false);
    }
    // middles of different arcs stay fatness apart
    let mut row = Vec::new();
    dijkstra::dijkstra_full(g, mids[0], &mut row);
    if mids[1]
        .iter()
        .chain(mids[2].iter())
        .any(|&v| t_fat.below(row[v]))
    {
        return Ok(false);
    }
    dijkstra::dijkstra_full(g, mids[1], &mut row);
    if mids[2].iter().any(|&v| t_fat.below(row[v])) {
        return Ok(false);
    }
    // heads as a group stay twice the fatness from the tails
    let all_heads: Vec<VertexId> = heads.concat();
    dijkstra::dijkstra_full(g, &all_heads, &mut row);
    if tails
        .iter()
        .flat_map(|part| part.iter())
        .any(|&v| t_double.below(row[v]))
    {
        return Ok(false);
    }
    Ok(true)
}

/// Look for an embedded fat theta: try far-apart endpoint pairs of degree at
/// least three, grow three internally disjoint paths that keep their deep
/// interiors `fatness` apart, then sweep head/tail lengths until the
/// conditions verify. `None` means nothing was found within the budget, not
/// that no fat theta exists.
pub fn search_fat_theta(
    lat: &Lattice,
    fatness: Len,
    budget: &SearchBudget,
) -> Result<Option<FatThetaWitness>, Error> {
    let g = &lat.graph;
    if !fatness.is_positive() {
        return Err(Error::BadParameter("fatness must be positive".into()));
    }
    let t_far = g.thresh(fatness * 6)?;
    let n = g.vertex_count();
    let step = (n / 32).max(1);
    let mut row = Vec::new();
    let mut cand: Vec<(SDist, VertexId, VertexId)> = Vec::new();
    for s in (0..n).step_by(step) {
        if g.degree(s) < 3 {
            continue;
        }
        dijkstra::dijkstra_full(g, &[s], &mut row);
        for (v, &d) in row.iter().enumerate() {
            if v == s || g.degree(v) < 3 || d == INF || !t_far.at_least(d) {
                continue;
            }
            let (a, b) = if s < v { (s, v) } else { (v, s) };
            cand.push((d, a, b));
        }
    }
    cand.sort_unstable_by(|p, q| {
        q.0.cmp(&p.0)
            .then_with(|| p.1.cmp(&q.1))
            .then_with(|| p.2.cmp(&q.2))
    });
    cand.dedup();
    for &(_, a, b) in cand.iter().take(budget.pairs) {
        if let Some(w) = disjoint_triple_theta(lat, a, b, fatness)? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Grow three internally disjoint paths between `a` and `b`. Each new path
/// avoids the interiors of the previous ones and the open
/// `fatness`-neighborhood of their deep cores (vertices at least three times
/// the fatness from both endpoints), which forces spread where it matters.
fn disjoint_triple_theta(
    lat: &Lattice,
    a: VertexId,
    b: VertexId,
    fatness: Len,
) -> Result<Option<FatThetaWitness>, Error> {
    let g = &lat.graph;
    let n = g.vertex_count();
    let t_core = g.thresh(fatness * 3)?;
    let t_near = g.thresh(fatness)?;
    let mut dist_a = Vec::new();
    let mut dist_b = Vec::new();
    dijkstra::dijkstra_full(g, &[a], &mut dist_a);
    dijkstra::dijkstra_full(g, &[b], &mut dist_b);
    let Some(first) = dijkstra::lex_geodesic(g, a, b, &dist_b) else {
        return Ok(None);
    };
    let mut arcs: Vec<Vec<VertexId>> = vec![first];
    let mut used = vec![false; n];
    let mut sd_block = SparseDist::new(n);
    let mut sd_reach = SparseDist::new(n);
    while arcs.len() < 3 {
        let core: Vec<VertexId> = arcs
            .iter()
            .flatten()
            .copied()
            .filter(|&v| t_core.at_least(dist_a[v]) && t_core.at_least(dist_b[v]))
            .collect();
        if core.is_empty() {
            return Ok(None);
        }
        for arc in &arcs {
            for &v in &arc[1..arc.len() - 1] {
                used[v] = true;
            }
        }
        dijkstra::dijkstra_bounded(g, core.iter().copied(), Bound::Below(&t_near), &mut sd_block);
        let alive = |v: VertexId| !used[v] && !sd_block.contains(v);
        if !alive(a) || !alive(b) {
            return Ok(None);
        }
        dijkstra::dijkstra_restricted(g, [b], alive, &mut sd_reach);
        let Some(next) = dijkstra::lex_descent_to_sources(g, a, &sd_reach) else {
            return Ok(None);
        };
        arcs.push(next);
    }
    let arcs: [Vec<VertexId>; 3] = arcs.try_into().expect("three arcs");
    let theta = ThetaCurve::new(g, a, b, arcs)?;
    debug_assert!(theta.embedded());
    sweep_splits(g, theta, fatness)
}

/// Try uniform head/tail windows of a few multiples of the fatness until one
/// choice verifies.
fn sweep_splits(
    g: &MetricGraph,
    theta: ThetaCurve,
    fatness: Len,
) -> Result<Option<FatThetaWitness>, Error> {
    let pos: Vec<Vec<SDist>> = theta.arcs.iter().map(|arc| positions(g, arc)).collect();
    for k in [2i64, 3, 4, 6] {
        let t_win = g.thresh(fatness * k)?;
        let mut splits = [ArcSplit {
            alpha_end: 0,
            beta_start: 0,
        }; 3];
        let mut usable = true;
        for i in 0..3 {
            let p = &pos[i];
            let total = *p.last().unwrap();
            let alpha_end = (0..p.len())
                .rev()
                .find(|&j| t_win.at_most(p[j]))
                .expect("position zero is always inside the window");
            let beta_start = (0..p.len())
                .find(|&j| t_win.at_most(total - p[j]))
                .expect("the last position is always inside the window");
            if alpha_end + 1 >= beta_start {
                usable = false;
                break;
            }
            splits[i] = ArcSplit {
                alpha_end,
                beta_start,
            };
        }
        if !usable {
            continue;
        }
        let w = FatThetaWitness {
            theta: theta.clone(),
            fatness,
            splits,
        };
        if verify_fat_theta(g, &w)? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Build a bridge over the forbidden balls: take the lex-min geodesic from
/// `x` to `y`, a path avoiding the open `m`-balls around `forbidden`, and cut
/// the avoiding path between its last approach to the near half of the
/// geodesic and its first approach to the far half. Approach radius is the
/// integer floor of m/10.
pub fn find_bridge(
    lat: &Lattice,
    x: VertexId,
    y: VertexId,
    m: Len,
    forbidden: &[VertexId],
) -> Result<Bridge, Error> {
    let g = &lat.graph;
    let n = g.vertex_count();
    if !m.is_positive() {
        return Err(Error::BadParameter("m must be positive".into()));
    }
    if x == y {
        return Err(Error::BadParameter("bridge endpoints must differ".into()));
    }
    if forbidden.is_empty() {
        return Err(Error::EmptySet("forbidden centers".into()));
    }
    for &v in forbidden.iter().chain([x, y].iter()) {
        if v >= n {
            return Err(Error::NotInGraph(format!("vertex {v}")));
        }
    }
    let t_m = g.thresh(m)?;
    let mut dist_y = Vec::new();
    dijkstra::dijkstra_full(g, &[y], &mut dist_y);
    let gamma = dijkstra::lex_geodesic(g, x, y, &dist_y)
        .ok_or(Error::Disconnected { components: 2 })?;
    let mut sd_block = SparseDist::new(n);
    dijkstra::dijkstra_bounded(
        g,
        forbidden.iter().copied(),
        Bound::Below(&t_m),
        &mut sd_block,
    );
    let mut sd_seen = SparseDist::new(n);
    let alpha = dijkstra::bfs_path_avoiding(g, x, y, |v| sd_block.contains(v), &mut sd_seen)
        .ok_or(Error::NoAvoidingPath)?;
    let reach = Len::from_integer((m / 10).floor().to_integer());
    let t_reach = g.thresh(reach)?;
    let pos = positions(g, &gamma);
    let total = *pos.last().unwrap();
    let cut = pos
        .iter()
        .position(|&p| 2 * p >= total)
        .expect("positions end at the total");
    let near_half = &gamma[..=cut];
    let far_half = &gamma[cut + 1..];
    if far_half.is_empty() {
        return Err(Error::ThetaConstruction(
            "geodesic too short to split in half".into(),
        ));
    }
    let mut dist_near = Vec::new();
    let mut dist_far = Vec::new();
    dijkstra::dijkstra_full(g, near_half, &mut dist_near);
    dijkstra::dijkstra_full(g, far_half, &mut dist_far);
    let t1 = (0..alpha.len())
        .rev()
        .find(|&i| t_reach.at_most(dist_near[alpha[i]]))
        .expect("the path starts on the near half");
    let t2 = (t1 + 1..alpha.len())
        .find(|&i| t_reach.at_most(dist_far[alpha[i]]))
        .ok_or_else(|| {
            Error::ThetaConstruction("avoiding path never reaches the far half".into())
        })?;
    let mut sd_att = SparseDist::new(n);
    dijkstra::dijkstra_bounded(
        g,
        near_half.iter().copied(),
        Bound::AtMost(&t_reach),
        &mut sd_att,
    );
    let left = dijkstra::lex_descent_to_sources(g, alpha[t1], &sd_att)
        .expect("within reach by the choice of the cut");
    dijkstra::dijkstra_bounded(
        g,
        far_half.iter().copied(),
        Bound::AtMost(&t_reach),
        &mut sd_att,
    );
    let right = dijkstra::lex_descent_to_sources(g, alpha[t2], &sd_att)
        .expect("within reach by the choice of the cut");
    let bridge = Bridge {
        gamma,
        left,
        mid: alpha[t1..=t2].to_vec(),
        right,
        m,
        reach,
    };
    let span = dijkstra::dijkstra_pair(g, bridge.l2(), bridge.r2(), &mut sd_att);
    if !t_m.at_least(span) {
        return Err(Error::ThetaConstruction(
            "bridge anchors are closer than m".into(),
        ));
    }
    Ok(bridge)
}

/// Recheck every structural invariant of a bridge from scratch.
pub fn validate_bridge(lat: &Lattice, bridge: &Bridge) -> Result<(), Error> {
    let g = &lat.graph;
    let fail = |msg: &str| Err(Error::ThetaConstruction(msg.into()));
    if bridge.gamma.len() < 2
        || bridge.mid.is_empty()
        || bridge.left.is_empty()
        || bridge.right.is_empty()
    {
        return fail("bridge pieces must be nonempty");
    }
    if bridge.left[0] != bridge.l1() || bridge.right[0] != bridge.r1() {
        return fail("posts must start at the detour ends");
    }
    let on_gamma: HashSet<VertexId> = bridge.gamma.iter().copied().collect();
    if !on_gamma.contains(&bridge.l2()) || !on_gamma.contains(&bridge.r2()) {
        return fail("posts must land on the geodesic");
    }
    for piece in [&bridge.gamma, &bridge.left, &bridge.mid, &bridge.right] {
        for step in piece.windows(2) {
            if g.find_edge(step[0], step[1]).is_none() {
                return fail("bridge piece steps off the edge set");
            }
        }
    }
    let reach_expect = Len::from_integer((bridge.m / 10).floor().to_integer());
    if bridge.reach != reach_expect {
        return fail("recorded reach disagrees with m");
    }
    let t_reach = g.thresh(bridge.reach)?;
    for post in [&bridge.left, &bridge.right] {
        let len = *positions(g, post).last().unwrap();
        if !t_reach.at_most(len) {
            return fail("post longer than the reach");
        }
    }
    let mut sd = SparseDist::new(g.vertex_count());
    let span = dijkstra::dijkstra_pair(g, bridge.l2(), bridge.r2(), &mut sd);
    if !g.thresh(bridge.m)?.at_least(span) {
        return fail("bridge anchors are closer than m");
    }
    let mut row = Vec::new();
    dijkstra::dijkstra_full(g, &bridge.gamma, &mut row);
    if !t_reach.at_most(row[bridge.l1()]) || !t_reach.at_most(row[bridge.r1()]) {
        return fail("detour ends must sit within reach of the geodesic");
    }
    for &v in &bridge.mid[1..bridge.mid.len().saturating_sub(1)] {
        if t_reach.at_most(row[v]) {
            return fail("detour interior comes within reach of the geodesic");
        }
    }
    Ok(())
}

/// Turn an inseparable far pair into a fat theta witness. Requires
/// d(x, y) >= 10m; the witness fatness is m/1000 floored to the granularity
/// lattice (kept exact when the floor would vanish).
pub fn violation_to_theta(
    lat: &Lattice,
    x: VertexId,
    y: VertexId,
    m: Len,
) -> Result<FatThetaWitness, Error> {
    let g = &lat.graph;
    let n = g.vertex_count();
    if !m.is_positive() {
        return Err(Error::BadParameter("m must be positive".into()));
    }
    if x >= n || y >= n {
        return Err(Error::NotInGraph(format!("pair ({x}, {y})")));
    }
    let mut dist_x = Vec::new();
    let mut dist_y = Vec::new();
    dijkstra::dijkstra_full(g, &[x], &mut dist_x);
    dijkstra::dijkstra_full(g, &[y], &mut dist_y);
    if dist_x[y] == INF {
        return Err(Error::Disconnected { components: 2 });
    }
    if !g.thresh(m * 10)?.at_least(dist_x[y]) {
        return Err(Error::Precondition(
            "pair closer than 10m; nothing to extract".into(),
        ));
    }
    let m_out = floor_to_lattice_pos(m / 1000, lat.granularity);
    let gamma = dijkstra::lex_geodesic(g, x, y, &dist_y).expect("pair is connected");
    let t_buf = g.thresh(m * 4)?;
    let mut centers: Vec<VertexId> = gamma
        .iter()
        .copied()
        .filter(|&v| t_buf.at_least(dist_x[v]) && t_buf.at_least(dist_y[v]))
        .collect();
    centers.sort_by_key(|&v| {
        let skew = (dist_x[v] as i128 - dist_y[v] as i128).abs();
        (skew, v)
    });
    if centers.is_empty() {
        return Err(Error::ThetaConstruction(
            "no probe center clears both endpoints".into(),
        ));
    }
    // widest detour over all probe centers, first one on ties
    let mut sd_pair = SparseDist::new(n);
    let mut best: Option<(SDist, Bridge)> = None;
    for &c in &centers {
        match find_bridge(lat, x, y, m, &[c]) {
            Ok(b) => {
                let span = dijkstra::dijkstra_pair(g, b.l2(), b.r2(), &mut sd_pair);
                if best.as_ref().is_none_or(|(s, _)| span > *s) {
                    best = Some((span, b));
                }
            }
            Err(Error::NoAvoidingPath) => {
                return Err(Error::Precondition(
                    "a single removed ball separates the pair; not a violation".into(),
                ));
            }
            Err(_) => {}
        }
    }
    let Some((_, bridge)) = best else {
        return Err(Error::ThetaConstruction(
            "no probe center yields a bridge".into(),
        ));
    };
    // straighten the detour: while some deep vertex has a shortcut to a
    // position-far vertex, replace the span between them by a geodesic
    let mut d_path = bridge.mid.clone();
    let mut dist_gamma = Vec::new();
    dijkstra::dijkstra_full(g, &bridge.gamma, &mut dist_gamma);
    let mut dist_l1 = Vec::new();
    let mut dist_r1 = Vec::new();
    dijkstra::dijkstra_full(g, &[bridge.l1()], &mut dist_l1);
    dijkstra::dijkstra_full(g, &[bridge.r1()], &mut dist_r1);
    let t_floor = g.thresh(m / 100)?;
    let t_margin = g.thresh(m / 3)?;
    let mut sd_near = SparseDist::new(n);
    let mut row = Vec::new();
    let cap = *positions(g, &d_path).last().unwrap() as usize + 4;
    let mut rounds = 0usize;
    loop {
        if d_path.iter().any(|&v| t_floor.below(dist_gamma[v])) {
            break;
        }
        let pos = positions(g, &d_path);
        let mut shortcut = None;
        'scan: for ti in 0..d_path.len() {
            let v = d_path[ti];
            if !(t_margin.at_least(dist_l1[v]) && t_margin.at_least(dist_r1[v])) {
                continue;
            }
            dijkstra::dijkstra_bounded(g, [v], Bound::AtMost(&t_floor), &mut sd_near);
            for si in 0..d_path.len() {
                let gap = pos[si].abs_diff(pos[ti]);
                if t_floor.above(gap) && sd_near.contains(d_path[si]) {
                    shortcut = Some((ti.min(si), ti.max(si)));
                    break 'scan;
                }
            }
        }
        let Some((lo, hi)) = shortcut else { break };
        rounds += 1;
        if rounds > cap {
            return Err(Error::ThetaConstruction(format!(
                "straightening ran past {cap} rounds; granularity too coarse for m"
            )));
        }
        dijkstra::dijkstra_full(g, &[d_path[hi]], &mut row);
        let geo = dijkstra::lex_geodesic(g, d_path[lo], d_path[hi], &row)
            .expect("graph is connected");
        let mut walk = d_path[..lo].to_vec();
        walk.extend(geo);
        walk.extend(d_path[hi + 1..].iter().copied());
        d_path = loop_erase(&walk);
    }
    let t_close = g.thresh(m / 50)?;
    if d_path.iter().any(|&v| t_close.below(dist_gamma[v])) {
        if let Ok(w) = pinch_witness(lat, &bridge, &d_path, m, m_out, &dist_gamma) {
            return Ok(w);
        }
    }
    crossing_witness(lat, x, y, m, m_out, &bridge, &d_path, &dist_l1, &dist_r1)
}

/// The straightened detour dips close to the geodesic: the dip vertex, its
/// nearest geodesic vertex, and the two bridge posts bound a narrow theta.
fn pinch_witness(
    lat: &Lattice,
    bridge: &Bridge,
    d_path: &[VertexId],
    m: Len,
    m_out: Len,
    dist_gamma: &[SDist],
) -> Result<FatThetaWitness, Error> {
    let g = &lat.graph;
    let t_close = g.thresh(m / 50)?;
    let iz = d_path
        .iter()
        .position(|&v| t_close.below(dist_gamma[v]))
        .ok_or_else(|| Error::ThetaConstruction("no close approach on the detour".into()))?;
    let z1 = d_path[iz];
    let mut row = Vec::new();
    dijkstra::dijkstra_full(g, &[z1], &mut row);
    let gamma = &bridge.gamma;
    let z2 = *gamma
        .iter()
        .min_by_key(|&&v| (row[v], v))
        .expect("geodesic is nonempty");
    if z2 == z1 {
        return Err(Error::ThetaConstruction(
            "dip lands on the geodesic itself".into(),
        ));
    }
    let idx_l2 = gamma
        .iter()
        .position(|&v| v == bridge.l2())
        .expect("anchor on geodesic");
    let idx_r2 = gamma
        .iter()
        .rposition(|&v| v == bridge.r2())
        .expect("anchor on geodesic");
    let idx_z2 = gamma
        .iter()
        .position(|&v| v == z2)
        .expect("chosen on geodesic");
    let mut row_z2 = Vec::new();
    dijkstra::dijkstra_full(g, &[z2], &mut row_z2);
    let middle =
        dijkstra::lex_geodesic(g, z1, z2, &row_z2).expect("graph is connected");
    let mut arc_a: Vec<VertexId> = d_path[..=iz].iter().rev().copied().collect();
    arc_a.extend(bridge.left.iter().skip(1).copied());
    arc_a.extend(walk_between(gamma, idx_l2, idx_z2).into_iter().skip(1));
    let split_a = ArcSplit {
        alpha_end: iz,
        beta_start: iz + bridge.left.len() - 1,
    };
    let mut arc_c: Vec<VertexId> = d_path[iz..].to_vec();
    arc_c.extend(bridge.right.iter().skip(1).copied());
    arc_c.extend(walk_between(gamma, idx_r2, idx_z2).into_iter().skip(1));
    let r1_at = d_path.len() - 1 - iz;
    let split_c = ArcSplit {
        alpha_end: r1_at,
        beta_start: r1_at + bridge.right.len() - 1,
    };
    let split_b = ArcSplit {
        alpha_end: 0,
        beta_start: middle.len() - 1,
    };
    let theta = ThetaCurve::new(g, z1, z2, [arc_a, middle, arc_c])?;
    let w = FatThetaWitness {
        theta,
        fatness: m_out,
        splits: [split_a, split_b, split_c],
    };
    if verify_fat_theta(g, &w)? {
        Ok(w)
    } else {
        Err(Error::ThetaConstruction(
            "pinched theta failed the fatness check".into(),
        ))
    }
}

/// The straightened detour stays clear of the geodesic: the geodesic, the
/// detour route, and a path dodging balls around two interior picks give
/// three spread arcs between the original endpoints.
#[allow(clippy::too_many_arguments)]
fn crossing_witness(
    lat: &Lattice,
    x: VertexId,
    y: VertexId,
    m: Len,
    m_out: Len,
    bridge: &Bridge,
    d_path: &[VertexId],
    dist_l1: &[SDist],
    dist_r1: &[SDist],
) -> Result<FatThetaWitness, Error> {
    let g = &lat.graph;
    let n = g.vertex_count();
    let gamma = &bridge.gamma;
    let idx_l2 = gamma
        .iter()
        .position(|&v| v == bridge.l2())
        .expect("anchor on geodesic");
    let idx_r2 = gamma
        .iter()
        .rposition(|&v| v == bridge.r2())
        .expect("anchor on geodesic");
    let mut eta: Vec<VertexId> = gamma[..=idx_l2].to_vec();
    eta.extend(bridge.left.iter().rev().skip(1).copied());
    eta.extend(d_path.iter().skip(1).copied());
    eta.extend(bridge.right.iter().skip(1).copied());
    eta.extend(gamma[idx_r2 + 1..].iter().copied());
    let eta_pos = positions(g, &eta);
    let gamma_pos = positions(g, gamma);
    let t_margin = g.thresh(m / 3)?;
    let t_ball = g.thresh(m)?;
    let t_attach = g.thresh(m / 1000)?;
    let t_window = g.thresh(m / 200)?;
    let mut picks_d: Vec<usize> = (1..d_path.len().saturating_sub(1))
        .filter(|&j| {
            t_margin.at_least(dist_l1[d_path[j]]) && t_margin.at_least(dist_r1[d_path[j]])
        })
        .collect();
    picks_d.sort_by_key(|&j| {
        let depth = dist_l1[d_path[j]].min(dist_r1[d_path[j]]);
        (std::cmp::Reverse(depth), j)
    });
    picks_d.truncate(6);
    let mut picks_g: Vec<usize> = (idx_l2 + 1..idx_r2)
        .filter(|&i| {
            t_margin.at_least(gamma_pos[i] - gamma_pos[idx_l2])
                && t_margin.at_least(gamma_pos[idx_r2] - gamma_pos[i])
        })
        .collect();
    picks_g.sort_by_key(|&i| {
        let depth = (gamma_pos[i] - gamma_pos[idx_l2]).min(gamma_pos[idx_r2] - gamma_pos[i]);
        (std::cmp::Reverse(depth), i)
    });
    picks_g.truncate(6);
    if picks_d.is_empty() || picks_g.is_empty() {
        return Err(Error::ThetaConstruction(
            "detour too cramped for interior picks".into(),
        ));
    }
    let mut sd_z1 = SparseDist::new(n);
    let mut sd_z2 = SparseDist::new(n);
    let mut sd_seen = SparseDist::new(n);
    let mut sd_att = SparseDist::new(n);
    let mut row_a = Vec::new();
    let mut row_b = Vec::new();
    for &j1 in &picks_d {
        for &i2 in &picks_g {
            let z1 = d_path[j1];
            let z2 = gamma[i2];
            dijkstra::dijkstra_bounded(g, [z1], Bound::Below(&t_ball), &mut sd_z1);
            dijkstra::dijkstra_bounded(g, [z2], Bound::Below(&t_ball), &mut sd_z2);
            let Some(beta) = dijkstra::bfs_path_avoiding(
                g,
                x,
                y,
                |v| sd_z1.contains(v) || sd_z2.contains(v),
                &mut sd_seen,
            ) else {
                continue;
            };
            let s1 = idx_l2 + bridge.left.len() - 1 + j1;
            debug_assert_eq!(eta[s1], z1);
            let side_a: Vec<VertexId> = eta[..=s1]
                .iter()
                .chain(gamma[..=i2].iter())
                .copied()
                .collect();
            let side_b: Vec<VertexId> = eta[s1..]
                .iter()
                .chain(gamma[i2..].iter())
                .copied()
                .collect();
            dijkstra::dijkstra_full(g, &side_a, &mut row_a);
            dijkstra::dijkstra_full(g, &side_b, &mut row_b);
            let Some(u1) = (0..beta.len())
                .rev()
                .find(|&t| t_attach.at_most(row_a[beta[t]]))
            else {
                continue;
            };
            let Some(u2) =
                (u1 + 1..beta.len()).find(|&t| t_attach.at_most(row_b[beta[t]]))
            else {
                continue;
            };
            if u2 == u1 + 1 {
                continue;
            }
            dijkstra::dijkstra_bounded(
                g,
                side_a.iter().copied(),
                Bound::AtMost(&t_attach),
                &mut sd_att,
            );
            let Some(att1) = dijkstra::lex_descent_to_sources(g, beta[u1], &sd_att) else {
                continue;
            };
            dijkstra::dijkstra_bounded(
                g,
                side_b.iter().copied(),
                Bound::AtMost(&t_attach),
                &mut sd_att,
            );
            let Some(att2) = dijkstra::lex_descent_to_sources(g, beta[u2], &sd_att) else {
                continue;
            };
            let b1 = *att1.last().unwrap();
            let b2 = *att2.last().unwrap();
            let pre: Vec<VertexId> = if let Some(i) = gamma[..=i2].iter().position(|&v| v == b1)
            {
                gamma[..=i].to_vec()
            } else {
                let i = eta[..=s1]
                    .iter()
                    .position(|&v| v == b1)
                    .expect("hook lands on the near side");
                eta[..=i].to_vec()
            };
            let post: Vec<VertexId> = if let Some(i) = gamma[i2..].iter().position(|&v| v == b2)
            {
                gamma[i2 + i..].to_vec()
            } else {
                let i = eta[s1..]
                    .iter()
                    .position(|&v| v == b2)
                    .expect("hook lands on the far side");
                eta[s1 + i..].to_vec()
            };
            let pre_len = pre.len();
            let mut third = pre;
            third.extend(att1.iter().rev().skip(1).copied());
            third.extend(beta[u1 + 1..=u2].iter().copied());
            third.extend(att2.iter().skip(1).copied());
            third.extend(post.iter().skip(1).copied());
            let Ok(theta) = ThetaCurve::new(g, x, y, [gamma.clone(), eta.clone(), third])
            else {
                continue;
            };
            let split_crossing = ArcSplit {
                alpha_end: pre_len + att1.len() - 2,
                beta_start: pre_len + att1.len() - 2 + (u2 - u1),
            };
            let w = FatThetaWitness {
                theta,
                fatness: m_out,
                splits: [
                    window_split(&gamma_pos, i2, &t_window),
                    window_split(&eta_pos, s1, &t_window),
                    split_crossing,
                ],
            };
            if verify_fat_theta(g, &w)? {
                return Ok(w);
            }
        }
    }
    Err(Error::ThetaConstruction(
        "no interior pick yields a verifiable theta".into(),
    ))
}

/// Split an arc by clipping a short stretch around the pick: head up to the
/// last position a window before it, tail from the first position a window
/// past it.
fn window_split(pos: &[SDist], center: usize, t_win: &Thresh) -> ArcSplit {
    let alpha_end = (0..=center)
        .rev()
        .find(|&i| t_win.at_least(pos[center] - pos[i]))
        .unwrap_or(0);
    let beta_start = (center..pos.len())
        .find(|&i| t_win.at_least(pos[i] - pos[center]))
        .unwrap_or(pos.len() - 1);
    ArcSplit {
        alpha_end,
        beta_start,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::graph::subdivide;
    use num_rational::Rational64;

    fn rat(n: i64) -> Len {
        Rational64::from_integer(n)
    }

    fn unit_lattice(g: MetricGraph) -> Lattice {
        subdivide(&g, rat(1)).unwrap()
    }

    fn theta_arm(arm_edges: usize, i: usize) -> Vec<VertexId> {
        let k = arm_edges - 1;
        let mut arc = vec![0];
        arc.extend(2 + i * k..2 + (i + 1) * k);
        arc.push(1);
        arc
    }

    fn arm_witness(lat: &Lattice, fatness: Len) -> FatThetaWitness {
        let arcs = [theta_arm(30, 0), theta_arm(30, 1), theta_arm(30, 2)];
        let theta = ThetaCurve::new(&lat.graph, 0, 1, arcs).unwrap();
        let split = ArcSplit {
            alpha_end: 10,
            beta_start: 20,
        };
        FatThetaWitness {
            theta,
            fatness,
            splits: [split; 3],
        }
    }

    #[test]
    fn spread_arms_verify_down_to_their_girth() {
        let lat = unit_lattice(gen::theta(30).unwrap());
        // heads and tails of one arm sit 10 apart, so fatness 5 is the edge
        for f in [5i64, 4, 2, 1] {
            let w = arm_witness(&lat, rat(f));
            assert!(verify_fat_theta(&lat.graph, &w).unwrap(), "fatness {f}");
        }
        for f in [6i64, 11] {
            let w = arm_witness(&lat, rat(f));
            assert!(!verify_fat_theta(&lat.graph, &w).unwrap(), "fatness {f}");
        }
    }

    #[test]
    fn degenerate_and_malformed_splits() {
        let lat = unit_lattice(gen::theta(30).unwrap());
        let mut w = arm_witness(&lat, rat(5));
        // adjacent head and tail leave no middle: refuted, not an error
        w.splits[1] = ArcSplit {
            alpha_end: 14,
            beta_start: 15,
        };
        assert!(!verify_fat_theta(&lat.graph, &w).unwrap());
        // an index past the arc is a malformed witness
        w.splits[1] = ArcSplit {
            alpha_end: 10,
            beta_start: 31,
        };
        assert!(verify_fat_theta(&lat.graph, &w).is_err());
    }

    #[test]
    fn search_recovers_the_three_arms() {
        let lat = unit_lattice(gen::theta(30).unwrap());
        let w = search_fat_theta(&lat, rat(5), &SearchBudget::default())
            .unwrap()
            .expect("the arms are a fat theta");
        assert_eq!((w.theta.a, w.theta.b), (0, 1));
        assert!(w.theta.embedded());
        assert!(verify_fat_theta(&lat.graph, &w).unwrap());
    }

    #[test]
    fn search_finds_nothing_on_a_cycle() {
        let lat = unit_lattice(gen::cycle(50).unwrap());
        let found = search_fat_theta(&lat, rat(2), &SearchBudget::default()).unwrap();
        assert!(found.is_none());
    }

    #[test]
    fn grid_pair_spreads_three_paths() {
        let g = gen::grid(24, 24).unwrap();
        let lat = subdivide(&g, Rational64::new(1, 2)).unwrap();
        let (a, b) = (12 * 24, 12 * 24 + 23);
        let w = disjoint_triple_theta(&lat, a, b, rat(2))
            .unwrap()
            .expect("edge midpoints admit three spread paths");
        assert!(w.theta.embedded());
        assert!(verify_fat_theta(&lat.graph, &w).unwrap());
    }

    #[test]
    fn bridge_crosses_by_the_far_arm() {
        let lat = unit_lattice(gen::theta(30).unwrap());
        // forbid a ball mid-first-arm; the detour runs the second arm
        let bridge = find_bridge(&lat, 0, 1, rat(10), &[16]).unwrap();
        validate_bridge(&lat, &bridge).unwrap();
        let second_arm: Vec<VertexId> = (31..=59).collect();
        assert_eq!(bridge.mid, second_arm);
        assert_eq!(bridge.l2(), 0);
        assert_eq!(bridge.r2(), 1);
        assert_eq!(bridge.reach, rat(1));
    }

    #[test]
    fn bridge_refuses_a_separated_pair() {
        let lat = unit_lattice(gen::cycle(200).unwrap());
        let got = find_bridge(&lat, 0, 100, rat(5), &[50, 150]);
        assert!(matches!(got, Err(Error::NoAvoidingPath)));
    }

    #[test]
    fn bridge_on_a_grid_validates() {
        let g = gen::grid(20, 20).unwrap();
        let lat = subdivide(&g, Rational64::new(1, 2)).unwrap();
        let (x, y) = (10 * 20, 10 * 20 + 19);
        let mid = 10 * 20 + 10;
        let bridge = find_bridge(&lat, x, y, rat(2), &[mid]).unwrap();
        validate_bridge(&lat, &bridge).unwrap();
        assert_eq!(bridge.reach, rat(0));
    }

    #[test]
    fn pinched_bridge_collapses_to_a_narrow_theta() {
        // long base path, two tall posts, a detour between them whose middle
        // hangs by a short strut over the base
        let unit = rat(1);
        let mut edges: Vec<(usize, usize, Len)> = Vec::new();
        for i in 0..40 {
            edges.push((i, i + 1, unit));
        }
        let chain = |from: usize, ids: std::ops::Range<usize>, to: usize,
                     edges: &mut Vec<(usize, usize, Len)>| {
            let mut prev = from;
            for v in ids {
                edges.push((prev, v, unit));
                prev = v;
            }
            edges.push((prev, to, unit));
        };
        chain(10, 41..50, 50, &mut edges); // left post, length 10
        chain(30, 51..60, 60, &mut edges); // right post, length 10
        chain(50, 61..68, 60, &mut edges); // detour across the top
        edges.push((64, 20, Rational64::new(3, 2))); // the strut
        let g = MetricGraph::new(68, edges).unwrap();
        let lat = unit_lattice(g);
        let strut_mid = 68; // single subdivision vertex on the strut

        let bridge = Bridge {
            gamma: (0..=40).collect(),
            left: {
                let mut p = vec![50];
                p.extend((41..50).rev());
                p.push(10);
                p
            },
            mid: vec![50, 61, 62, 63, 64, 65, 66, 67, 60],
            right: {
                let mut p = vec![60];
                p.extend((51..60).rev());
                p.push(30);
                p
            },
            m: rat(100),
            reach: rat(10),
        };
        let mut dist_gamma = Vec::new();
        dijkstra::dijkstra_full(&lat.graph, &bridge.gamma, &mut dist_gamma);
        let m_out = floor_to_lattice_pos(rat(100) / 1000, lat.granularity);
        let w = pinch_witness(&lat, &bridge, &bridge.mid.clone(), rat(100), m_out, &dist_gamma)
            .unwrap();
        assert_eq!((w.theta.a, w.theta.b), (64, 20));
        assert_eq!(w.theta.arcs[1], vec![64, strut_mid, 20]);
        assert!(verify_fat_theta(&lat.graph, &w).unwrap());
    }

    #[test]
    fn grid_violation_yields_narrow_theta() {
        let g = gen::grid(30, 30).unwrap();
        let lat = subdivide(&g, Rational64::new(1, 2)).unwrap();
        let (x, y) = (15 * 30, 15 * 30 + 29);
        let w = violation_to_theta(&lat, x, y, rat(2)).unwrap();
        assert_eq!((w.theta.a, w.theta.b), (x, y));
        assert_eq!(w.fatness, Rational64::new(1, 500));
        assert!(verify_fat_theta(&lat.graph, &w).unwrap());
    }

    #[test]
    fn near_pairs_and_separable_pairs_are_rejected() {
        let g = gen::grid(30, 30).unwrap();
        let lat = subdivide(&g, Rational64::new(1, 2)).unwrap();
        let close = violation_to_theta(&lat, 15 * 30, 15 * 30 + 1, rat(2));
        assert!(matches!(close, Err(Error::Precondition(_))));

        // a long cycle separates everywhere, so every pick pair cuts the
        // dodging path and the construction reports failure
        let ring = unit_lattice(gen::cycle(200).unwrap());
        let got = violation_to_theta(&ring, 0, 100, rat(5));
        assert!(matches!(got, Err(Error::ThetaConstruction(_))));
    }
}
