//! Separated nets at each scale and the hyperbolic filling graph built on them.
//!
//! Vertices are pairs `(z, n)` with `z` in the level-`n` net; each carries the
//! dilated ball `B(v) = B_Z(z, tau * alpha^-n)`. Two distinct vertices are
//! joined when their heights differ by at most one and their balls share a
//! point of `Z`. Since `Z` is finite the intersection test is exact.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::PointCloudSpace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillingParams {
    pub alpha: f64,
    pub tau: f64,
    pub n_min: i32,
    pub n_max: i32,
}

impl FillingParams {
    pub fn new(alpha: f64, tau: f64, n_min: i32, n_max: i32) -> Result<Self> {
        let p = FillingParams {
            alpha,
            tau,
            n_min,
            n_max,
        };
        p.validate()?;
        Ok(p)
    }

    /// Level range from [`default_levels`].
    pub fn with_default_levels(space: &PointCloudSpace, alpha: f64, tau: f64) -> Result<Self> {
        check_alpha_tau(alpha, tau)?;
        let (n_min, n_max) = default_levels(space, alpha);
        Self::new(alpha, tau, n_min, n_max)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha_tau(self.alpha, self.tau)?;
        if self.n_min > self.n_max {
            return Err(Error::InvalidParams(format!(
                "n_min = {} exceeds n_max = {}",
                self.n_min, self.n_max
            )));
        }
        Ok(())
    }

    /// `alpha^-n`.
    #[inline]
    pub fn scale(&self, n: i32) -> f64 {
        self.alpha.powi(-n)
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        self.n_min..=self.n_max
    }

    pub fn num_levels(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }
}

fn check_alpha_tau(alpha: f64, tau: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParams(format!("alpha must exceed 1, got {alpha}")));
    }
    let bound = 3f64.max(alpha / (alpha - 1.0));
    if !(tau > bound) || !tau.is_finite() {
        return Err(Error::InvalidParams(format!(
            "tau = {tau} violates the constraint tau > max{{3, alpha/(alpha-1)}} = {bound}"
        )));
    }
    Ok(())
}

/// Smallest level at which the net is all of `Z` (`alpha^-n <= min distance`).
pub fn saturation_level(space: &PointCloudSpace, alpha: f64) -> Option<i32> {
    let m = space.min_positive_distance()?;
    let mut n = (-(m.ln() / alpha.ln())).ceil() as i32;
    while alpha.powi(-(n - 1)) <= m {
        n -= 1;
    }
    while alpha.powi(-n) > m {
        n += 1;
    }
    Some(n)
}

/// Default level range: the coarsest level is the largest `n` with
/// `alpha^-n > diam Z` (a single root), the finest is saturation + 2.
/// A single-point space gets `0..=2`.
pub fn default_levels(space: &PointCloudSpace, alpha: f64) -> (i32, i32) {
    let Some(sat) = saturation_level(space, alpha) else {
        return (0, 2);
    };
    let diam = space.diameter();
    let mut n = (-(diam.ln() / alpha.ln())).floor() as i32;
    while alpha.powi(-n) <= diam {
        n -= 1;
    }
    while alpha.powi(-(n + 1)) > diam {
        n += 1;
    }
    (n.min(sat), sat + 2)
}

/// Greedy maximal `alpha^-n`-separated subsets, one per level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Net {
    pub n_min: i32,
    pub levels: Vec<Vec<usize>>,
}

impl Net {
    pub fn centers(&self, n: i32) -> &[usize] {
        &self.levels[(n - self.n_min) as usize]
    }

    pub fn n_max(&self) -> i32 {
        self.n_min + self.levels.len() as i32 - 1
    }
}

/// Greedy net at a single separation radius, scanning points in index order.
pub fn greedy_net(space: &PointCloudSpace, sep: f64) -> Vec<usize> {
    let mut centers: Vec<usize> = Vec::new();
    for z in 0..space.len() {
        if centers.iter().all(|&c| space.d(c, z) >= sep) {
            centers.push(z);
        }
    }
    centers
}

pub fn build_nets(space: &PointCloudSpace, params: &FillingParams) -> Net {
    Net {
        n_min: params.n_min,
        levels: params
            .levels()
            .map(|n| greedy_net(space, params.scale(n)))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Horizontal,
    Vertical,
}

/// An edge of the filling. For vertical edges `a` is the coarser endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vertex {
    pub center: usize,
    pub level: i32,
}

/// The hyperbolic filling `X` truncated to `[n_min, n_max]`.
#[derive(Debug, Clone)]
pub struct FillingGraph {
    space: Arc<PointCloudSpace>,
    params: FillingParams,
    vertices: Vec<Vertex>,
    level_start: Vec<usize>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>,
    balls: Vec<Vec<usize>>,
}

struct BitSet(Vec<u64>);

impl BitSet {
    fn from_members(n: usize, members: &[usize]) -> Self {
        let mut words = vec![0u64; n.div_ceil(64)];
        for &m in members {
            words[m / 64] |= 1 << (m % 64);
        }
        BitSet(words)
    }

    fn intersects(&self, other: &BitSet) -> bool {
        self.0.iter().zip(&other.0).any(|(a, b)| a & b != 0)
    }
}

pub fn build_filling(
    space: Arc<PointCloudSpace>,
    nets: &Net,
    params: &FillingParams,
) -> Result<FillingGraph> {
    params.validate()?;
    if nets.n_min != params.n_min || nets.n_max() != params.n_max {
        return Err(Error::InvalidParams(
            "nets were built for a different level range".into(),
        ));
    }
    let mut vertices = Vec::new();
    let mut level_start = Vec::with_capacity(params.num_levels() + 1);
    for n in params.levels() {
        level_start.push(vertices.len());
        for &z in nets.centers(n) {
            vertices.push(Vertex { center: z, level: n });
        }
    }
    level_start.push(vertices.len());

    let balls: Vec<Vec<usize>> = vertices
        .iter()
        .map(|v| space.ball(v.center, params.tau * params.scale(v.level)))
        .collect();
    let bits: Vec<BitSet> = balls
        .iter()
        .map(|b| BitSet::from_members(space.len(), b))
        .collect();

    let mut edges = Vec::new();
    let nl = params.num_levels();
    for li in 0..nl {
        let cur = level_start[li]..level_start[li + 1];
        for v in cur.clone() {
            for w in (v + 1)..cur.end {
                if bits[v].intersects(&bits[w]) {
                    edges.push(Edge {
                        a: v,
                        b: w,
                        kind: EdgeKind::Horizontal,
                    });
                }
            }
            if li + 1 < nl {
                for w in level_start[li + 1]..level_start[li + 2] {
                    if bits[v].intersects(&bits[w]) {
                        edges.push(Edge {
                            a: v,
                            b: w,
                            kind: EdgeKind::Vertical,
                        });
                    }
                }
            }
        }
    }
    let mut adj = vec![Vec::new(); vertices.len()];
    for (k, e) in edges.iter().enumerate() {
        adj[e.a].push((e.b, k));
        adj[e.b].push((e.a, k));
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let graph = FillingGraph {
        space,
        params: *params,
        vertices,
        level_start,
        edges,
        adj,
        balls,
    };
    let comps = graph.component_count();
    if comps != 1 {
        return Err(Error::Disconnected(comps));
    }
    Ok(graph)
}

/// Nets plus filling with the given parameters.
pub fn build(space: Arc<PointCloudSpace>, params: &FillingParams) -> Result<FillingGraph> {
    let nets = build_nets(&space, params);
    build_filling(space, &nets, params)
}

impl FillingGraph {
    pub fn space(&self) -> &PointCloudSpace {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<PointCloudSpace> {
        &self.space
    }

    pub fn params(&self) -> &FillingParams {
        &self.params
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Vertex {
        self.vertices[v]
    }

    #[inline]
    pub fn height(&self, v: usize) -> i32 {
        self.vertices[v].level
    }

    #[inline]
    pub fn center(&self, v: usize) -> usize {
        self.vertices[v].center
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(neighbor, edge index)` pairs sorted by neighbor.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    /// Points of `B(v)`.
    pub fn ball(&self, v: usize) -> &[usize] {
        &self.balls[v]
    }

    pub fn ball_radius(&self, v: usize) -> f64 {
        self.params.tau * self.params.scale(self.height(v))
    }

    pub fn level_range(&self, n: i32) -> Range<usize> {
        if n < self.params.n_min || n > self.params.n_max {
            return 0..0;
        }
        let i = (n - self.params.n_min) as usize;
        self.level_start[i]..self.level_start[i + 1]
    }

    /// The vertex `(z, n)` when `z` is a level-`n` center.
    pub fn vertex_at(&self, z: usize, n: i32) -> Option<usize> {
        let r = self.level_range(n);
        let slice = &self.vertices[r.clone()];
        slice
            .binary_search_by(|v| v.center.cmp(&z))
            .ok()
            .map(|i| r.start + i)
    }

    fn component_count(&self) -> usize {
        let nv = self.num_vertices();
        let mut seen = vec![false; nv];
        let mut comps = 0;
        for s in 0..nv {
            if seen[s] {
                continue;
            }
            comps += 1;
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &(w, _) in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        comps
    }

    /// Unit-edge graph distances from `s` (`usize::MAX` if unreachable).
    pub fn hop_distances(&self, s: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.num_vertices()];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// The anchored vertex at level `k` for `z`: the center nearest to `z`
    /// among those with `d(center, z) < alpha^-k`, lowest index on ties.
    pub fn anchor(&self, z: usize, k: i32) -> Result<usize> {
        let s = self.params.scale(k);
        let space = &self.space;
        self.level_range(k)
            .filter(|&v| space.d(self.center(v), z) < s)
            .min_by(|&v, &w| {
                space
                    .d(self.center(v), z)
                    .partial_cmp(&space.d(self.center(w), z))
                    .unwrap()
                    .then(v.cmp(&w))
            })
            .ok_or_else(|| Error::Consistency(format!("no level-{k} center anchors point {z}")))
    }

    /// Ascending vertical path anchored at `z` through levels `n_from..=n_to`.
    pub fn vertical_geodesic(&self, z: usize, n_from: i32, n_to: i32) -> Result<Vec<usize>> {
        if z >= self.space.len() {
            return Err(Error::UnknownPoint(z));
        }
        if n_from > n_to || n_from < self.params.n_min || n_to > self.params.n_max {
            return Err(Error::InvalidParams(format!(
                "levels {n_from}..={n_to} outside {}..={}",
                self.params.n_min, self.params.n_max
            )));
        }
        let path: Vec<usize> = (n_from..=n_to)
            .map(|k| self.anchor(z, k))
            .collect::<Result<_>>()?;
        for pair in path.windows(2) {
            if self.edge_between(pair[0], pair[1]).is_none() {
                return Err(Error::Consistency(format!(
                    "anchored vertices {} and {} are not adjacent",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(path)
    }

    pub fn edge_between(&self, v: usize, w: usize) -> Option<usize> {
        self.adj[v]
            .binary_search_by(|&(x, _)| x.cmp(&w))
            .ok()
            .map(|i| self.adj[v][i].1)
    }

    /// Horizontal edges incident to `v`.
    pub fn horizontal_edges(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v]
            .iter()
            .filter(|&&(_, e)| self.edges[e].kind == EdgeKind::Horizontal)
            .map(|&(_, e)| e)
    }

    /// Hull of the ball `B_Z(z, r)`.
    pub fn hull(&self, z: usize, r: f64) -> Hull {
        let space = &self.space;
        let mut in_hull = vec![false; self.num_vertices()];
        let mut vertices = Vec::new();
        for v in 0..self.num_vertices() {
            if self.params.scale(self.height(v)) <= r
                && self.balls[v].iter().any(|&y| space.d(z, y) < r)
            {
                in_hull[v] = true;
                vertices.push(v);
            }
        }
        let mut full_edges = Vec::new();
        let mut half_edges = Vec::new();
        for (k, e) in self.edges.iter().enumerate() {
            match (in_hull[e.a], in_hull[e.b]) {
                (true, true) => full_edges.push(k),
                (true, false) => half_edges.push((k, e.a)),
                (false, true) => half_edges.push((k, e.b)),
                (false, false) => {}
            }
        }
        Hull {
            center: z,
            radius: r,
            vertices,
            in_hull,
            full_edges,
            half_edges,
        }
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let mut histogram = BTreeMap::new();
        let mut per_level_max = Vec::new();
        let mut max_degree = 0;
        for n in self.params.levels() {
            let mut m = 0;
            for v in self.level_range(n) {
                let d = self.adj[v].len();
                *histogram.entry(d).or_insert(0) += 1;
                m = m.max(d);
            }
            per_level_max.push((n, m));
            max_degree = max_degree.max(m);
        }
        DegreeStats {
            max_degree,
            per_level_max,
            histogram,
        }
    }

    /// For each level, the largest number of balls `B(v)`, `v` in `V_n`, containing a single point.
    pub fn ball_overlap_profile(&self) -> Vec<(i32, usize)> {
        let n = self.space.len();
        self.params
            .levels()
            .map(|lvl| {
                let mut counts = vec![0usize; n];
                for v in self.level_range(lvl) {
                    for &y in &self.balls[v] {
                        counts[y] += 1;
                    }
                }
                (lvl, counts.into_iter().max().unwrap_or(0))
            })
            .collect()
    }

    /// JSON export; `rho_lengths`, when given, is attached per edge.
    pub fn to_json(&self, rho_lengths: Option<&[f64]>) -> serde_json::Value {
        let ids = self.space.ids();
        let vertices: Vec<serde_json::Value> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| {
                serde_json::json!({
                    "id": i,
                    "level": v.level,
                    "center": ids[v.center],
                    "ball_radius": self.ball_radius(i),
                })
            })
            .collect();
        let edges: Vec<serde_json::Value> = self
            .edges
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let mut obj = serde_json::json!({ "a": e.a, "b": e.b, "kind": e.kind });
                if let Some(r) = rho_lengths {
                    obj["rho_length"] = serde_json::json!(r[k]);
                }
                obj
            })
            .collect();
        serde_json::json!({ "vertices": vertices, "edges": edges })
    }

    pub fn to_dot(&self) -> String {
        let ids = self.space.ids();
        let mut out = String::from("graph filling {\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(
                out,
                "  v{i} [label=\"{}@{}\", level={}];",
                ids[v.center], v.level, v.level
            );
        }
        for e in &self.edges {
            let style = match e.kind {
                EdgeKind::Horizontal => "dashed",
                EdgeKind::Vertical => "solid",
            };
            let _ = writeln!(out, "  v{} -- v{} [style={style}];", e.a, e.b);
        }
        out.push_str("}\n");
        out
    }
}

/// The hull `H^B` of a boundary ball `B = B_Z(center, radius)`.
///
/// The union of closed half-balls around hull vertices is stored as full
/// edges (both endpoints qualify) and half-edges `(edge, qualifying endpoint)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hull {
    pub center: usize,
    pub radius: f64,
    pub vertices: Vec<usize>,
    pub in_hull: Vec<bool>,
    pub full_edges: Vec<usize>,
    pub half_edges: Vec<(usize, usize)>,
}

impl Hull {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.in_hull[v]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeStats {
    pub max_degree: usize,
    pub per_level_max: Vec<(i32, usize)>,
    pub histogram: BTreeMap<usize, usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{generate_space, SpaceKind};

    fn pts(xs: &[f64]) -> Arc<PointCloudSpace> {
        let ids = (0..xs.len()).map(|i| i.to_string()).collect();
        let coords = xs.iter().map(|&x| vec![x]).collect();
        Arc::new(PointCloudSpace::from_coords(ids, coords, vec![1.0; xs.len()]).unwrap())
    }

    fn grid(n: usize) -> Arc<PointCloudSpace> {
        Arc::new(generate_space(&SpaceKind::IntervalGrid { n }).unwrap())
    }

    #[test]
    fn tau_constraint() {
        assert!(FillingParams::new(2.0, 2.0, 0, 1).is_err());
        assert!(FillingParams::new(2.0, 3.0, 0, 1).is_err());
        assert!(FillingParams::new(2.0, 4.0, 0, 1).is_ok());
        // alpha/(alpha-1) = 5 dominates for alpha = 1.25
        assert!(FillingParams::new(1.25, 4.0, 0, 1).is_err());
        assert!(FillingParams::new(2.0, 4.0, 2, 1).is_err());
        let msg = FillingParams::new(2.0, 2.0, 0, 1).unwrap_err().to_string();
        assert!(msg.contains("tau > max{3, alpha/(alpha-1)}"), "{msg}");
    }

    #[test]
    fn greedy_net_hand_example() {
        let s = pts(&[0.0, 0.4, 1.0]);
        assert_eq!(greedy_net(&s, 0.5), vec![0, 2]);
    }

    #[test]
    fn fine_and_coarse_nets() {
        let s = grid(16);
        assert_eq!(greedy_net(&s, 0.5 / 15.0), (0..16).collect::<Vec<_>>());
        assert_eq!(greedy_net(&s, 2.0), vec![0]);
    }

    #[test]
    fn default_levels_on_grid() {
        let s = grid(64);
        assert_eq!(saturation_level(&s, 2.0), Some(6));
        assert_eq!(default_levels(&s, 2.0), (-1, 8));
        let p = FillingParams::with_default_levels(&s, 2.0, 4.0).unwrap();
        let g = build(s, &p).unwrap();
        assert_eq!(g.level_range(-1).len(), 1);
        assert_eq!(g.level_range(6).len(), 64);
    }

    #[test]
    fn two_point_space_one_horizontal_edge() {
        let s = pts(&[0.0, 1.0]);
        let p = FillingParams::new(2.0, 4.0, 0, 0).unwrap();
        let nets = build_nets(&s, &p);
        assert_eq!(nets.centers(0), &[0, 1]);
        let g = build_filling(s, &nets, &p).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edges()[0].kind, EdgeKind::Horizontal);
    }

    #[test]
    fn single_point_is_a_chain() {
        let s = pts(&[0.0]);
        let p = FillingParams::new(2.0, 4.0, 0, 4).unwrap();
        let g = build(s, &p).unwrap();
        assert_eq!(g.num_vertices(), 5);
        assert_eq!(g.edges().len(), 4);
        assert!(g.edges().iter().all(|e| e.kind == EdgeKind::Vertical));
        let stats = g.degree_stats();
        assert_eq!(stats.max_degree, 2);
        assert_eq!(g.vertical_geodesic(0, 0, 4).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn isolated_single_level_has_degree_zero() {
        let s = pts(&[0.0]);
        let p = FillingParams::new(2.0, 4.0, 3, 3).unwrap();
        let g = build(s, &p).unwrap();
        assert_eq!(g.degree_stats().max_degree, 0);
        assert_eq!(g.degree_stats().histogram.get(&0), Some(&1));
    }

    #[test]
    fn disconnected_levels_rejected() {
        // Two points far apart on a single fine level: no shared witnesses.
        let s = pts(&[0.0, 1.0]);
        let p = FillingParams::new(2.0, 4.0, 4, 4).unwrap();
        assert!(matches!(build(s, &p), Err(Error::Disconnected(2))));
    }

    #[test]
    fn horizontal_edges_match_witness_check() {
        let s = grid(16);
        let p = FillingParams::with_default_levels(&s, 2.0, 4.0).unwrap();
        let g = build(s.clone(), &p).unwrap();
        for n in p.levels() {
            let r = p.tau * p.scale(n);
            for v in g.level_range(n) {
                for w in g.level_range(n) {
                    if v >= w {
                        continue;
                    }
                    let witness = (0..s.len()).any(|z| {
                        s.d(z, g.center(v)) < r && s.d(z, g.center(w)) < r
                    });
                    assert_eq!(witness, g.edge_between(v, w).is_some(), "level {n}: {v}-{w}");
                }
            }
        }
    }

    #[test]
    fn centers_at_every_level_give_straight_path() {
        let s = grid(16);
        let p = FillingParams::with_default_levels(&s, 2.0, 4.0).unwrap();
        let g = build(s, &p).unwrap();
        // point 0 is selected first at every level
        let path = g.vertical_geodesic(0, p.n_min, p.n_max).unwrap();
        for (k, &v) in path.iter().enumerate() {
            assert_eq!(g.center(v), 0);
            assert_eq!(g.height(v), p.n_min + k as i32);
        }
    }

    #[test]
    fn hull_edge_cases() {
        let s = grid(16);
        let p = FillingParams::with_default_levels(&s, 2.0, 4.0).unwrap();
        let g = build(s, &p).unwrap();
        assert!(g.hull(0, 0.5 * p.scale(p.n_max)).is_empty());
        let whole = g.hull(0, 10.0);
        assert_eq!(whole.vertices.len(), g.num_vertices());
        assert_eq!(whole.full_edges.len(), g.edges().len());
        assert!(whole.half_edges.is_empty());
    }

    #[test]
    fn degree_stable_under_refinement() {
        let s = grid(64);
        let mut maxima = Vec::new();
        for n_max in [4, 5, 6] {
            let p = FillingParams::new(2.0, 4.0, -1, n_max).unwrap();
            maxima.push(build(s.clone(), &p).unwrap().degree_stats().max_degree);
        }
        assert!(maxima[2] <= maxima[1] + 2, "{maxima:?}");
    }

    #[test]
    fn json_and_dot_exports() {
        let s = grid(4);
        let p = FillingParams::with_default_levels(&s, 2.0, 4.0).unwrap();
        let g = build(s, &p).unwrap();
        let js = g.to_json(None);
        assert_eq!(js["vertices"].as_array().unwrap().len(), g.num_vertices());
        assert_eq!(js["edges"].as_array().unwrap().len(), g.edges().len());
        assert!(g.to_dot().starts_with("graph filling {"));
    }
}
