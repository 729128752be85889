//! Conformal deformation of the filling by `rho = alpha^-h`, with the points
//! of `Z` attached as boundary nodes.
//!
//! Nodes `0..V` are the filling vertices, node `V + z` is the boundary point
//! `z`. Links `0..E` mirror the filling edges; the remaining links are tails
//! joining each level-`n_max` vertex to the boundary points it anchors. A tail
//! stands for the whole anchored ascending ray below `n_max`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filling::{EdgeKind, FillingGraph, FillingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Horizontal,
    Vertical,
    Tail,
}

/// An edge of the uniformized graph. `a` is the endpoint of lower height
/// (for tails `a` is the interior vertex, `b` the boundary node); `level` is `h(a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub kind: LinkKind,
    pub level: i32,
    pub rho_length: f64,
}

impl Link {
    pub fn other(&self, x: usize) -> usize {
        if x == self.a {
            self.b
        } else {
            self.a
        }
    }

    /// For vertical and tail links, the variable `q = alpha^-(h - level)` at
    /// rho-arclength `s` from `a`; it decreases linearly from 1.
    #[inline]
    pub fn q_at(&self, s: f64, alpha: f64) -> f64 {
        (1.0 - s * alpha.powi(self.level) * alpha.ln()).max(0.0)
    }
}

pub fn horizontal_length(alpha: f64, n: i32) -> f64 {
    alpha.powi(-n)
}

/// `int_0^1 alpha^-(n+t) dt`.
pub fn vertical_length(alpha: f64, n: i32) -> f64 {
    alpha.powi(-n) * (1.0 - 1.0 / alpha) / alpha.ln()
}

/// `int_0^inf alpha^-(n+t) dt`.
pub fn tail_length(alpha: f64, n_max: i32) -> f64 {
    alpha.powi(-n_max) / alpha.ln()
}

#[derive(Debug)]
pub struct UniformizedGraph {
    graph: FillingGraph,
    links: Vec<Link>,
    adj: Vec<Vec<(usize, usize)>>,
    dist_cache: Vec<OnceLock<Vec<f64>>>,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn uniformize(graph: FillingGraph) -> Result<UniformizedGraph> {
    let params = *graph.params();
    let alpha = params.alpha;
    let nv = graph.num_vertices();
    let np = graph.space().len();
    let mut links: Vec<Link> = graph
        .edges()
        .iter()
        .map(|e| {
            let level = graph.height(e.a);
            match e.kind {
                EdgeKind::Horizontal => Link {
                    a: e.a,
                    b: e.b,
                    kind: LinkKind::Horizontal,
                    level,
                    rho_length: horizontal_length(alpha, level),
                },
                EdgeKind::Vertical => Link {
                    a: e.a,
                    b: e.b,
                    kind: LinkKind::Vertical,
                    level,
                    rho_length: vertical_length(alpha, level),
                },
            }
        })
        .collect();
    let top = params.n_max;
    let s = params.scale(top);
    let mut attached = vec![false; np];
    for v in graph.level_range(top) {
        let c = graph.center(v);
        for z in 0..np {
            if graph.space().d(c, z) < s {
                attached[z] = true;
                links.push(Link {
                    a: v,
                    b: nv + z,
                    kind: LinkKind::Tail,
                    level: top,
                    rho_length: tail_length(alpha, top),
                });
            }
        }
    }
    if let Some(z) = attached.iter().position(|&a| !a) {
        return Err(Error::Consistency(format!(
            "boundary point {z} has no tail edge at level {top}"
        )));
    }
    let mut adj = vec![Vec::new(); nv + np];
    for (k, l) in links.iter().enumerate() {
        adj[l.a].push((l.b, k));
        adj[l.b].push((l.a, k));
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let dist_cache = (0..nv + np).map(|_| OnceLock::new()).collect();
    Ok(UniformizedGraph {
        graph,
        links,
        adj,
        dist_cache,
    })
}

impl UniformizedGraph {
    pub fn filling(&self) -> &FillingGraph {
        &self.graph
    }

    pub fn params(&self) -> &FillingParams {
        self.graph.params()
    }

    pub fn alpha(&self) -> f64 {
        self.graph.params().alpha
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, k: usize) -> &Link {
        &self.links[k]
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn num_interior(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn num_boundary(&self) -> usize {
        self.graph.space().len()
    }

    #[inline]
    pub fn boundary_node(&self, z: usize) -> usize {
        self.graph.num_vertices() + z
    }

    #[inline]
    pub fn is_boundary(&self, node: usize) -> bool {
        node >= self.graph.num_vertices()
    }

    /// The point of `Z` for a boundary node.
    pub fn point_of(&self, node: usize) -> Option<usize> {
        self.is_boundary(node)
            .then(|| node - self.graph.num_vertices())
    }

    pub fn height(&self, node: usize) -> Option<i32> {
        (!self.is_boundary(node)).then(|| self.graph.height(node))
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adj[node]
    }

    pub fn rho_lengths(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.rho_length).collect()
    }

    /// Tail links of interior vertex `v`.
    pub fn tails(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v]
            .iter()
            .filter(|&&(_, k)| self.links[k].kind == LinkKind::Tail)
            .map(|&(_, k)| k)
    }

    fn dijkstra(&self, source: usize, banned: &[usize]) -> (Vec<f64>, Vec<usize>) {
        let n = self.num_nodes();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![usize::MAX; n];
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem {
            dist: 0.0,
            node: source,
        });
        while let Some(HeapItem { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            for &(w, k) in &self.adj[node] {
                if banned.contains(&k) {
                    continue;
                }
                let nd = d + self.links[k].rho_length;
                if nd < dist[w] {
                    dist[w] = nd;
                    pred[w] = k;
                    heap.push(HeapItem { dist: nd, node: w });
                }
            }
        }
        (dist, pred)
    }

    /// `d_rho` from `source` to every node. Cached per source.
    pub fn distances_from(&self, source: usize) -> &[f64] {
        self.dist_cache[source].get_or_init(|| self.dijkstra(source, &[]).0)
    }

    pub fn d_rho(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return 0.0;
        }
        self.distances_from(x)[y]
    }

    /// Distance from an interior node to the boundary.
    pub fn d_rho_boundary(&self, x: usize) -> f64 {
        let d = self.distances_from(x);
        d[self.num_interior()..]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// A shortest path avoiding the `banned` links, as `(length, links)`.
    pub fn shortest_path(&self, x: usize, y: usize, banned: &[usize]) -> Option<(f64, Vec<usize>)> {
        let (dist, pred) = self.dijkstra(x, banned);
        if !dist[y].is_finite() {
            return None;
        }
        let mut path = Vec::new();
        let mut cur = y;
        while cur != x {
            let k = pred[cur];
            path.push(k);
            cur = self.links[k].other(cur);
        }
        path.reverse();
        Some((dist[y], path))
    }

    /// `(x|y)_h = (h(x) + h(y) - |xy|) / 2` with `|xy|` the unit-edge distance.
    pub fn gromov_product_h(&self, x: usize, y: usize) -> Result<f64> {
        if self.is_boundary(x) || self.is_boundary(y) {
            return Err(Error::InvalidParams(
                "Gromov products are defined for interior vertices only".into(),
            ));
        }
        let hops = self.graph.hop_distances(x)[y];
        Ok(0.5 * (self.graph.height(x) as f64 + self.graph.height(y) as f64 - hops as f64))
    }

    /// Graph export with `rho_length` on each filling edge and the tail links listed separately.
    pub fn to_json(&self) -> serde_json::Value {
        let lens = self.rho_lengths();
        let mut js = self.graph.to_json(Some(&lens[..self.graph.edges().len()]));
        let ids = self.graph.space().ids();
        let tails: Vec<serde_json::Value> = self.links[self.graph.edges().len()..]
            .iter()
            .map(|l| {
                serde_json::json!({
                    "a": l.a,
                    "point": ids[l.b - self.num_interior()],
                    "kind": "tail",
                    "rho_length": l.rho_length,
                })
            })
            .collect();
        js["tails"] = serde_json::Value::Array(tails);
        js
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filling::{build, FillingParams};
    use crate::space::{generate_space, PointCloudSpace, SpaceKind};
    use std::sync::Arc;

    fn chain(n_max: i32) -> UniformizedGraph {
        let s = Arc::new(PointCloudSpace::new(vec!["a".into()], None, vec![0.0], vec![1.0]).unwrap());
        let p = FillingParams::new(2.0, 4.0, 0, n_max).unwrap();
        uniformize(build(s, &p).unwrap()).unwrap()
    }

    #[test]
    fn closed_form_lengths() {
        assert_eq!(horizontal_length(2.0, 0), 1.0);
        assert!((vertical_length(2.0, 0) - 0.721347520444482).abs() < 1e-14);
        assert!((tail_length(2.0, 3) - 0.18033688011112042).abs() < 1e-15);
    }

    #[test]
    fn chain_distances() {
        let u = chain(1);
        assert_eq!(u.d_rho(0, 0), 0.0);
        assert!((u.d_rho(0, 1) - 1.0 / (2.0 * 2f64.ln())).abs() < 1e-15);
        // level n to boundary telescopes to alpha^-n / ln alpha
        let u = chain(4);
        let z = u.boundary_node(0);
        for v in 0..5 {
            let expect = 2f64.powi(-(v as i32)) / 2f64.ln();
            assert!((u.d_rho_boundary(v) - expect).abs() < 1e-14);
            assert!((u.d_rho(v, z) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn tails_attach_every_point() {
        let s = Arc::new(generate_space(&SpaceKind::IntervalGrid { n: 16 }).unwrap());
        let p = FillingParams::with_default_levels(&s, 2.0, 4.0).unwrap();
        let u = uniformize(build(s, &p).unwrap()).unwrap();
        for z in 0..16 {
            let node = u.boundary_node(z);
            assert_eq!(u.neighbors(node).len(), 1);
        }
        for v in u.filling().level_range(p.n_max) {
            let bound = tail_length(2.0, p.n_max);
            assert!(u.d_rho_boundary(v) <= bound + 1e-15);
        }
    }

    #[test]
    fn gromov_products_by_substitution() {
        let s = Arc::new(generate_space(&SpaceKind::IntervalGrid { n: 16 }).unwrap());
        let p = FillingParams::with_default_levels(&s, 2.0, 4.0).unwrap();
        let u = uniformize(build(s, &p).unwrap()).unwrap();
        let g = u.filling();
        for e in g.edges() {
            let (ha, hb) = (g.height(e.a) as f64, g.height(e.b) as f64);
            let expect = match e.kind {
                EdgeKind::Vertical => ha,
                EdgeKind::Horizontal => ha - 0.5,
            };
            assert_eq!(u.gromov_product_h(e.a, e.b).unwrap(), expect);
            assert!(u.gromov_product_h(e.a, e.b).unwrap() <= ha.min(hb));
        }
        assert_eq!(u.gromov_product_h(3, 3).unwrap(), g.height(3) as f64);
        assert!(u.gromov_product_h(0, u.boundary_node(0)).is_err());
    }

    #[test]
    fn shortest_path_reports_links() {
        let u = chain(3);
        let z = u.boundary_node(0);
        let (len, path) = u.shortest_path(0, z, &[]).unwrap();
        assert_eq!(path.len(), 4);
        assert!((len - u.d_rho(0, z)).abs() < 1e-15);
        assert!(u.shortest_path(0, z, &[path[1]]).is_none());
    }
}
