//! Trace and Poisson extension between boundary and graph functions, plus
//! the hyperbolic-upper-gradient and Hajłasz-gradient constructions.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filling::FillingGraph;
use crate::funcspace::{
    lp_norm_boundary, partition_of_unity, BoundaryFunction, GraphFunction, PartitionOfUnity,
};
use crate::measure::LiftedMeasure;
use crate::uniformize::{LinkKind, UniformizedGraph};

/// Partitions of unity for every level, indexed by `n - n_min`.
#[derive(Debug, Clone)]
pub struct Partitions {
    n_min: i32,
    levels: Vec<PartitionOfUnity>,
}

impl Partitions {
    pub fn build(g: &FillingGraph) -> Result<Self> {
        let levels = g
            .params()
            .levels()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|n| partition_of_unity(g, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Partitions {
            n_min: g.params().n_min,
            levels,
        })
    }

    pub fn level(&self, n: i32) -> &PartitionOfUnity {
        &self.levels[(n - self.n_min) as usize]
    }

    pub fn n_max(&self) -> i32 {
        self.n_min + self.levels.len() as i32 - 1
    }
}

/// `T_n u = sum_{v in V_n} u(v) psi_v`.
pub fn trace_level(pous: &Partitions, u: &GraphFunction, n: i32) -> BoundaryFunction {
    let pu = pous.level(n);
    let coeffs: Vec<f64> = pu.vertices.iter().map(|&v| u.values[v]).collect();
    pu.combine(&coeffs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceResult {
    pub levels: Vec<i32>,
    pub partial: Vec<BoundaryFunction>,
    /// `Tu = T_{n_max} u`.
    pub trace: BoundaryFunction,
    /// `(n, ||T_{n+1} u - T_n u||_p)` for consecutive requested levels.
    pub increments: Vec<(i32, f64)>,
    /// `(n, ||Tu - T_n u||_p)`.
    pub remainders: Vec<(i32, f64)>,
}

pub fn trace(
    ug: &UniformizedGraph,
    pous: &Partitions,
    u: &GraphFunction,
    n_range: RangeInclusive<i32>,
    p: f64,
) -> Result<TraceResult> {
    u.check_len(ug)?;
    let params = ug.params();
    if *n_range.start() < params.n_min || *n_range.end() > params.n_max {
        return Err(Error::InvalidParams(format!(
            "trace levels {:?} outside {}..={}",
            n_range, params.n_min, params.n_max
        )));
    }
    let space = ug.filling().space();
    let levels: Vec<i32> = n_range.collect();
    let partial: Vec<BoundaryFunction> = levels.iter().map(|&n| trace_level(pous, u, n)).collect();
    let trace = trace_level(pous, u, params.n_max);
    let increments = levels
        .windows(2)
        .zip(partial.windows(2))
        .map(|(n, t)| (n[0], lp_norm_boundary(space, &t[1].sub(&t[0]), p)))
        .collect();
    let remainders = levels
        .iter()
        .zip(&partial)
        .map(|(&n, t)| (n, lp_norm_boundary(space, &trace.sub(t), p)))
        .collect();
    Ok(TraceResult {
        levels,
        partial,
        trace,
        increments,
        remainders,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionResult {
    pub pf: GraphFunction,
}

/// `Pf(v)` is the `nu`-average of `f` over `B(v)`; boundary nodes carry `f`.
pub fn poisson_extension(ug: &UniformizedGraph, f: &BoundaryFunction) -> Result<ExtensionResult> {
    let g = ug.filling();
    let space = g.space();
    f.check_len(space)?;
    let mut values: Vec<f64> = (0..g.num_vertices())
        .map(|v| {
            let (mut num, mut den) = (0.0, 0.0);
            for &z in g.ball(v) {
                num += f.values[z] * space.weight(z);
                den += space.weight(z);
            }
            num / den
        })
        .collect();
    values.extend_from_slice(&f.values);
    Ok(ExtensionResult {
        pf: GraphFunction { values },
    })
}

impl ExtensionResult {
    /// `xi_n` at every node: 0 up to level `n`, 1 above and on the boundary.
    pub fn cutoff(ug: &UniformizedGraph, n: i32) -> Vec<f64> {
        (0..ug.num_nodes())
            .map(|x| match ug.height(x) {
                Some(h) if h <= n => 0.0,
                _ => 1.0,
            })
            .collect()
    }

    /// `P_n f = xi_n Pf`.
    pub fn truncate(&self, ug: &UniformizedGraph, n: i32) -> GraphFunction {
        let xi = Self::cutoff(ug, n);
        GraphFunction {
            values: self.pf.values.iter().zip(xi).map(|(a, b)| a * b).collect(),
        }
    }
}

pub fn truncate_extension(ext: &ExtensionResult, ug: &UniformizedGraph, n: i32) -> GraphFunction {
    ext.truncate(ug, n)
}

/// `||u||_{L^p(X_{>=n})}`: the links lying at height `>= n`.
pub fn lp_norm_above(ug: &UniformizedGraph, mu: &LiftedMeasure, u: &GraphFunction, n: i32, p: f64) -> f64 {
    crate::funcspace::det_sum(ug.links().len(), |k| {
        let l = ug.link(k);
        if l.level < n {
            return 0.0;
        }
        let (ua, ub) = (u.values[l.a], u.values[l.b]);
        if ua == 0.0 && ub == 0.0 {
            return 0.0;
        }
        mu.integrate_link(ug, k, 0.0, l.rho_length, ua, ub, |x| x.abs().powf(p))
    })
    .powf(1.0 / p)
}

/// `g_k(z) = alpha^(theta (k+1)) (int_{gamma_{k,z}} g ds + int_{H(v_{k,z})} g ds)`
/// for each requested `k`, where `gamma_{k,z}` runs from the anchor of `z` at
/// level `k` up to `n_max` and down the tail to `z`.
pub fn hajlasz_gradients(
    ug: &UniformizedGraph,
    g: &[f64],
    theta: f64,
    ks: RangeInclusive<i32>,
) -> Result<Vec<(i32, BoundaryFunction)>> {
    if g.len() != ug.links().len() {
        return Err(Error::Shape(format!(
            "{} gradient values for {} links",
            g.len(),
            ug.links().len()
        )));
    }
    if let Some(k) = g.iter().position(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidParams(format!("gradient on link {k} is negative")));
    }
    let fg = ug.filling();
    let top = ug.params().n_max;
    let alpha = ug.alpha();
    let np = fg.space().len();
    let cost = |k: usize| g[k] * ug.link(k).rho_length;
    ks.map(|k| {
        let values = (0..np)
            .into_par_iter()
            .map(|z| -> Result<f64> {
                let path = fg.vertical_geodesic(z, k, top)?;
                let mut s = 0.0;
                for w in path.windows(2) {
                    s += cost(fg.edge_between(w[0], w[1]).expect("checked adjacent"));
                }
                let last = *path.last().expect("nonempty path");
                let bz = ug.boundary_node(z);
                let tail = ug
                    .tails(last)
                    .find(|&t| ug.link(t).b == bz)
                    .ok_or_else(|| Error::Consistency(format!("no tail from {last} to point {z}")))?;
                s += cost(tail);
                s += fg.horizontal_edges(path[0]).map(cost).sum::<f64>();
                Ok(alpha.powf(theta * (k + 1) as f64) * s)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok((k, BoundaryFunction { values }))
    })
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub x: usize,
    pub y: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Tests `|f(x) - f(y)| <= int_gamma g ds` along the shortest path between
/// boundary points and along alternatives obtained by banning one link of
/// it, up to `path_budget` paths per pair. A necessary-condition check only.
pub fn check_hyperbolic_upper_gradient(
    ug: &UniformizedGraph,
    f: &BoundaryFunction,
    g: &[f64],
    pairs: &[(usize, usize)],
    path_budget: usize,
) -> Result<Vec<Violation>> {
    if path_budget == 0 {
        return Err(Error::InvalidParams("path budget must be at least 1".into()));
    }
    if g.len() != ug.links().len() {
        return Err(Error::Shape("one gradient value per link required".into()));
    }
    f.check_len(ug.filling().space())?;
    let found: Vec<Vec<Violation>> = pairs
        .par_iter()
        .map(|&(x, y)| {
            let (bx, by) = (ug.boundary_node(x), ug.boundary_node(y));
            let lhs = (f.values[x] - f.values[y]).abs();
            let mut out = Vec::new();
            let Some((_, primary)) = ug.shortest_path(bx, by, &[]) else {
                return out;
            };
            let mut paths = vec![primary.clone()];
            for &banned in primary.iter().take(path_budget.saturating_sub(1)) {
                if let Some((_, alt)) = ug.shortest_path(bx, by, &[banned]) {
                    paths.push(alt);
                }
            }
            for path in paths {
                let rhs: f64 = path.iter().map(|&k| g[k] * ug.link(k).rho_length).sum();
                if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
                    out.push(Violation { x, y, lhs, rhs });
                    break;
                }
            }
            out
        })
        .collect();
    Ok(found.concat())
}

/// Largest per-link gradient of `u` grouped by link level.
pub fn gradient_profile(ug: &UniformizedGraph, g: &[f64]) -> Vec<(i32, f64)> {
    let params = ug.params();
    params
        .levels()
        .map(|n| {
            let m = ug
                .links()
                .iter()
                .enumerate()
                .filter(|(_, l)| l.level == n && l.kind != LinkKind::Tail)
                .map(|(k, _)| g[k])
                .fold(0.0, f64::max);
            (n, m)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filling::{build, FillingParams};
    use crate::funcspace::edge_gradients;
    use crate::space::{generate_space, PointCloudSpace, SpaceKind};
    use crate::uniformize::uniformize;
    use std::sync::Arc;

    fn graph(space: PointCloudSpace) -> UniformizedGraph {
        let p = FillingParams::with_default_levels(&space, 2.0, 4.0).unwrap();
        uniformize(build(Arc::new(space), &p).unwrap()).unwrap()
    }

    fn grid(n: usize) -> UniformizedGraph {
        graph(generate_space(&SpaceKind::IntervalGrid { n }).unwrap())
    }

    #[test]
    fn constant_extends_and_traces_to_itself() {
        let ug = grid(16);
        let space = ug.filling().space();
        let pous = Partitions::build(ug.filling()).unwrap();
        let f = BoundaryFunction::from_fn(space, |_| 2.5);
        let ext = poisson_extension(&ug, &f).unwrap();
        assert!(ext.pf.values.iter().all(|&v| (v - 2.5).abs() < 1e-14));
        let p = ug.params();
        let tr = trace(&ug, &pous, &ext.pf, p.n_min..=p.n_max, 2.0).unwrap();
        for t in &tr.partial {
            assert!(t.values.iter().all(|&v| (v - 2.5).abs() < 1e-14));
        }
    }

    #[test]
    fn indicator_traces_to_its_bump() {
        let ug = grid(16);
        let pous = Partitions::build(ug.filling()).unwrap();
        let n = ug.params().n_min + 2;
        let v = ug.filling().level_range(n).start + 1;
        let u = GraphFunction::from_fn(&ug, |x| if x == v { 1.0 } else { 0.0 });
        let t = trace_level(&pous, &u, n);
        let pu = pous.level(n);
        let i = pu.vertices.iter().position(|&w| w == v).unwrap();
        assert_eq!(t.values, pu.row(i));
    }

    #[test]
    fn two_point_average() {
        let s = PointCloudSpace::new(
            vec!["a".into(), "b".into()],
            None,
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let ug = graph(s);
        let f = BoundaryFunction::new(vec![0.0, 1.0]).unwrap();
        let ext = poisson_extension(&ug, &f).unwrap();
        assert_eq!(ext.pf.values[0], 0.5);
        let nb = ug.num_interior();
        assert_eq!(&ext.pf.values[nb..], &[0.0, 1.0]);
    }

    #[test]
    fn truncation_edge_cases() {
        let ug = grid(16);
        let f = BoundaryFunction::from_fn(ug.filling().space(), |z| z as f64);
        let ext = poisson_extension(&ug, &f).unwrap();
        let p = ug.params();
        assert_eq!(ext.truncate(&ug, p.n_min - 1), ext.pf);
        let top = ext.truncate(&ug, p.n_max);
        let ni = ug.num_interior();
        assert!(top.values[..ni].iter().all(|&v| v == 0.0));
        assert_eq!(&top.values[ni..], &f.values[..]);
    }

    #[test]
    fn hajlasz_on_a_point_chain() {
        let s = PointCloudSpace::new(vec!["o".into()], None, vec![0.0], vec![1.0]).unwrap();
        let ug = graph(s);
        let g: Vec<f64> = (0..ug.links().len()).map(|k| 1.0 + k as f64).collect();
        let p = ug.params();
        let out = hajlasz_gradients(&ug, &g, 0.5, p.n_min..=p.n_max).unwrap();
        for (k, gk) in out {
            let expect: f64 = ug
                .links()
                .iter()
                .enumerate()
                .filter(|(_, l)| l.level >= k)
                .map(|(i, l)| g[i] * l.rho_length)
                .sum::<f64>()
                * 2f64.powf(0.5 * (k + 1) as f64);
            assert!((gk.values[0] - expect).abs() < 1e-12 * expect);
        }
        let zero = hajlasz_gradients(&ug, &vec![0.0; g.len()], 0.5, p.n_min..=p.n_min).unwrap();
        assert_eq!(zero[0].1.values, vec![0.0]);
    }

    #[test]
    fn upper_gradient_checks() {
        let ug = grid(16);
        let space = ug.filling().space();
        let pairs: Vec<(usize, usize)> = (0..16).flat_map(|x| (0..16).map(move |y| (x, y))).filter(|(x, y)| x < y).collect();
        let f = BoundaryFunction::from_fn(space, |z| ((z * 7) % 5) as f64);
        let ext = poisson_extension(&ug, &f).unwrap();
        let g = edge_gradients(&ug, &ext.pf);
        assert!(check_hyperbolic_upper_gradient(&ug, &f, &g, &pairs, 4).unwrap().is_empty());
        let zero = vec![0.0; g.len()];
        let c = BoundaryFunction::from_fn(space, |_| 1.0);
        assert!(check_hyperbolic_upper_gradient(&ug, &c, &zero, &pairs, 2).unwrap().is_empty());
        let step = BoundaryFunction::from_fn(space, |z| if z == 0 { 0.0 } else { 1.0 });
        let v = check_hyperbolic_upper_gradient(&ug, &step, &zero, &[(0, 1)], 1).unwrap();
        assert_eq!(v.len(), 1);
        assert!(check_hyperbolic_upper_gradient(&ug, &step, &zero, &[(0, 1)], 0).is_err());
    }

    #[test]
    fn hajlasz_inequality_holds_for_extension_gradients() {
        let ug = grid(32);
        let space = ug.filling().space();
        let f = BoundaryFunction::from_fn(space, |z| ((z * 13) % 7) as f64 / 7.0);
        let ext = poisson_extension(&ug, &f).unwrap();
        let g = edge_gradients(&ug, &ext.pf);
        let p = ug.params();
        let theta = 0.5;
        let gk = hajlasz_gradients(&ug, &g, theta, p.n_min..=p.n_max).unwrap();
        for (k, gv) in &gk {
            let (lo, hi) = (p.scale(k + 1), p.scale(*k));
            for x in 0..space.len() {
                for y in 0..space.len() {
                    let d = space.d(x, y);
                    if d >= lo && d < hi {
                        let lhs = (f.values[x] - f.values[y]).abs();
                        let rhs = d.powf(theta) * (gv.values[x] + gv.values[y]);
                        assert!(lhs <= rhs * (1.0 + 1e-12), "k={k} x={x} y={y}");
                    }
                }
            }
        }
    }
}
