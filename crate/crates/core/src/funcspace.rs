//! Function spaces: Besov norms on the boundary, L^p and Dirichlet norms on
//! the graph, edge gradients and partitions of unity.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filling::FillingGraph;
use crate::measure::LiftedMeasure;
use crate::space::PointCloudSpace;
use crate::uniformize::UniformizedGraph;

pub const CHUNK: usize = 1024;

/// `sum_{i<n} f(i)`, evaluated in parallel chunks of [`CHUNK`] and combined
/// in index order, so the result does not depend on the thread count.
pub fn det_sum<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let chunks: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum::<f64>())
        .collect();
    chunks.into_iter().fold(0.0, |a, b| a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub p: f64,
    pub theta: f64,
}

impl BesovParams {
    pub fn new(p: f64, theta: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidParams(format!("p must be >= 1, got {p}")));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParams(format!(
                "theta must lie in (0,1), got {theta}"
            )));
        }
        Ok(BesovParams { p, theta })
    }

    /// `beta = p (1 - theta)`.
    pub fn beta(&self) -> f64 {
        self.p * (1.0 - self.theta)
    }

    /// `Q_beta = max{1, Q + beta}`.
    pub fn q_beta(&self, q: f64) -> f64 {
        (q + self.beta()).max(1.0)
    }

    /// `Q p / (Q - p theta)`, defined only when `p theta < Q`.
    pub fn q_star(&self, q: f64) -> Option<f64> {
        let pt = self.p * self.theta;
        (pt < q).then(|| q * self.p / (q - pt))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFunction {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFunction {
    pub values: Vec<f64>,
}

impl BoundaryFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("non-finite value at point {i}")));
        }
        Ok(BoundaryFunction { values })
    }

    pub fn from_fn(space: &PointCloudSpace, f: impl Fn(usize) -> f64) -> Self {
        BoundaryFunction {
            values: (0..space.len()).map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_len(&self, space: &PointCloudSpace) -> Result<()> {
        if self.values.len() != space.len() {
            return Err(Error::Shape(format!(
                "function has {} values, space has {} points",
                self.values.len(),
                space.len()
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        BoundaryFunction {
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        BoundaryFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        BoundaryFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// CSV with header `id,value`; rows may come in any order.
    pub fn load_csv(path: &Path, space: &PointCloudSpace) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut values = vec![None; space.len()];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() != 2 {
                return Err(Error::Parse(format!("expected `id,value`, got {} fields", rec.len())));
            }
            let i = space
                .ids()
                .iter()
                .position(|s| s == &rec[0])
                .ok_or_else(|| Error::Parse(format!("unknown point id `{}`", &rec[0])))?;
            let v: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad value `{}`", &rec[1])))?;
            values[i] = Some(v);
        }
        let values: Option<Vec<f64>> = values.into_iter().collect();
        let values = values.ok_or_else(|| Error::Shape("function misses some points".into()))?;
        BoundaryFunction::new(values)
    }

    pub fn save_csv(&self, path: &Path, space: &PointCloudSpace) -> Result<()> {
        self.check_len(space)?;
        let mut out = String::from("id,value\n");
        for (id, v) in space.ids().iter().zip(&self.values) {
            out.push_str(&format!("{id},{v:?}\n"));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// `{"boundary_values": [...]}` or a bare array.
    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
        let arr = v.get("boundary_values").unwrap_or(&v);
        let values: Vec<f64> =
            serde_json::from_value(arr.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        BoundaryFunction::new(values)
    }

    /// Picks the reader by extension.
    pub fn load(path: &Path, space: &PointCloudSpace) -> Result<Self> {
        let f = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::load_json(path)?,
            _ => Self::load_csv(path, space)?,
        };
        f.check_len(space)?;
        Ok(f)
    }
}

impl GraphFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("non-finite value at node {i}")));
        }
        Ok(GraphFunction { values })
    }

    pub fn from_fn(ug: &UniformizedGraph, f: impl Fn(usize) -> f64) -> Self {
        GraphFunction {
            values: (0..ug.num_nodes()).map(f).collect(),
        }
    }

    pub fn check_len(&self, ug: &UniformizedGraph) -> Result<()> {
        if self.values.len() != ug.num_nodes() {
            return Err(Error::Shape(format!(
                "graph function has {} values, graph has {} nodes",
                self.values.len(),
                ug.num_nodes()
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        GraphFunction {
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Values on the boundary nodes.
    pub fn boundary(&self, ug: &UniformizedGraph) -> BoundaryFunction {
        BoundaryFunction {
            values: self.values[ug.num_interior()..].to_vec(),
        }
    }

    pub fn to_json(&self, ug: &UniformizedGraph) -> serde_json::Value {
        let ni = ug.num_interior();
        serde_json::json!({
            "vertex_values": &self.values[..ni],
            "boundary_values": &self.values[ni..],
        })
    }

    pub fn from_json(v: &serde_json::Value, ug: &UniformizedGraph) -> Result<Self> {
        let get = |key: &str| -> Result<Vec<f64>> {
            let a = v
                .get(key)
                .ok_or_else(|| Error::Parse(format!("missing `{key}`")))?;
            serde_json::from_value(a.clone()).map_err(|e| Error::Parse(e.to_string()))
        };
        let mut values = get("vertex_values")?;
        values.extend(get("boundary_values")?);
        let g = GraphFunction::new(values)?;
        g.check_len(ug)?;
        Ok(g)
    }
}

/// Strict-ball masses `nu(B(x, d(x, y)))` for every ordered pair, row-major.
fn pair_ball_masses(space: &PointCloudSpace) -> Vec<f64> {
    let n = space.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let row = space.row(x);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
            let mut out = vec![0.0; n];
            let mut acc = 0.0;
            let mut i = 0;
            while i < n {
                let d = row[order[i]];
                let mut j = i;
                while j < n && row[order[j]] == d {
                    out[order[j]] = acc;
                    j += 1;
                }
                for &k in &order[i..j] {
                    acc += space.weight(k);
                }
                i = j;
            }
            out
        })
        .collect();
    rows.concat()
}

/// The double-sum Besov seminorm.
pub fn besov_norm(space: &PointCloudSpace, f: &BoundaryFunction, params: &BesovParams) -> f64 {
    let masses = pair_ball_masses(space);
    besov_with_masses(space, f, params, &masses)
}

fn besov_with_masses(space: &PointCloudSpace, f: &BoundaryFunction, params: &BesovParams, masses: &[f64]) -> f64 {
    let n = space.len();
    let (p, pt) = (params.p, params.p * params.theta);
    let v = &f.values;
    det_sum(n, |x| {
        let row = space.row(x);
        let mut s = 0.0;
        for y in 0..n {
            if y == x || v[x] == v[y] {
                continue;
            }
            s += (v[x] - v[y]).abs().powf(p) / row[y].powf(pt) * space.weight(x) * space.weight(y)
                / masses[x * n + y];
        }
        s
    })
    .powf(1.0 / p)
}

/// Besov seminorms of many functions sharing one space.
pub fn besov_norms(space: &PointCloudSpace, fs: &[BoundaryFunction], params: &BesovParams) -> Vec<f64> {
    let masses = pair_ball_masses(space);
    fs.iter()
        .map(|f| besov_with_masses(space, f, params, &masses))
        .collect()
}

/// The dyadic Besov seminorm.
pub fn besov_norm_dyadic(space: &PointCloudSpace, f: &BoundaryFunction, params: &BesovParams, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidParams(format!("alpha must exceed 1, got {alpha}")));
    }
    let n = space.len();
    if n < 2 {
        return Ok(0.0);
    }
    let (p, pt) = (params.p, params.p * params.theta);
    let Some(min_d) = space.min_positive_distance() else {
        return Ok(0.0);
    };
    let diam = space.diameter();
    let v = &f.values;
    let level_term = |r: f64| {
        det_sum(n, |x| {
            let row = space.row(x);
            let (mut num, mut den) = (0.0, 0.0);
            for y in 0..n {
                if row[y] < r {
                    den += space.weight(y);
                    if v[x] != v[y] {
                        num += (v[x] - v[y]).abs().powf(p) * space.weight(y);
                    }
                }
            }
            space.weight(x) * num / den
        }) / r.powf(pt)
    };
    // finest level whose open ball can hold a second point
    let mut lev = (-(min_d.ln()) / alpha.ln()).ceil() as i64 - 1;
    while alpha.powf(-(lev as f64)) <= min_d {
        lev -= 1;
    }
    let mut total = 0.0;
    for _ in 0..100_000 {
        let r = alpha.powf(-(lev as f64));
        let t = level_term(r);
        total += t;
        if r > diam && t <= 1e-12 * total {
            break;
        }
        lev -= 1;
    }
    Ok(total.powf(1.0 / p))
}

pub fn lp_norm_boundary(space: &PointCloudSpace, f: &BoundaryFunction, p: f64) -> f64 {
    (0..space.len())
        .map(|x| f.values[x].abs().powf(p) * space.weight(x))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// `|u(a) - u(b)| / rho_length` on link `k`.
pub fn edge_gradient(ug: &UniformizedGraph, u: &GraphFunction, k: usize) -> f64 {
    let l = ug.link(k);
    (u.values[l.a] - u.values[l.b]).abs() / l.rho_length
}

pub fn edge_gradients(ug: &UniformizedGraph, u: &GraphFunction) -> Vec<f64> {
    (0..ug.links().len()).map(|k| edge_gradient(ug, u, k)).collect()
}

/// `(sum_e g_e^p mu_beta(e))^(1/p)` for per-link gradient values `g`.
pub fn gradient_lp(mu: &LiftedMeasure, g: &[f64], p: f64) -> f64 {
    det_sum(g.len(), |k| {
        if g[k] == 0.0 {
            0.0
        } else {
            g[k].powf(p) * mu.link_mass(k)
        }
    })
    .powf(1.0 / p)
}

pub fn dirichlet_norm(ug: &UniformizedGraph, mu: &LiftedMeasure, u: &GraphFunction, p: f64) -> f64 {
    gradient_lp(mu, &edge_gradients(ug, u), p)
}

pub fn lp_norm_graph(ug: &UniformizedGraph, mu: &LiftedMeasure, u: &GraphFunction, p: f64) -> f64 {
    det_sum(ug.links().len(), |k| {
        let l = ug.link(k);
        let (ua, ub) = (u.values[l.a], u.values[l.b]);
        if ua == 0.0 && ub == 0.0 {
            return 0.0;
        }
        mu.integrate_link(ug, k, 0.0, l.rho_length, ua, ub, |x| x.abs().powf(p))
    })
    .powf(1.0 / p)
}

/// `psi_v(z)` for the vertices `v` of one level, stored row-major by vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOfUnity {
    pub level: i32,
    pub radius: f64,
    pub vertices: Vec<usize>,
    pub centers: Vec<usize>,
    pub psi: Vec<f64>,
    n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionCheck {
    pub max_sum_error: f64,
    pub support_violations: usize,
    /// `max |psi_v(z) - psi_v(w)| r / d(z, w)`.
    pub lipschitz_constant: f64,
}

pub fn partition_of_unity(g: &FillingGraph, n: i32) -> Result<PartitionOfUnity> {
    let (lo, hi) = (g.params().n_min, g.params().n_max);
    if n < lo || n > hi {
        return Err(Error::InvalidParams(format!(
            "level {n} outside [{lo}, {hi}]"
        )));
    }
    let space = g.space();
    let r = g.params().scale(n);
    let vertices: Vec<usize> = g.level_range(n).collect();
    let centers: Vec<usize> = vertices.iter().map(|&v| g.center(v)).collect();
    let np = space.len();
    let mut psi = vec![0.0; vertices.len() * np];
    for z in 0..np {
        let mut total = 0.0;
        for (i, &c) in centers.iter().enumerate() {
            let phi = (2.0 - space.d(z, c) / r).clamp(0.0, 1.0);
            psi[i * np + z] = phi;
            total += phi;
        }
        if total < 1.0 {
            return Err(Error::Consistency(format!(
                "point {z} is not covered by the level-{n} net"
            )));
        }
        for i in 0..centers.len() {
            psi[i * np + z] /= total;
        }
    }
    Ok(PartitionOfUnity {
        level: n,
        radius: r,
        vertices,
        centers,
        psi,
        n_points: np,
    })
}

impl PartitionOfUnity {
    #[inline]
    pub fn value(&self, i: usize, z: usize) -> f64 {
        self.psi[i * self.n_points + z]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.psi[i * self.n_points..(i + 1) * self.n_points]
    }

    /// `sum_i c_i psi_i(z)` for coefficients indexed like `vertices`.
    pub fn combine(&self, coeffs: &[f64]) -> BoundaryFunction {
        let mut out = vec![0.0; self.n_points];
        for (i, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(i)) {
                *o += c * w;
            }
        }
        BoundaryFunction { values: out }
    }

    /// Exhaustive check of normalization, support and Lipschitz bounds.
    pub fn check(&self, space: &PointCloudSpace) -> PartitionCheck {
        let np = self.n_points;
        let mut max_sum_error: f64 = 0.0;
        for z in 0..np {
            let s: f64 = (0..self.centers.len()).map(|i| self.value(i, z)).sum();
            max_sum_error = max_sum_error.max((s - 1.0).abs());
        }
        let mut support_violations = 0;
        let mut lip: f64 = 0.0;
        for (i, &c) in self.centers.iter().enumerate() {
            let row = self.row(i);
            for z in 0..np {
                if row[z] != 0.0 && space.d(z, c) >= 2.0 * self.radius {
                    support_violations += 1;
                }
                for w in z + 1..np {
                    let q = (row[z] - row[w]).abs() / space.d(z, w);
                    lip = lip.max(q * self.radius);
                }
            }
        }
        PartitionCheck {
            max_sum_error,
            support_violations,
            lipschitz_constant: lip,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filling::{build, FillingParams};
    use crate::measure::lift_measure;
    use crate::space::{generate_space, SpaceKind};
    use crate::uniformize::{uniformize, LinkKind};
    use std::sync::Arc;

    fn two_points(w: f64) -> PointCloudSpace {
        PointCloudSpace::new(
            vec!["a".into(), "b".into()],
            None,
            vec![0.0, 1.0, 1.0, 0.0],
            vec![w, w],
        )
        .unwrap()
    }

    #[test]
    fn params_derived_quantities() {
        let bp = BesovParams::new(2.0, 0.5).unwrap();
        assert_eq!(bp.beta(), 1.0);
        assert_eq!(bp.q_beta(1.0), 2.0);
        assert_eq!(bp.q_star(2.0), Some(4.0));
        assert_eq!(bp.q_star(1.0), None);
        assert!(BesovParams::new(0.5, 0.5).is_err());
        assert!(BesovParams::new(2.0, 1.0).is_err());
    }

    #[test]
    fn besov_two_point_example() {
        let s = two_points(1.0);
        let bp = BesovParams::new(2.0, 0.5).unwrap();
        let f = BoundaryFunction::new(vec![0.0, 1.0]).unwrap();
        assert!((besov_norm(&s, &f, &bp) - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(besov_norm(&s, &f.sub(&f), &bp), 0.0);
        assert!((besov_norm(&s, &f.scaled(-3.0), &bp) - 3.0 * 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn dyadic_single_level_by_hand() {
        // levels with 1 < 2^-n: every ball is the whole space, term = 2 * 0.5 / 2^(-n)
        let s = two_points(1.0);
        let bp = BesovParams::new(2.0, 0.5).unwrap();
        let f = BoundaryFunction::new(vec![0.0, 1.0]).unwrap();
        let expect: f64 = (0..200).map(|k| 0.5f64.powi(k)).sum::<f64>() * 0.5;
        let got = besov_norm_dyadic(&s, &f, &bp, 2.0).unwrap();
        assert!((got * got - expect).abs() < 1e-12 * expect);
        assert!(besov_norm_dyadic(&s, &f, &bp, 1.0).is_err());
    }

    #[test]
    fn lp_norms_by_hand() {
        let s = two_points(0.5);
        let f = BoundaryFunction::new(vec![0.0, 1.0]).unwrap();
        assert!((lp_norm_boundary(&s, &f, 2.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(lp_norm_boundary(&s, &f.scaled(0.0), 2.0), 0.0);
    }

    fn grid_graph(n: usize) -> UniformizedGraph {
        let s = generate_space(&SpaceKind::IntervalGrid { n }).unwrap();
        let p = FillingParams::with_default_levels(&s, 2.0, 4.0).unwrap();
        uniformize(build(Arc::new(s), &p).unwrap()).unwrap()
    }

    #[test]
    fn graph_norms() {
        let ug = grid_graph(8);
        let mu = lift_measure(&ug, 1.0).unwrap();
        let one = GraphFunction::from_fn(&ug, |_| 1.0);
        assert_eq!(dirichlet_norm(&ug, &mu, &one, 2.0), 0.0);
        let t = lp_norm_graph(&ug, &mu, &one, 2.0);
        assert!((t * t - mu.total_mass()).abs() < 1e-10 * mu.total_mass());
        let k = ug
            .links()
            .iter()
            .position(|l| l.kind == LinkKind::Horizontal)
            .unwrap();
        let l = *ug.link(k);
        let u = GraphFunction::from_fn(&ug, |x| if x == l.b { 1.0 } else { 0.0 });
        let m = mu.integrate_link(&ug, k, 0.0, l.rho_length, 0.0, 1.0, |x| x * x);
        assert!((m - mu.link_mass(k) / 3.0).abs() < 1e-12 * mu.link_mass(k));
        let g = edge_gradient(&ug, &u, k);
        assert!((g - 1.0 / l.rho_length).abs() < 1e-12);
        let d = dirichlet_norm(&ug, &mu, &u.scaled(2.0), 2.0);
        assert!((d - 2.0 * dirichlet_norm(&ug, &mu, &u, 2.0)).abs() < 1e-12 * d);
    }

    #[test]
    fn single_edge_dirichlet_example() {
        let g = [2.0];
        let ug = grid_graph(2);
        let mu = lift_measure(&ug, 1.0).unwrap();
        let v = (4.0 * mu.link_mass(0)).sqrt();
        assert!((gradient_lp(&mu, &g, 2.0) - v).abs() < 1e-15);
    }

    #[test]
    fn partition_checks_on_grid16() {
        let ug = grid_graph(16);
        let g = ug.filling();
        for n in g.params().levels() {
            let pu = partition_of_unity(g, n).unwrap();
            let c = pu.check(g.space());
            assert!(c.max_sum_error < 1e-12);
            assert_eq!(c.support_violations, 0);
            assert!(c.lipschitz_constant.is_finite());
        }
        let top = partition_of_unity(g, g.params().n_min).unwrap();
        assert_eq!(top.centers.len(), 1);
        assert!(top.row(0).iter().all(|&x| x == 1.0));
        assert!(partition_of_unity(g, g.params().n_max + 1).is_err());
    }

    #[test]
    fn det_sum_is_order_stable() {
        let a = det_sum(5000, |i| (i as f64).sin());
        let b = det_sum(5000, |i| (i as f64).sin());
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
