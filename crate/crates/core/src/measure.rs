//! The lifted measures `mu_hat`, `mu` and `mu_beta` on the uniformized graph.
//!
//! Along a vertical or tail link the height grows linearly in the unit
//! parameter while rho-arclength `s` from the coarse end satisfies
//! `q = alpha^-(h - level) = 1 - s alpha^level ln(alpha)`. The mass between two
//! arclengths is therefore `K (q0^beta - q1^beta)` with
//! `K = w alpha^(-beta level) / (beta ln alpha)`, which every routine below uses.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filling::Hull;
use crate::fit::least_squares;
use crate::quad;
use crate::report::ReportTable;
use crate::uniformize::{LinkKind, UniformizedGraph};

#[derive(Debug, Clone)]
pub struct LiftedMeasure {
    beta: f64,
    alpha: f64,
    vertex_mass: Vec<f64>,
    /// `mu_hat(a) + mu_hat(b)`; tails use `2 mu_hat(a)`.
    link_weight: Vec<f64>,
    /// Horizontal: total mass. Rising: the constant `K` above.
    link_scale: Vec<f64>,
    /// `alpha^level ln(alpha)`, the rate at which `q` falls with `s`.
    link_rate: Vec<f64>,
    link_mass: Vec<f64>,
}

pub fn lift_measure(ug: &UniformizedGraph, beta: f64) -> Result<LiftedMeasure> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParams(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let g = ug.filling();
    let space = g.space();
    let alpha = ug.alpha();
    let ln_a = alpha.ln();
    let vertex_mass: Vec<f64> = (0..g.num_vertices())
        .map(|v| g.ball(v).iter().map(|&z| space.weight(z)).sum())
        .collect();
    let node_mass = |x: usize| match ug.point_of(x) {
        Some(z) => space.weight(z),
        None => vertex_mass[x],
    };
    let nl = ug.links().len();
    let mut link_weight = Vec::with_capacity(nl);
    let mut link_scale = Vec::with_capacity(nl);
    let mut link_rate = Vec::with_capacity(nl);
    let mut link_mass = Vec::with_capacity(nl);
    for l in ug.links() {
        // the virtual continuation below a tail keeps mu_hat of its top vertex
        let w = match l.kind {
            LinkKind::Tail => 2.0 * vertex_mass[l.a],
            _ => node_mass(l.a) + node_mass(l.b),
        };
        let decay = alpha.powf(-beta * l.level as f64);
        let rate = alpha.powi(l.level) * ln_a;
        let (scale, mass) = match l.kind {
            LinkKind::Horizontal => (w * decay, w * decay),
            LinkKind::Vertical => {
                let k = w * decay / (beta * ln_a);
                (k, k * (1.0 - alpha.powf(-beta)))
            }
            LinkKind::Tail => {
                let k = w * decay / (beta * ln_a);
                (k, k)
            }
        };
        link_weight.push(w);
        link_scale.push(scale);
        link_rate.push(rate);
        link_mass.push(mass);
    }
    Ok(LiftedMeasure {
        beta,
        alpha,
        vertex_mass,
        link_weight,
        link_scale,
        link_rate,
        link_mass,
    })
}

impl LiftedMeasure {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `mu_hat(v) = nu(B(v))`.
    pub fn vertex_mass(&self, v: usize) -> f64 {
        self.vertex_mass[v]
    }

    pub fn vertex_masses(&self) -> &[f64] {
        &self.vertex_mass
    }

    pub fn link_weight(&self, k: usize) -> f64 {
        self.link_weight[k]
    }

    pub fn link_mass(&self, k: usize) -> f64 {
        self.link_mass[k]
    }

    pub fn link_masses(&self) -> &[f64] {
        &self.link_mass
    }

    pub fn total_mass(&self) -> f64 {
        self.link_mass.iter().sum()
    }

    #[inline]
    fn q(&self, k: usize, s: f64) -> f64 {
        (1.0 - s * self.link_rate[k]).max(0.0)
    }

    /// Mass of the piece of link `k` between rho-arclengths `s0 <= s1`
    /// measured from `a`.
    pub fn mass_between(&self, ug: &UniformizedGraph, k: usize, s0: f64, s1: f64) -> f64 {
        let l = ug.link(k);
        let (s0, s1) = (s0.max(0.0), s1.min(l.rho_length));
        if s1 <= s0 {
            return 0.0;
        }
        match l.kind {
            LinkKind::Horizontal => self.link_scale[k] * (s1 - s0) / l.rho_length,
            _ => {
                let b = self.beta;
                let hi = self.q(k, s0).powf(b);
                let lo = if s1 >= l.rho_length && l.kind == LinkKind::Tail {
                    0.0
                } else {
                    self.q(k, s1).powf(b)
                };
                self.link_scale[k] * (hi - lo)
            }
        }
    }

    /// Mass of the half (in the unit parameter) of filling edge `k` that
    /// touches `v`.
    pub fn half_edge_mass(&self, ug: &UniformizedGraph, k: usize, v: usize) -> f64 {
        let l = ug.link(k);
        match l.kind {
            LinkKind::Horizontal => 0.5 * self.link_mass[k],
            _ => {
                let mid = self.alpha.powf(-0.5 * self.beta);
                if v == l.a {
                    self.link_scale[k] * (1.0 - mid)
                } else {
                    self.link_scale[k] * (mid - self.alpha.powf(-self.beta))
                }
            }
        }
    }

    /// `(link, mass)` pieces of a hull: full edges, qualifying halves, and
    /// the tails hanging off hull vertices at the finest level.
    pub fn hull_pieces(&self, ug: &UniformizedGraph, hull: &Hull) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = hull
            .full_edges
            .iter()
            .map(|&k| (k, self.link_mass[k]))
            .collect();
        out.extend(
            hull.half_edges
                .iter()
                .map(|&(k, v)| (k, self.half_edge_mass(ug, k, v))),
        );
        let top = ug.params().n_max;
        for &v in &hull.vertices {
            if ug.filling().height(v) == top {
                out.extend(ug.tails(v).map(|k| (k, self.link_mass[k])));
            }
        }
        out
    }

    pub fn hull_mass(&self, ug: &UniformizedGraph, hull: &Hull) -> f64 {
        self.hull_pieces(ug, hull).iter().map(|p| p.1).sum()
    }

    /// Pieces `(link, s0, s1)` of the open rho-ball `B(center, r)`.
    pub fn ball_pieces(&self, ug: &UniformizedGraph, center: usize, r: f64) -> Vec<(usize, f64, f64)> {
        let dist = ug.distances_from(center);
        let mut out = Vec::new();
        for (k, l) in ug.links().iter().enumerate() {
            let len = l.rho_length;
            let (da, db) = (dist[l.a], dist[l.b]);
            let i1 = if r > da { Some((0.0, (r - da).min(len))) } else { None };
            let i2 = if r > db { Some(((len - (r - db)).max(0.0), len)) } else { None };
            match (i1, i2) {
                (Some(a), Some(b)) if a.1 >= b.0 => out.push((k, 0.0, len)),
                (a, b) => {
                    for (s0, s1) in [a, b].into_iter().flatten() {
                        if s1 > s0 {
                            out.push((k, s0, s1));
                        }
                    }
                }
            }
        }
        out
    }

    /// `mu_beta({x : d_rho(center, x) < r})`.
    pub fn ball_mass_rho(&self, ug: &UniformizedGraph, center: usize, r: f64) -> f64 {
        self.ball_pieces(ug, center, r)
            .into_iter()
            .map(|(k, s0, s1)| self.mass_between(ug, k, s0, s1))
            .sum()
    }

    /// Mass of the links with an interior endpoint at level `n`.
    pub fn level_mass(&self, ug: &UniformizedGraph, n: i32) -> f64 {
        ug.links()
            .iter()
            .enumerate()
            .filter(|(_, l)| ug.height(l.a) == Some(n) || ug.height(l.b) == Some(n))
            .map(|(k, _)| self.link_mass[k])
            .sum()
    }

    /// `max mu_hat(v) / mu_hat(w)` over filling edges.
    pub fn max_adjacent_ratio(&self, ug: &UniformizedGraph) -> f64 {
        ug.filling()
            .edges()
            .iter()
            .map(|e| {
                let (x, y) = (self.vertex_mass[e.a], self.vertex_mass[e.b]);
                (x / y).max(y / x)
            })
            .fold(1.0, f64::max)
    }

    /// `int F(u) d mu_beta` over the piece `[s0, s1]` of link `k`, where `u` is
    /// linear in rho-arclength with end values `ua`, `ub`. Composite
    /// Gauss–Legendre, split where `u` changes sign.
    pub fn integrate_link<F: Fn(f64) -> f64>(
        &self,
        ug: &UniformizedGraph,
        k: usize,
        s0: f64,
        s1: f64,
        ua: f64,
        ub: f64,
        f: F,
    ) -> f64 {
        let l = ug.link(k);
        let len = l.rho_length;
        let (s0, s1) = (s0.max(0.0), s1.min(len));
        if s1 <= s0 {
            return 0.0;
        }
        let u = |s: f64| ua + (ub - ua) * s / len;
        let mut cuts = vec![s0];
        if ua != ub {
            let root = ua / (ua - ub) * len;
            if root > s0 && root < s1 {
                cuts.push(root);
            }
        }
        cuts.push(s1);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            total += match l.kind {
                LinkKind::Horizontal => {
                    let dens = self.link_scale[k] / len;
                    dens * quad::integrate(|s| f(u(s)), a, b)
                }
                _ => {
                    let beta = self.beta;
                    let rate = self.link_rate[k];
                    let s_of_y = |y: f64| (1.0 - y.powf(1.0 / beta)) / rate;
                    let y_hi = self.q(k, a).powf(beta);
                    let y_lo = self.q(k, b).powf(beta);
                    let g = |y: f64| f(u(s_of_y(y).clamp(a, b)));
                    self.link_scale[k] * graded(g, y_lo, y_hi)
                }
            };
        }
        total
    }
}

/// `int_lo^hi g`, geometrically refined toward zero when `lo` is tiny.
fn graded<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo > 1e-3 * hi {
        return quad::integrate(&g, lo, hi);
    }
    let mut total = 0.0;
    let mut top = hi;
    for _ in 0..60 {
        let bottom = 0.5 * top;
        if bottom <= lo {
            break;
        }
        total += quad::integrate(&g, bottom, top);
        top = bottom;
    }
    total + quad::integrate(&g, lo, top)
}

/// Deterministic `(center, r)` samples: up to `max_centers` boundary nodes and
/// as many interior vertices, radii `D 2^-k` for `k = 1..=levels` where `D` is
/// the rho-diameter of the boundary.
pub fn sweep_samples(ug: &UniformizedGraph, max_centers: usize, levels: u32) -> Vec<(usize, f64)> {
    let nb = ug.num_boundary();
    let ni = ug.num_interior();
    let big = boundary_rho_diameter(ug);
    let mut centers: Vec<usize> = stride(nb, max_centers)
        .into_iter()
        .map(|z| ug.boundary_node(z))
        .collect();
    centers.extend(stride(ni, max_centers));
    let mut out = Vec::new();
    for c in centers {
        for k in 1..=levels {
            out.push((c, big * 0.5f64.powi(k as i32)));
        }
    }
    out
}

/// An upper bound for the rho-diameter: twice the largest distance from the
/// root.
pub fn rho_diameter_bound(ug: &UniformizedGraph) -> f64 {
    let d = ug.distances_from(0);
    2.0 * d.iter().cloned().fold(0.0, f64::max)
}

/// `max d_rho(z, w)` over boundary points.
pub fn boundary_rho_diameter(ug: &UniformizedGraph) -> f64 {
    let ni = ug.num_interior();
    (0..ug.num_boundary())
        .into_par_iter()
        .map(|z| {
            ug.distances_from(ug.boundary_node(z))[ni..]
                .iter()
                .cloned()
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn stride(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    (0..cap).map(|i| i * n / cap).collect()
}

/// `mu_beta(B(x, 2r)) / mu_beta(B(x, r))` per sample.
pub fn doubling_sweep(mu: &LiftedMeasure, ug: &UniformizedGraph, samples: &[(usize, f64)]) -> ReportTable {
    let rows: Vec<(usize, f64, f64, f64)> = samples
        .par_iter()
        .map(|&(x, r)| (x, r, mu.ball_mass_rho(ug, x, 2.0 * r), mu.ball_mass_rho(ug, x, r)))
        .collect();
    let mut t = ReportTable::new("doubling");
    for (x, r, big, small) in rows {
        t.push(format!("x{x}"), x as f64, r, big, small);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub order: f64,
    pub constant: f64,
    pub pairs: usize,
}

/// Worst-case order `Q'` in `mu(B(x,r'))/mu(B(x,r)) >= C^-1 (r'/r)^Q'`.
///
/// Samples are grouped by center; every pair of radii of one center gives a
/// point `(ln(r/r'), ln(mu(B_r)/mu(B_r')))`. Points are bucketed by the radius
/// ratio, the largest growth in each bucket forms the upper envelope, and
/// `Q'` is the least-squares slope of that envelope. `C` is the smallest
/// constant making every pair satisfy the bound with `Q'`.
pub fn lower_decay_fit(mu: &LiftedMeasure, ug: &UniformizedGraph, samples: &[(usize, f64)]) -> Result<DecayFit> {
    let masses: Vec<f64> = samples
        .par_iter()
        .map(|&(x, r)| mu.ball_mass_rho(ug, x, r))
        .collect();
    let mut pts = Vec::new();
    for i in 0..samples.len() {
        for j in 0..samples.len() {
            let ((x, r), (y, rp)) = (samples[i], samples[j]);
            if x == y && rp < r && masses[j] > 0.0 {
                pts.push(((r / rp).ln(), (masses[i] / masses[j]).ln()));
            }
        }
    }
    let mut envelope: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for &(t, y) in &pts {
        let e = envelope.entry((t * 1e6).round() as i64).or_insert((t, y));
        if y > e.1 {
            *e = (t, y);
        }
    }
    let (ts, ys): (Vec<f64>, Vec<f64>) = envelope.values().cloned().unzip();
    let fit = least_squares(&ts, &ys)
        .ok_or_else(|| Error::Degenerate("not enough radius pairs for a decay fit".into()))?;
    let order = fit.slope;
    let worst = pts
        .iter()
        .map(|&(t, y)| y - order * t)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFit {
        order,
        constant: worst.exp().max(1.0),
        pairs: pts.len(),
    })
}
