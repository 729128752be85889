//! The inequality harness: test-function corpora, ball samples, every
//! comparability check, and the report bundle.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filling::{build, FillingGraph, FillingParams};
use crate::fit::{least_squares, SlopeFit};
use crate::funcspace::{
    besov_norm_dyadic, besov_norms, dirichlet_norm, edge_gradients, lp_norm_boundary,
    BesovParams, BoundaryFunction, GraphFunction,
};
use crate::measure::{self, lift_measure, LiftedMeasure};
use crate::report::{fmt12, ReportTable};
use crate::space::{generate_space, load_space, sample_indices, ExponentEstimates, PointCloudSpace, SpaceFormat, SpaceKind};
use crate::traceext::{
    check_hyperbolic_upper_gradient, hajlasz_gradients, lp_norm_above, poisson_extension, trace,
    Partitions,
};
use crate::uniformize::{uniformize, LinkKind, UniformizedGraph};

/// Everything built from one space and one set of parameters.
pub struct Pipeline {
    pub space: Arc<PointCloudSpace>,
    pub ug: UniformizedGraph,
    pub mu: LiftedMeasure,
    pub pous: Partitions,
    pub besov: BesovParams,
}

impl Pipeline {
    pub fn build(space: Arc<PointCloudSpace>, params: &FillingParams, besov: BesovParams) -> Result<Self> {
        let ug = uniformize(build(space.clone(), params)?)?;
        let mu = lift_measure(&ug, besov.beta())?;
        let pous = Partitions::build(ug.filling())?;
        Ok(Pipeline {
            space,
            ug,
            mu,
            pous,
            besov,
        })
    }

    pub fn graph(&self) -> &FillingGraph {
        self.ug.filling()
    }

    pub fn params(&self) -> &FillingParams {
        self.ug.params()
    }

    pub fn p(&self) -> f64 {
        self.besov.p
    }

    pub fn extend(&self, f: &BoundaryFunction) -> GraphFunction {
        poisson_extension(&self.ug, f).expect("corpus matches space").pf
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedFunction {
    pub name: String,
    pub f: BoundaryFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub bumps: usize,
    pub nets: usize,
    pub rough: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            bumps: 4,
            nets: 4,
            rough: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub functions: Vec<NamedFunction>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a NamedFunction> + 'a {
        self.functions.iter().filter(move |f| f.name.starts_with(prefix))
    }
}

/// Unit-period triangle wave with values in `[0, 1]`.
fn triangle(t: f64) -> f64 {
    2.0 * (t - t.floor() - 0.5).abs()
}

fn random_signs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Constants, coordinates, Lipschitz bumps, random net-valued functions and
/// Hölder-rough sums `sum_n alpha^(-theta n) tri(alpha^n d(x, c_n) / diam + phase_n)`
/// with random centers and phases.
pub fn build_corpus(g: &FillingGraph, pous: &Partitions, theta: f64, seed: u64, spec: &CorpusSpec) -> Corpus {
    let space = g.space();
    let params = g.params();
    let np = space.len();
    let diam = space.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut functions = vec![NamedFunction {
        name: "const".into(),
        f: BoundaryFunction::from_fn(space, |_| 1.0),
    }];
    let coord = match space.coords() {
        Some(c) => BoundaryFunction::from_fn(space, |z| c[z][0]),
        None => BoundaryFunction::from_fn(space, |z| space.d(z, 0)),
    };
    functions.push(NamedFunction {
        name: "coord".into(),
        f: coord,
    });
    functions.push(NamedFunction {
        name: "dist_mid".into(),
        f: BoundaryFunction::from_fn(space, |z| space.d(z, np / 2)),
    });
    for j in 0..spec.bumps {
        let c = rng.gen_range(0..np);
        let r = diam * rng.gen_range(0.1..0.4);
        functions.push(NamedFunction {
            name: format!("bump{j}"),
            f: BoundaryFunction::from_fn(space, |z| (1.0 - space.d(z, c) / r).max(0.0)),
        });
    }
    let sat = crate::filling::saturation_level(space, params.alpha).unwrap_or(params.n_max);
    let lo = first_unsaturated_level(space, params);
    let net_levels: Vec<i32> = params
        .levels()
        .filter(|&n| n >= lo && n <= sat && pous.level(n).vertices.len() >= 2)
        .collect();
    for j in 0..spec.nets {
        let Some(&n) = net_levels.get(j * net_levels.len() / spec.nets.max(1)) else {
            break;
        };
        let pu = pous.level(n);
        let mut coeffs = random_signs(&mut rng, pu.vertices.len());
        if coeffs.iter().all(|&c| c == coeffs[0]) {
            coeffs[0] = -coeffs[0];
        }
        functions.push(NamedFunction {
            name: format!("net{j}"),
            f: pu.combine(&coeffs),
        });
    }
    for j in 0..spec.rough {
        let mut values = vec![0.0; np];
        for n in params.levels() {
            let c = rng.gen_range(0..np);
            let phase: f64 = rng.gen();
            let (amp, freq) = (params.alpha.powf(-theta * n as f64), params.alpha.powi(n) / diam);
            for (x, v) in values.iter_mut().enumerate() {
                *v += amp * triangle(freq * space.d(x, c) + phase);
            }
        }
        functions.push(NamedFunction {
            name: format!("rough{j}"),
            f: BoundaryFunction { values },
        });
    }
    Corpus { functions }
}

/// Centers from a deterministic stride over the points, radii
/// `diam 2^-k` for `k = 1..=radii`.
pub fn ball_samples(space: &PointCloudSpace, radii: u32, max_centers: usize) -> Vec<(usize, f64)> {
    let diam = space.diameter();
    let mut out = Vec::new();
    for z in sample_indices(space.len(), max_centers) {
        for k in 1..=radii {
            out.push((z, diam * 0.5f64.powi(k as i32)));
        }
    }
    out
}

/// Geometric radii `diam 2^-k` down to the smallest distance.
pub fn default_scale_grid(space: &PointCloudSpace) -> Vec<f64> {
    let diam = space.diameter();
    let floor = space.min_positive_distance().unwrap_or(diam);
    let mut out = Vec::new();
    let mut r = 0.5 * diam;
    while r >= floor && out.len() < 40 {
        out.push(r);
        r *= 0.5;
    }
    if out.len() < 2 {
        out = vec![0.5 * diam, diam];
    }
    out
}

/// Per-ball data shared by all functions.
struct BallGeom {
    z: usize,
    r: f64,
    members: Vec<usize>,
    hull: Vec<(usize, f64)>,
    hull_mass: f64,
}

fn ball_geometry(p: &Pipeline, balls: &[(usize, f64)]) -> Vec<BallGeom> {
    balls
        .par_iter()
        .map(|&(z, r)| {
            let members = p.space.ball(z, r);
            let hull = p.graph().hull(z, r);
            let pieces = p.mu.hull_pieces(&p.ug, &hull);
            let hull_mass = pieces.iter().map(|q| q.1).sum();
            BallGeom {
                z,
                r,
                members,
                hull: pieces,
                hull_mass,
            }
        })
        .collect()
}

/// `|a - b|` with cancellation noise flushed to zero.
fn dev(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d <= 1e-12 * a.abs().max(b.abs()) {
        0.0
    } else {
        d
    }
}

fn nu_mean(space: &PointCloudSpace, members: &[usize], f: impl Fn(usize) -> f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &x in members {
        num += f(x) * space.weight(x);
        den += space.weight(x);
    }
    num / den
}

/// `mu_beta` mean of `u` over the rho-ball and its mass.
fn rho_mean(p: &Pipeline, pieces: &[(usize, f64, f64)], u: &GraphFunction) -> (f64, f64) {
    let (mut num, mut den) = (0.0, 0.0);
    for &(k, s0, s1) in pieces {
        let l = p.ug.link(k);
        num += p
            .mu
            .integrate_link(&p.ug, k, s0, s1, u.values[l.a], u.values[l.b], |x| x);
        den += p.mu.mass_between(&p.ug, k, s0, s1);
    }
    (num / den, den)
}

/// `mean of g^p` over rho-ball pieces.
fn rho_grad_mean(p: &Pipeline, pieces: &[(usize, f64, f64)], g: &[f64], pw: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &(k, s0, s1) in pieces {
        let m = p.mu.mass_between(&p.ug, k, s0, s1);
        if g[k] > 0.0 {
            num += g[k].powf(pw) * m;
        }
        den += m;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Smallest `C` with `C^-1 B_rho(z, r) ⊂ H^B ⊂ C B_rho(z, r)` over the
/// sampled balls, measured on vertices, half-edge midpoints and tails.
pub fn hull_approximation_constant(ug: &UniformizedGraph, balls: &[(usize, f64)]) -> f64 {
    let g = ug.filling();
    let top = ug.params().n_max;
    balls
        .par_iter()
        .map(|&(z, r)| {
            let hull = g.hull(z, r);
            if hull.is_empty() {
                return 1.0;
            }
            let dist = ug.distances_from(ug.boundary_node(z));
            let half = |k: usize, v: usize| {
                let l = ug.link(k);
                if l.kind == LinkKind::Horizontal {
                    return 0.5 * l.rho_length;
                }
                let a = ug.alpha();
                let near_a = a.powi(-l.level) * (1.0 - a.powf(-0.5)) / a.ln();
                if v == l.a {
                    near_a
                } else {
                    l.rho_length - near_a
                }
            };
            let mut outer: f64 = 0.0;
            for &v in &hull.vertices {
                outer = outer.max(dist[v]);
            }
            for &(k, v) in &hull.half_edges {
                outer = outer.max(dist[v] + half(k, v));
            }
            let mut inner = f64::INFINITY;
            for (k, e) in g.edges().iter().enumerate() {
                match (hull.contains(e.a), hull.contains(e.b)) {
                    (true, true) => {}
                    (true, false) => inner = inner.min((dist[e.a] + half(k, e.a)).min(dist[e.b])),
                    (false, true) => inner = inner.min((dist[e.b] + half(k, e.b)).min(dist[e.a])),
                    (false, false) => inner = inner.min(dist[e.a].min(dist[e.b])),
                }
            }
            for v in g.level_range(top) {
                let tails: Vec<usize> = ug.tails(v).collect();
                if hull.contains(v) {
                    for k in tails {
                        outer = outer.max(dist[ug.link(k).b]);
                    }
                } else {
                    inner = inner.min(dist[v]);
                }
            }
            let c_out = outer / r;
            let c_in = if inner.is_finite() { r / inner } else { 1.0 };
            c_out.max(c_in).max(1.0)
        })
        .reduce(|| 1.0, f64::max)
}

/// `avg_B |Tu - (Tu)_B|^p dnu` against `r^p avg_{H^B} g^p dmu_beta`.
pub fn check_poincare_trace(
    p: &Pipeline,
    corpus: &[(String, GraphFunction)],
    balls: &[(usize, f64)],
) -> ReportTable {
    let geo = ball_geometry(p, balls);
    let pw = p.p();
    let top = p.params().n_max;
    let mut t = ReportTable::new("poincare_trace");
    let rows: Vec<Vec<(String, usize, f64, f64, f64)>> = corpus
        .par_iter()
        .map(|(name, u)| {
            let tu = crate::traceext::trace_level(&p.pous, u, top);
            let g = edge_gradients(&p.ug, u);
            geo.iter()
                .filter(|b| b.hull_mass > 0.0)
                .map(|b| {
                    let m = nu_mean(&p.space, &b.members, |x| tu.values[x]);
                    let lhs = nu_mean(&p.space, &b.members, |x| dev(tu.values[x], m).powf(pw));
                    let gm: f64 = b
                        .hull
                        .iter()
                        .filter(|q| g[q.0] > 0.0)
                        .map(|&(k, mass)| g[k].powf(pw) * mass)
                        .sum::<f64>()
                        / b.hull_mass;
                    (name.clone(), b.z, b.r, lhs, b.r.powf(pw) * gm)
                })
                .collect()
        })
        .collect();
    for (name, z, r, lhs, rhs) in rows.into_iter().flatten() {
        t.push(format!("{name}@{z}"), z as f64, r, lhs, rhs);
    }
    let empty = geo.iter().filter(|b| b.hull_mass == 0.0).count();
    if empty > 0 {
        t.note(format!("{empty} balls skipped: empty hull"));
    }
    t
}

/// `avg_B |f - (Pf)_{B_rho}|^p dnu` against `r^p avg_{C B_rho} g^p dmu_beta`.
pub fn check_extension_poincare(
    p: &Pipeline,
    corpus: &[NamedFunction],
    balls: &[(usize, f64)],
    c_hull: f64,
) -> ReportTable {
    let pw = p.p();
    let mut t = ReportTable::new("extension_poincare");
    t.note(format!("enlargement constant C = {}", fmt12(c_hull)));
    let ext: Vec<(GraphFunction, Vec<f64>)> = corpus
        .par_iter()
        .map(|nf| {
            let u = p.extend(&nf.f);
            let g = edge_gradients(&p.ug, &u);
            (u, g)
        })
        .collect();
    let rows: Vec<Vec<(usize, usize, f64, f64, f64)>> = balls
        .par_iter()
        .map(|&(z, r)| {
            let bz = p.ug.boundary_node(z);
            let members = p.space.ball(z, r);
            let small = p.mu.ball_pieces(&p.ug, bz, r);
            let big = p.mu.ball_pieces(&p.ug, bz, c_hull * r);
            ext.iter()
                .enumerate()
                .map(|(i, (u, g))| {
                    let (m, _) = rho_mean(p, &small, u);
                    let f = &corpus[i].f;
                    let lhs = nu_mean(&p.space, &members, |x| dev(f.values[x], m).powf(pw));
                    let rhs = r.powf(pw) * rho_grad_mean(p, &big, g, pw);
                    (i, z, r, lhs, rhs)
                })
                .collect()
        })
        .collect();
    for (i, z, r, lhs, rhs) in rows.into_iter().flatten() {
        t.push(format!("{}@{z}", corpus[i].name), z as f64, r, lhs, rhs);
    }
    t
}

/// Pairs of `members` by deterministic stride, at most `cap`.
fn member_pairs(members: &[usize], cap: usize) -> Vec<(usize, usize)> {
    let mut all = Vec::new();
    for (i, &x) in members.iter().enumerate() {
        for &y in &members[i + 1..] {
            all.push((x, y));
        }
    }
    sample_indices(all.len(), cap).into_iter().map(|i| all[i]).collect()
}

/// `|f(x) - f(y)|` against `r^(Q_beta/p) d^(1 - Q_beta/p) (avg_{4 B_rho} g^p)^(1/p)`.
/// Refuses unless `p > Q_beta`.
pub fn check_holder(
    p: &Pipeline,
    corpus: &[NamedFunction],
    balls: &[(usize, f64)],
    q: f64,
    pairs_per_ball: usize,
) -> Result<ReportTable> {
    let pw = p.p();
    let qb = p.besov.q_beta(q);
    if pw <= qb {
        return Err(Error::Hypothesis(format!(
            "assume that p > Q_beta: p = {pw}, Q_beta = {qb}"
        )));
    }
    let ext: Vec<Vec<f64>> = corpus
        .par_iter()
        .map(|nf| edge_gradients(&p.ug, &p.extend(&nf.f)))
        .collect();
    let e = qb / pw;
    let rows: Vec<Vec<(usize, usize, f64, f64, f64)>> = balls
        .par_iter()
        .map(|&(z, r)| {
            let members = p.space.ball(z, r);
            let pairs = member_pairs(&members, pairs_per_ball);
            let big = p.mu.ball_pieces(&p.ug, p.ug.boundary_node(z), 4.0 * r);
            let mut out = Vec::new();
            for (i, g) in ext.iter().enumerate() {
                let gm = rho_grad_mean(p, &big, g, pw).powf(1.0 / pw);
                let f = &corpus[i].f;
                for &(x, y) in &pairs {
                    let d = p.space.d(x, y);
                    let lhs = dev(f.values[x], f.values[y]);
                    out.push((i, z, r, lhs, r.powf(e) * d.powf(1.0 - e) * gm));
                }
            }
            out
        })
        .collect();
    let mut t = ReportTable::new("holder");
    for (i, z, r, lhs, rhs) in rows.into_iter().flatten() {
        t.push(format!("{}@{z}", corpus[i].name), z as f64, r, lhs, rhs);
    }
    Ok(t)
}

/// `(avg_B |f - u_{B_rho}|^{Q*})^{1/Q*}` against `diam(B) (avg_{2 B_rho} g^p)^(1/p)`.
/// Refuses unless `p theta < Q` and the reverse-doubling exponent is positive.
pub fn check_sobolev_qstar(
    p: &Pipeline,
    corpus: &[NamedFunction],
    balls: &[(usize, f64)],
    est: &ExponentEstimates,
) -> Result<ReportTable> {
    let pw = p.p();
    let qs = p.besov.q_star(est.q).ok_or_else(|| {
        Error::Hypothesis(format!(
            "p theta < Q fails: p theta = {}, Q = {}",
            pw * p.besov.theta,
            est.q
        ))
    })?;
    if !(est.eta > 0.0) {
        return Err(Error::Hypothesis("reverse doubling exponent is not positive".into()));
    }
    let ext: Vec<(GraphFunction, Vec<f64>)> = corpus
        .par_iter()
        .map(|nf| {
            let u = p.extend(&nf.f);
            let g = edge_gradients(&p.ug, &u);
            (u, g)
        })
        .collect();
    let rows: Vec<Vec<(usize, usize, f64, f64, f64)>> = balls
        .par_iter()
        .map(|&(z, r)| {
            let bz = p.ug.boundary_node(z);
            let members = p.space.ball(z, r);
            let mut diam: f64 = 0.0;
            for &x in &members {
                for &y in &members {
                    diam = diam.max(p.space.d(x, y));
                }
            }
            let small = p.mu.ball_pieces(&p.ug, bz, r);
            let big = p.mu.ball_pieces(&p.ug, bz, 2.0 * r);
            ext.iter()
                .enumerate()
                .map(|(i, (u, g))| {
                    let (m, _) = rho_mean(p, &small, u);
                    let f = &corpus[i].f;
                    let lhs = nu_mean(&p.space, &members, |x| dev(f.values[x], m).powf(qs))
                        .powf(1.0 / qs);
                    let rhs = diam * rho_grad_mean(p, &big, g, pw).powf(1.0 / pw);
                    (i, z, r, lhs, rhs)
                })
                .collect()
        })
        .collect();
    let mut t = ReportTable::new("sobolev_qstar");
    t.note(format!("Q* = {}", fmt12(qs)));
    for (i, z, r, lhs, rhs) in rows.into_iter().flatten() {
        t.push(format!("{}@{z}", corpus[i].name), z as f64, r, lhs, rhs);
    }
    Ok(t)
}

/// `sup_{s <= r, s = alpha^-j} sup_{x in B(z,r)} s^(1 - beta/p) nu(B(x,s))^(1/q - 1/p)`.
pub fn compute_theta_q(
    space: &PointCloudSpace,
    besov: &BesovParams,
    alpha: f64,
    z: usize,
    r: f64,
    q: f64,
) -> Result<f64> {
    if !(q > besov.p) {
        return Err(Error::InvalidParams(format!(
            "q must exceed p = {}, got {q}",
            besov.p
        )));
    }
    let members = space.ball(z, r);
    let floor = space.min_positive_distance().unwrap_or(r).min(r) / alpha;
    let e1 = 1.0 - besov.beta() / besov.p;
    let e2 = 1.0 / q - 1.0 / besov.p;
    let mut j = (-(r.ln()) / alpha.ln()).ceil() as i64;
    while alpha.powf(-(j as f64)) > r {
        j += 1;
    }
    let mut best: f64 = 0.0;
    loop {
        let s = alpha.powf(-(j as f64));
        if s < floor {
            break;
        }
        for &x in &members {
            let m = space.ball_mass(x, s);
            best = best.max(s.powf(e1) * m.powf(e2));
        }
        j += 1;
    }
    if members.is_empty() || best == 0.0 {
        // a ball below every sampled scale: the single smallest admissible term
        let s = alpha.powf(-(j as f64)).min(r);
        best = s.powf(e1) * space.weight(z).powf(e2);
    }
    Ok(best)
}

/// Per-function remainders `||T(Pf) - T_n(Pf)||_p` against
/// `alpha^((beta/p - 1) n)`, with a log-linear fit over `fit_levels`.
pub fn trace_decay(
    p: &Pipeline,
    corpus: &[NamedFunction],
    fit_levels: RangeInclusive<i32>,
) -> Result<(ReportTable, Vec<(String, SlopeFit)>)> {
    let params = *p.params();
    let rate = p.besov.beta() / p.p() - 1.0;
    let results: Vec<Result<(String, Vec<(i32, f64)>)>> = corpus
        .par_iter()
        .map(|nf| {
            let u = p.extend(&nf.f);
            let tr = trace(&p.ug, &p.pous, &u, params.n_min..=params.n_max, p.p())?;
            Ok((nf.name.clone(), tr.remainders))
        })
        .collect();
    let mut t = ReportTable::new("trace_decay");
    let mut fits = Vec::new();
    for res in results {
        let (name, rem) = res?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for &(n, v) in &rem {
            t.push(format!("{name}@{n}"), n as f64, 0.0, v, params.alpha.powf(rate * n as f64));
            if fit_levels.contains(&n) && v > 0.0 {
                xs.push(n as f64);
                ys.push(v.ln());
            }
        }
        if let Some(fit) = least_squares(&xs, &ys) {
            fits.push((name, fit));
        }
    }
    Ok((t, fits))
}

/// `||T_{n_max}(Pf) - f||_p / ||f||_p`.
pub fn trace_identity(p: &Pipeline, corpus: &[NamedFunction]) -> ReportTable {
    let mut t = ReportTable::new("trace_identity");
    let top = p.params().n_max;
    for nf in corpus {
        let tf = crate::traceext::trace_level(&p.pous, &p.extend(&nf.f), top);
        t.push(
            nf.name.clone(),
            top as f64,
            0.0,
            lp_norm_boundary(&p.space, &tf.sub(&nf.f), p.p()),
            lp_norm_boundary(&p.space, &nf.f, p.p()),
        );
    }
    t
}

/// `||Pf||_{L^p(X_{>=n})}` against `alpha^(-beta n / p) ||f||_p`.
pub fn extension_decay(p: &Pipeline, corpus: &[NamedFunction]) -> ReportTable {
    let params = *p.params();
    let mut t = ReportTable::new("extension_decay");
    let rows: Vec<Vec<(String, i32, f64, f64)>> = corpus
        .par_iter()
        .map(|nf| {
            let u = p.extend(&nf.f);
            let norm = lp_norm_boundary(&p.space, &nf.f, p.p());
            params
                .levels()
                .map(|n| {
                    let lhs = lp_norm_above(&p.ug, &p.mu, &u, n, p.p());
                    let rhs = params.alpha.powf(-p.besov.beta() * n as f64 / p.p()) * norm;
                    (nf.name.clone(), n, lhs, rhs)
                })
                .collect()
        })
        .collect();
    for (name, n, lhs, rhs) in rows.into_iter().flatten() {
        t.push(format!("{name}@{n}"), n as f64, 0.0, lhs, rhs);
    }
    t
}

/// `||Tu||_B / ||u||_D` for `u = Pf`.
pub fn trace_domination(p: &Pipeline, corpus: &[NamedFunction]) -> ReportTable {
    let top = p.params().n_max;
    let us: Vec<GraphFunction> = corpus.iter().map(|nf| p.extend(&nf.f)).collect();
    let traces: Vec<BoundaryFunction> = us
        .iter()
        .map(|u| crate::traceext::trace_level(&p.pous, u, top))
        .collect();
    let bes = besov_norms(&p.space, &traces, &p.besov);
    let mut t = ReportTable::new("trace_domination");
    for ((nf, u), b) in corpus.iter().zip(&us).zip(bes) {
        t.push(nf.name.clone(), 0.0, 0.0, b, dirichlet_norm(&p.ug, &p.mu, u, p.p()));
    }
    t
}

/// `||Pf||_D / ||f||_B`.
pub fn extension_domination(p: &Pipeline, corpus: &[NamedFunction]) -> ReportTable {
    let fs: Vec<BoundaryFunction> = corpus.iter().map(|nf| nf.f.clone()).collect();
    let bes = besov_norms(&p.space, &fs, &p.besov);
    let mut t = ReportTable::new("extension_domination");
    for (nf, b) in corpus.iter().zip(bes) {
        let d = dirichlet_norm(&p.ug, &p.mu, &p.extend(&nf.f), p.p());
        t.push(nf.name.clone(), 0.0, 0.0, d, b);
    }
    t
}

/// Dyadic against double-sum Besov norms.
pub fn besov_equivalence(p: &Pipeline, corpus: &[NamedFunction]) -> Result<ReportTable> {
    let fs: Vec<BoundaryFunction> = corpus.iter().map(|nf| nf.f.clone()).collect();
    let bes = besov_norms(&p.space, &fs, &p.besov);
    let mut t = ReportTable::new("besov_equivalence");
    for (nf, b) in corpus.iter().zip(bes) {
        let d = besov_norm_dyadic(&p.space, &nf.f, &p.besov, p.params().alpha)?;
        t.push(nf.name.clone(), 0.0, 0.0, d, b);
    }
    Ok(t)
}

/// Pairs `x < y` with `alpha^-(k+1) <= d(x,y) < alpha^-k`, at most `cap`.
pub fn annulus_pairs(space: &PointCloudSpace, alpha: f64, k: i32, cap: usize) -> Vec<(usize, usize)> {
    let (lo, hi) = (alpha.powi(-(k + 1)), alpha.powi(-k));
    let mut all = Vec::new();
    for x in 0..space.len() {
        for y in x + 1..space.len() {
            let d = space.d(x, y);
            if d >= lo && d < hi {
                all.push((x, y));
            }
        }
    }
    sample_indices(all.len(), cap).into_iter().map(|i| all[i]).collect()
}

/// `|f(x) - f(y)|` against `d^theta (g_k(x) + g_k(y))` with `g` the edge
/// gradients of `Pf`.
pub fn check_hajlasz(p: &Pipeline, corpus: &[NamedFunction], cap: usize) -> Result<ReportTable> {
    let params = *p.params();
    let theta = p.besov.theta;
    let mut t = ReportTable::new("hajlasz");
    for nf in corpus {
        let g = edge_gradients(&p.ug, &p.extend(&nf.f));
        let gk = hajlasz_gradients(&p.ug, &g, theta, params.n_min..=params.n_max)?;
        for (k, gv) in gk {
            for (x, y) in annulus_pairs(&p.space, params.alpha, k, cap) {
                let d = p.space.d(x, y);
                t.push(
                    format!("{}@{k}", nf.name),
                    x as f64,
                    y as f64,
                    dev(nf.f.values[x], nf.f.values[y]),
                    d.powf(theta) * (gv.values[x] + gv.values[y]),
                );
            }
        }
    }
    Ok(t)
}

/// Upper-gradient violations of the extension gradients along edge paths.
pub fn check_upper_gradient(
    p: &Pipeline,
    corpus: &[NamedFunction],
    pairs: &[(usize, usize)],
    path_budget: usize,
) -> Result<ReportTable> {
    let mut t = ReportTable::new("upper_gradient");
    for nf in corpus {
        let g = edge_gradients(&p.ug, &p.extend(&nf.f));
        let v = check_hyperbolic_upper_gradient(&p.ug, &nf.f, &g, pairs, path_budget)?;
        t.push(nf.name.clone(), pairs.len() as f64, path_budget as f64, v.len() as f64, 1.0);
    }
    Ok(t)
}

/// Seeded random distinct boundary pairs.
pub fn random_pairs(n: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = rng.gen_range(0..n);
            let mut y = rng.gen_range(0..n - 1);
            if y >= x {
                y += 1;
            }
            (x.min(y), x.max(y))
        })
        .collect()
}

/// Per-level maximum of `|grad Pf| / Lip(f)` for Lipschitz corpus members.
pub fn lipschitz_extension(p: &Pipeline, corpus: &[NamedFunction]) -> ReportTable {
    let mut t = ReportTable::new("lipschitz_extension");
    for nf in corpus {
        let mut lip: f64 = 0.0;
        for x in 0..p.space.len() {
            for y in x + 1..p.space.len() {
                lip = lip.max((nf.f.values[x] - nf.f.values[y]).abs() / p.space.d(x, y));
            }
        }
        if lip == 0.0 {
            continue;
        }
        let g = edge_gradients(&p.ug, &p.extend(&nf.f));
        for (n, m) in crate::traceext::gradient_profile(&p.ug, &g) {
            t.push(format!("{}@{n}", nf.name), n as f64, lip, m, lip);
        }
    }
    t
}

/// Measure sweeps: hull scaling, ball comparability, level masses and
/// adjacent vertex masses.
pub fn hull_scaling(p: &Pipeline, balls: &[(usize, f64)]) -> (ReportTable, Option<SlopeFit>, Option<SlopeFit>) {
    let beta = p.besov.beta();
    let rows: Vec<(usize, f64, f64, f64)> = balls
        .par_iter()
        .map(|&(z, r)| {
            let h = p.graph().hull(z, r);
            (z, r, p.mu.hull_mass(&p.ug, &h), p.space.ball_mass(z, r))
        })
        .collect();
    let mut t = ReportTable::new("hull_scaling");
    let (mut xs, mut ys, mut yn) = (Vec::new(), Vec::new(), Vec::new());
    for (z, r, h, nu) in rows {
        t.push(format!("z{z}"), z as f64, r, h, r.powf(beta) * nu);
        if h > 0.0 {
            xs.push(r.ln());
            ys.push(h.ln());
            yn.push(nu.ln());
        }
    }
    let fit = least_squares(&xs, &ys);
    t.fit = fit;
    (t, fit, least_squares(&xs, &yn))
}

pub fn ball_measure(p: &Pipeline, balls: &[(usize, f64)]) -> ReportTable {
    let beta = p.besov.beta();
    let rows: Vec<(usize, f64, f64, f64)> = balls
        .par_iter()
        .map(|&(z, r)| {
            (
                z,
                r,
                p.mu.ball_mass_rho(&p.ug, p.ug.boundary_node(z), r),
                r.powf(beta) * p.space.ball_mass(z, r),
            )
        })
        .collect();
    let mut t = ReportTable::new("ball_measure");
    for (z, r, lhs, rhs) in rows {
        t.push(format!("z{z}"), z as f64, r, lhs, rhs);
    }
    t
}

pub fn level_masses(p: &Pipeline) -> ReportTable {
    let params = *p.params();
    let total = p.space.total_mass();
    let mut t = ReportTable::new("level_mass");
    for n in params.levels() {
        if n == params.n_min || n == params.n_max {
            continue;
        }
        t.push(
            format!("n{n}"),
            n as f64,
            0.0,
            p.mu.level_mass(&p.ug, n),
            params.alpha.powf(-p.besov.beta() * n as f64) * total,
        );
    }
    t
}

pub fn vertex_comparability(p: &Pipeline) -> ReportTable {
    let mut t = ReportTable::new("vertex_comparability");
    t.push("max_adjacent", 0.0, 0.0, p.mu.max_adjacent_ratio(&p.ug), 1.0);
    t
}

pub fn partition_report(p: &Pipeline) -> ReportTable {
    let mut t = ReportTable::new("partition");
    for n in p.params().levels() {
        let c = p.pous.level(n).check(&p.space);
        t.push(
            format!("n{n}"),
            n as f64,
            c.support_violations as f64,
            c.lipschitz_constant,
            1.0,
        );
        if c.max_sum_error > 1e-12 || c.support_violations > 0 {
            t.note(format!("level {n}: sum error {}, support violations {}", c.max_sum_error, c.support_violations));
        }
    }
    t
}

pub fn theta_q_table(p: &Pipeline, balls: &[(usize, f64)]) -> Result<ReportTable> {
    let q = 2.0 * p.p();
    let mut t = ReportTable::new("theta_q");
    for &(z, r) in balls {
        let v = compute_theta_q(&p.space, &p.besov, p.params().alpha, z, r, q)?;
        t.push(format!("z{z}"), z as f64, r, v, 1.0);
    }
    Ok(t)
}

/// Where the space comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceSource {
    Generator(SpaceKind),
    File { path: PathBuf, format: Option<SpaceFormat> },
}

impl SpaceSource {
    pub fn load(&self) -> Result<PointCloudSpace> {
        match self {
            SpaceSource::Generator(k) => generate_space(k),
            SpaceSource::File { path, format } => {
                let fmt = format.unwrap_or_else(|| SpaceFormat::from_path(path));
                load_space(path, fmt)
            }
        }
    }
}

fn d_alpha() -> f64 {
    2.0
}
fn d_tau() -> f64 {
    4.0
}
fn d_p() -> f64 {
    2.0
}
fn d_theta() -> f64 {
    0.5
}
fn d_centers() -> usize {
    64
}
fn d_radii() -> u32 {
    5
}
fn d_budget() -> usize {
    4
}
fn d_pairs() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceSource,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_tau")]
    pub tau: f64,
    #[serde(default)]
    pub n_min: Option<i32>,
    #[serde(default)]
    pub n_max: Option<i32>,
    #[serde(default = "d_p")]
    pub p: f64,
    #[serde(default = "d_theta")]
    pub theta: f64,
    /// Required by every corpus-based check.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Empty means every check.
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "d_centers")]
    pub max_centers: usize,
    #[serde(default = "d_radii")]
    pub radii: u32,
    #[serde(default = "d_budget")]
    pub path_budget: usize,
    #[serde(default = "d_pairs")]
    pub pairs: usize,
    #[serde(default)]
    pub corpus: Option<CorpusSpec>,
}

impl RunConfig {
    pub fn new(space: SpaceSource) -> Self {
        RunConfig {
            space,
            alpha: d_alpha(),
            tau: d_tau(),
            n_min: None,
            n_max: None,
            p: d_p(),
            theta: d_theta(),
            seed: None,
            checks: Vec::new(),
            output: None,
            max_centers: d_centers(),
            radii: d_radii(),
            path_budget: d_budget(),
            pairs: d_pairs(),
            corpus: None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn filling_params(&self, space: &PointCloudSpace) -> Result<FillingParams> {
        let mut p = FillingParams::with_default_levels(space, self.alpha, self.tau)?;
        if let Some(n) = self.n_min {
            p.n_min = n;
        }
        if let Some(n) = self.n_max {
            p.n_max = n;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn besov(&self) -> Result<BesovParams> {
        BesovParams::new(self.p, self.theta)
    }

    fn wants(&self, name: &str) -> bool {
        self.checks.is_empty() || self.checks.iter().any(|c| c == name)
    }
}

/// Checks that need no test functions.
const CORPUS_FREE: &[&str] = &[
    "partition",
    "vertex_comparability",
    "level_mass",
    "hull_scaling",
    "ball_measure",
    "doubling",
    "decay_order",
    "theta_q",
];

pub const CHECKS: &[&str] = &[
    "partition",
    "vertex_comparability",
    "level_mass",
    "hull_scaling",
    "ball_measure",
    "doubling",
    "decay_order",
    "trace_decay",
    "trace_identity",
    "extension_decay",
    "lipschitz_extension",
    "trace_domination",
    "extension_domination",
    "besov_equivalence",
    "poincare_trace",
    "extension_poincare",
    "holder",
    "sobolev_qstar",
    "theta_q",
    "hajlasz",
    "upper_gradient",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    #[serde(rename = "skipped: hypothesis")]
    Skipped,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub status: Status,
    pub reason: String,
    pub tables: Vec<ReportTable>,
    pub metrics: BTreeMap<String, f64>,
}

impl CheckOutcome {
    fn new(name: &str) -> Self {
        CheckOutcome {
            name: name.to_string(),
            status: Status::Pass,
            reason: String::new(),
            tables: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    fn require(&mut self, ok: bool, why: impl Into<String>) {
        if !ok {
            self.status = Status::Fail;
            if !self.reason.is_empty() {
                self.reason.push_str("; ");
            }
            self.reason.push_str(&why.into());
        }
    }

    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    fn skip(name: &str, why: String) -> Self {
        let mut c = CheckOutcome::new(name);
        c.status = Status::Skipped;
        c.reason = why;
        c
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn to_json(&self) -> serde_json::Value {
        let metrics: BTreeMap<&String, String> = self.metrics.iter().map(|(k, v)| (k, fmt12(*v))).collect();
        serde_json::json!({
            "name": self.name,
            "status": self.status,
            "reason": self.reason,
            "metrics": metrics,
            "tables": self.tables.iter().map(|t| t.summary_json()).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub checks: Vec<CheckOutcome>,
    pub hull_constant: f64,
    pub exponents: Option<ExponentEstimates>,
}

impl Bundle {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let exps = self.exponents.map(|e| {
            serde_json::json!({
                "c_nu": fmt12(e.c_nu), "q": fmt12(e.q), "c_low": fmt12(e.c_low),
                "eta": fmt12(e.eta), "c_rev": fmt12(e.c_rev),
            })
        });
        serde_json::json!({
            "passed": self.passed(),
            "hull_constant": fmt12(self.hull_constant),
            "exponents": exps,
            "checks": self.checks.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
        })
    }

    /// `summary.json` plus one CSV per check; rows of the refined run carry a
    /// `refined:` prefix.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let summary = serde_json::to_string_pretty(&self.summary_json()).expect("serializable");
        let path = dir.join("summary.json");
        std::fs::write(&path, summary + "\n").map_err(|e| Error::io(&path, e))?;
        for c in &self.checks {
            let mut csv = String::from("name,param1,param2,value\n");
            for (i, t) in c.tables.iter().enumerate() {
                csv.push_str(&t.csv_rows(if i == 0 { "" } else { "refined:" }));
            }
            let path = dir.join(format!("{}.csv", c.name));
            std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// `max` grows by at most `factor` from `base` to `refined`.
pub fn stable(base: f64, refined: f64, factor: f64) -> bool {
    base.is_finite() && refined.is_finite() && refined <= factor * base.max(f64::MIN_POSITIVE) + 1e-300
}

/// Levels whose dilated balls no longer cover `Z`, up to saturation.
pub fn trace_fit_levels(space: &PointCloudSpace, params: &FillingParams) -> RangeInclusive<i32> {
    let lo = first_unsaturated_level(space, params);
    lo..=(params.n_max - 2).max(lo + 2)
}

/// First level whose `tau`-dilated balls are smaller than `Z`.
pub fn first_unsaturated_level(space: &PointCloudSpace, params: &FillingParams) -> i32 {
    let diam = space.diameter();
    params
        .levels()
        .find(|&n| params.tau * params.scale(n) < diam)
        .unwrap_or(params.n_min + 1)
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Hypothesis(m) => Error::Hypothesis(m),
        other => Error::Consistency(format!("stage {name}: {other}")),
    })
}

/// Builds the pipeline at the configured levels and one level finer, runs
/// every requested check on both, and writes the bundle when an output
/// directory is configured.
pub fn run_all(cfg: &RunConfig) -> Result<Bundle> {
    for name in &cfg.checks {
        if !CHECKS.contains(&name.as_str()) {
            return Err(Error::InvalidParams(format!("unknown check `{name}`")));
        }
    }
    let needs_seed = CHECKS
        .iter()
        .any(|c| cfg.wants(c) && !CORPUS_FREE.contains(c));
    if needs_seed && cfg.seed.is_none() {
        return Err(Error::InvalidParams(
            "a seed is required for corpus-based checks".into(),
        ));
    }
    let seed = cfg.seed.unwrap_or_default();
    let space = Arc::new(stage("space", cfg.space.load())?);
    let params = stage("params", cfg.filling_params(&space))?;
    let besov = stage("params", cfg.besov())?;
    let mut fine = params;
    fine.n_max += 1;
    let base = stage("build", Pipeline::build(space.clone(), &params, besov))?;
    let refined = stage("build", Pipeline::build(space.clone(), &fine, besov))?;
    let spec = cfg.corpus.unwrap_or_default();
    let corpus = build_corpus(base.graph(), &base.pous, besov.theta, seed, &spec);
    let nonconst: Vec<NamedFunction> = corpus.functions.iter().filter(|f| f.name != "const").cloned().collect();
    let balls = ball_samples(&space, cfg.radii, cfg.max_centers);
    let hull_constant = hull_approximation_constant(&base.ug, &balls);
    let exponents = space.estimate_exponents(&default_scale_grid(&space)).ok();
    let mut checks = Vec::new();
    let both = [&base, &refined];

    for &name in CHECKS {
        if !cfg.wants(name) {
            continue;
        }
        let mut c = CheckOutcome::new(name);
        match name {
            "partition" => {
                for p in both {
                    let t = partition_report(p);
                    c.require(t.notes.is_empty(), "partition of unity invariant violated");
                    c.tables.push(t);
                }
            }
            "vertex_comparability" => {
                let a = vertex_comparability(&base);
                let b = vertex_comparability(&refined);
                c.metric("max", a.max_ratio());
                c.metric("refined_max", b.max_ratio());
                c.require(stable(a.max_ratio(), b.max_ratio(), 2.0), "adjacent mass ratio unstable");
                c.tables.extend([a, b]);
            }
            "level_mass" => {
                let a = level_masses(&base);
                let s = a.summary();
                c.metric("spread", s.max / s.min);
                c.require(s.min > 0.0 && (s.max / s.min).is_finite(), "level masses not comparable");
                c.tables.push(a);
            }
            "hull_scaling" => {
                let (t, fit, nu_fit) = hull_scaling(&base, &balls);
                let s = t.summary();
                c.metric("spread", s.max / s.min);
                c.require(s.max / s.min <= 20.0, "hull mass ratio spread exceeds 20");
                match (fit, nu_fit) {
                    (Some(f), Some(nf)) => {
                        let target = besov.beta() + nf.slope;
                        c.metric("slope", f.slope);
                        c.metric("r2", f.r2);
                        c.metric("target", target);
                        c.require(
                            (f.slope - target).abs() <= 0.15 * target && f.r2 >= 0.9,
                            format!("slope {} vs target {target}, r2 {}", fmt12(f.slope), fmt12(f.r2)),
                        );
                    }
                    _ => c.require(false, "no hull slope fit"),
                }
                c.tables.push(t);
            }
            "ball_measure" => {
                let a = ball_measure(&base, &balls);
                let b = ball_measure(&refined, &balls);
                let (sa, sb) = (a.summary(), b.summary());
                c.metric("spread", sa.max / sa.min);
                c.metric("refined_spread", sb.max / sb.min);
                c.require(
                    stable(sa.max / sa.min, sb.max / sb.min, 2.0),
                    "ball measure comparability unstable",
                );
                c.tables.extend([a, b]);
            }
            "doubling" => {
                let a = measure::doubling_sweep(&base.mu, &base.ug, &measure::sweep_samples(&base.ug, 16, 8));
                let b = measure::doubling_sweep(&refined.mu, &refined.ug, &measure::sweep_samples(&refined.ug, 16, 8));
                c.metric("max", a.max_ratio());
                c.metric("refined_max", b.max_ratio());
                c.require(stable(a.max_ratio(), b.max_ratio(), 1.5), "doubling ratio grows by more than 1.5x");
                c.tables.extend([a, b]);
            }
            "decay_order" => {
                let fit = stage(
                    "decay_order",
                    measure::lower_decay_fit(&base.mu, &base.ug, &measure::sweep_samples(&base.ug, 16, 8)),
                )?;
                c.metric("order", fit.order);
                c.metric("constant", fit.constant);
                match exponents {
                    Some(e) => {
                        let target = besov.q_beta(e.q);
                        c.metric("target", target);
                        let mut t = ReportTable::new("decay_order");
                        t.push("order", fit.pairs as f64, fit.constant, fit.order, target);
                        c.tables.push(t);
                        c.require((fit.order - target).abs() <= 0.4, "decay order off target");
                    }
                    None => c.require(false, "no exponent estimate"),
                }
            }
            "trace_decay" => {
                let rough: Vec<NamedFunction> = corpus.with_prefix("rough").cloned().collect();
                let (t, fits) = stage("trace_decay", trace_decay(&base, &rough, trace_fit_levels(&space, &params)))?;
                let target = (besov.beta() / besov.p - 1.0) * params.alpha.ln();
                c.metric("target", target);
                let mut worst: f64 = 0.0;
                let mut min_r2: f64 = 1.0;
                for (_, f) in &fits {
                    worst = worst.max((f.slope - target).abs() / target.abs());
                    min_r2 = min_r2.min(f.r2);
                }
                c.metric("worst_relative_error", worst);
                c.metric("min_r2", min_r2);
                c.require(!fits.is_empty() && worst <= 0.25 && min_r2 >= 0.9, "trace decay slope off target");
                c.tables.push(t);
            }
            "trace_identity" => {
                let a = trace_identity(&base, &nonconst);
                let b = trace_identity(&refined, &nonconst);
                c.metric("max", a.max_ratio());
                c.metric("refined_max", b.max_ratio());
                c.require(a.max_ratio() <= 0.05, "relative trace error above 0.05");
                c.require(b.max_ratio() <= a.max_ratio(), "trace error increased under refinement");
                c.tables.extend([a, b]);
            }
            "extension_decay" => {
                let t = extension_decay(&base, &nonconst);
                c.metric("max", t.max_ratio());
                c.require(t.max_ratio().is_finite(), "extension decay ratio unbounded");
                c.tables.push(t);
            }
            "lipschitz_extension" => {
                let lips: Vec<NamedFunction> = corpus
                    .functions
                    .iter()
                    .filter(|f| f.name == "coord" || f.name == "dist_mid" || f.name.starts_with("bump"))
                    .cloned()
                    .collect();
                let a = lipschitz_extension(&base, &lips);
                let b = lipschitz_extension(&refined, &lips);
                c.metric("max", a.max_ratio());
                c.metric("refined_max", b.max_ratio());
                c.require(stable(a.max_ratio(), b.max_ratio(), 2.0), "extension Lipschitz constant unstable");
                c.tables.extend([a, b]);
            }
            "trace_domination" | "extension_domination" => {
                let run = |p: &Pipeline| {
                    if name == "trace_domination" {
                        trace_domination(p, &nonconst)
                    } else {
                        extension_domination(p, &nonconst)
                    }
                };
                let (a, b) = (run(&base), run(&refined));
                c.metric("max", a.max_ratio());
                c.metric("refined_max", b.max_ratio());
                c.require(stable(a.max_ratio(), b.max_ratio(), 2.0), "norm ratio unstable");
                c.tables.extend([a, b]);
            }
            "besov_equivalence" => {
                let t = stage("besov_equivalence", besov_equivalence(&base, &nonconst))?;
                let s = t.summary();
                c.metric("min", s.min);
                c.metric("max", s.max);
                c.require(s.min > 0.0 && s.max / s.min <= 10.0, "Besov ratio interval wider than 10x");
                c.tables.push(t);
            }
            "poincare_trace" => {
                let run = |p: &Pipeline| {
                    let us: Vec<(String, GraphFunction)> =
                        corpus.functions.iter().map(|nf| (nf.name.clone(), p.extend(&nf.f))).collect();
                    check_poincare_trace(p, &us, &balls)
                };
                let (a, b) = (run(&base), run(&refined));
                c.metric("max", a.max_ratio());
                c.metric("refined_max", b.max_ratio());
                c.require(stable(a.max_ratio(), b.max_ratio(), 2.0), "ratio unbounded or unstable");
                c.tables.extend([a, b]);
            }
            "extension_poincare" => {
                let c_ref = hull_approximation_constant(&refined.ug, &balls);
                let a = check_extension_poincare(&base, &corpus.functions, &balls, hull_constant);
                let b = check_extension_poincare(&refined, &corpus.functions, &balls, c_ref);
                c.metric("hull_constant", hull_constant);
                c.metric("max", a.max_ratio());
                c.metric("refined_max", b.max_ratio());
                c.require(stable(a.max_ratio(), b.max_ratio(), 2.0), "ratio unbounded or unstable");
                c.tables.extend([a, b]);
            }
            "holder" | "sobolev_qstar" => {
                let Some(e) = exponents else {
                    c.require(false, "no exponent estimate to test the hypotheses against");
                    checks.push(c);
                    continue;
                };
                let run = |p: &Pipeline| {
                    if name == "holder" {
                        check_holder(p, &corpus.functions, &balls, e.q, cfg.pairs)
                    } else {
                        check_sobolev_qstar(p, &corpus.functions, &balls, &e)
                    }
                };
                match (run(&base), run(&refined)) {
                    (Err(Error::Hypothesis(m)), _) | (_, Err(Error::Hypothesis(m))) => {
                        checks.push(CheckOutcome::skip(name, m));
                        continue;
                    }
                    (a, b) => {
                        let (a, b) = (stage(name, a)?, stage(name, b)?);
                        c.metric("max", a.max_ratio());
                        c.metric("refined_max", b.max_ratio());
                        c.require(stable(a.max_ratio(), b.max_ratio(), 2.0), "ratio unbounded or unstable");
                        c.tables.extend([a, b]);
                    }
                }
            }
            "theta_q" => {
                let t = stage("theta_q", theta_q_table(&base, &balls))?;
                let mut monotone = true;
                for w in t.rows.windows(2) {
                    if w[0].param1 == w[1].param1 && w[1].param2 < w[0].param2 && w[1].lhs > w[0].lhs * (1.0 + 1e-12) {
                        monotone = false;
                    }
                }
                c.metric("max", t.summary().max);
                c.require(monotone && t.max_ratio().is_finite(), "theta_q not monotone in r");
                c.tables.push(t);
            }
            "hajlasz" => {
                let t = stage("hajlasz", check_hajlasz(&base, &nonconst, cfg.pairs))?;
                c.metric("max", t.max_ratio());
                c.require(t.max_ratio() <= 1.0 + 1e-12, "pointwise Hajłasz inequality violated");
                c.tables.push(t);
            }
            "upper_gradient" => {
                let pairs = random_pairs(space.len(), cfg.pairs, seed);
                let t = stage("upper_gradient", check_upper_gradient(&base, &nonconst, &pairs, cfg.path_budget))?;
                let v: f64 = t.rows.iter().map(|r| r.lhs).sum();
                c.metric("violations", v);
                c.require(v == 0.0, "upper-gradient violations found");
                c.tables.push(t);
            }
            _ => unreachable!("unknown check"),
        }
        checks.push(c);
    }
    let bundle = Bundle {
        checks,
        hull_constant,
        exponents,
    };
    if let Some(dir) = &cfg.output {
        bundle.write(dir)?;
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_pipeline(n: usize, p: f64, theta: f64) -> Pipeline {
        let space = Arc::new(generate_space(&SpaceKind::IntervalGrid { n }).unwrap());
        let params = FillingParams::with_default_levels(&space, 2.0, 4.0).unwrap();
        Pipeline::build(space, &params, BesovParams::new(p, theta).unwrap()).unwrap()
    }

    #[test]
    fn corpus_has_expected_members() {
        let p = grid_pipeline(32, 2.0, 0.5);
        let c = build_corpus(p.graph(), &p.pous, 0.5, 7, &CorpusSpec::default());
        assert_eq!(c.len(), 21);
        assert_eq!(c.with_prefix("rough").count(), 10);
        assert_eq!(c.with_prefix("net").count(), 4);
        for nf in &c.functions {
            assert_eq!(nf.f.len(), 32);
            assert!(nf.f.values.iter().all(|v| v.is_finite()), "{}", nf.name);
        }
        let again = build_corpus(p.graph(), &p.pous, 0.5, 7, &CorpusSpec::default());
        assert_eq!(c, again);
    }

    #[test]
    fn net_functions_are_not_constant() {
        let p = grid_pipeline(32, 2.0, 0.5);
        let c = build_corpus(p.graph(), &p.pous, 0.5, 3, &CorpusSpec::default());
        for nf in c.with_prefix("net") {
            let v = &nf.f.values;
            assert!(v.iter().any(|&x| x != v[0]), "{}", nf.name);
        }
    }

    #[test]
    fn triangle_wave_values() {
        assert_eq!(triangle(0.0), 1.0);
        assert_eq!(triangle(0.5), 0.0);
        assert_eq!(triangle(1.25), 0.5);
    }

    #[test]
    fn ball_sample_count_and_radii() {
        let space = generate_space(&SpaceKind::IntervalGrid { n: 16 }).unwrap();
        let b = ball_samples(&space, 3, 4);
        assert_eq!(b.len(), 12);
        let diam = space.diameter();
        assert_eq!(b[0].1, 0.5 * diam);
        assert_eq!(b[2].1, 0.125 * diam);
    }

    #[test]
    fn scale_grid_reaches_min_distance() {
        let space = generate_space(&SpaceKind::IntervalGrid { n: 16 }).unwrap();
        let g = default_scale_grid(&space);
        let floor = space.min_positive_distance().unwrap();
        assert!(g.len() >= 3);
        assert!(*g.last().unwrap() >= floor);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn hull_constant_at_least_one() {
        let p = grid_pipeline(32, 2.0, 0.5);
        let balls = ball_samples(&p.space, 3, 8);
        assert!(hull_approximation_constant(&p.ug, &balls) >= 1.0);
    }

    #[test]
    fn theta_q_requires_q_above_p() {
        let p = grid_pipeline(16, 2.0, 0.5);
        assert!(compute_theta_q(&p.space, &p.besov, 2.0, 0, 0.5, 2.0).is_err());
        assert!(compute_theta_q(&p.space, &p.besov, 2.0, 0, 0.5, 3.0).unwrap().is_finite());
    }

    #[test]
    fn holder_refuses_small_p() {
        let p = grid_pipeline(16, 1.5, 0.5);
        let c = build_corpus(p.graph(), &p.pous, 0.5, 1, &CorpusSpec::default());
        let balls = ball_samples(&p.space, 2, 4);
        let r = check_holder(&p, &c.functions, &balls, 1.0, 8);
        assert!(matches!(r, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn sobolev_refuses_large_p_theta() {
        let p = grid_pipeline(16, 2.0, 0.5);
        let c = build_corpus(p.graph(), &p.pous, 0.5, 1, &CorpusSpec::default());
        let balls = ball_samples(&p.space, 2, 4);
        let est = p.space.estimate_exponents(&default_scale_grid(&p.space)).unwrap();
        let r = check_sobolev_qstar(&p, &c.functions, &balls, &est);
        assert!(matches!(r, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn dev_flushes_rounding_noise() {
        assert_eq!(dev(1.0, 1.0 + 1e-15), 0.0);
        assert_eq!(dev(2.0, 1.5), 0.5);
    }

    #[test]
    fn stability_rule() {
        assert!(stable(1.0, 1.9, 2.0));
        assert!(!stable(1.0, 2.1, 2.0));
        assert!(!stable(f64::NAN, 1.0, 2.0));
    }

    #[test]
    fn unknown_check_is_rejected() {
        let mut cfg = RunConfig::new(SpaceSource::Generator(SpaceKind::IntervalGrid { n: 16 }));
        cfg.seed = Some(1);
        cfg.checks = vec!["no_such_check".into()];
        assert!(run_all(&cfg).is_err());
    }

    #[test]
    fn corpus_checks_need_a_seed() {
        let mut cfg = RunConfig::new(SpaceSource::Generator(SpaceKind::IntervalGrid { n: 16 }));
        cfg.checks = vec!["poincare_trace".into()];
        assert!(run_all(&cfg).is_err());
    }
}
