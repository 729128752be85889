#![allow(dead_code)]

use std::sync::Arc;

use hyperfill::filling::{FillingGraph, FillingParams};
use hyperfill::funcspace::BesovParams;
use hyperfill::space::{generate_space, PointCloudSpace, SpaceKind};
use hyperfill::uniformize::{LinkKind, UniformizedGraph};
use hyperfill::verify::Pipeline;

pub fn space(kind: SpaceKind) -> Arc<PointCloudSpace> {
    Arc::new(generate_space(&kind).unwrap())
}

pub fn grid(n: usize) -> Arc<PointCloudSpace> {
    space(SpaceKind::IntervalGrid { n })
}

pub fn cantor(level: u32) -> Arc<PointCloudSpace> {
    space(SpaceKind::Cantor { level })
}

pub fn line(xs: &[f64]) -> Arc<PointCloudSpace> {
    let ids = (0..xs.len()).map(|i| format!("p{i}")).collect();
    let coords = xs.iter().map(|&x| vec![x]).collect();
    Arc::new(PointCloudSpace::from_coords(ids, coords, vec![1.0; xs.len()]).unwrap())
}

/// Default levels with `extra` added to `n_max`.
pub fn params(space: &PointCloudSpace, extra: i32) -> FillingParams {
    let mut p = FillingParams::with_default_levels(space, 2.0, 4.0).unwrap();
    p.n_max += extra;
    p
}

pub fn pipeline(space: &Arc<PointCloudSpace>, p: f64, theta: f64, extra: i32) -> Pipeline {
    let fp = params(space, extra);
    Pipeline::build(space.clone(), &fp, BesovParams::new(p, theta).unwrap()).unwrap()
}

/// `nu` of the open ball, summed directly.
pub fn open_ball_mass(space: &PointCloudSpace, c: usize, r: f64) -> f64 {
    (0..space.len())
        .filter(|&z| space.d(c, z) < r)
        .map(|z| space.weight(z))
        .sum()
}

/// Exhaustive separation and maximality of every net level of `g`.
pub fn check_nets(g: &FillingGraph) -> Result<(), String> {
    let space = g.space();
    let prm = g.params();
    for n in prm.levels() {
        let sep = prm.alpha.powi(-n);
        let centers: Vec<usize> = g.level_range(n).map(|v| g.center(v)).collect();
        for (i, &a) in centers.iter().enumerate() {
            for &b in &centers[i + 1..] {
                if space.d(a, b) < sep {
                    return Err(format!("level {n}: centers {a},{b} closer than {sep}"));
                }
            }
        }
        for z in 0..space.len() {
            if !centers.iter().any(|&c| space.d(c, z) < sep) {
                return Err(format!("level {n}: point {z} is uncovered"));
            }
        }
    }
    Ok(())
}

/// Every edge has a witness point in both balls, and every admissible pair
/// with a witness is an edge.
pub fn check_edges(g: &FillingGraph) -> Result<(), String> {
    let space = g.space();
    let prm = g.params();
    let radius = |v: usize| prm.tau * prm.alpha.powi(-g.height(v));
    let witness = |a: usize, b: usize| {
        (0..space.len()).any(|z| space.d(z, g.center(a)) < radius(a) && space.d(z, g.center(b)) < radius(b))
    };
    let nv = g.num_vertices();
    let mut adjacent = vec![false; nv * nv];
    for e in g.edges() {
        if (g.height(e.a) - g.height(e.b)).abs() > 1 {
            return Err(format!("edge {}-{} skips a level", e.a, e.b));
        }
        if !witness(e.a, e.b) {
            return Err(format!("edge {}-{} has no witness", e.a, e.b));
        }
        adjacent[e.a * nv + e.b] = true;
        adjacent[e.b * nv + e.a] = true;
    }
    for a in 0..nv {
        for b in a + 1..nv {
            if (g.height(a) - g.height(b)).abs() <= 1 && witness(a, b) && !adjacent[a * nv + b] {
                return Err(format!("vertices {a},{b} overlap but are not joined"));
            }
        }
    }
    Ok(())
}

pub fn connected(ug: &UniformizedGraph) -> bool {
    let n = ug.num_nodes();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for &(y, _) in ug.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Minimum over all simple paths of the left-to-right summed link lengths.
pub fn brute_force_rho(ug: &UniformizedGraph, source: usize) -> Vec<f64> {
    fn dfs(ug: &UniformizedGraph, x: usize, len: f64, on_path: &mut Vec<bool>, best: &mut Vec<f64>) {
        if len < best[x] {
            best[x] = len;
        }
        for &(y, k) in ug.neighbors(x) {
            if !on_path[y] {
                on_path[y] = true;
                dfs(ug, y, len + ug.link(k).rho_length, on_path, best);
                on_path[y] = false;
            }
        }
    }
    let n = ug.num_nodes();
    let mut best = vec![f64::INFINITY; n];
    let mut on_path = vec![false; n];
    on_path[source] = true;
    dfs(ug, source, 0.0, &mut on_path, &mut best);
    best
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 30)
}

/// Unit-parameter extent of a link: tails run to infinity, truncated where
/// `alpha^(-power t)` has fallen below `1e-16`.
pub fn link_extent(ug: &UniformizedGraph, k: usize, power: f64) -> f64 {
    match ug.link(k).kind {
        LinkKind::Tail => 16.0 * 10f64.ln() / (power * ug.alpha().ln()) + 2.0,
        _ => 1.0,
    }
}

/// Height along a link at unit parameter `t`.
pub fn height_at(ug: &UniformizedGraph, k: usize, t: f64) -> f64 {
    let l = ug.link(k);
    match l.kind {
        LinkKind::Horizontal => l.level as f64,
        _ => l.level as f64 + t,
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
