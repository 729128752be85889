//! Fixed-order Gauss–Legendre quadrature.

use std::sync::OnceLock;

pub const GL_ORDER: usize = 16;

/// Nodes and weights on `[-1, 1]`, computed once by Newton iteration on `P_n`.
pub fn gauss_legendre_16() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `int_a^b f` with the 16-point rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b == a {
        return 0.0;
    }
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    gauss_legendre_16()
        .iter()
        .map(|&(x, w)| w * f(m + h * x))
        .sum::<f64>()
        * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let s: f64 = gauss_legendre_16().iter().map(|r| r.1).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exact_for_degree_31() {
        let v = integrate(|x| x.powi(30) + x.powi(31), 0.0, 1.0);
        assert!((v - (1.0 / 31.0 + 1.0 / 32.0)).abs() < 1e-14);
    }

    #[test]
    fn smooth_integrand() {
        let v = integrate(f64::exp, 0.0, 1.0);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }
}
