//! Line fits used by the exponent estimators and the report tables.

use serde::{Deserialize, Serialize};

/// Ordinary least-squares line with the usual goodness-of-fit statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r2: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let stderr = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(SlopeFit {
        slope,
        intercept,
        stderr,
        r2,
    })
}

/// Chebyshev (minimax) line through `(t, y)` samples.
///
/// Returns `(slope, intercept, half_width)` where every sample satisfies
/// `|y - intercept - slope * t| <= half_width`, and `half_width` is minimal.
pub fn minimax_line(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let spread = |slope: f64| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(t, y) in points {
            let r = y - slope * t;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    };
    // max - min of affine functions of the slope is convex: golden-section search.
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-1.0e3, 1.0e3);
    let width = |s: f64| {
        let (lo, hi) = spread(s);
        hi - lo
    };
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = width(c);
    let mut fd = width(d);
    for _ in 0..200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = width(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = width(d);
        }
    }
    let slope = 0.5 * (a + b);
    let (lo, hi) = spread(slope);
    Some((slope, 0.5 * (lo + hi), 0.5 * (hi - lo)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let fit = least_squares(&xs, &ys).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
    }

    #[test]
    fn minimax_recovers_band_center() {
        // y = t +- 0.5 alternating: the minimax line is y = t with half width 0.5.
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let t = i as f64;
                (t, t + if i % 2 == 0 { 0.5 } else { -0.5 })
            })
            .collect();
        let (s, c, w) = minimax_line(&pts).unwrap();
        assert!((s - 1.0).abs() < 1e-9, "slope {s}");
        assert!(c.abs() < 1e-8);
        assert!((w - 0.5).abs() < 1e-8);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(least_squares(&[1.0], &[1.0]).is_none());
        assert!(least_squares(&[1.0, 1.0], &[0.0, 2.0]).is_none());
        assert!(minimax_line(&[(1.0, 1.0)]).is_none());
    }
}
