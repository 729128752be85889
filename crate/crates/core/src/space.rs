//! Finite metric measure spaces: a dense distance matrix plus positive point masses.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::minimax_line;

/// Exhaustive triangle checks up to this many points, sampled above.
pub const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 512;
/// Number of random triples checked for larger spaces.
pub const SAMPLED_TRIPLES: usize = 1_000_000;

const TRIANGLE_SLACK: f64 = 1e-12;

/// A finite metric measure space `(Z, d, nu)`.
///
/// Points are addressed by their index `0..len()`; the external ids are kept
/// for I/O only. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudSpace {
    ids: Vec<String>,
    coords: Option<Vec<Vec<f64>>>,
    dist: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceFormat {
    Csv,
    Json,
}

impl SpaceFormat {
    /// `.json` files are JSON, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => SpaceFormat::Json,
            _ => SpaceFormat::Csv,
        }
    }
}

/// Deterministic generators for desk-scale doubling spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    /// `{k/(n-1)}` with unit weights normalized to total mass 1.
    IntervalGrid { n: usize },
    /// `n` equally spaced points on a circle of length 1 with arc-length metric.
    Circle { n: usize },
    /// Endpoints of the `2^level` intervals of the middle-thirds construction.
    Cantor { level: u32 },
    /// The base space with its metric replaced by `d^eps`.
    Snowflake { base: Box<SpaceKind>, eps: f64 },
}

/// Doubling and volume-decay constants estimated from ball-mass ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimates {
    pub c_nu: f64,
    pub q: f64,
    pub c_low: f64,
    pub eta: f64,
    pub c_rev: f64,
}

impl PointCloudSpace {
    /// Builds and validates a space from a dense row-major distance matrix.
    pub fn new(
        ids: Vec<String>,
        coords: Option<Vec<Vec<f64>>>,
        dist: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::Degenerate("space has no points".into()));
        }
        if ids.len() != n || dist.len() != n * n {
            return Err(Error::Shape(format!(
                "{} ids, {} weights and {} distance entries",
                ids.len(),
                n,
                dist.len()
            )));
        }
        if let Some(c) = &coords {
            if c.len() != n {
                return Err(Error::Shape("coordinate rows do not match points".into()));
            }
        }
        let space = PointCloudSpace {
            ids,
            coords,
            dist,
            weights,
        };
        space.validate()?;
        Ok(space)
    }

    /// Euclidean metric on the given coordinates.
    pub fn from_coords(ids: Vec<String>, coords: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let n = coords.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                if coords[i].len() != coords[j].len() {
                    return Err(Error::Shape("ragged coordinate rows".into()));
                }
                let d = coords[i]
                    .iter()
                    .zip(&coords[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::new(ids, Some(coords), dist, weights)
    }

    fn validate(&self) -> Result<()> {
        let n = self.len();
        for (i, &w) in self.weights.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::NonpositiveWeight {
                    id: self.ids[i].clone(),
                    weight: w,
                });
            }
        }
        for i in 0..n {
            let dii = self.d(i, i);
            if dii != 0.0 {
                return Err(Error::NonzeroDiagonal(i, dii));
            }
            for j in (i + 1)..n {
                let (a, b) = (self.d(i, j), self.d(j, i));
                if a != b {
                    return Err(Error::Asymmetric(i, j, a, b));
                }
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::NonpositiveDistance(i, j, a));
                }
            }
        }
        let check = |i: usize, k: usize, j: usize| -> Result<()> {
            let direct = self.d(i, j);
            let via = self.d(i, k) + self.d(k, j);
            if direct > via + TRIANGLE_SLACK * via.max(1.0) {
                return Err(Error::Triangle(i, k, j, direct, via));
            }
            Ok(())
        };
        if n <= EXHAUSTIVE_TRIANGLE_LIMIT {
            for i in 0..n {
                for j in (i + 1)..n {
                    for k in 0..n {
                        if k != i && k != j {
                            check(i, k, j)?;
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for _ in 0..SAMPLED_TRIPLES {
                let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                check(i, k, j)?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn d(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.len() + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let n = self.len();
        &self.dist[x * n..(x + 1) * n]
    }

    #[inline]
    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest distance between distinct points, `None` for a single point.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let n = self.len();
        let mut best = None::<f64>;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.d(i, j);
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    /// Open ball `{y : d(z,y) < r}`; always contains `z`.
    pub fn ball(&self, z: usize, r: f64) -> Vec<usize> {
        self.row(z)
            .iter()
            .enumerate()
            .filter(|(_, &d)| d < r)
            .map(|(y, _)| y)
            .collect()
    }

    /// Closed ball `{y : d(z,y) <= r}`.
    pub fn closed_ball(&self, z: usize, r: f64) -> Vec<usize> {
        self.row(z)
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= r)
            .map(|(y, _)| y)
            .collect()
    }

    /// `nu(B(z, r))` for the open ball.
    pub fn ball_mass(&self, z: usize, r: f64) -> f64 {
        self.row(z)
            .iter()
            .zip(&self.weights)
            .filter(|(&d, _)| d < r)
            .map(|(_, &w)| w)
            .sum()
    }

    pub fn measure(&self, subset: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for &z in subset {
            if z >= self.len() {
                return Err(Error::UnknownPoint(z));
            }
            total += self.weights[z];
        }
        Ok(total)
    }

    /// Returns a copy with total mass rescaled to 1.
    pub fn normalized(&self) -> Self {
        let total = self.total_mass();
        let mut out = self.clone();
        for w in &mut out.weights {
            *w /= total;
        }
        out
    }

    /// Replaces the metric by `d^eps`, `0 < eps <= 1`.
    pub fn snowflake(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "snowflake exponent must lie in (0,1], got {eps}"
            )));
        }
        let dist = self.dist.iter().map(|d| d.powf(eps)).collect();
        // coordinates no longer induce the metric
        Self::new(self.ids.clone(), None, dist, self.weights.clone())
    }

    /// Estimates `C_nu`, the lower-decay order `Q` and the reverse-doubling
    /// exponent `eta` from concentric ball ratios over `scale_grid`.
    ///
    /// `Q` is the slope of the Chebyshev line through the samples
    /// `(ln(r/r'), ln(nu(B(z,r))/nu(B(z,r'))))`; the constants are then the
    /// smallest ones for which the two power-law bounds hold on every sample.
    pub fn estimate_exponents(&self, scale_grid: &[f64]) -> Result<ExponentEstimates> {
        let min_d = self
            .min_positive_distance()
            .ok_or_else(|| Error::Degenerate("single-point space has no scales".into()))?;
        let mut radii: Vec<f64> = scale_grid.iter().cloned().filter(|r| *r > 0.0).collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        radii.dedup();
        if radii.len() < 2 {
            return Err(Error::Degenerate("scale grid needs two distinct radii".into()));
        }
        let (rmin, rmax) = (radii[0], radii[radii.len() - 1]);
        if rmax < min_d || rmin > self.diameter() {
            return Err(Error::Degenerate(format!(
                "scale grid [{rmin}, {rmax}] misses [{min_d}, {}]",
                self.diameter()
            )));
        }
        let centers = sample_indices(self.len(), EXHAUSTIVE_TRIANGLE_LIMIT);
        let mut c_nu: f64 = 1.0;
        let mut pts = Vec::new();
        for &z in &centers {
            let masses: Vec<f64> = radii.iter().map(|&r| self.ball_mass(z, r)).collect();
            for (k, &r) in radii.iter().enumerate() {
                c_nu = c_nu.max(self.ball_mass(z, 2.0 * r) / masses[k]);
                for l in 0..k {
                    let t = (r / radii[l]).ln();
                    let y = (masses[k] / masses[l]).ln();
                    pts.push((t, y));
                }
            }
        }
        let (slope, _, _) = minimax_line(&pts)
            .ok_or_else(|| Error::Degenerate("too few ratio samples".into()))?;
        if slope <= 0.0 {
            return Err(Error::Degenerate(
                "ball masses do not grow across the scale grid".into(),
            ));
        }
        let q = slope;
        let eta = slope.max(0.0);
        let log_c_low = pts.iter().map(|&(t, y)| y - q * t).fold(0.0, f64::max);
        let log_c_rev = pts.iter().map(|&(t, y)| eta * t - y).fold(0.0, f64::max);
        Ok(ExponentEstimates {
            c_nu,
            q,
            c_low: log_c_low.exp(),
            eta,
            c_rev: log_c_rev.exp(),
        })
    }
}

/// Up to `cap` evenly spaced indices from `0..n`, always including 0.
pub fn sample_indices(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let set: BTreeSet<usize> = (0..cap).map(|k| k * n / cap).collect();
    set.into_iter().collect()
}

pub fn generate_space(kind: &SpaceKind) -> Result<PointCloudSpace> {
    match kind {
        SpaceKind::IntervalGrid { n } => {
            if *n < 2 {
                return Err(Error::InvalidParams(format!(
                    "interval_grid needs n >= 2, got {n}"
                )));
            }
            let coords: Vec<Vec<f64>> = (0..*n)
                .map(|k| vec![k as f64 / (*n - 1) as f64])
                .collect();
            let ids = (0..*n).map(|k| k.to_string()).collect();
            PointCloudSpace::from_coords(ids, coords, vec![1.0 / *n as f64; *n])
        }
        SpaceKind::Circle { n } => {
            if *n < 3 {
                return Err(Error::InvalidParams(format!("circle needs n >= 3, got {n}")));
            }
            let n = *n;
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let k = i.abs_diff(j);
                    dist[i * n + j] = k.min(n - k) as f64 / n as f64;
                }
            }
            let ids = (0..n).map(|k| k.to_string()).collect();
            PointCloudSpace::new(ids, None, dist, vec![1.0 / n as f64; n])
        }
        SpaceKind::Cantor { level } => {
            if *level < 1 || *level > 16 {
                return Err(Error::InvalidParams(format!(
                    "cantor level must lie in 1..=16, got {level}"
                )));
            }
            let pts = cantor_endpoints(*level);
            let n = pts.len();
            let coords = pts.into_iter().map(|x| vec![x]).collect();
            let ids = (0..n).map(|k| k.to_string()).collect();
            PointCloudSpace::from_coords(ids, coords, vec![1.0 / n as f64; n])
        }
        SpaceKind::Snowflake { base, eps } => {
            if !(*eps > 0.0 && *eps <= 1.0) {
                return Err(Error::InvalidParams(format!(
                    "snowflake exponent must lie in (0,1], got {eps}"
                )));
            }
            generate_space(base)?.snowflake(*eps)
        }
    }
}

/// Sorted endpoints of the level-`level` middle-thirds intervals.
fn cantor_endpoints(level: u32) -> Vec<f64> {
    // left endpoints as integers over 3^level
    let scale = 3u64.pow(level);
    let mut lefts = vec![0u64];
    for l in 1..=level {
        let step = 2 * 3u64.pow(level - l);
        lefts = lefts.iter().flat_map(|&a| [a, a + step]).collect();
    }
    let mut out: Vec<f64> = lefts
        .iter()
        .flat_map(|&a| [a as f64 / scale as f64, (a + 1) as f64 / scale as f64])
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

// ---------------------------------------------------------------------------
// I/O

#[derive(Serialize, Deserialize)]
struct JsonPoint {
    id: serde_json::Value,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonSpace {
    points: Vec<JsonPoint>,
    dist: Vec<Vec<f64>>,
}

fn id_string(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Companion distance matrix for a CSV point file: `dist.csv` in the same directory.
pub fn companion_dist_path(points: &Path) -> PathBuf {
    points
        .parent()
        .map(|p| p.join("dist.csv"))
        .unwrap_or_else(|| PathBuf::from("dist.csv"))
}

pub fn load_space(path: &Path, format: SpaceFormat) -> Result<PointCloudSpace> {
    match format {
        SpaceFormat::Json => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let js: JsonSpace =
                serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let n = js.points.len();
            if js.dist.len() != n || js.dist.iter().any(|r| r.len() != n) {
                return Err(Error::Parse(format!("dist must be a {n}x{n} matrix")));
            }
            let ids = js.points.iter().map(|p| id_string(&p.id)).collect();
            let weights = js.points.iter().map(|p| p.weight).collect();
            let dist = js.dist.into_iter().flatten().collect();
            PointCloudSpace::new(ids, None, dist, weights)
        }
        SpaceFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_path(path)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let header = rdr
                .headers()
                .map_err(|e| Error::Parse(e.to_string()))?
                .clone();
            let cols: Vec<&str> = header.iter().collect();
            if cols.len() < 2 || cols[0] != "id" || cols[cols.len() - 1] != "weight" {
                return Err(Error::Parse(
                    "CSV header must be id[,x,y,...],weight".into(),
                ));
            }
            let ncoord = cols.len() - 2;
            let mut ids = Vec::new();
            let mut coords = Vec::new();
            let mut weights = Vec::new();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
                ids.push(rec[0].to_string());
                let mut c = Vec::with_capacity(ncoord);
                for k in 0..ncoord {
                    c.push(parse_f64(&rec[k + 1])?);
                }
                coords.push(c);
                weights.push(parse_f64(&rec[cols.len() - 1])?);
            }
            if ncoord > 0 {
                return PointCloudSpace::from_coords(ids, coords, weights);
            }
            let dpath = companion_dist_path(path);
            let dist = read_matrix_csv(&dpath, ids.len())?;
            PointCloudSpace::new(ids, None, dist, weights)
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
}

fn read_matrix_csv(path: &Path, n: usize) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut out = Vec::with_capacity(n * n);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != n {
            return Err(Error::Parse(format!(
                "{}: row {rows} has {} entries, expected {n}",
                path.display(),
                rec.len()
            )));
        }
        for v in rec.iter() {
            out.push(parse_f64(v)?);
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Parse(format!(
            "{}: {rows} rows, expected {n}",
            path.display()
        )));
    }
    Ok(out)
}

/// Writes the space; CSV without coordinates also writes the companion `dist.csv`.
pub fn save_space(space: &PointCloudSpace, path: &Path, format: SpaceFormat) -> Result<()> {
    let n = space.len();
    match format {
        SpaceFormat::Json => {
            let js = JsonSpace {
                points: (0..n)
                    .map(|i| JsonPoint {
                        id: serde_json::Value::String(space.ids[i].clone()),
                        weight: space.weights[i],
                    })
                    .collect(),
                dist: (0..n).map(|i| space.row(i).to_vec()).collect(),
            };
            let text = serde_json::to_string_pretty(&js).expect("space serializes");
            fs::write(path, text).map_err(|e| Error::io(path, e))
        }
        SpaceFormat::Csv => {
            let mut text = String::new();
            let ncoord = space.coords.as_ref().map_or(0, |c| c[0].len());
            text.push_str("id");
            for k in 0..ncoord {
                text.push_str(&format!(",x{k}"));
            }
            text.push_str(",weight\n");
            for i in 0..n {
                text.push_str(&space.ids[i]);
                if let Some(c) = &space.coords {
                    for v in &c[i] {
                        text.push_str(&format!(",{}", fmt_exact(*v)));
                    }
                }
                text.push_str(&format!(",{}\n", fmt_exact(space.weights[i])));
            }
            fs::write(path, text).map_err(|e| Error::io(path, e))?;
            if ncoord == 0 {
                let mut m = String::new();
                for i in 0..n {
                    let row: Vec<String> = space.row(i).iter().map(|v| fmt_exact(*v)).collect();
                    m.push_str(&row.join(","));
                    m.push('\n');
                }
                let dpath = companion_dist_path(path);
                fs::write(&dpath, m).map_err(|e| Error::io(&dpath, e))?;
            }
            Ok(())
        }
    }
}

/// Shortest representation that parses back to the same f64.
fn fmt_exact(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line3(d02: f64) -> Result<PointCloudSpace> {
        let dist = vec![0.0, 1.0, d02, 1.0, 0.0, 1.0, d02, 1.0, 0.0];
        PointCloudSpace::new(
            vec!["0".into(), "1".into(), "2".into()],
            None,
            dist,
            vec![1.0; 3],
        )
    }

    #[test]
    fn path_metric_on_three_points() {
        let s = line3(2.0).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.total_mass(), 3.0);
    }

    #[test]
    fn triangle_violation_names_triple() {
        match line3(5.0) {
            Err(Error::Triangle(0, 1, 2, _, _)) => {}
            other => panic!("expected triangle error, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_weight_rejected() {
        let err = PointCloudSpace::new(
            vec!["a".into(), "b".into()],
            None,
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1.0, 0.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonpositiveWeight { .. }));
    }

    #[test]
    fn asymmetric_and_duplicate_points_rejected() {
        let err = PointCloudSpace::new(
            vec!["a".into(), "b".into()],
            None,
            vec![0.0, 1.0, 2.0, 0.0],
            vec![1.0, 1.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Asymmetric(0, 1, _, _)));
        let err = PointCloudSpace::new(
            vec!["a".into(), "b".into()],
            None,
            vec![0.0, 0.0, 0.0, 0.0],
            vec![1.0, 1.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonpositiveDistance(0, 1, _)));
    }

    #[test]
    fn interval_grid_three() {
        let s = generate_space(&SpaceKind::IntervalGrid { n: 3 }).unwrap();
        let xs: Vec<f64> = s.coords().unwrap().iter().map(|c| c[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        for &w in s.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn snowflake_of_grid() {
        let s = generate_space(&SpaceKind::Snowflake {
            base: Box::new(SpaceKind::IntervalGrid { n: 3 }),
            eps: 0.5,
        })
        .unwrap();
        assert_eq!(s.d(0, 2), 1.0);
        assert!((s.d(0, 1) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(generate_space(&SpaceKind::Snowflake {
            base: Box::new(SpaceKind::IntervalGrid { n: 3 }),
            eps: 1.5,
        })
        .is_err());
    }

    #[test]
    fn cantor_level_two_by_hand() {
        // [0,1/9],[2/9,1/3],[2/3,7/9],[8/9,1]
        let s = generate_space(&SpaceKind::Cantor { level: 2 }).unwrap();
        let xs: Vec<f64> = s.coords().unwrap().iter().map(|c| c[0]).collect();
        let expect = [0.0, 1.0, 2.0, 3.0, 6.0, 7.0, 8.0, 9.0].map(|k| k / 9.0);
        assert_eq!(xs.len(), 8);
        for (a, b) in xs.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(generate_space(&SpaceKind::Cantor { level: 3 }).unwrap().len(), 16);
    }

    #[test]
    fn balls_are_strict() {
        let s = generate_space(&SpaceKind::IntervalGrid { n: 3 }).unwrap();
        assert_eq!(s.ball(1, 0.6), vec![0, 1, 2]);
        assert_eq!(s.ball(0, 0.5), vec![0]);
        assert_eq!(s.closed_ball(0, 0.5), vec![0, 1]);
        let s5 = generate_space(&SpaceKind::IntervalGrid { n: 5 }).unwrap();
        assert_eq!(s5.ball(2, 0.3), vec![1, 2, 3]);
    }

    #[test]
    fn measure_sums_weights() {
        let s = line3(2.0).unwrap();
        assert_eq!(s.measure(&[0, 1, 2]).unwrap(), 3.0);
        assert_eq!(s.measure(&[]).unwrap(), 0.0);
        assert!(matches!(s.measure(&[7]), Err(Error::UnknownPoint(7))));
        let two = PointCloudSpace::new(
            vec!["a".into(), "b".into()],
            None,
            vec![0.0, 1.0, 1.0, 0.0],
            vec![0.2, 0.3],
        )
        .unwrap();
        assert!((two.measure(&[0, 1]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exponents_of_interval_grid() {
        let s = generate_space(&SpaceKind::IntervalGrid { n: 64 }).unwrap();
        let grid: Vec<f64> = (1..=5).map(|k| 2f64.powi(-k)).collect();
        let e = s.estimate_exponents(&grid).unwrap();
        assert!(e.q >= 0.8 && e.q <= 1.2, "Q = {}", e.q);
        assert!(e.c_nu >= 1.0 && e.c_low >= 1.0 && e.c_rev >= 1.0 && e.eta >= 0.0);
    }

    #[test]
    fn exponents_of_cantor() {
        let s = generate_space(&SpaceKind::Cantor { level: 5 }).unwrap();
        let grid: Vec<f64> = (1..=4).map(|k| 3f64.powi(-k)).collect();
        let e = s.estimate_exponents(&grid).unwrap();
        let dim = 2f64.ln() / 3f64.ln();
        assert!((e.q - dim).abs() <= 0.1, "Q = {}", e.q);
    }

    #[test]
    fn single_point_exponents_degenerate() {
        let s = PointCloudSpace::new(vec!["a".into()], None, vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(
            s.estimate_exponents(&[0.1, 1.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn csv_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = generate_space(&SpaceKind::Circle { n: 7 }).unwrap();
        let p = dir.path().join("space.csv");
        save_space(&s, &p, SpaceFormat::Csv).unwrap();
        assert!(dir.path().join("dist.csv").exists());
        assert_eq!(load_space(&p, SpaceFormat::Csv).unwrap(), s);
        let j = dir.path().join("space.json");
        save_space(&s, &j, SpaceFormat::Json).unwrap();
        assert_eq!(load_space(&j, SpaceFormat::Json).unwrap(), s);
        let g = generate_space(&SpaceKind::IntervalGrid { n: 5 }).unwrap();
        let gp = dir.path().join("grid.csv");
        save_space(&g, &gp, SpaceFormat::Csv).unwrap();
        assert_eq!(load_space(&gp, SpaceFormat::Csv).unwrap(), g);
    }

    #[test]
    fn json_zero_weight_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        fs::write(
            &p,
            r#"{"points":[{"id":0,"weight":1},{"id":1,"weight":0}],"dist":[[0,1],[1,0]]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_space(&p, SpaceFormat::Json),
            Err(Error::NonpositiveWeight { .. })
        ));
    }
}
