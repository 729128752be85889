//! Ratio tables produced by the sweeps and checks.

use serde::{Deserialize, Serialize};

use crate::fit::SlopeFit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub param1: f64,
    pub param2: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub geomean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub name: String,
    pub rows: Vec<ReportRow>,
    pub fit: Option<SlopeFit>,
    pub notes: Vec<String>,
}

/// `lhs / rhs` with `0/0 = 0` (a vanishing left side satisfies any bound).
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// `v` rounded to twelve significant digits.
pub fn round12(v: f64) -> f64 {
    if v.is_finite() {
        fmt12(v).parse().unwrap_or(v)
    } else {
        v
    }
}

/// Twelve significant digits.
pub fn fmt12(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        format!("{v}")
    }
}

impl ReportTable {
    pub fn new(name: impl Into<String>) -> Self {
        ReportTable {
            name: name.into(),
            rows: Vec::new(),
            fit: None,
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, param1: f64, param2: f64, lhs: f64, rhs: f64) {
        self.rows.push(ReportRow {
            label: label.into(),
            param1,
            param2,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
        });
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }

    pub fn min_ratio(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.ratio)
            .fold(f64::INFINITY, f64::min)
    }

    /// Min, max and geometric mean of the ratios; the geometric mean runs
    /// over the positive finite ratios only.
    pub fn summary(&self) -> Summary {
        let positive: Vec<f64> = self
            .rows
            .iter()
            .map(|r| r.ratio)
            .filter(|r| *r > 0.0 && r.is_finite())
            .collect();
        let geomean = if positive.is_empty() {
            0.0
        } else {
            (positive.iter().map(|r| r.ln()).sum::<f64>() / positive.len() as f64).exp()
        };
        Summary {
            name: self.name.clone(),
            min: if self.rows.is_empty() { 0.0 } else { self.min_ratio() },
            max: self.max_ratio(),
            geomean,
            count: self.rows.len(),
        }
    }

    /// `name,param1,param2,value` lines: three per row (lhs, rhs, ratio).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,param1,param2,value\n");
        out.push_str(&self.csv_rows(""));
        out
    }

    /// The CSV body with every label prefixed.
    pub fn csv_rows(&self, prefix: &str) -> String {
        let mut out = String::new();
        for r in &self.rows {
            for (q, v) in [("lhs", r.lhs), ("rhs", r.rhs), ("ratio", r.ratio)] {
                out.push_str(&format!(
                    "{prefix}{}/{},{},{},{}\n",
                    r.label,
                    q,
                    fmt12(r.param1),
                    fmt12(r.param2),
                    fmt12(v)
                ));
            }
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let s = self.summary();
        serde_json::json!({
            "name": s.name,
            "min": fmt12(s.min),
            "max": fmt12(s.max),
            "geomean": fmt12(s.geomean),
            "count": s.count,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_matches_rows() {
        let mut t = ReportTable::new("t");
        t.push("a", 0.0, 1.0, 1.0, 2.0);
        t.push("b", 0.0, 1.0, 8.0, 1.0);
        t.push("c", 0.0, 1.0, 0.0, 3.0);
        let s = t.summary();
        assert_eq!(s.count, 3);
        assert_eq!(s.min, 0.0);
        assert_eq!(s.max, 8.0);
        assert!((s.geomean - 2.0).abs() < 1e-12);
        assert_eq!(t.to_csv().lines().count(), 1 + 9);
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(ratio(0.0, 0.0), 0.0);
        assert_eq!(ratio(1.0, 0.0), f64::INFINITY);
        assert_eq!(fmt12(1.0), "1.00000000000e0");
    }
}
