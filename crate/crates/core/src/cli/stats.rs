//! Summary statistics over a written `scores.csv`.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

pub const PERCENTILES: [f64; 5] = [1.0, 25.0, 50.0, 75.0, 99.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsSummary {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `(p, value)` for each entry of [`PERCENTILES`].
    pub percentiles: Vec<(f64, f64)>,
}

impl StatsSummary {
    pub fn from_scores(scores: &[f64]) -> Option<Self> {
        if scores.is_empty() {
            return None;
        }
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(StatsSummary {
            n: sorted.len(),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            mean: pairwise_sum(&sorted) / sorted.len() as f64,
            percentiles: PERCENTILES
                .iter()
                .map(|&p| (p, quantile(&sorted, p / 100.0)))
                .collect(),
        })
    }

    pub fn percentile(&self, p: f64) -> Option<f64> {
        self.percentiles
            .iter()
            .find(|(q, _)| *q == p)
            .map(|(_, v)| *v)
    }
}

/// Quantile of ascending `sorted` data by linear interpolation between
/// order statistics at position `q * (n - 1)`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

impl fmt::Display for StatsSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<6} {:>12}", "N", self.n)?;
        writeln!(f, "{:<6} {:>12.6}", "min", self.min)?;
        writeln!(f, "{:<6} {:>12.6}", "mean", self.mean)?;
        writeln!(f, "{:<6} {:>12.6}", "max", self.max)?;
        for (p, v) in &self.percentiles {
            writeln!(f, "{:<6} {:>12.6}", format!("P{p}"), v)?;
        }
        Ok(())
    }
}

/// Reads the `fd` column of a scores file.
pub fn read_scores_csv(path: &Path) -> Result<Vec<f64>> {
    let bad = |reason: String| Error::ScoresFile {
        path: path.to_path_buf(),
        reason,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = headers
        .iter()
        .position(|h| h == "fd")
        .ok_or_else(|| bad("no `fd` column".into()))?;
    let mut scores = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let value: f64 = rec[col]
            .parse()
            .map_err(|_| bad(format!("line {}: `{}` is not a number", i + 2, &rec[col])))?;
        if !value.is_finite() {
            return Err(bad(format!("line {}: non-finite score", i + 2)));
        }
        scores.push(value);
    }
    if scores.is_empty() {
        return Err(bad("no scores".into()));
    }
    Ok(scores)
}

pub fn cmd_stats(path: &Path) -> Result<StatsSummary> {
    let scores = read_scores_csv(path)?;
    Ok(StatsSummary::from_scores(&scores).expect("non-empty"))
}
