//! Frequency-distance scores: the distance from each embedding row to the
//! geometric median.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geomedian::{distances, MedianResult};
use crate::numeric::pairwise_sum;
use crate::vectorizer::EmbeddingMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    /// `fd[i]` is the score of document `i`.
    fd: Vec<f64>,
    /// Scores sorted ascending, for rank queries.
    sorted: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: MedianResult,
}

impl ScoreSet {
    /// Builds a score set from raw scores. `median` is the point the scores
    /// were measured against.
    pub fn from_scores(fd: Vec<f64>, median: MedianResult) -> Result<Self> {
        if fd.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if let Some((i, x)) = fd
            .iter()
            .enumerate()
            .find(|(_, x)| !(x.is_finite() && **x >= 0.0))
        {
            return Err(Error::Config(format!("score of document {i} is {x}")));
        }
        let mut sorted = fd.clone();
        sorted.sort_by(f64::total_cmp);
        let min = sorted[0];
        let max = sorted[sorted.len() - 1];
        let mean = (pairwise_sum(&fd) / fd.len() as f64).clamp(min, max);
        Ok(ScoreSet {
            fd,
            sorted,
            min,
            max,
            mean,
            median,
        })
    }

    pub fn len(&self) -> usize {
        self.fd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fd.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.fd
    }

    pub fn score(&self, doc_id: usize) -> Result<f64> {
        self.fd
            .get(doc_id)
            .copied()
            .ok_or(Error::UnknownDocId(doc_id))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.fd.iter().copied().enumerate()
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.fd)
    }

    /// Percentage of samples with a strictly smaller score. Tied samples
    /// share the lower rank.
    pub fn percentile_rank(&self, doc_id: usize) -> Result<f64> {
        let x = self.score(doc_id)?;
        Ok(self.rank_of(x))
    }

    fn rank_of(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|&s| s < x);
        below as f64 * 100.0 / self.len() as f64
    }

    /// Writes `doc_id,fd,percentile`, one row per document in id order.
    /// Scores use the shortest representation that round-trips; percentiles
    /// are rounded to two decimals for display.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "doc_id,fd,percentile")?;
        for (id, fd) in self.iter() {
            writeln!(out, "{id},{fd},{:.2}", self.rank_of(fd))?;
        }
        Ok(())
    }
}

pub fn fd_scores(points: &EmbeddingMatrix, median: &MedianResult) -> Result<ScoreSet> {
    if median.point.len() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            actual: median.point.len(),
        });
    }
    ScoreSet::from_scores(distances(points, &median.point), median.clone())
}
