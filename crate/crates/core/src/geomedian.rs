//! Geometric median of the embedding rows.
//!
//! Minimizes `f(g) = sum_i |g - t_i|` with the Weiszfeld fixed-point map,
//! using the Vardi-Zhang modification when the iterate lands on data points:
//!
//! ```text
//! T(y)  = (sum_{i: t_i != y} t_i / d_i) / (sum_{i: t_i != y} 1 / d_i)
//! R(y)  = sum_{i: t_i != y} (t_i - y) / d_i
//! y'    = max(0, 1 - eta/|R|) T(y) + min(1, eta/|R|) y
//! ```
//!
//! where `eta` is the number of points coinciding with `y`. With `eta = 0`
//! this is the plain Weiszfeld step; `|R| <= eta` certifies that `y` is the
//! minimizer.
//!
//! Each step also yields a certified lower bound on the minimum (see
//! [`vardi_zhang_step`]). The solver stops once `f - bound <= epsilon * bound`,
//! which guarantees `f(g) <= (1 + epsilon) f(g*)`, or after `max_iterations`.
//!
//! Every reduction has a fixed order: per-row distances are summed pairwise,
//! and the weighted point sum is accumulated column by column in row order.
//! Results are therefore bit-identical for any thread count.

use log::trace;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{norm, pairwise_sum};
use crate::vectorizer::EmbeddingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Distances at or below this count as coinciding with the iterate.
    pub coincidence_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1e-5,
            max_iterations: 1000,
            coincidence_tolerance: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if self.coincidence_tolerance.is_nan() || self.coincidence_tolerance <= 0.0 {
            return Err(Error::Config(format!(
                "coincidence_tolerance must be > 0, got {}",
                self.coincidence_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub step_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianResult {
    pub point: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub epsilon: f64,
    /// Objective at the starting point (the coordinate-wise mean).
    pub initial_objective: f64,
    /// Best certified lower bound on the minimum objective. Convergence means
    /// `objective - lower_bound <= epsilon * lower_bound`.
    pub lower_bound: f64,
    /// One record per accepted step.
    pub trace: Vec<IterationRecord>,
}

/// Sum of Euclidean distances from `g` to every row.
pub fn objective(points: &EmbeddingMatrix, g: &[f64]) -> Result<f64> {
    if g.len() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            actual: g.len(),
        });
    }
    Ok(pairwise_sum(&distances(points, g)))
}

pub(crate) fn distances(points: &EmbeddingMatrix, g: &[f64]) -> Vec<f64> {
    let g_sq: f64 = g.iter().map(|x| x * x).sum();
    points
        .rows()
        .par_iter()
        .map(|row| row.distance_to_dense(g, g_sq))
        .collect()
}

/// Column-major copy of the matrix: for each column, `(row, value)` in row order.
struct Columns {
    offsets: Vec<usize>,
    rows: Vec<usize>,
    values: Vec<f64>,
}

impl Columns {
    fn new(points: &EmbeddingMatrix) -> Self {
        let dim = points.dim();
        let mut offsets = vec![0usize; dim + 1];
        for row in points.rows() {
            for &j in row.indices() {
                offsets[j + 1] += 1;
            }
        }
        for j in 0..dim {
            offsets[j + 1] += offsets[j];
        }
        let nnz = offsets[dim];
        let mut cursor = offsets.clone();
        let mut rows = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        for (i, row) in points.rows().iter().enumerate() {
            for (j, x) in row.iter() {
                rows[cursor[j]] = i;
                values[cursor[j]] = x;
                cursor[j] += 1;
            }
        }
        Columns {
            offsets,
            rows,
            values,
        }
    }

    /// `out[j] = sum_i weights[i] * t_ij`, summed in row order per column.
    fn weighted_sum(&self, weights: &[f64]) -> Vec<f64> {
        (0..self.offsets.len() - 1)
            .into_par_iter()
            .map(|j| {
                let span = self.offsets[j]..self.offsets[j + 1];
                self.rows[span.clone()]
                    .iter()
                    .zip(&self.values[span])
                    .map(|(&i, &x)| weights[i] * x)
                    .sum()
            })
            .collect()
    }
}

enum Step {
    /// Proposed next iterate, with a lower bound on the optimal objective
    /// certified at the current one.
    Move { next: Vec<f64>, lower_bound: f64 },
    /// The current iterate is certified optimal.
    Optimal,
}

/// One Vardi-Zhang step from `y`, whose distances to the rows are `dists`
/// and whose objective is `f`.
///
/// The lower bound comes from the dual of the median problem: any unit-ball
/// vectors `u_i` with `sum_i u_i = 0` give `f* >= sum_i u_i . (y - t_i)`.
/// Taking `u_i` along `y - t_i` (and along `R` for coincident points), then
/// recentering them by their mean `G / n` and shrinking by `1 + |G| / n`,
/// yields
///
/// ```text
/// f* >= (f(y) - G . (y - mean)) / (1 + |G| / n)
/// ```
///
/// where `G` is the residual subgradient. The bound is tight at the optimum.
fn vardi_zhang_step(
    columns: &Columns,
    y: &[f64],
    dists: &[f64],
    f: f64,
    mean: &[f64],
    tol: f64,
) -> Step {
    let mut coincident = 0usize;
    let weights: Vec<f64> = dists
        .iter()
        .map(|&d| {
            if d <= tol {
                coincident += 1;
                0.0
            } else {
                1.0 / d
            }
        })
        .collect();
    let total_weight = pairwise_sum(&weights);
    if total_weight == 0.0 {
        // Every point coincides with y.
        return Step::Optimal;
    }
    let mut target = columns.weighted_sum(&weights);
    for t in &mut target {
        *t /= total_weight;
    }

    // R(y) = W * (T(y) - y); the residual subgradient is -R scaled down by
    // what the coincident points can absorb.
    let diff: Vec<f64> = target.iter().zip(y).map(|(t, y)| t - y).collect();
    let pull = norm(&diff) * total_weight;
    let eta = coincident as f64;
    if coincident > 0 && pull <= eta {
        return Step::Optimal;
    }
    let keep = if coincident == 0 { 0.0 } else { eta / pull };
    let shrink = total_weight * (1.0 - keep);
    let g_dot: f64 = diff
        .iter()
        .zip(y.iter().zip(mean))
        .map(|(r, (y, m))| -shrink * r * (y - m))
        .sum();
    let g_norm = pull * (1.0 - keep);
    let lower_bound = (f - g_dot) / (1.0 + g_norm / dists.len() as f64);

    let next = if coincident == 0 {
        target
    } else {
        target
            .iter()
            .zip(y)
            .map(|(t, y)| (1.0 - keep) * t + keep * y)
            .collect()
    };
    Step::Move { next, lower_bound }
}

/// When one data point (with its duplicates) carries more inverse-distance
/// weight than all the others together, the iterate is closing in on it and Weiszfeld steps would
/// only approach it geometrically. Test the optimality certificate at that
/// point directly and return it, with its objective, if it is the minimizer.
fn probe_nearest_point(
    points: &EmbeddingMatrix,
    columns: &Columns,
    dists: &[f64],
    f: f64,
    cfg: &SolverConfig,
) -> Option<(Vec<f64>, f64)> {
    let (nearest, &d_min) = dists
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))?;
    if d_min <= cfg.coincidence_tolerance {
        return None;
    }
    // Points at the same distance as the nearest one may be its duplicates;
    // weigh them as a group.
    let group_radius = d_min * (1.0 + 1e-9);
    let (near, far): (Vec<f64>, Vec<f64>) = dists
        .iter()
        .map(|&d| 1.0 / d)
        .partition(|&w| 1.0 / w <= group_radius);
    if pairwise_sum(&near) <= pairwise_sum(&far) {
        return None;
    }
    let cand = points.row(nearest).to_dense();
    let cand_dists = distances(points, &cand);
    let cand_f = pairwise_sum(&cand_dists);
    if cand_f > f {
        return None;
    }
    match vardi_zhang_step(
        columns,
        &cand,
        &cand_dists,
        cand_f,
        &cand,
        cfg.coincidence_tolerance,
    ) {
        Step::Optimal => Some((cand, cand_f)),
        Step::Move { .. } => None,
    }
}

/// Relative gap accepted as rounding noise when a step makes no progress.
const NOISE_GAP: f64 = 1e-9;

pub fn geometric_median(points: &EmbeddingMatrix, cfg: &SolverConfig) -> Result<MedianResult> {
    cfg.validate()?;
    let n = points.n_rows();
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    let columns = Columns::new(points);

    let mean = columns.weighted_sum(&vec![1.0 / n as f64; n]);
    let mut y = mean.clone();
    let mut dists = distances(points, &y);
    let mut f = pairwise_sum(&dists);
    let initial_objective = f;
    let mut trace_records = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut lower_bound = f64::NEG_INFINITY;

    for k in 1..=cfg.max_iterations {
        iterations = k;
        if let Some((cand, cand_f)) = probe_nearest_point(points, &columns, &dists, f, cfg) {
            let step_norm = crate::numeric::distance(&cand, &y);
            trace!("median: k={k} jumped to a certified data point, f={cand_f}");
            trace_records.push(IterationRecord {
                iteration: k,
                objective: cand_f,
                step_norm,
            });
            y = cand;
            f = cand_f;
            lower_bound = f;
            converged = true;
            break;
        }
        let next = match vardi_zhang_step(&columns, &y, &dists, f, &mean, cfg.coincidence_tolerance)
        {
            Step::Optimal => {
                lower_bound = f;
                converged = true;
                break;
            }
            Step::Move {
                next,
                lower_bound: lb,
            } => {
                lower_bound = lower_bound.max(lb);
                if f - lower_bound <= cfg.epsilon * lower_bound {
                    converged = true;
                    break;
                }
                next
            }
        };
        let next_dists = distances(points, &next);
        let next_f = pairwise_sum(&next_dists);
        if next_f > f || next == y {
            // Descent is guaranteed in exact arithmetic; an increase or a
            // fixed point means we are at rounding level, so keep the
            // current iterate.
            converged = f - lower_bound <= NOISE_GAP * lower_bound;
            trace!("median: iteration {k} rejected ({f} -> {next_f})");
            break;
        }
        let step_norm = crate::numeric::distance(&next, &y);
        trace!("median: k={k} f={next_f} step={step_norm} bound={lower_bound}");
        trace_records.push(IterationRecord {
            iteration: k,
            objective: next_f,
            step_norm,
        });
        y = next;
        dists = next_dists;
        f = next_f;
    }

    Ok(MedianResult {
        point: y,
        objective: f,
        iterations,
        converged,
        epsilon: cfg.epsilon,
        initial_objective,
        lower_bound,
        trace: trace_records,
    })
}
