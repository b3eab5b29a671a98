//! Two-dimensional PCA projection of the embeddings, for plotting kept
//! versus pruned samples.
//!
//! The covariance is never materialized: `C v = Xcᵀ (Xc v) / (N - 1)` is
//! evaluated against the sparse rows with the centering folded in, so the
//! cost per product is `O(nnz + dim)`.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::{dot, norm};
use crate::pruner::CoresetSelection;
use crate::rng::stage_rng;
use crate::vectorizer::EmbeddingMatrix;

pub const PROJECT_STREAM: &str = "project";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcaConfig {
    pub components: usize,
    /// Power iterations per component.
    pub max_iterations: usize,
    /// Stop early once successive unit vectors differ by less than this.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for PcaConfig {
    fn default() -> Self {
        PcaConfig {
            components: 2,
            max_iterations: 50,
            tolerance: 1e-7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit loading vectors, largest variance first.
    pub components: Vec<Vec<f64>>,
    /// Variance captured by each component.
    pub variances: Vec<f64>,
}

struct Centered<'a> {
    x: &'a EmbeddingMatrix,
    mean: Vec<f64>,
}

impl Centered<'_> {
    /// `Xc v`, one entry per row.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let shift = dot(&self.mean, v);
        self.x
            .rows()
            .iter()
            .map(|r| r.dot_dense(v) - shift)
            .collect()
    }

    /// `Xcᵀ u`.
    fn apply_transpose(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.x.dim()];
        for (row, &ui) in self.x.rows().iter().zip(u) {
            for (j, x) in row.iter() {
                out[j] += ui * x;
            }
        }
        let total: f64 = u.iter().sum();
        for (o, m) in out.iter_mut().zip(&self.mean) {
            *o -= m * total;
        }
        out
    }

    fn covariance_times(&self, v: &[f64]) -> Vec<f64> {
        let scale = 1.0 / (self.x.n_rows() - 1) as f64;
        let mut out = self.apply_transpose(&self.apply(v));
        for o in &mut out {
            *o *= scale;
        }
        out
    }
}

fn column_mean(x: &EmbeddingMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; x.dim()];
    for row in x.rows() {
        for (j, v) in row.iter() {
            mean[j] += v;
        }
    }
    let n = x.n_rows() as f64;
    for m in &mut mean {
        *m /= n;
    }
    mean
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        for (x, y) in v.iter_mut().zip(b) {
            *x -= c * y;
        }
    }
}

fn normalize_in_place(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

pub fn fit_pca(x: &EmbeddingMatrix, cfg: &PcaConfig) -> Result<Pca> {
    if x.n_rows() < 2 {
        return Err(Error::TooFewDocuments(x.n_rows()));
    }
    let dim = x.dim();
    let op = Centered {
        x,
        mean: column_mean(x),
    };
    let mut rng = stage_rng(cfg.seed, PROJECT_STREAM);
    let mut components: Vec<Vec<f64>> = Vec::with_capacity(cfg.components);
    let mut variances = Vec::with_capacity(cfg.components);

    for _ in 0..cfg.components {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, &components);
        normalize_in_place(&mut v);

        let deflated = |v: &[f64]| {
            let mut w = op.covariance_times(v);
            for (c, &lambda) in components.iter().zip(&variances) {
                let proj = lambda * dot(c, v);
                for (wi, ci) in w.iter_mut().zip(c) {
                    *wi -= proj * ci;
                }
            }
            w
        };

        for _ in 0..cfg.max_iterations {
            let mut w = deflated(&v);
            orthogonalize(&mut w, &components);
            if normalize_in_place(&mut w) == 0.0 {
                v = w;
                break;
            }
            let change = crate::numeric::distance(&w, &v);
            v = w;
            if change < cfg.tolerance {
                break;
            }
        }
        fix_sign(&mut v);
        let variance = if v.iter().all(|&c| c == 0.0) {
            0.0
        } else {
            dot(&v, &deflated(&v)).max(0.0)
        };
        variances.push(variance);
        components.push(v);
    }

    Ok(Pca {
        mean: op.mean,
        components,
        variances,
    })
}

impl Pca {
    /// Coordinates of every row in component space, `coords[i][c]`.
    pub fn transform(&self, x: &EmbeddingMatrix) -> Result<Vec<Vec<f64>>> {
        if x.dim() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: x.dim(),
            });
        }
        let shifts: Vec<f64> = self.components.iter().map(|c| dot(&self.mean, c)).collect();
        Ok(x.rows()
            .iter()
            .map(|r| {
                self.components
                    .iter()
                    .zip(&shifts)
                    .map(|(c, s)| r.dot_dense(c) - s)
                    .collect()
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub pca: Pca,
    pub coords: Vec<[f64; 2]>,
}

pub fn project(x: &EmbeddingMatrix, cfg: &PcaConfig) -> Result<Projection> {
    let cfg = PcaConfig {
        components: 2,
        ..*cfg
    };
    let pca = fit_pca(x, &cfg)?;
    let coords = pca
        .transform(x)?
        .into_iter()
        .map(|c| [c[0], c[1]])
        .collect();
    Ok(Projection { pca, coords })
}

impl Projection {
    /// Writes `doc_id,pc1,pc2,kept` with `kept` as 1 or 0.
    pub fn write_csv<W: Write>(
        &self,
        selection: &CoresetSelection,
        mut out: W,
    ) -> std::io::Result<()> {
        let mut kept = vec![false; self.coords.len()];
        for &id in &selection.kept {
            if let Some(k) = kept.get_mut(id) {
                *k = true;
            }
        }
        writeln!(out, "doc_id,pc1,pc2,kept")?;
        for (id, c) in self.coords.iter().enumerate() {
            writeln!(out, "{id},{},{},{}", c[0], c[1], u8::from(kept[id]))?;
        }
        Ok(())
    }
}
