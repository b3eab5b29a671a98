//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the code paths it checks, except for the seeded
//! sampling primitive that the stratified-selection oracle must share to
//! reproduce the same draws.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use fdprune::geomedian::MedianResult;
use fdprune::rng::{sample_indices, stage_rng};
use fdprune::scoring::ScoreSet;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zipf};

// ---------------------------------------------------------------------------
// TF-IDF

pub struct DenseTfIdf {
    pub terms: Vec<String>,
    pub tf: Vec<Vec<f64>>,
    pub idf: Vec<f64>,
    pub tfidf: Vec<Vec<f64>>,
}

/// Straight dense recomputation of term frequency, document frequency, IDF
/// and their product from raw token lists.
pub fn dense_tfidf(docs: &[Vec<&str>]) -> DenseTfIdf {
    let terms: Vec<String> = docs
        .iter()
        .flatten()
        .map(|s| s.to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = docs.len() as f64;
    let mut tf = vec![vec![0.0; terms.len()]; docs.len()];
    let mut idf = vec![0.0; terms.len()];
    for (j, term) in terms.iter().enumerate() {
        let mut df = 0usize;
        for (i, doc) in docs.iter().enumerate() {
            let count = doc.iter().filter(|t| **t == term).count();
            if count > 0 {
                df += 1;
            }
            if !doc.is_empty() {
                tf[i][j] = count as f64 / doc.len() as f64;
            }
        }
        idf[j] = (n / (1.0 + df as f64)).ln();
    }
    let tfidf = tf
        .iter()
        .map(|row| row.iter().zip(&idf).map(|(a, b)| a * b).collect())
        .collect();
    DenseTfIdf {
        terms,
        tf,
        idf,
        tfidf,
    }
}

// ---------------------------------------------------------------------------
// Geometric median

pub fn sum_of_distances(points: &[Vec<f64>], g: &[f64]) -> f64 {
    points
        .iter()
        .map(|p| {
            p.iter()
                .zip(g)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}

/// Minimizes the sum of distances with damped Newton steps (exact gradient
/// and Hessian, backtracking line search), then compares against every data
/// point in case the minimizer sits on one. Returns the best point found.
pub fn median_oracle(points: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let dim = points[0].len();
    let n = points.len() as f64;
    let mut g: Vec<f64> = (0..dim)
        .map(|j| points.iter().map(|p| p[j]).sum::<f64>() / n)
        .collect();
    let mut f = sum_of_distances(points, &g);

    for _ in 0..500 {
        let mut grad = DVector::<f64>::zeros(dim);
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        for p in points {
            let diff = DVector::from_iterator(dim, g.iter().zip(p).map(|(a, b)| a - b));
            let d = diff.norm();
            if d < 1e-14 {
                continue;
            }
            let u = &diff / d;
            grad += &u;
            hess += (DMatrix::identity(dim, dim) - &u * u.transpose()) / d;
        }
        if grad.norm() < 1e-14 * n {
            break;
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => grad.clone(),
        };
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-20 {
            let cand: Vec<f64> = g.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let fc = sum_of_distances(points, &cand);
            if fc < f {
                g = cand;
                f = fc;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }

    for p in points {
        let fp = sum_of_distances(points, p);
        if fp < f {
            f = fp;
            g = p.clone();
        }
    }
    (g, f)
}

/// Random instance: `n` points in `dim` dimensions. Some instances mix in
/// clusters and exact duplicates.
pub fn random_points(seed: u64, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut pts: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| normal.sample(&mut rng) * rng.random_range(0.5..3.0))
                .collect()
        })
        .collect();
    if seed.is_multiple_of(3) {
        let anchor = pts[0].clone();
        for p in pts.iter_mut().skip(1).step_by(4) {
            *p = anchor.clone();
        }
    }
    pts
}

// ---------------------------------------------------------------------------
// Pruning

pub fn score_set(fd: Vec<f64>) -> ScoreSet {
    let median = MedianResult {
        point: vec![0.0],
        objective: 0.0,
        iterations: 1,
        converged: true,
        epsilon: 1e-5,
        initial_objective: 0.0,
        lower_bound: 0.0,
        trace: vec![],
    };
    ScoreSet::from_scores(fd, median).unwrap()
}

/// Top-`m` ids by score (descending when `largest`), ties by id, via a full sort.
pub fn sort_oracle(fd: &[f64], m: usize, largest: bool) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..fd.len()).collect();
    ids.sort_by(|&a, &b| {
        let by_score = if largest {
            fd[b].partial_cmp(&fd[a]).unwrap()
        } else {
            fd[a].partial_cmp(&fd[b]).unwrap()
        };
        by_score.then(a.cmp(&b))
    });
    let mut top = ids[..m].to_vec();
    top.sort_unstable();
    top
}

pub struct SimulatedStratified {
    /// `(stratum index, population, m_B)` in the order the loop visits them.
    pub visits: Vec<(usize, usize, usize)>,
    pub selected_per_stratum: Vec<usize>,
    pub kept: Vec<usize>,
    pub leftover: usize,
}

/// Step-by-step replay of the stratified loop:
///
/// ```text
/// R_1..R_k  <- k equal-width ranges over [min, max]
/// B         <- non-empty strata
/// while B != {}:
///     B_min <- argmin |B|            (lowest index on ties)
///     m_B   <- min(|B_min|, floor(m / |B|))
///     sample m_B members of B_min without replacement
///     B <- B \ {B_min};  m <- m - m_B
/// ```
pub fn simulate_stratified(fd: &[f64], k: usize, m: usize, seed: u64) -> SimulatedStratified {
    let min = fd.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = fd.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / k as f64;
    let mut strata: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (id, &s) in fd.iter().enumerate() {
        let b = if width > 0.0 {
            (((s - min) / width).floor() as usize).min(k - 1)
        } else {
            0
        };
        strata.entry(b).or_default().push(id);
    }

    let mut rng = stage_rng(seed, "prune");
    let mut remaining_budget = m;
    let mut working: Vec<(usize, Vec<usize>)> = strata.into_iter().collect();
    let mut visits = Vec::new();
    let mut selected_per_stratum = vec![0; k];
    let mut kept = Vec::new();
    while !working.is_empty() {
        let mut pos = 0;
        for (p, (_, members)) in working.iter().enumerate() {
            if members.len() < working[pos].1.len() {
                pos = p;
            }
        }
        let (index, members) = working.remove(pos);
        let m_b = members.len().min(remaining_budget / (working.len() + 1));
        for p in sample_indices(&mut rng, members.len(), m_b) {
            kept.push(members[p]);
        }
        visits.push((index, members.len(), m_b));
        selected_per_stratum[index] = m_b;
        remaining_budget -= m_b;
    }
    kept.sort_unstable();
    SimulatedStratified {
        visits,
        selected_per_stratum,
        kept,
        leftover: remaining_budget,
    }
}

// ---------------------------------------------------------------------------
// PCA

/// Top eigenpairs of the sample covariance via a dense symmetric
/// eigendecomposition, largest first.
pub fn pca_oracle(rows: &[Vec<f64>], components: usize) -> Vec<(f64, Vec<f64>)> {
    let n = rows.len();
    let dim = rows[0].len();
    let x = DMatrix::from_fn(n, dim, |i, j| rows[i][j]);
    let mean = x.row_mean();
    let centered = DMatrix::from_fn(n, dim, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = cov.symmetric_eigen();
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..dim)
        .map(|c| {
            (
                eig.eigenvalues[c],
                eig.eigenvectors.column(c).iter().copied().collect(),
            )
        })
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    pairs.truncate(components);
    pairs
}

// ---------------------------------------------------------------------------
// Synthetic corpora

fn word(mut i: usize) -> String {
    let mut s = String::new();
    loop {
        s.push((b'a' + (i % 26) as u8) as char);
        i /= 26;
        if i == 0 {
            break;
        }
    }
    s
}

/// Writes a JSONL corpus with `question`, `answer` and `label` fields.
/// Words follow a Zipf law over `vocab` types; documents hold
/// `tokens_per_doc / 2` words per field on average.
pub fn write_synthetic_jsonl(
    path: &Path,
    n_docs: usize,
    tokens_per_doc: usize,
    vocab: usize,
    seed: u64,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = Zipf::new(vocab as f64, 1.05).unwrap();
    let words: Vec<String> = (0..vocab).map(word).collect();
    let file = std::fs::File::create(path).unwrap();
    let mut out = std::io::BufWriter::new(file);
    let half = tokens_per_doc / 2;
    for i in 0..n_docs {
        let field = |rng: &mut ChaCha8Rng| {
            let len = rng.random_range(half / 2..=half + half / 2);
            (0..len)
                .map(|_| words[zipf.sample(rng) as usize - 1].as_str())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let q = field(&mut rng);
        let a = field(&mut rng);
        let record = serde_json::json!({ "question": format!("{q}?"), "answer": format!("{a}."), "label": i % 2 });
        writeln!(out, "{record}").unwrap();
    }
    out.flush().unwrap();
}
