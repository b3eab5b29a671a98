//! Unigram TF-IDF embeddings.
//!
//! For document `i` and term `j`:
//!
//! ```text
//! tf[i][j] = count(j in i) / tokens(i)
//! idf[j]   = ln(N / (1 + df(j)))
//! t[i][j]  = tf[i][j] * idf[j]
//! ```
//!
//! `idf` may be zero or negative for terms present in most documents. Rows
//! are sparse; a term whose `idf` is exactly zero drops out of every row.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use rayon::prelude::*;

use crate::corpus::{Corpus, TokenStream, Tokenizer};
use crate::error::{Error, Result};

/// Sparse vector with strictly increasing indices and non-zero finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a vector from `(index, value)` pairs. Pairs must be sorted by
    /// index without duplicates; zero values are dropped.
    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        let mut v = SparseVector::zeros(dim);
        for (j, x) in entries {
            if j >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: j + 1,
                });
            }
            if let Some(&last) = v.indices.last() {
                if j <= last {
                    return Err(Error::Config(format!(
                        "sparse indices must be strictly increasing ({last} then {j})"
                    )));
                }
            }
            if !x.is_finite() {
                return Err(Error::Config(format!("non-finite value at index {j}")));
            }
            if x != 0.0 {
                v.indices.push(j);
                v.values.push(x);
            }
        }
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn get(&self, j: usize) -> f64 {
        match self.indices.binary_search(&j) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(j, x)| x * dense[j]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (j, x) in self.iter() {
            out[j] = x;
        }
        out
    }

    /// Euclidean distance to a dense point whose squared norm is `dense_norm_sq`.
    ///
    /// Uses `|a|^2 - 2 a.b + |b|^2`, falling back to an exact coordinate-wise
    /// sum when cancellation would make that expansion unreliable.
    pub fn distance_to_dense(&self, dense: &[f64], dense_norm_sq: f64) -> f64 {
        debug_assert_eq!(dense.len(), self.dim);
        let self_sq = self.norm_sq();
        let expanded = self_sq - 2.0 * self.dot_dense(dense) + dense_norm_sq;
        if expanded > 1e-6 * (self_sq + dense_norm_sq) {
            return expanded.sqrt();
        }
        self.exact_distance_to_dense(dense)
    }

    pub fn exact_distance_to_dense(&self, dense: &[f64]) -> f64 {
        let mut sum = 0.0;
        let mut next = self.indices.iter().zip(&self.values).peekable();
        for (j, &y) in dense.iter().enumerate() {
            let x = match next.peek() {
                Some(&(&idx, &val)) if idx == j => {
                    next.next();
                    val
                }
                _ => 0.0,
            };
            let d = x - y;
            sum += d * d;
        }
        sum.sqrt()
    }

    fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

/// Sorted term list with document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<usize>,
    index: HashMap<String, usize>,
    n_docs: usize,
}

impl Vocabulary {
    pub fn build(streams: &[TokenStream]) -> Result<Self> {
        if streams.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let per_doc: Vec<HashSet<&str>> = streams
            .par_iter()
            .map(|s| s.tokens.iter().map(String::as_str).collect())
            .collect();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for set in &per_doc {
            for &t in set {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
        if counts.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut entries: Vec<(&str, usize)> = counts.into_iter().collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(b.0));

        let terms: Vec<String> = entries.iter().map(|(t, _)| t.to_string()).collect();
        let df = entries.iter().map(|(_, c)| *c).collect();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Vocabulary {
            terms,
            df,
            index,
            n_docs: streams.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, j: usize) -> usize {
        self.df[j]
    }

    pub fn doc_frequencies(&self) -> &[usize] {
        &self.df
    }

    /// Number of documents the vocabulary was built from.
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }
}

pub fn term_frequency(tokens: &TokenStream, vocab: &Vocabulary) -> Result<SparseVector> {
    if tokens.tokens.is_empty() {
        return Ok(SparseVector::zeros(vocab.len()));
    }
    let mut ids = Vec::with_capacity(tokens.tokens.len());
    for t in &tokens.tokens {
        ids.push(
            vocab
                .index_of(t)
                .ok_or_else(|| Error::OutOfVocabulary(t.clone()))?,
        );
    }
    ids.sort_unstable();
    let total = ids.len() as f64;
    let mut entries = Vec::new();
    let mut start = 0;
    while start < ids.len() {
        let j = ids[start];
        let end = start + ids[start..].iter().take_while(|&&x| x == j).count();
        entries.push((j, (end - start) as f64 / total));
        start = end;
    }
    SparseVector::from_entries(vocab.len(), entries)
}

/// Dense inverse document frequency vector; zero entries are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct Idf(Vec<f64>);

impl Idf {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

pub fn inverse_document_frequency(vocab: &Vocabulary, n_docs: usize) -> Idf {
    let n = n_docs as f64;
    Idf(vocab
        .doc_frequencies()
        .iter()
        .map(|&df| (n / (1.0 + df as f64)).ln())
        .collect())
}

/// One TF-IDF row per document, in document-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: Vec<SparseVector>,
    dim: usize,
    normalized: bool,
}

impl EmbeddingMatrix {
    pub fn new(rows: Vec<SparseVector>, dim: usize, normalized: bool) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.dim(),
            });
        }
        Ok(EmbeddingMatrix {
            rows,
            dim,
            normalized,
        })
    }

    /// Builds a matrix from dense rows. Mostly for tests and small examples.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let sparse = rows
            .iter()
            .map(|r| {
                if r.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        actual: r.len(),
                    });
                }
                SparseVector::from_entries(dim, r.iter().copied().enumerate())
            })
            .collect::<Result<Vec<_>>>()?;
        EmbeddingMatrix::new(sparse, dim, false)
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SparseVector {
        &self.rows[i]
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(SparseVector::nnz).sum()
    }

    /// Writes `row col value` lines, row-major, one per stored entry.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            for (j, x) in row.iter() {
                writeln!(out, "{i} {j} {x:e}")?;
            }
        }
        Ok(())
    }
}

pub fn embed(
    streams: &[TokenStream],
    vocab: &Vocabulary,
    idf: &Idf,
    normalize: bool,
) -> Result<EmbeddingMatrix> {
    if idf.dim() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: vocab.len(),
            actual: idf.dim(),
        });
    }
    let weights = idf.values();
    let rows = streams
        .par_iter()
        .map(|s| {
            let tf = term_frequency(s, vocab)?;
            let mut row = SparseVector::from_entries(
                vocab.len(),
                tf.iter().map(|(j, x)| (j, x * weights[j])),
            )?;
            if normalize {
                let norm = row.norm();
                if norm > 0.0 {
                    row.scale(1.0 / norm);
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingMatrix::new(rows, vocab.len(), normalize)
}

/// Output of [`vectorize`]: everything needed to score and inspect a corpus.
#[derive(Debug, Clone)]
pub struct Vectorized {
    pub vocab: Vocabulary,
    pub idf: Idf,
    pub embeddings: EmbeddingMatrix,
}

/// Tokenizes the corpus and builds its TF-IDF embedding matrix.
pub fn vectorize(corpus: &Corpus, tokenizer: &Tokenizer, normalize: bool) -> Result<Vectorized> {
    let streams = corpus.tokenize(tokenizer);
    let vocab = Vocabulary::build(&streams)?;
    let idf = inverse_document_frequency(&vocab, corpus.len());
    let embeddings = embed(&streams, &vocab, &idf, normalize)?;
    Ok(Vectorized {
        vocab,
        idf,
        embeddings,
    })
}
