//! Model-free dataset pruning for text corpora.
//!
//! Each sample is embedded as a unigram TF-IDF vector, the geometric median
//! of all embeddings is located, and every sample is scored by its distance
//! to that median. A coreset is then chosen from the scores: the furthest
//! samples for small coresets, an even spread across score strata for large
//! ones.
//!
//! ```no_run
//! use fdprune::corpus::{Corpus, Tokenizer};
//! use fdprune::geomedian::{geometric_median, SolverConfig};
//! use fdprune::pruner::{prune, PruneConfig};
//! use fdprune::scoring::fd_scores;
//! use fdprune::vectorizer::vectorize;
//!
//! let corpus = Corpus::from_texts(["a cat sat", "a dog ran", "the cat ran"])?;
//! let v = vectorize(&corpus, &Tokenizer::default(), true)?;
//! let median = geometric_median(&v.embeddings, &SolverConfig::default())?;
//! let scores = fd_scores(&v.embeddings, &median)?;
//! let coreset = prune(&scores, &PruneConfig { rate: 0.5, ..PruneConfig::default() })?;
//! println!("{:?}", coreset.kept);
//! # Ok::<(), fdprune::Error>(())
//! ```

pub mod cli;
pub mod corpus;
pub mod error;
pub mod geomedian;
pub mod numeric;
pub mod projection;
pub mod pruner;
pub mod rng;
pub mod scoring;
pub mod vectorizer;

pub use error::{Error, Result, Stage, StageError};
