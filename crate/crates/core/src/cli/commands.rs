//! The score, prune and project pipelines.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::Serialize;

use super::config::RunConfig;
use super::output::write_atomic;
use crate::corpus::{load_corpus, Tokenizer};
use crate::error::{Error, Stage, StageContext, StageError};
use crate::geomedian::geometric_median;
use crate::projection::{project, PcaConfig, Projection};
use crate::pruner::{prune, CoresetSelection, Strategy};
use crate::scoring::{fd_scores, ScoreSet};
use crate::vectorizer::{vectorize, Vectorized};

pub const SCORES_FILE: &str = "scores.csv";
pub const CORESET_FILE: &str = "coreset.txt";
pub const STRATA_FILE: &str = "strata.csv";
pub const PROJECTION_FILE: &str = "projection.csv";
pub const REPORT_FILE: &str = "report.json";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub load_ms: f64,
    pub vectorize_ms: f64,
    pub median_ms: f64,
    pub score_ms: f64,
    pub prune_ms: f64,
    pub project_ms: f64,
    pub write_ms: f64,
    pub total_ms: f64,
}

impl Timings {
    pub fn stage_sum(&self) -> f64 {
        self.load_ms
            + self.vectorize_ms
            + self.median_ms
            + self.score_ms
            + self.prune_ms
            + self.project_ms
            + self.write_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub n_docs: usize,
    pub vocab_size: usize,
    pub nnz: usize,
    pub normalized: bool,
    pub median_iterations: usize,
    pub median_objective: f64,
    pub median_converged: bool,
    pub fd_min: f64,
    pub fd_mean: f64,
    pub fd_max: f64,
    pub strategy_used: Option<Strategy>,
    pub budget: Option<usize>,
    pub kept: Option<usize>,
    pub threads: usize,
    pub timings: Timings,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub vectorized: Vectorized,
    pub scores: ScoreSet,
    pub selection: Option<CoresetSelection>,
    pub projection: Option<Projection>,
    pub report: RunReport,
    /// Files written, in write order.
    pub written: Vec<PathBuf>,
}

impl RunOutcome {
    /// 0 on success, 3 when the median solver hit its iteration cap.
    pub fn exit_code(&self) -> i32 {
        if self.report.median_converged {
            0
        } else {
            3
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Score,
    Prune,
    Project,
}

/// Loads, embeds and scores the corpus. Always writes `scores.csv`.
pub fn cmd_score(cfg: &RunConfig) -> Result<RunOutcome, StageError> {
    let cfg = RunConfig {
        emit_scores: true,
        ..cfg.clone()
    };
    run(&cfg, Mode::Score)
}

/// Scores and prunes; writes `coreset.txt` plus any requested extras.
pub fn cmd_prune(cfg: &RunConfig) -> Result<RunOutcome, StageError> {
    run(cfg, Mode::Prune)
}

/// Scores, prunes and always writes `projection.csv`.
pub fn cmd_project(cfg: &RunConfig) -> Result<RunOutcome, StageError> {
    let cfg = RunConfig {
        emit_projection: true,
        ..cfg.clone()
    };
    run(&cfg, Mode::Project)
}

fn run(cfg: &RunConfig, mode: Mode) -> Result<RunOutcome, StageError> {
    cfg.validate().stage(Stage::Config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
        .stage(Stage::Config)?;
    pool.install(|| run_in_pool(cfg, mode, pool.current_num_threads()))
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn run_in_pool(cfg: &RunConfig, mode: Mode, threads: usize) -> Result<RunOutcome, StageError> {
    let start = Instant::now();
    let mut timings = Timings::default();

    let t = Instant::now();
    let corpus = load_corpus(&cfg.input, cfg.format, &cfg.fields).stage(Stage::Load)?;
    timings.load_ms = ms_since(t);
    info!(
        "loaded {} documents from {}",
        corpus.len(),
        cfg.input.display()
    );

    let t = Instant::now();
    let vectorized = vectorize(&corpus, &Tokenizer::new(cfg.min_token_len), cfg.normalize)
        .stage(Stage::Vectorize)?;
    timings.vectorize_ms = ms_since(t);
    let embeddings = &vectorized.embeddings;
    info!(
        "vocabulary of {} terms, {} stored entries",
        vectorized.vocab.len(),
        embeddings.nnz()
    );

    let t = Instant::now();
    let median = geometric_median(embeddings, &cfg.solver).stage(Stage::Median)?;
    timings.median_ms = ms_since(t);
    info!(
        "median: f = {} after {} iterations (converged: {})",
        median.objective, median.iterations, median.converged
    );
    if !median.converged {
        log::warn!("median solver stopped at the iteration cap");
    }

    let t = Instant::now();
    let scores = fd_scores(embeddings, &median).stage(Stage::Score)?;
    timings.score_ms = ms_since(t);

    let selection = if mode == Mode::Score {
        None
    } else {
        let t = Instant::now();
        let sel = prune(&scores, &cfg.prune).stage(Stage::Prune)?;
        timings.prune_ms = ms_since(t);
        info!(
            "kept {} of {} ({})",
            sel.kept.len(),
            scores.len(),
            sel.strategy_used
        );
        Some(sel)
    };

    let projection = if cfg.emit_projection && selection.is_some() {
        let t = Instant::now();
        let pca = PcaConfig {
            seed: cfg.prune.seed,
            ..PcaConfig::default()
        };
        let p = project(embeddings, &pca).stage(Stage::Project)?;
        timings.project_ms = ms_since(t);
        Some(p)
    } else {
        None
    };

    let t = Instant::now();
    let written = write_outputs(
        cfg,
        &vectorized,
        &scores,
        selection.as_ref(),
        projection.as_ref(),
    )
    .stage(Stage::Write)?;
    timings.write_ms = ms_since(t);
    timings.total_ms = ms_since(start);

    let report = RunReport {
        n_docs: corpus.len(),
        vocab_size: vectorized.vocab.len(),
        nnz: embeddings.nnz(),
        normalized: embeddings.is_normalized(),
        median_iterations: median.iterations,
        median_objective: median.objective,
        median_converged: median.converged,
        fd_min: scores.min,
        fd_mean: scores.mean,
        fd_max: scores.max,
        strategy_used: selection.as_ref().map(|s| s.strategy_used),
        budget: selection.as_ref().map(|s| s.budget),
        kept: selection.as_ref().map(|s| s.kept.len()),
        threads,
        timings,
    };
    let mut written = written;
    let report_path = cfg.out_dir.join(REPORT_FILE);
    write_atomic(&report_path, |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)
    })
    .map_err(Error::from)
    .stage(Stage::Write)?;
    written.push(report_path);

    Ok(RunOutcome {
        vectorized,
        scores,
        selection,
        projection,
        report,
        written,
    })
}

fn write_outputs(
    cfg: &RunConfig,
    vectorized: &Vectorized,
    scores: &ScoreSet,
    selection: Option<&CoresetSelection>,
    projection: Option<&Projection>,
) -> crate::error::Result<Vec<PathBuf>> {
    let dir: &Path = &cfg.out_dir;
    let mut written = Vec::new();
    let mut emit = |name: &str, fill: &dyn Fn(&mut dyn std::io::Write) -> std::io::Result<()>| {
        let path = dir.join(name);
        write_atomic(&path, |w| fill(w))?;
        written.push(path);
        Ok::<_, std::io::Error>(())
    };

    if cfg.emit_scores {
        emit(SCORES_FILE, &|w| scores.write_csv(w))?;
    }
    if cfg.dump_embeddings {
        emit(EMBEDDINGS_FILE, &|w| {
            vectorized.embeddings.write_triplets(w)
        })?;
    }
    if let Some(sel) = selection {
        emit(CORESET_FILE, &|w| sel.write_coreset(w))?;
        if cfg.emit_strata && sel.strata.is_some() {
            emit(STRATA_FILE, &|w| sel.write_strata_csv(w))?;
        }
        if let Some(p) = projection {
            emit(PROJECTION_FILE, &|w| p.write_csv(sel, w))?;
        }
    }
    Ok(written)
}
