//! Run configuration: defaults, then the config file, then command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::corpus::{FieldSpec, InputFormat};
use crate::error::{Error, Result};
use crate::geomedian::SolverConfig;
use crate::pruner::{PruneConfig, Strategy};

#[derive(Debug, Parser)]
#[command(
    name = "fdprune",
    version,
    about = "Model-free text dataset pruning by TF-IDF distance to the geometric median"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed the corpus, find the geometric median and write scores.csv.
    Score(RunArgs),
    /// Score and select a coreset; writes coreset.txt.
    Prune(RunArgs),
    /// Score, prune and write 2-D PCA coordinates to projection.csv.
    Project(RunArgs),
    /// Summarize an existing scores.csv.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Path to a scores.csv written by `score` or `prune`.
    pub scores: PathBuf,
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// TOML or JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = ["jsonl", "csv"])]
    pub format: Option<String>,
    /// Comma-separated text fields, joined with a space in this order.
    #[arg(long, value_delimiter = ',')]
    pub fields: Option<Vec<String>>,
    #[arg(long)]
    pub label_field: Option<String>,
    #[arg(long)]
    pub min_token_len: Option<usize>,
    /// Fraction of samples to remove, 0 < r < 1.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long, value_parser = ["adaptive", "stratified", "furthest", "closest", "random"])]
    pub strategy: Option<String>,
    #[arg(long)]
    pub strata: Option<usize>,
    /// Coreset size above which the adaptive strategy stratifies.
    #[arg(long)]
    pub threshold: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep raw TF-IDF rows instead of scaling them to unit length.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; defaults to the number of available cores.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub emit_scores: bool,
    #[arg(long)]
    pub emit_strata: bool,
    #[arg(long)]
    pub emit_projection: bool,
    /// Also write the embedding matrix as `row col value` lines.
    #[arg(long)]
    pub dump_embeddings: bool,
}

/// Config file contents. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub format: Option<InputFormat>,
    pub fields: Option<Vec<String>>,
    pub label_field: Option<String>,
    pub min_token_len: Option<usize>,
    pub normalize: Option<bool>,
    pub rate: Option<f64>,
    pub strategy: Option<Strategy>,
    pub strata: Option<usize>,
    pub threshold: Option<usize>,
    pub epsilon: Option<f64>,
    pub max_iterations: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub emit_scores: Option<bool>,
    pub emit_strata: Option<bool>,
    pub emit_projection: Option<bool>,
    pub dump_embeddings: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub format: InputFormat,
    pub fields: FieldSpec,
    pub min_token_len: usize,
    pub normalize: bool,
    pub solver: SolverConfig,
    pub prune: PruneConfig,
    pub out_dir: PathBuf,
    pub emit_scores: bool,
    pub emit_strata: bool,
    pub emit_projection: bool,
    pub dump_embeddings: bool,
    /// `None` uses every available core.
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Config with defaults for everything but the input description.
    pub fn new(input: impl Into<PathBuf>, format: InputFormat, fields: &[&str]) -> Self {
        RunConfig {
            input: input.into(),
            format,
            fields: FieldSpec {
                fields: fields.iter().map(|s| s.to_string()).collect(),
                label_field: None,
            },
            min_token_len: 1,
            normalize: true,
            solver: SolverConfig::default(),
            prune: PruneConfig::default(),
            out_dir: PathBuf::from("."),
            emit_scores: false,
            emit_strata: false,
            emit_projection: false,
            dump_embeddings: false,
            threads: None,
        }
    }

    pub fn from_args(args: &RunArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::merge(file, args)
    }

    pub fn merge(file: FileConfig, args: &RunArgs) -> Result<Self> {
        let input = args
            .input
            .clone()
            .or(file.input)
            .ok_or_else(|| Error::Config("no input file given (--input)".into()))?;
        let format = match &args.format {
            Some(f) => f.parse()?,
            None => match file.format {
                Some(f) => f,
                None => guess_format(&input)?,
            },
        };
        let fields = args
            .fields
            .clone()
            .or(file.fields)
            .ok_or_else(|| Error::Config("no text fields given (--fields)".into()))?;
        let strategy = match &args.strategy {
            Some(s) => s.parse()?,
            None => file.strategy.unwrap_or(Strategy::Adaptive),
        };

        let defaults = RunConfig::new(PathBuf::new(), format, &[]);
        let cfg = RunConfig {
            input,
            format,
            fields: FieldSpec {
                fields,
                label_field: args.label_field.clone().or(file.label_field),
            },
            min_token_len: args
                .min_token_len
                .or(file.min_token_len)
                .unwrap_or(defaults.min_token_len),
            normalize: if args.no_normalize {
                false
            } else {
                file.normalize.unwrap_or(defaults.normalize)
            },
            solver: SolverConfig {
                epsilon: args
                    .epsilon
                    .or(file.epsilon)
                    .unwrap_or(defaults.solver.epsilon),
                max_iterations: args
                    .max_iterations
                    .or(file.max_iterations)
                    .unwrap_or(defaults.solver.max_iterations),
                ..defaults.solver
            },
            prune: PruneConfig {
                rate: args.rate.or(file.rate).unwrap_or(defaults.prune.rate),
                strata: args.strata.or(file.strata).unwrap_or(defaults.prune.strata),
                size_threshold: args
                    .threshold
                    .or(file.threshold)
                    .unwrap_or(defaults.prune.size_threshold),
                strategy,
                seed: args.seed.or(file.seed).unwrap_or(defaults.prune.seed),
            },
            out_dir: args
                .out_dir
                .clone()
                .or(file.out_dir)
                .unwrap_or(defaults.out_dir),
            emit_scores: args.emit_scores || file.emit_scores.unwrap_or(false),
            emit_strata: args.emit_strata || file.emit_strata.unwrap_or(false),
            emit_projection: args.emit_projection || file.emit_projection.unwrap_or(false),
            dump_embeddings: args.dump_embeddings || file.dump_embeddings.unwrap_or(false),
            threads: args.threads.or(file.threads),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fields.fields.is_empty() || self.fields.fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Config("field names must be non-empty".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        self.solver.validate()?;
        self.prune.validate()
    }
}

fn guess_format(path: &Path) -> Result<InputFormat> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => Ok(InputFormat::Csv),
        Some(e) if e.eq_ignore_ascii_case("jsonl") || e.eq_ignore_ascii_case("json") => {
            Ok(InputFormat::Jsonl)
        }
        _ => Err(Error::Config(format!(
            "cannot infer the format of {}; pass --format",
            path.display()
        ))),
    }
}
