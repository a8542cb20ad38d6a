use std::path::PathBuf;

use air_core::{Matcher, RetrievalMode};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "air", version, about = "Unsupervised iterative evidence retrieval")]
pub struct Cli {
    /// Worker threads for retrieval (default: one per core). Does not change outputs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a dataset into the record JSONL cache.
    Prepare(PrepareArgs),
    /// Build a BM25 index over a knowledge-base file (one sentence per line).
    Index(IndexArgs),
    /// Retrieve evidence chains and write JSONL traces.
    Retrieve(RetrieveArgs),
    /// Score traces against gold evidence.
    Evaluate(EvaluateArgs),
    /// Run a drift or sensitivity experiment and write a CSV table.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("dataset").required(true).args(["multirc", "qasc", "records"])))]
pub struct DatasetArgs {
    /// MultiRC JSON file.
    #[arg(long, value_name = "PATH")]
    pub multirc: Option<PathBuf>,

    /// QASC questions JSONL (needs --kb).
    #[arg(long, value_name = "PATH", requires = "kb")]
    pub qasc: Option<PathBuf>,

    /// Normalized records written by `air prepare`.
    #[arg(long, value_name = "PATH")]
    pub records: Option<PathBuf>,

    /// Knowledge-base text file, one sentence per line.
    #[arg(long, value_name = "PATH")]
    pub kb: Option<PathBuf>,

    /// Prebuilt BM25 index for --kb (built in memory when absent).
    #[arg(long, value_name = "PATH", requires = "kb")]
    pub index: Option<PathBuf>,

    /// BM25 candidates per (question, answer) for knowledge-base datasets.
    #[arg(long, default_value_t = air_core::bm25::DEFAULT_POOL_SIZE)]
    pub pool_size: usize,

    #[command(flatten)]
    pub text: TextArgs,
}

#[derive(Debug, Args)]
pub struct TextArgs {
    /// Stopword file, one word per line (default: bundled English list).
    #[arg(long, value_name = "PATH")]
    pub stopwords: Option<PathBuf>,

    /// BM25 term-frequency saturation.
    #[arg(long = "bm25-k1", value_name = "K1", default_value_t = 1.2)]
    pub k1: f64,

    /// BM25 length normalization.
    #[arg(long = "bm25-b", value_name = "B", default_value_t = 0.75)]
    pub b: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MatcherArg {
    Embedding,
    Lexical,
}

impl From<MatcherArg> for Matcher {
    fn from(m: MatcherArg) -> Self {
        match m {
            MatcherArg::Embedding => Matcher::Embedding,
            MatcherArg::Lexical => Matcher::Lexical,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Controlled,
    Uncontrolled,
}

impl From<ModeArg> for RetrievalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Controlled => RetrievalMode::Controlled,
            ModeArg::Uncontrolled => RetrievalMode::Uncontrolled,
        }
    }
}

#[derive(Debug, Args)]
pub struct AirArgs {
    /// GloVe-format embedding file.
    #[arg(long, value_name = "PATH", env = "AIR_EMBEDDINGS")]
    pub embeddings: Option<PathBuf>,

    /// Soft-match cosine threshold.
    #[arg(long = "M", value_name = "M", default_value_t = 0.95)]
    pub soft_match_threshold: f64,

    /// Expansion threshold on the remainder size (default: 2 for paragraph
    /// datasets, 4 for knowledge-base datasets).
    #[arg(long = "T", value_name = "T")]
    pub expansion_threshold: Option<usize>,

    /// Hard cap on hops per chain.
    #[arg(long, default_value_t = 6)]
    pub max_hops: usize,

    /// Number of parallel chains per query.
    #[arg(long, default_value_t = 1)]
    pub parallel_chains: usize,

    /// Term matching for scoring and coverage.
    #[arg(long, value_enum, default_value = "embedding")]
    pub matcher: MatcherArg,

    /// Query reformulation: remainder-focused or whole-sentence appending.
    #[arg(long, value_enum, default_value = "controlled")]
    pub mode: ModeArg,

    /// Retrieve exactly this many sentences, ignoring the natural stop criteria.
    #[arg(long)]
    pub fixed_hops: Option<usize>,

    /// Expand with every retrieved sentence rather than only the latest.
    #[arg(long)]
    pub expand_all_previous: bool,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,

    /// Record file (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Knowledge-base text file, one sentence per line.
    #[arg(long, value_name = "PATH")]
    pub kb: PathBuf,

    /// Index file to write.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,

    #[command(flatten)]
    pub text: TextArgs,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,

    #[command(flatten)]
    pub air: AirArgs,

    /// Trace file (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    /// Macro precision/recall/F1 of selected sentences.
    Prf,
    /// Recall@10 of the correct answer's ranked list.
    Recall10,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Trace file written by `air retrieve`.
    #[arg(long, value_name = "PATH")]
    pub traces: PathBuf,

    #[command(flatten)]
    pub dataset: DatasetArgs,

    /// Metric to compute.
    #[arg(long, value_enum, default_value = "prf")]
    pub metric: MetricArg,

    /// Print an aligned table instead of JSON lines.
    #[arg(long)]
    pub table: bool,

    /// Metrics file (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// F1 of every retrieval variant forced to a fixed number of hops.
    Drift {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        air: AirArgs,
        /// Hop counts (rows of the table).
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        hops: Vec<usize>,
        /// CSV file (default: stdout).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Scores across soft-match thresholds.
    SensitivityM {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        air: AirArgs,
        /// Values of M to try.
        #[arg(long, value_delimiter = ',', default_value = "0.95,0.85,0.75")]
        grid: Vec<f64>,
        /// CSV file (default: stdout).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Scores across expansion thresholds.
    SensitivityT {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        air: AirArgs,
        /// Values of T to try.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        grid: Vec<usize>,
        /// CSV file (default: stdout).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}
