use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use multirag_core::datagen::CriticTask;
use multirag_core::eval::Representation;
use multirag_core::retrieval::RetrieverKind;

/// Conversational retrieval-augmented generation with reflection-token
/// scoring.
#[derive(Debug, Parser)]
#[command(name = "multirag", version, propagate_version = true)]
pub struct Cli {
    /// Seed forwarded to sampling backends and recorded in output metadata
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a BM25 index snapshot from a corpus
    Index(IndexArgs),
    /// Run the pipeline over every user turn of a benchmark and write a run log
    Run(RunArgs),
    /// Interactive terminal conversation
    Chat(ChatArgs),
    /// Compare query representations by recall at 5 and 10
    EvalRetrieval(EvalRetrievalArgs),
    /// Critic token accuracy per task and variant
    EvalCritic(EvalCriticArgs),
    /// Collect critic labels from a judge backend
    Datagen(DatagenArgs),
    /// Start the HTTP service
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory; must be empty or absent
    #[arg(long)]
    pub out: PathBuf,

    /// Write into a non-empty output directory
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    /// Mock backend script (jsonl rules)
    #[arg(long, env = "MULTIRAG_SCRIPT")]
    pub script: Option<PathBuf>,

    /// Base URL of a remote model backend
    #[arg(long, env = "MULTIRAG_BACKEND_URL", conflicts_with = "script")]
    pub backend_url: Option<String>,

    /// Remote request timeout in milliseconds
    #[arg(long, default_value_t = 30_000)]
    pub timeout_ms: u64,

    /// Remote retries after the first attempt
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Passage corpus (jsonl with id, title, text)
    #[arg(long, env = "MULTIRAG_CORPUS")]
    pub corpus: PathBuf,

    /// Prebuilt BM25 snapshot (file or directory written by `index`)
    #[arg(long, env = "MULTIRAG_INDEX")]
    pub index: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub corpus: PathBuf,

    /// Stopword list, one word per line
    #[arg(long)]
    pub stopwords: Option<PathBuf>,

    /// BM25 k1
    #[arg(long, default_value_t = 1.2)]
    pub k1: f64,

    /// BM25 b
    #[arg(long, default_value_t = 0.75)]
    pub b: f64,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Benchmark conversations (jsonl)
    #[arg(long)]
    pub bench: PathBuf,

    /// Pipeline config (TOML, or JSON by extension)
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Scoring weights w1,w2,w3 overriding the config
    #[arg(long, env = "MULTIRAG_WEIGHTS")]
    pub weights: Option<String>,

    /// Conversations processed concurrently
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,

    #[command(flatten)]
    pub corpus: CorpusArgs,

    #[command(flatten)]
    pub backend: BackendArgs,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ChatArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, env = "MULTIRAG_WEIGHTS")]
    pub weights: Option<String>,

    /// Print every candidate's score breakdown
    #[arg(long)]
    pub scores: bool,

    #[command(flatten)]
    pub corpus: CorpusArgs,

    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Args)]
pub struct EvalRetrievalArgs {
    /// Benchmark with gold passage ids per user turn
    #[arg(long)]
    pub bench: PathBuf,

    /// Representations to compare (default: all)
    #[arg(long, value_delimiter = ',')]
    pub representations: Option<Vec<Representation>>,

    /// Retrievers to compare
    #[arg(long, value_delimiter = ',', default_value = "bm25")]
    pub retrievers: Vec<RetrieverKind>,

    /// Token budget for rewrite and summary generations
    #[arg(long, default_value_t = 128)]
    pub max_tokens: usize,

    #[command(flatten)]
    pub corpus: CorpusArgs,

    #[command(flatten)]
    pub backend: BackendArgs,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvalCriticArgs {
    /// Predictions (jsonl with task, variant, predicted, gold)
    #[arg(long)]
    pub predictions: PathBuf,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct DatagenArgs {
    #[arg(long)]
    pub task: CriticTask,

    /// Instances to label (jsonl)
    #[arg(long)]
    pub instances: PathBuf,

    /// Concurrent judge calls
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,

    #[arg(long, default_value_t = 512)]
    pub max_tokens: usize,

    #[command(flatten)]
    pub backend: BackendArgs,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service config (TOML); environment variables override it
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub listen: Option<String>,

    #[arg(long)]
    pub corpus: Option<PathBuf>,

    #[arg(long)]
    pub index: Option<PathBuf>,

    #[arg(long)]
    pub script: Option<PathBuf>,

    #[arg(long)]
    pub backend_url: Option<String>,

    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}
