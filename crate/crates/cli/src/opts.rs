use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use msnet_core::msnet::SpanMethod;
use msnet_core::tokenizer::Casing;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "msnet", version, about = "Mention-score pronoun resolution over precomputed token embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tokenize a GAP TSV, write the tokenized-doc listing and print alignment diagnostics.
    Tokenize(TokenizeArgs),
    /// Write deterministic token-keyed toy embeddings for a tokenized-doc listing.
    EmbedToy(EmbedToyArgs),
    /// Train one model, early-stopped on a stratified holdout.
    Train(RunArgs),
    /// Stratified k-fold cross-validation with per-fold checkpoints.
    Cv(CvArgs),
    /// Write a submission CSV averaged over one or more checkpoints.
    Predict(PredictArgs),
    /// Multi-class log-loss of a submission CSV against a gold TSV.
    Eval(EvalArgs),
    /// Compare analytic gradients with finite differences on random inputs.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CasingArg {
    #[default]
    Auto,
    Lower,
    Cased,
}

impl From<CasingArg> for Casing {
    fn from(c: CasingArg) -> Self {
        match c {
            CasingArg::Auto => Casing::Auto,
            CasingArg::Lower => Casing::Lower,
            CasingArg::Cased => Casing::Cased,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpanArg {
    Meanpool,
    Attention,
}

impl From<SpanArg> for SpanMethod {
    fn from(s: SpanArg) -> Self {
        match s {
            SpanArg::Meanpool => SpanMethod::Meanpool,
            SpanArg::Attention => SpanMethod::Attention,
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct TokenizerArgs {
    /// Vocabulary file, one token per line.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Lowercasing mode; `auto` lowercases iff the vocab has no uppercase entries.
    #[arg(long, value_enum)]
    pub casing: Option<CasingArg>,
    /// Word-piece budget per document before [CLS]/[SEP] are added.
    #[arg(long)]
    pub max_tokens: Option<usize>,
    /// Skip invalid rows and unprocessable records with a warning instead of failing.
    #[arg(long)]
    pub skip_invalid: bool,
}

#[derive(Args, Debug)]
pub struct TokenizeArgs {
    /// GAP-format TSV to tokenize.
    #[arg(long, visible_alias = "train-tsv")]
    pub tsv: PathBuf,
    #[command(flatten)]
    pub tok: TokenizerArgs,
    /// Output listing: one tokenized document per line, as JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EmbedToyArgs {
    /// Tokenized-doc listing written by `tokenize`.
    #[arg(long)]
    pub docs: Vec<PathBuf>,
    /// Number of layers to store.
    #[arg(long)]
    pub layers: usize,
    /// Hidden size of each token vector.
    #[arg(long)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output MSEB file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub train_tsv: Option<PathBuf>,
    /// Test TSV; scored with the averaged fold models.
    #[arg(long)]
    pub test_tsv: Option<PathBuf>,
    #[command(flatten)]
    pub tok: TokenizerArgs,
    /// MSEB embedding files; may be repeated.
    #[arg(long)]
    pub embeddings: Vec<PathBuf>,
    /// Number of top encoder layers fed to the model.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Similarity vector dimension.
    #[arg(long)]
    pub sdim: Option<usize>,
    #[arg(long, value_enum)]
    pub span: Option<SpanArg>,
    /// Separate similarity weights for each layer.
    #[arg(long)]
    pub per_layer_sim: bool,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub min_delta: Option<f64>,
    /// Seed for initialization, shuffling, dropout and fold assignment.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON run configuration; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replay the configuration and inputs of an earlier run.
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CvArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of folds.
    #[arg(long)]
    pub k: Option<usize>,
    /// Folds trained concurrently; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub parallel_folds: usize,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub test_tsv: PathBuf,
    #[command(flatten)]
    pub tok: TokenizerArgs,
    #[arg(long, required = true)]
    pub embeddings: Vec<PathBuf>,
    /// Checkpoints to average; may be repeated.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    /// Output submission CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Submission CSV with header ID,A,B,NEITHER.
    #[arg(long)]
    pub predictions: PathBuf,
    /// GAP-format TSV with gold labels.
    #[arg(long, visible_alias = "test-tsv")]
    pub gold: PathBuf,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 8)]
    pub hidden: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 4)]
    pub sdim: usize,
    #[arg(long, default_value_t = 4)]
    pub batch: usize,
    /// Tokens per random document.
    #[arg(long, default_value_t = 12)]
    pub tokens: usize,
    /// Check only this span method; both by default.
    #[arg(long, value_enum)]
    pub span: Option<SpanArg>,
    /// Keep dropout on, with masks fixed across evaluations.
    #[arg(long)]
    pub dropout: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
}
