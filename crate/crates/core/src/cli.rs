//! Command-line front end: one subcommand per stage plus `pipeline`.
//!
//! Parameters come from built-in defaults, then an optional flat
//! `key=value` config file, then flags; later sources win. All randomness
//! derives from the single `seed` key.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{count_cooccurrences_sharded, read_documents, CooccurrenceCounts, Document, Vocabulary};
use crate::embeddings::{train_observed, ContrastInputs, TrainObserver, TrainingConfig};
use crate::error::Error;
use crate::eval::{cell_counts, eval_ap, eval_spearman, MetricReport, RelationPairSet, SimilarityPairSet, SparseVectors, WordVectors};
use crate::io::{self as aio, ArtifactHeader};
use crate::lexicon::ContrastLexicon;
use crate::reduction::{truncated_svd, SvdConfig};
use crate::seeding::stage_seed;
use crate::vectors::{DenseEmbeddings, Source};
use crate::weighting::{compute_lmi, compute_weight_sa, AntonymMean, FeatureIndex, SaOptions, WeightedMatrix};

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::File { .. } => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

/// Resolved parameters of a run. Paths are kept out of here so artifact
/// headers do not depend on where files live.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub lowercase: bool,
    pub min_count: u64,
    pub window: usize,
    pub ant_mean: AntonymMean,
    pub fallback_lmi: bool,
    pub svd_dim: usize,
    pub svd_exponent: f64,
    pub svd_oversample: usize,
    pub svd_power_iterations: usize,
    pub svd_dense_limit: usize,
    pub dim: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub subsample: f64,
    pub noise_exponent: f64,
    pub contrast_coefficient: f64,
    pub max_contrast_neighbors: Option<usize>,
    pub dynamic_window: bool,
    pub average_context: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainingConfig::default();
        let s = SvdConfig::default();
        RunConfig {
            seed: 1,
            threads: 1,
            lowercase: true,
            min_count: t.min_count,
            window: t.window,
            ant_mean: AntonymMean::Pooled,
            fallback_lmi: false,
            svd_dim: s.dim,
            svd_exponent: s.exponent,
            svd_oversample: s.oversample,
            svd_power_iterations: s.power_iterations,
            svd_dense_limit: s.dense_limit,
            dim: t.dim,
            negatives: t.negatives,
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            subsample: t.subsample,
            noise_exponent: t.noise_exponent,
            contrast_coefficient: t.contrast_coefficient,
            max_contrast_neighbors: t.max_contrast_neighbors,
            dynamic_window: t.dynamic_window,
            average_context: t.average_context,
        }
    }
}

/// Keys that name input files rather than parameters.
const PATH_KEYS: [&str; 5] = ["corpus", "lexicon", "pairs", "similarity", "out_dir"];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| usage(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(usage(format!("invalid boolean {value:?} for {key}"))),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let v = value.trim();
        match key {
            "seed" => self.seed = parse_value(key, v)?,
            "threads" => self.threads = parse_value(key, v)?,
            "lowercase" => self.lowercase = parse_bool(key, v)?,
            "min_count" => self.min_count = parse_value(key, v)?,
            "window" => self.window = parse_value(key, v)?,
            "ant_mean" => self.ant_mean = v.parse().map_err(|_| usage(format!("invalid ant_mean {v:?}")))?,
            "fallback_lmi" => self.fallback_lmi = parse_bool(key, v)?,
            "svd_dim" => self.svd_dim = parse_value(key, v)?,
            "svd_exponent" => self.svd_exponent = parse_value(key, v)?,
            "svd_oversample" => self.svd_oversample = parse_value(key, v)?,
            "svd_power_iterations" => self.svd_power_iterations = parse_value(key, v)?,
            "svd_dense_limit" => self.svd_dense_limit = parse_value(key, v)?,
            "dim" => self.dim = parse_value(key, v)?,
            "negatives" => self.negatives = parse_value(key, v)?,
            "learning_rate" => self.learning_rate = parse_value(key, v)?,
            "epochs" => self.epochs = parse_value(key, v)?,
            "subsample" => self.subsample = parse_value(key, v)?,
            "noise_exponent" => self.noise_exponent = parse_value(key, v)?,
            "contrast_coefficient" => self.contrast_coefficient = parse_value(key, v)?,
            "max_contrast_neighbors" => {
                self.max_contrast_neighbors = match v {
                    "" | "none" | "unlimited" => None,
                    n => Some(parse_value(key, n)?),
                }
            }
            "dynamic_window" => self.dynamic_window = parse_bool(key, v)?,
            "average_context" => self.average_context = parse_bool(key, v)?,
            _ => return Err(usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        match key {
            "seed" => self.seed.to_string(),
            "threads" => self.threads.to_string(),
            "lowercase" => self.lowercase.to_string(),
            "min_count" => self.min_count.to_string(),
            "window" => self.window.to_string(),
            "ant_mean" => self.ant_mean.to_string(),
            "fallback_lmi" => self.fallback_lmi.to_string(),
            "svd_dim" => self.svd_dim.to_string(),
            "svd_exponent" => self.svd_exponent.to_string(),
            "svd_oversample" => self.svd_oversample.to_string(),
            "svd_power_iterations" => self.svd_power_iterations.to_string(),
            "svd_dense_limit" => self.svd_dense_limit.to_string(),
            "dim" => self.dim.to_string(),
            "negatives" => self.negatives.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "epochs" => self.epochs.to_string(),
            "subsample" => self.subsample.to_string(),
            "noise_exponent" => self.noise_exponent.to_string(),
            "contrast_coefficient" => self.contrast_coefficient.to_string(),
            "max_contrast_neighbors" => self
                .max_contrast_neighbors
                .map_or_else(|| "unlimited".to_owned(), |n| n.to_string()),
            "dynamic_window" => self.dynamic_window.to_string(),
            "average_context" => self.average_context.to_string(),
            _ => panic!("unknown key {key}"),
        }
    }

    /// `key=value` lines for the given keys, in the given order.
    pub fn serialize(&self, keys: &[&str]) -> String {
        keys.iter().map(|k| format!("{k}={}\n", self.get(k))).collect()
    }

    pub fn training(&self) -> TrainingConfig {
        TrainingConfig {
            dim: self.dim,
            negatives: self.negatives,
            window: self.window,
            dynamic_window: self.dynamic_window,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            subsample: self.subsample,
            min_count: self.min_count,
            contrast_coefficient: self.contrast_coefficient,
            max_contrast_neighbors: self.max_contrast_neighbors,
            noise_exponent: self.noise_exponent,
            average_context: self.average_context,
            threads: self.threads,
            seed: self.seed,
        }
    }

    pub fn svd(&self) -> SvdConfig {
        SvdConfig {
            dim: self.svd_dim,
            oversample: self.svd_oversample,
            power_iterations: self.svd_power_iterations,
            dense_limit: self.svd_dense_limit,
            exponent: self.svd_exponent,
            seed: stage_seed(self.seed, "svd"),
        }
    }

    pub fn sa_options(&self) -> SaOptions {
        SaOptions {
            ant_mean: self.ant_mean,
            fallback_lmi: self.fallback_lmi,
            ..SaOptions::default()
        }
    }

    fn header(&self, stage: &str, keys: &[&str]) -> ArtifactHeader {
        ArtifactHeader::new(self.seed, format!("stage={stage}\n{}", self.serialize(keys)))
    }
}

/// Flat `key=value` file; `#` starts a comment line.
pub fn read_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in aio::open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::file(path, e))?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key=value", path.display(), n + 1)))?;
        out.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(out)
}

const VOCAB_KEYS: &[&str] = &["lowercase", "min_count"];
const COUNT_KEYS: &[&str] = &["lowercase", "min_count", "window"];
const SA_KEYS: &[&str] = &["lowercase", "min_count", "window", "ant_mean", "fallback_lmi"];
const SVD_KEYS: &[&str] = &["svd_dim", "svd_exponent", "svd_oversample", "svd_power_iterations", "svd_dense_limit"];
const TRAIN_KEYS: &[&str] = &[
    "lowercase",
    "min_count",
    "window",
    "dim",
    "negatives",
    "learning_rate",
    "epochs",
    "subsample",
    "noise_exponent",
    "dynamic_window",
    "average_context",
    "threads",
];
const DLCE_KEYS: &[&str] = &["contrast_coefficient", "max_contrast_neighbors"];

#[derive(Parser, Debug)]
#[command(name = "lexcontrast", version, about = "Lexical-contrast vectors: LMI, weight-SA, SVD, SGNS and dLCE, plus evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the vocabulary of a whitespace-tokenized corpus.
    Vocab(VocabArgs),
    /// Count symmetric window co-occurrences.
    Count(CountArgs),
    /// LMI-weight a co-occurrence table.
    Lmi(LmiArgs),
    /// Re-weight LMI rows with lexical-contrast information.
    WeightSa(WeightSaArgs),
    /// Reduce a weighted matrix to dense vectors with truncated SVD.
    Svd(SvdArgs),
    /// Train skip-gram embeddings with negative sampling.
    TrainSgns(TrainArgs),
    /// Train skip-gram embeddings with the lexical-contrast term.
    TrainDlce(DlceArgs),
    /// Average precision of synonym and antonym pairs ranked by cosine.
    EvalAp(EvalArgs),
    /// ROC-AUC for identifying antonyms among antonym/synonym pairs.
    EvalAuc(EvalArgs),
    /// Spearman correlation against graded similarity ratings.
    EvalSpearman(SpearmanArgs),
    /// Median cosine per word class and relation label.
    ReportMedians(EvalArgs),
    /// Run every stage from a config file.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// Flat key=value config file; flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Root seed for every random stage [default: 1]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct CorpusArgs {
    /// Ignore words rarer than this [default: 100, reported experimental setting]
    #[arg(long)]
    pub min_count: Option<u64>,
    /// Lowercase tokens while reading [default: true]
    #[arg(long)]
    pub lowercase: Option<bool>,
}

#[derive(Args, Debug)]
pub struct VocabArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub corpus_args: CorpusArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct CountArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Symmetric window size [default: 5, reported experimental setting]
    #[arg(long)]
    pub window: Option<usize>,
    /// Counting shards [default: 1]
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub corpus_args: CorpusArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct LmiArgs {
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct WeightSaArgs {
    #[arg(long)]
    pub lmi: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// TSV word1<TAB>SYN|ANT<TAB>word2
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Antonym-side mean: pooled over all (antonym, synonym) pairs or averaged per antonym [default: pooled]
    #[arg(long)]
    pub ant_mean: Option<AntonymMean>,
    /// Keep LMI rows of words without lexicon entries instead of dropping them [default: false]
    #[arg(long)]
    pub fallback_lmi: Option<bool>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Default)]
pub struct SvdFlags {
    /// Number of singular components [default: 100, chosen default]
    #[arg(long)]
    pub svd_dim: Option<usize>,
    /// Row vectors are U * S^exponent [default: 1]
    #[arg(long)]
    pub svd_exponent: Option<f64>,
    /// Extra random projections for the randomized solver [default: 10]
    #[arg(long)]
    pub svd_oversample: Option<usize>,
    /// Power iterations for the randomized solver [default: 4]
    #[arg(long)]
    pub svd_power_iterations: Option<usize>,
    /// Largest active dimension factorized exactly [default: 2000]
    #[arg(long)]
    pub svd_dense_limit: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SvdArgs {
    /// Weighted matrix TSV (LMI or SA)
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// word2vec text output
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub svd: SvdFlags,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Default)]
pub struct TrainFlags {
    /// Embedding size [default: 500, reported experimental setting]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Negative samples per pair [default: 15, reported experimental setting]
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Symmetric window size [default: 5, reported experimental setting]
    #[arg(long)]
    pub window: Option<usize>,
    /// Initial learning rate, decayed linearly [default: 0.025, reported experimental setting]
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Passes over the corpus [default: 5, chosen default]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Subsampling threshold [default: 1e-5, reported experimental setting]
    #[arg(long)]
    pub subsample: Option<f64>,
    /// Exponent on unigram counts for the noise distribution [default: 0.75]
    #[arg(long)]
    pub noise_exponent: Option<f64>,
    /// Sample the effective window per target [default: false]
    #[arg(long)]
    pub dynamic_window: Option<bool>,
    /// Export (W + C) / 2 instead of W [default: false]
    #[arg(long)]
    pub average_context: Option<bool>,
    /// Worker threads; more than one trains asynchronously and is not reproducible [default: 1]
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// word2vec text output
    #[arg(long)]
    pub out: PathBuf,
    /// Co-occurrence table on which the exact objective is logged per epoch
    #[arg(long)]
    pub objective_counts: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainFlags,
    #[command(flatten)]
    pub corpus_args: CorpusArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct DlceArgs {
    #[command(flatten)]
    pub base: TrainArgs,
    /// TSV word1<TAB>SYN|ANT<TAB>word2
    #[arg(long)]
    pub lexicon: PathBuf,
    /// LMI matrix defining which words occur with each context
    #[arg(long)]
    pub lmi: PathBuf,
    /// Weight of the contrast term [default: 1.0]
    #[arg(long)]
    pub contrast_coefficient: Option<f64>,
    /// Cap on synonyms/antonyms sampled per pair [default: unlimited]
    #[arg(long)]
    pub max_contrast_neighbors: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Dense vectors in word2vec text format
    #[arg(long, conflicts_with = "matrix")]
    pub vectors: Option<PathBuf>,
    /// Sparse weighted matrix TSV (needs --vocab)
    #[arg(long, requires = "vocab")]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// TSV word1<TAB>word2<TAB>ANT|SYN<TAB>ADJ|NOUN|VERB
    #[arg(long)]
    pub pairs: PathBuf,
    /// Write the report here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Structured report with coverage and OOV lists
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct SpearmanArgs {
    #[arg(long, conflicts_with = "matrix")]
    pub vectors: Option<PathBuf>,
    #[arg(long, requires = "vocab")]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// TSV word1<TAB>word2<TAB>rating
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Config file with corpus, lexicon, pairs and optional similarity paths
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `out_dir` in the config)
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Config file entries and the resolved parameters.
struct Resolved {
    config: RunConfig,
    paths: BTreeMap<String, String>,
}

fn resolve(config_file: Option<&Path>, flags: &[(&str, Option<String>)]) -> CliResult<Resolved> {
    let mut config = RunConfig::default();
    let mut paths = BTreeMap::new();
    if let Some(path) = config_file {
        for (k, v) in read_config_file(path)? {
            if PATH_KEYS.contains(&k.as_str()) {
                paths.insert(k, v);
            } else {
                config.set(&k, &v)?;
            }
        }
    }
    for (k, v) in flags {
        if let Some(v) = v {
            config.set(k, v)?;
        }
    }
    Ok(Resolved { config, paths })
}

fn opt<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

fn common_flags(c: &CommonArgs) -> Vec<(&'static str, Option<String>)> {
    vec![("seed", opt(&c.seed))]
}

fn corpus_flags(c: &CorpusArgs) -> Vec<(&'static str, Option<String>)> {
    vec![("min_count", opt(&c.min_count)), ("lowercase", opt(&c.lowercase))]
}

fn svd_flags(s: &SvdFlags) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("svd_dim", opt(&s.svd_dim)),
        ("svd_exponent", opt(&s.svd_exponent)),
        ("svd_oversample", opt(&s.svd_oversample)),
        ("svd_power_iterations", opt(&s.svd_power_iterations)),
        ("svd_dense_limit", opt(&s.svd_dense_limit)),
    ]
}

fn train_flags(t: &TrainFlags) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("dim", opt(&t.dim)),
        ("negatives", opt(&t.negatives)),
        ("window", opt(&t.window)),
        ("learning_rate", opt(&t.learning_rate)),
        ("epochs", opt(&t.epochs)),
        ("subsample", opt(&t.subsample)),
        ("noise_exponent", opt(&t.noise_exponent)),
        ("dynamic_window", opt(&t.dynamic_window)),
        ("average_context", opt(&t.average_context)),
        ("threads", opt(&t.threads)),
    ]
}

fn read_corpus(path: &Path, lowercase: bool) -> CliResult<Vec<Vec<String>>> {
    with_path(path, read_documents(aio::open(path)?, lowercase))
}

/// Attaches the path to parse and format errors.
fn with_path<T>(path: &Path, r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        Error::File { .. } => e.into(),
        other => CliError {
            code: 1,
            message: format!("{}: {other}", path.display()),
        },
    })
}

fn load_vocab(path: &Path) -> CliResult<Vocabulary> {
    with_path(path, Vocabulary::read_tsv(aio::open(path)?))
}

fn load_matrix(path: &Path, vocab: &Vocabulary) -> CliResult<WeightedMatrix<f64>> {
    with_path(path, WeightedMatrix::read_tsv(aio::open(path)?, (vocab.len(), vocab.len())))
}

fn load_lexicon(path: &Path) -> CliResult<ContrastLexicon> {
    with_path(path, ContrastLexicon::read(aio::open(path)?))
}

fn write_artifact(path: &Path, header: &ArtifactHeader, body: impl FnOnce(&mut dyn Write) -> crate::Result<()>) -> CliResult<()> {
    let mut w = aio::create(path)?;
    let io_err = |e| CliError::from(Error::file(path, e));
    header.write(&mut w).map_err(CliError::from)?;
    body(&mut w)?;
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Stage implementations shared by the subcommands and `pipeline`.
pub mod stages {
    use super::*;

    pub fn vocab(cfg: &RunConfig, corpus: &Path, out: &Path) -> CliResult<Vocabulary> {
        let docs = read_corpus(corpus, cfg.lowercase)?;
        let vocab = Vocabulary::build(&docs, cfg.min_count)?;
        write_artifact(out, &cfg.header("vocab", VOCAB_KEYS), |w| vocab.write_tsv(w))?;
        Ok(vocab)
    }

    pub fn encode(cfg: &RunConfig, corpus: &Path, vocab: &Vocabulary) -> CliResult<Vec<Document>> {
        Ok(vocab.encode(&read_corpus(corpus, cfg.lowercase)?))
    }

    pub fn count(cfg: &RunConfig, docs: &[Document], vocab: &Vocabulary, out: &Path) -> CliResult<CooccurrenceCounts> {
        let counts = count_cooccurrences_sharded(docs, vocab, cfg.window, cfg.threads)?;
        write_artifact(out, &cfg.header("count", COUNT_KEYS), |w| counts.write_tsv(w))?;
        Ok(counts)
    }

    pub fn lmi(cfg: &RunConfig, counts: &CooccurrenceCounts, vocab: &Vocabulary, out: &Path) -> CliResult<WeightedMatrix<f64>> {
        counts.check_vocabulary(vocab)?;
        let lmi = compute_lmi::<f64>(counts, vocab.len())?;
        write_artifact(out, &cfg.header("lmi", COUNT_KEYS), |w| lmi.write_tsv(w))?;
        Ok(lmi)
    }

    pub fn weight_sa(
        cfg: &RunConfig,
        lmi: &WeightedMatrix<f64>,
        vocab: &Vocabulary,
        lexicon: &ContrastLexicon,
        out: &Path,
    ) -> CliResult<WeightedMatrix<f64>> {
        let index = FeatureIndex::build(lmi);
        let sa = compute_weight_sa(lmi, &index, &lexicon.index(vocab), cfg.sa_options())?;
        write_artifact(out, &cfg.header("weight-sa", SA_KEYS), |w| sa.write_tsv(w))?;
        Ok(sa)
    }

    pub fn svd(cfg: &RunConfig, matrix: &WeightedMatrix<f64>, vocab: &Vocabulary, out: &Path) -> CliResult<DenseEmbeddings<f64>> {
        let source = match matrix.scheme() {
            crate::weighting::Scheme::Lmi => Source::LmiSvd,
            crate::weighting::Scheme::Sa => Source::SaSvd,
        };
        let factors = truncated_svd(matrix, &cfg.svd())?;
        if factors.effective_rank < cfg.svd_dim {
            log::warn!("matrix rank {} below requested {} components", factors.effective_rank, cfg.svd_dim);
        }
        let emb = factors.into_embeddings(vocab, cfg.svd_exponent, source)?;
        let header = ArtifactHeader::new(
            cfg.seed,
            format!("stage=svd\nscheme={}\n{}", matrix.scheme(), cfg.serialize(SVD_KEYS)),
        );
        write_artifact(out, &header, |w| emb.write_word2vec_text(w))?;
        Ok(emb)
    }

    pub fn train(
        cfg: &RunConfig,
        docs: &[Document],
        vocab: &Vocabulary,
        contrast: Option<ContrastInputs<'_>>,
        objective: Option<&CooccurrenceCounts>,
        out: &Path,
    ) -> CliResult<DenseEmbeddings<f64>> {
        let tcfg = cfg.training();
        let mut log_epoch = |s: &crate::embeddings::EpochStats| eprintln!("{}", s.tsv());
        eprintln!("epoch\tpairs\talpha\tobjective");
        let observer = TrainObserver {
            objective_pairs: objective,
            on_epoch: Some(&mut log_epoch),
        };
        let (model, _) = train_observed::<f64>(docs, vocab, &tcfg, contrast, observer)?;
        let (source, stage, mut keys) = match contrast {
            None => (Source::Sgns, "train-sgns", TRAIN_KEYS.to_vec()),
            Some(_) => (Source::Dlce, "train-dlce", TRAIN_KEYS.to_vec()),
        };
        if contrast.is_some() {
            keys.extend_from_slice(DLCE_KEYS);
        }
        let emb = model.embeddings(vocab, source)?;
        write_artifact(out, &cfg.header(stage, &keys), |w| emb.write_word2vec_text(w))?;
        Ok(emb)
    }
}

enum Vectors {
    Dense(DenseEmbeddings<f64>),
    Sparse(Vocabulary, WeightedMatrix<f64>),
}

impl Vectors {
    fn load(vectors: &Option<PathBuf>, matrix: &Option<PathBuf>, vocab: &Option<PathBuf>) -> CliResult<Self> {
        match (vectors, matrix, vocab) {
            (Some(v), _, _) => Ok(Vectors::Dense(with_path(v, DenseEmbeddings::read_word2vec_text(aio::open(v)?, None))?)),
            (None, Some(m), Some(voc)) => {
                let vocab = load_vocab(voc)?;
                let matrix = load_matrix(m, &vocab)?;
                Ok(Vectors::Sparse(vocab, matrix))
            }
            _ => Err(usage("one of --vectors or --matrix with --vocab is required")),
        }
    }

    fn with<R>(&self, f: impl FnOnce(&dyn WordVectors) -> R) -> R {
        match self {
            Vectors::Dense(e) => f(e),
            Vectors::Sparse(vocab, matrix) => f(&SparseVectors { vocab, matrix }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportKind {
    Ap,
    Auc,
    Medians,
    Spearman,
}

impl ReportKind {
    fn stage(self) -> &'static str {
        match self {
            ReportKind::Ap => "eval-ap",
            ReportKind::Auc => "eval-auc",
            ReportKind::Medians => "report-medians",
            ReportKind::Spearman => "eval-spearman",
        }
    }
}

fn relation_report(kind: ReportKind, vectors: &dyn WordVectors, pairs: &RelationPairSet, json: bool, header: &ArtifactHeader) -> CliResult<Vec<u8>> {
    let report = eval_ap(vectors, pairs);
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if report.classes.is_empty() {
        return Err(CliError::from(Error::UndefinedMetric("no word class could be scored".into())));
    }
    let mut buf = Vec::new();
    if json {
        writeln!(buf, "{}", json_with_header(&report, header)).expect("in-memory write");
        return Ok(buf);
    }
    header.write(&mut buf)?;
    match kind {
        ReportKind::Ap => report.write_ap_tsv(&mut buf)?,
        ReportKind::Auc => report.write_auc_tsv(&mut buf)?,
        ReportKind::Medians => report.write_median_tsv(&mut buf, &cell_counts(vectors, pairs))?,
        ReportKind::Spearman => unreachable!(),
    }
    Ok(buf)
}

fn json_with_header(report: &MetricReport, header: &ArtifactHeader) -> String {
    let mut value = serde_json::to_value(report).expect("report serializes");
    value["provenance"] = serde_json::json!({
        "tool": header.tool,
        "config_hash": header.config_hash(),
        "seed": header.seed,
        "orientation": "AUC: ANT positive, scores negated",
    });
    serde_json::to_string_pretty(&value).expect("json")
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => {
            let mut w = aio::create(path)?;
            w.write_all(bytes).and_then(|_| w.flush()).map_err(|e| Error::file(path, e))?;
        }
        None => std::io::stdout().write_all(bytes).map_err(|e| Error::Io(e))?,
    }
    Ok(())
}

fn report_header(cfg: &RunConfig, kind: ReportKind) -> ArtifactHeader {
    cfg.header(kind.stage(), &[])
}

fn run_eval(kind: ReportKind, args: &EvalArgs) -> CliResult<()> {
    let r = resolve(args.common.config.as_deref(), &common_flags(&args.common))?;
    let vectors = Vectors::load(&args.vectors, &args.matrix, &args.vocab)?;
    let pairs = with_path(&args.pairs, RelationPairSet::read(aio::open(&args.pairs)?))?;
    let bytes = vectors.with(|v| relation_report(kind, v, &pairs, args.json, &report_header(&r.config, kind)))?;
    emit(&args.out, &bytes)
}

fn spearman_report(vectors: &dyn WordVectors, pairs: &SimilarityPairSet, json: bool, header: &ArtifactHeader) -> CliResult<Vec<u8>> {
    let report = eval_spearman(vectors, pairs)?;
    let mut buf = Vec::new();
    if json {
        writeln!(buf, "{}", json_with_header(&report, header)).expect("in-memory write");
    } else {
        header.write(&mut buf)?;
        report.write_spearman_tsv(&mut buf)?;
    }
    Ok(buf)
}

fn run_spearman(args: &SpearmanArgs) -> CliResult<()> {
    let r = resolve(args.common.config.as_deref(), &common_flags(&args.common))?;
    let vectors = Vectors::load(&args.vectors, &args.matrix, &args.vocab)?;
    let pairs = with_path(&args.pairs, SimilarityPairSet::read(aio::open(&args.pairs)?))?;
    let bytes = vectors.with(|v| spearman_report(v, &pairs, args.json, &report_header(&r.config, ReportKind::Spearman)))?;
    emit(&args.out, &bytes)
}

fn run_train(args: &TrainArgs, dlce: Option<&DlceArgs>) -> CliResult<()> {
    let mut flags = common_flags(&args.common);
    flags.extend(corpus_flags(&args.corpus_args));
    flags.extend(train_flags(&args.train));
    if let Some(d) = dlce {
        flags.push(("contrast_coefficient", opt(&d.contrast_coefficient)));
        flags.push(("max_contrast_neighbors", opt(&d.max_contrast_neighbors)));
    }
    let cfg = resolve(args.common.config.as_deref(), &flags)?.config;
    let vocab = load_vocab(&args.vocab)?;
    let docs = stages::encode(&cfg, &args.corpus, &vocab)?;
    let objective = match &args.objective_counts {
        Some(p) => Some(with_path(p, CooccurrenceCounts::read_tsv(aio::open(p)?, cfg.window))?),
        None => None,
    };
    match dlce {
        None => stages::train(&cfg, &docs, &vocab, None, objective.as_ref(), &args.out)?,
        Some(d) => {
            let lexicon = load_lexicon(&d.lexicon)?.index(&vocab);
            let lmi = load_matrix(&d.lmi, &vocab)?;
            let index = FeatureIndex::build(&lmi);
            let contrast = ContrastInputs {
                lexicon: &lexicon,
                index: &index,
            };
            stages::train(&cfg, &docs, &vocab, Some(contrast), objective.as_ref(), &args.out)?
        }
    };
    Ok(())
}

/// File names written by `pipeline` inside the output directory.
pub mod outputs {
    pub const VOCAB: &str = "vocab.tsv";
    pub const COUNTS: &str = "counts.tsv";
    pub const LMI: &str = "lmi.tsv";
    pub const SA: &str = "sa.tsv";
    pub const LMI_SVD: &str = "lmi_svd.vec";
    pub const SA_SVD: &str = "sa_svd.vec";
    pub const SGNS: &str = "sgns.vec";
    pub const DLCE: &str = "dlce.vec";
}

fn required_path(paths: &BTreeMap<String, String>, key: &str) -> CliResult<PathBuf> {
    paths
        .get(key)
        .map(PathBuf::from)
        .ok_or_else(|| usage(format!("pipeline config needs `{key}`")))
}

fn run_pipeline(args: &PipelineArgs) -> CliResult<()> {
    let r = resolve(
        Some(&args.config),
        &[("seed", opt(&args.seed)), ("threads", opt(&args.threads))],
    )?;
    let cfg = r.config;
    let base = args.config.parent().unwrap_or(Path::new(""));
    let rel = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
    let corpus = rel(required_path(&r.paths, "corpus")?);
    let lexicon_path = rel(required_path(&r.paths, "lexicon")?);
    let pairs_path = rel(required_path(&r.paths, "pairs")?);
    let similarity_path = r.paths.get("similarity").map(|p| rel(PathBuf::from(p)));
    let out_dir = match (&args.out_dir, r.paths.get("out_dir")) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => rel(PathBuf::from(d)),
        (None, None) => return Err(usage("pipeline needs --out-dir or `out_dir` in the config")),
    };
    fs::create_dir_all(&out_dir).map_err(|e| Error::file(&out_dir, e))?;
    let out = |name: &str| out_dir.join(name);

    let lexicon = load_lexicon(&lexicon_path)?;
    let pairs = with_path(&pairs_path, RelationPairSet::read(aio::open(&pairs_path)?))?;
    let similarity = match &similarity_path {
        Some(p) => Some(with_path(p, SimilarityPairSet::read(aio::open(p)?))?),
        None => None,
    };

    let vocab = stages::vocab(&cfg, &corpus, &out(outputs::VOCAB))?;
    let docs = stages::encode(&cfg, &corpus, &vocab)?;
    let counts = stages::count(&cfg, &docs, &vocab, &out(outputs::COUNTS))?;
    let lmi = stages::lmi(&cfg, &counts, &vocab, &out(outputs::LMI))?;
    let sa = stages::weight_sa(&cfg, &lmi, &vocab, &lexicon, &out(outputs::SA))?;
    let lmi_svd = stages::svd(&cfg, &lmi, &vocab, &out(outputs::LMI_SVD))?;
    let sa_svd = stages::svd(&cfg, &sa, &vocab, &out(outputs::SA_SVD))?;
    let sgns = stages::train(&cfg, &docs, &vocab, None, None, &out(outputs::SGNS))?;
    let indexed = lexicon.index(&vocab);
    let index = FeatureIndex::build(&lmi);
    let contrast = ContrastInputs {
        lexicon: &indexed,
        index: &index,
    };
    let dlce = stages::train(&cfg, &docs, &vocab, Some(contrast), None, &out(outputs::DLCE))?;

    let sparse: [(&str, &WeightedMatrix<f64>); 2] = [("lmi", &lmi), ("sa", &sa)];
    for (name, m) in sparse {
        let v = SparseVectors { vocab: &vocab, matrix: m };
        let bytes = relation_report(ReportKind::Ap, &v, &pairs, false, &report_header(&cfg, ReportKind::Ap))?;
        emit(&Some(out(&format!("{name}.ap.tsv"))), &bytes)?;
    }
    let dense = [("lmi_svd", &lmi_svd), ("sa_svd", &sa_svd), ("sgns", &sgns), ("dlce", &dlce)];
    for (name, e) in dense {
        for kind in [ReportKind::Ap, ReportKind::Auc, ReportKind::Medians] {
            let bytes = relation_report(kind, e, &pairs, false, &report_header(&cfg, kind))?;
            let suffix = match kind {
                ReportKind::Ap => "ap",
                ReportKind::Auc => "auc",
                _ => "medians",
            };
            emit(&Some(out(&format!("{name}.{suffix}.tsv"))), &bytes)?;
        }
        if let Some(sim) = &similarity {
            let bytes = spearman_report(e, sim, false, &report_header(&cfg, ReportKind::Spearman))?;
            emit(&Some(out(&format!("{name}.spearman.tsv"))), &bytes)?;
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Vocab(a) => {
            let mut flags = common_flags(&a.common);
            flags.extend(corpus_flags(&a.corpus_args));
            let cfg = resolve(a.common.config.as_deref(), &flags)?.config;
            stages::vocab(&cfg, &a.corpus, &a.out)?;
        }
        Command::Count(a) => {
            let mut flags = common_flags(&a.common);
            flags.extend(corpus_flags(&a.corpus_args));
            flags.push(("window", opt(&a.window)));
            flags.push(("threads", opt(&a.threads)));
            let cfg = resolve(a.common.config.as_deref(), &flags)?.config;
            let vocab = load_vocab(&a.vocab)?;
            let docs = stages::encode(&cfg, &a.corpus, &vocab)?;
            stages::count(&cfg, &docs, &vocab, &a.out)?;
        }
        Command::Lmi(a) => {
            let cfg = resolve(a.common.config.as_deref(), &common_flags(&a.common))?.config;
            let vocab = load_vocab(&a.vocab)?;
            let counts = with_path(&a.counts, CooccurrenceCounts::read_tsv(aio::open(&a.counts)?, cfg.window))?;
            stages::lmi(&cfg, &counts, &vocab, &a.out)?;
        }
        Command::WeightSa(a) => {
            let mut flags = common_flags(&a.common);
            flags.push(("ant_mean", opt(&a.ant_mean)));
            flags.push(("fallback_lmi", opt(&a.fallback_lmi)));
            let cfg = resolve(a.common.config.as_deref(), &flags)?.config;
            let vocab = load_vocab(&a.vocab)?;
            let lmi = load_matrix(&a.lmi, &vocab)?;
            let lexicon = load_lexicon(&a.lexicon)?;
            stages::weight_sa(&cfg, &lmi, &vocab, &lexicon, &a.out)?;
        }
        Command::Svd(a) => {
            let mut flags = common_flags(&a.common);
            flags.extend(svd_flags(&a.svd));
            let cfg = resolve(a.common.config.as_deref(), &flags)?.config;
            let vocab = load_vocab(&a.vocab)?;
            let matrix = load_matrix(&a.matrix, &vocab)?;
            stages::svd(&cfg, &matrix, &vocab, &a.out)?;
        }
        Command::TrainSgns(a) => run_train(&a, None)?,
        Command::TrainDlce(a) => run_train(&a.base, Some(&a))?,
        Command::EvalAp(a) => run_eval(ReportKind::Ap, &a)?,
        Command::EvalAuc(a) => run_eval(ReportKind::Auc, &a)?,
        Command::ReportMedians(a) => run_eval(ReportKind::Medians, &a)?,
        Command::EvalSpearman(a) => run_spearman(&a)?,
        Command::Pipeline(a) => run_pipeline(&a)?,
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return 0;
            }
            let mut cmd = <Cli as clap::CommandFactory>::command();
            cmd.build();
            let sub = args.get(1).and_then(|a| a.to_str()).unwrap_or_default();
            let text = match cmd.find_subcommand_mut(sub) {
                Some(s) => s.render_usage(),
                None => cmd.render_usage(),
            };
            eprintln!("\n{text}");
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
