//! Command-line front end: preprocess, train, evaluate, cv, simulate and
//! topics subcommands over config files with flag overrides.
//!
//! Every command is a pure function of its resolved configuration and
//! input files; the resolved configuration (including the seed) is echoed
//! into each emitted report, and reruns produce byte-identical outputs.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{self, Checkpoint};
use crate::corpus::{self, Document, PreprocessOptions, Vocabulary};
use crate::error::{Error, Result};
use crate::evaluate;
use crate::priors::{self, SentimentLexicon};
use crate::sampler::{self, SampleAverage, TrainOptions};
use crate::simulate::{self, GenerativeSpec, MuKind};

const DEFAULT_SIGMA_GRID: &[f64] = &[0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0];

#[derive(Parser)]
#[command(
    name = "jstrr",
    about = "Joint sentiment-topic modeling of review texts and ratings",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Config file (TOML, one section per command); flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 or absent: library default).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Tokenize raw reviews and build the vocabulary.
    Preprocess(PreprocessOpts),
    /// Fit the model by collapsed Gibbs sampling and write a checkpoint.
    Train(TrainOpts),
    /// Score held-out documents against a checkpoint.
    Evaluate(EvaluateOpts),
    /// Cross-validate the rating weight sigma.
    Cv(CvOpts),
    /// Run the synthetic sentiment-recovery experiment.
    Simulate(SimulateOpts),
    /// Emit top words per (sentiment, topic) and the rating table.
    Topics(TopicsOpts),
}

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct PreprocessOpts {
    /// Raw reviews (JSON Lines with text and rating).
    #[arg(long)]
    reviews: Option<PathBuf>,
    /// Stopword list, one token per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Negation trigger list; defaults to the built-in set.
    #[arg(long)]
    triggers: Option<PathBuf>,
    /// Drop terms seen in fewer documents than this.
    #[arg(long)]
    min_doc_frequency: Option<u32>,
    /// Porter-stem tokens.
    #[arg(long)]
    stemming: Option<bool>,
    /// Balance positive vs negative documents.
    #[arg(long)]
    balance: Option<bool>,
    /// Also emit a train/test split at this fraction.
    #[arg(long)]
    train_fraction: Option<f64>,
}

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct TrainOpts {
    /// Tokenized documents (JSON Lines).
    #[arg(long)]
    documents: Option<PathBuf>,
    /// Vocabulary TSV from preprocess.
    #[arg(long)]
    vocabulary: Option<PathBuf>,
    #[arg(long)]
    lexicon_positive: Option<PathBuf>,
    #[arg(long)]
    lexicon_negative: Option<PathBuf>,
    /// Sentiment count S.
    #[arg(long)]
    sentiments: Option<usize>,
    /// Topic count K.
    #[arg(long)]
    topics: Option<usize>,
    /// Rating weight.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Average the last N parameter samples instead of the final one.
    #[arg(long)]
    average_samples: Option<usize>,
    /// Sweeps between averaged samples.
    #[arg(long)]
    average_every: Option<usize>,
}

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct EvaluateOpts {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Held-out documents (JSON Lines).
    #[arg(long)]
    documents: Option<PathBuf>,
    /// Vocabulary TSV; when given its hash is checked against the checkpoint.
    #[arg(long)]
    vocabulary: Option<PathBuf>,
    /// Particles for the left-to-right estimator.
    #[arg(long)]
    particles: Option<usize>,
}

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct CvOpts {
    #[arg(long)]
    documents: Option<PathBuf>,
    #[arg(long)]
    vocabulary: Option<PathBuf>,
    #[arg(long)]
    lexicon_positive: Option<PathBuf>,
    #[arg(long)]
    lexicon_negative: Option<PathBuf>,
    #[arg(long)]
    sentiments: Option<usize>,
    #[arg(long)]
    topics: Option<usize>,
    /// Grid of sigma values, comma separated on the command line.
    #[arg(long, value_delimiter = ',')]
    sigma_grid: Option<Vec<f64>>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    particles: Option<usize>,
}

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct SimulateOpts {
    #[arg(long)]
    sentiments: Option<usize>,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    vocabulary_size: Option<usize>,
    /// Documents per configuration.
    #[arg(long)]
    documents: Option<usize>,
    /// Ratings per document, comma separated.
    #[arg(long, value_delimiter = ',')]
    m_list: Option<Vec<usize>>,
    /// Words-per-rating ratios, comma separated.
    #[arg(long, value_delimiter = ',')]
    ratio_list: Option<Vec<usize>>,
    /// Ground-truth rating distribution: "diff" or "unif".
    #[arg(long)]
    mu_kind: Option<MuKind>,
    /// Explicit sigma values to run, paired on the same corpora.
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    /// Validation grid; the selected sigma is run against the sigma = 0
    /// baseline. Used when no explicit sigma list is given.
    #[arg(long, value_delimiter = ',')]
    sigma_grid: Option<Vec<f64>>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Dirichlet concentration of the synthetic word distributions.
    #[arg(long)]
    concentration: Option<f64>,
}

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct TopicsOpts {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    vocabulary: Option<PathBuf>,
    /// Words per (sentiment, topic) cell.
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    preprocess: Option<PreprocessOpts>,
    train: Option<TrainOpts>,
    evaluate: Option<EvaluateOpts>,
    cv: Option<CvOpts>,
    simulate: Option<SimulateOpts>,
    topics: Option<TopicsOpts>,
    /// Global fallbacks, overridden by the matching flags.
    seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(path) => {
            if !path.exists() {
                return Err(Error::InvalidArgument(format!(
                    "input path does not exist: {}",
                    path.display()
                )));
            }
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
        }
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "input path does not exist: {}",
            path.display()
        )))
    }
}

fn required<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing required key {name}")))
}

fn write_csv(path: &Path, content: &str) -> Result<()> {
    checkpoint::write_atomic(path, content.as_bytes())
}

pub fn run(cli: Cli) -> Result<()> {
    let file = load_file_config(cli.config.as_deref())?;
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let out_dir = cli
        .out
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Some(threads) = cli.threads.or(file.threads) {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    match cli.command {
        Command::Preprocess(opts) => cmd_preprocess(opts.merged(file.preprocess), seed, &out_dir),
        Command::Train(opts) => cmd_train(opts.merged(file.train), seed, &out_dir),
        Command::Evaluate(opts) => cmd_evaluate(opts.merged(file.evaluate), seed, &out_dir),
        Command::Cv(opts) => cmd_cv(opts.merged(file.cv), seed, &out_dir),
        Command::Simulate(opts) => cmd_simulate(opts.merged(file.simulate), seed, &out_dir),
        Command::Topics(opts) => cmd_topics(opts.merged(file.topics), seed, &out_dir),
    }
}

impl PreprocessOpts {
    fn merged(self, file: Option<Self>) -> Self {
        let f = file.unwrap_or_default();
        PreprocessOpts {
            reviews: self.reviews.or(f.reviews),
            stopwords: self.stopwords.or(f.stopwords),
            triggers: self.triggers.or(f.triggers),
            min_doc_frequency: self.min_doc_frequency.or(f.min_doc_frequency),
            stemming: self.stemming.or(f.stemming),
            balance: self.balance.or(f.balance),
            train_fraction: self.train_fraction.or(f.train_fraction),
        }
    }
}

#[derive(Serialize, Clone)]
struct PreprocessConfig {
    reviews: PathBuf,
    stopwords: Option<PathBuf>,
    triggers: Option<PathBuf>,
    min_doc_frequency: u32,
    stemming: bool,
    balance: bool,
    train_fraction: Option<f64>,
    seed: u64,
    out: PathBuf,
}

#[derive(Serialize)]
struct PreprocessSummary {
    documents: usize,
    vocabulary: usize,
    mean_words: f64,
    train_documents: Option<usize>,
    test_documents: Option<usize>,
    config: PreprocessConfig,
}

fn cmd_preprocess(opts: PreprocessOpts, seed: u64, out: &Path) -> Result<()> {
    let config = PreprocessConfig {
        reviews: required(opts.reviews, "preprocess.reviews")?,
        stopwords: opts.stopwords,
        triggers: opts.triggers,
        min_doc_frequency: opts.min_doc_frequency.unwrap_or(5),
        stemming: opts.stemming.unwrap_or(true),
        balance: opts.balance.unwrap_or(true),
        train_fraction: opts.train_fraction,
        seed,
        out: out.to_path_buf(),
    };
    require_file(&config.reviews)?;
    let reviews = corpus::load_reviews(&config.reviews)?;
    let stopwords = match &config.stopwords {
        Some(path) => {
            require_file(path)?;
            corpus::load_token_list(path)?
        }
        None => Default::default(),
    };
    let negation_triggers = match &config.triggers {
        Some(path) => {
            require_file(path)?;
            corpus::load_token_list(path)?
        }
        None => corpus::DEFAULT_NEGATION_TRIGGERS
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    let (documents, vocabulary) = corpus::preprocess(
        &reviews,
        &PreprocessOptions {
            stopwords,
            min_doc_frequency: config.min_doc_frequency,
            negation_triggers,
            enable_stemming: config.stemming,
            balance_classes: config.balance,
            seed,
        },
    )?;
    let split = match config.train_fraction {
        Some(fraction) => Some(corpus::split(&documents, fraction, seed)?),
        None => None,
    };
    checkpoint::write_atomic(
        out.join("documents.jsonl"),
        corpus::documents_to_jsonl(&documents).as_bytes(),
    )?;
    checkpoint::write_atomic(out.join("vocabulary.tsv"), vocabulary.to_tsv().as_bytes())?;
    if let Some((train, test)) = &split {
        checkpoint::write_atomic(
            out.join("train.jsonl"),
            corpus::documents_to_jsonl(train).as_bytes(),
        )?;
        checkpoint::write_atomic(
            out.join("test.jsonl"),
            corpus::documents_to_jsonl(test).as_bytes(),
        )?;
    }
    let tokens: usize = documents.iter().map(|d| d.word_count()).sum();
    let summary = PreprocessSummary {
        documents: documents.len(),
        vocabulary: vocabulary.len(),
        mean_words: tokens as f64 / documents.len() as f64,
        train_documents: split.as_ref().map(|(t, _)| t.len()),
        test_documents: split.as_ref().map(|(_, t)| t.len()),
        config,
    };
    checkpoint::write_json_report(out.join("summary.json"), &summary)?;
    println!(
        "D={} V={} mean_words={:.2}",
        summary.documents, summary.vocabulary, summary.mean_words
    );
    Ok(())
}

impl TrainOpts {
    fn merged(self, file: Option<Self>) -> Self {
        let f = file.unwrap_or_default();
        TrainOpts {
            documents: self.documents.or(f.documents),
            vocabulary: self.vocabulary.or(f.vocabulary),
            lexicon_positive: self.lexicon_positive.or(f.lexicon_positive),
            lexicon_negative: self.lexicon_negative.or(f.lexicon_negative),
            sentiments: self.sentiments.or(f.sentiments),
            topics: self.topics.or(f.topics),
            sigma: self.sigma.or(f.sigma),
            iterations: self.iterations.or(f.iterations),
            average_samples: self.average_samples.or(f.average_samples),
            average_every: self.average_every.or(f.average_every),
        }
    }
}

#[derive(Serialize, Clone)]
struct TrainConfig {
    documents: PathBuf,
    vocabulary: PathBuf,
    lexicon_positive: Option<PathBuf>,
    lexicon_negative: Option<PathBuf>,
    sentiments: usize,
    topics: usize,
    sigma: f64,
    iterations: usize,
    average_samples: Option<usize>,
    average_every: Option<usize>,
    seed: u64,
    out: PathBuf,
}

fn load_documents(path: &Path, vocab_size: Option<usize>) -> Result<Vec<Document>> {
    require_file(path)?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    corpus::documents_from_jsonl(&text, vocab_size)
}

fn load_vocabulary(path: &Path) -> Result<Vocabulary> {
    require_file(path)?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Vocabulary::from_tsv(&text)
}

fn load_optional_lexicon(
    positive: Option<&Path>,
    negative: Option<&Path>,
) -> Result<SentimentLexicon> {
    match (positive, negative) {
        (Some(p), Some(n)) => {
            require_file(p)?;
            require_file(n)?;
            priors::load_lexicon(p, n)
        }
        (None, None) => Ok(SentimentLexicon::default()),
        _ => Err(Error::Config(
            "lexicon_positive and lexicon_negative must be given together".into(),
        )),
    }
}

fn cmd_train(opts: TrainOpts, seed: u64, out: &Path) -> Result<()> {
    let config = TrainConfig {
        documents: required(opts.documents, "train.documents")?,
        vocabulary: required(opts.vocabulary, "train.vocabulary")?,
        lexicon_positive: opts.lexicon_positive,
        lexicon_negative: opts.lexicon_negative,
        sentiments: opts.sentiments.unwrap_or(2),
        topics: opts.topics.unwrap_or(5),
        sigma: opts.sigma.unwrap_or(1.0),
        iterations: opts.iterations.unwrap_or(1000),
        average_samples: opts.average_samples,
        average_every: opts.average_every,
        seed,
        out: out.to_path_buf(),
    };
    let vocabulary = load_vocabulary(&config.vocabulary)?;
    let documents = load_documents(&config.documents, Some(vocabulary.len()))?;
    let lexicon = load_optional_lexicon(
        config.lexicon_positive.as_deref(),
        config.lexicon_negative.as_deref(),
    )?;
    let hyper = priors::build_hyperparams(
        config.sentiments,
        config.topics,
        &vocabulary,
        &lexicon,
        config.sigma,
    )?;
    let average = match (config.average_samples, config.average_every) {
        (Some(samples), every) => Some(SampleAverage {
            samples,
            every: every.unwrap_or(1),
        }),
        (None, _) => None,
    };
    let result = sampler::train_with(
        &documents,
        &hyper,
        &TrainOptions {
            iterations: config.iterations,
            seed,
            average,
        },
    )?;
    let mut model = Checkpoint::new(
        &hyper,
        &result.params,
        vocabulary.sha256(),
        seed,
        config.iterations,
    );
    model.config = Some(serde_json::to_value(&config).map_err(|e| Error::Config(e.to_string()))?);
    model.write(out.join("model.json"))?;
    let mut csv = String::from("sweep,joint_log_score\n");
    for (sweep, score) in result.log_scores.iter().enumerate() {
        csv.push_str(&format!("{sweep},{score}\n"));
    }
    write_csv(&out.join("diagnostics.csv"), &csv)?;
    println!(
        "trained D={} V={} S={} K={} sigma={} iterations={}",
        documents.len(),
        vocabulary.len(),
        config.sentiments,
        config.topics,
        config.sigma,
        config.iterations
    );
    Ok(())
}

impl EvaluateOpts {
    fn merged(self, file: Option<Self>) -> Self {
        let f = file.unwrap_or_default();
        EvaluateOpts {
            checkpoint: self.checkpoint.or(f.checkpoint),
            documents: self.documents.or(f.documents),
            vocabulary: self.vocabulary.or(f.vocabulary),
            particles: self.particles.or(f.particles),
        }
    }
}

#[derive(Serialize, Clone)]
struct EvaluateConfig {
    checkpoint: PathBuf,
    documents: PathBuf,
    vocabulary: Option<PathBuf>,
    particles: usize,
    seed: u64,
    out: PathBuf,
}

#[derive(Serialize)]
struct EvaluateReport {
    #[serde(flatten)]
    report: evaluate::PerplexityReport,
    config: EvaluateConfig,
}

fn cmd_evaluate(opts: EvaluateOpts, seed: u64, out: &Path) -> Result<()> {
    let config = EvaluateConfig {
        checkpoint: required(opts.checkpoint, "evaluate.checkpoint")?,
        documents: required(opts.documents, "evaluate.documents")?,
        vocabulary: opts.vocabulary,
        particles: opts.particles.unwrap_or(20),
        seed,
        out: out.to_path_buf(),
    };
    require_file(&config.checkpoint)?;
    let model = Checkpoint::read(&config.checkpoint)?;
    if let Some(vocab_path) = &config.vocabulary {
        let vocabulary = load_vocabulary(vocab_path)?;
        if vocabulary.sha256() != model.vocab_sha256 {
            return Err(Error::VocabularyMismatch {
                expected: model.vocab_sha256.clone(),
                actual: vocabulary.sha256(),
            });
        }
    }
    let documents = load_documents(&config.documents, Some(model.v))?;
    if documents.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let hyper = model.hyperparams()?;
    let params = model.params();
    let word_perplexity =
        evaluate::word_perplexity(&documents, &params, &hyper, config.particles, seed)?;
    let has_ratings = documents.iter().any(|d| d.rating_count() > 0);
    let rating_perplexity = if has_ratings {
        Some(evaluate::rating_perplexity(&documents, &params, &hyper)?)
    } else {
        None
    };
    let upper_bound = evaluate::perplexity_upper_bound(&documents)?;
    let report = EvaluateReport {
        report: evaluate::PerplexityReport {
            word_perplexity,
            rating_perplexity,
            upper_bound,
            particles: config.particles,
            seed,
        },
        config,
    };
    checkpoint::write_json_report(out.join("perplexity.json"), &report)?;
    println!(
        "word_perplexity={word_perplexity} upper_bound={upper_bound}{}",
        match rating_perplexity {
            Some(rp) => format!(" rating_perplexity={rp}"),
            None => String::new(),
        }
    );
    Ok(())
}

impl CvOpts {
    fn merged(self, file: Option<Self>) -> Self {
        let f = file.unwrap_or_default();
        CvOpts {
            documents: self.documents.or(f.documents),
            vocabulary: self.vocabulary.or(f.vocabulary),
            lexicon_positive: self.lexicon_positive.or(f.lexicon_positive),
            lexicon_negative: self.lexicon_negative.or(f.lexicon_negative),
            sentiments: self.sentiments.or(f.sentiments),
            topics: self.topics.or(f.topics),
            sigma_grid: self.sigma_grid.or(f.sigma_grid),
            folds: self.folds.or(f.folds),
            iterations: self.iterations.or(f.iterations),
            particles: self.particles.or(f.particles),
        }
    }
}

#[derive(Serialize, Clone)]
struct CvConfig {
    documents: PathBuf,
    vocabulary: PathBuf,
    lexicon_positive: Option<PathBuf>,
    lexicon_negative: Option<PathBuf>,
    sentiments: usize,
    topics: usize,
    sigma_grid: Vec<f64>,
    folds: usize,
    iterations: usize,
    particles: usize,
    seed: u64,
    out: PathBuf,
}

#[derive(Serialize)]
struct CvOutput {
    #[serde(flatten)]
    report: evaluate::CvReport,
    config: CvConfig,
}

fn cmd_cv(opts: CvOpts, seed: u64, out: &Path) -> Result<()> {
    let config = CvConfig {
        documents: required(opts.documents, "cv.documents")?,
        vocabulary: required(opts.vocabulary, "cv.vocabulary")?,
        lexicon_positive: opts.lexicon_positive,
        lexicon_negative: opts.lexicon_negative,
        sentiments: opts.sentiments.unwrap_or(2),
        topics: opts.topics.unwrap_or(5),
        sigma_grid: opts
            .sigma_grid
            .unwrap_or_else(|| DEFAULT_SIGMA_GRID.to_vec()),
        folds: opts.folds.unwrap_or(10),
        iterations: opts.iterations.unwrap_or(200),
        particles: opts.particles.unwrap_or(20),
        seed,
        out: out.to_path_buf(),
    };
    let vocabulary = load_vocabulary(&config.vocabulary)?;
    let documents = load_documents(&config.documents, Some(vocabulary.len()))?;
    let lexicon = load_optional_lexicon(
        config.lexicon_positive.as_deref(),
        config.lexicon_negative.as_deref(),
    )?;
    let hyper_base =
        priors::build_hyperparams(config.sentiments, config.topics, &vocabulary, &lexicon, 0.0)?;
    let report = evaluate::cross_validate_sigma(
        &documents,
        &hyper_base,
        &config.sigma_grid,
        config.folds,
        config.iterations,
        config.particles,
        seed,
    )?;
    let mut csv = String::from("sigma,mean_word_perplexity\n");
    for (g, sigma) in report.grid.iter().enumerate() {
        let mean = report.fold_scores[g].iter().sum::<f64>() / report.fold_scores[g].len() as f64;
        csv.push_str(&format!("{sigma},{mean}\n"));
    }
    write_csv(&out.join("cv_curve.csv"), &csv)?;
    let selected = report.selected_sigma;
    checkpoint::write_json_report(out.join("cv.json"), &CvOutput { report, config })?;
    println!("selected_sigma={selected}");
    Ok(())
}

impl SimulateOpts {
    fn merged(self, file: Option<Self>) -> Self {
        let f = file.unwrap_or_default();
        SimulateOpts {
            sentiments: self.sentiments.or(f.sentiments),
            topics: self.topics.or(f.topics),
            vocabulary_size: self.vocabulary_size.or(f.vocabulary_size),
            documents: self.documents.or(f.documents),
            m_list: self.m_list.or(f.m_list),
            ratio_list: self.ratio_list.or(f.ratio_list),
            mu_kind: self.mu_kind.or(f.mu_kind),
            sigma: self.sigma.or(f.sigma),
            sigma_grid: self.sigma_grid.or(f.sigma_grid),
            iterations: self.iterations.or(f.iterations),
            concentration: self.concentration.or(f.concentration),
        }
    }
}

#[derive(Serialize, Clone)]
struct SimulateConfig {
    sentiments: usize,
    topics: usize,
    vocabulary_size: usize,
    documents: usize,
    m_list: Vec<usize>,
    ratio_list: Vec<usize>,
    mu_kind: MuKind,
    sigma: Option<Vec<f64>>,
    sigma_grid: Option<Vec<f64>>,
    iterations: usize,
    concentration: f64,
    seed: u64,
    out: PathBuf,
}

#[derive(Serialize)]
struct SimulateRun {
    model: String,
    result: simulate::SimResult,
}

#[derive(Serialize)]
struct SimulateOutput {
    selected_sigma: Option<f64>,
    runs: Vec<SimulateRun>,
    config: SimulateConfig,
}

fn cmd_simulate(opts: SimulateOpts, seed: u64, out: &Path) -> Result<()> {
    let config = SimulateConfig {
        sentiments: opts.sentiments.unwrap_or(2),
        topics: opts.topics.unwrap_or(5),
        vocabulary_size: opts.vocabulary_size.unwrap_or(500),
        documents: opts.documents.unwrap_or(1000),
        m_list: opts.m_list.unwrap_or_else(|| vec![1, 2, 3, 4, 5, 7, 10]),
        ratio_list: opts.ratio_list.unwrap_or_else(|| vec![10, 20, 30]),
        mu_kind: opts.mu_kind.unwrap_or(MuKind::Diff),
        sigma: opts.sigma,
        sigma_grid: opts.sigma_grid,
        iterations: opts.iterations.unwrap_or(300),
        concentration: opts.concentration.unwrap_or(0.05),
        seed,
        out: out.to_path_buf(),
    };
    if config.sentiments != 2 {
        return Err(Error::InvalidArgument(
            "the recovery experiment uses the canonical S = 2 rating distributions".into(),
        ));
    }
    if config.m_list.is_empty() || config.ratio_list.is_empty() {
        return Err(Error::Config(
            "m_list and ratio_list must be non-empty".into(),
        ));
    }
    let spec = GenerativeSpec::standard(
        config.sentiments,
        config.topics,
        config.vocabulary_size,
        config.concentration,
        simulate::canonical_mu(config.mu_kind),
        crate::rng::child_seed(seed, 0x5EC),
    )?;
    let (sigmas, selected_sigma) = match (&config.sigma, &config.sigma_grid) {
        (Some(list), _) if !list.is_empty() => (list.clone(), None),
        (_, grid) => {
            let grid = grid
                .clone()
                .filter(|g| !g.is_empty())
                .unwrap_or_else(|| DEFAULT_SIGMA_GRID.to_vec());
            let m = config.m_list[0];
            let n = config.ratio_list[0] * m;
            let selected = simulate::select_sigma_by_recovery(
                &spec,
                config.documents,
                n,
                m,
                &grid,
                config.iterations,
                crate::rng::child_seed(seed, 0x7A11D),
            )?;
            let mut sigmas = vec![0.0];
            if selected != 0.0 {
                sigmas.push(selected);
            }
            (sigmas, Some(selected))
        }
    };
    let mut runs = Vec::new();
    for &sigma in &sigmas {
        let results = simulate::run_recovery_experiment(
            &spec,
            config.documents,
            &config.m_list,
            &config.ratio_list,
            sigma,
            config.iterations,
            crate::rng::child_seed(seed, 0xC0), // shared across sigmas: paired corpora
        )?;
        for result in results {
            let model = if sigma == 0.0 {
                "jst".to_string()
            } else {
                format!("jst-rr(sigma={sigma})")
            };
            runs.push(SimulateRun { model, result });
        }
    }
    let mut csv = String::from("m,n,model,mean_kl,std_error\n");
    for run in &runs {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            run.result.m, run.result.n, run.model, run.result.mean_kl, run.result.std_error
        ));
    }
    write_csv(&out.join("simulation.csv"), &csv)?;
    checkpoint::write_json_report(
        out.join("simulation.json"),
        &SimulateOutput {
            selected_sigma,
            runs,
            config,
        },
    )?;
    if let Some(sigma) = selected_sigma {
        println!("selected_sigma={sigma}");
    }
    println!("simulation written");
    Ok(())
}

impl TopicsOpts {
    fn merged(self, file: Option<Self>) -> Self {
        let f = file.unwrap_or_default();
        TopicsOpts {
            checkpoint: self.checkpoint.or(f.checkpoint),
            vocabulary: self.vocabulary.or(f.vocabulary),
            top: self.top.or(f.top),
        }
    }
}

fn sentiment_label(s: usize, l: usize) -> String {
    if s == 2 {
        ["positive", "negative"][l].to_string()
    } else {
        format!("s{l}")
    }
}

#[derive(Serialize, Clone)]
struct TopicsConfig {
    checkpoint: PathBuf,
    vocabulary: PathBuf,
    top: usize,
    seed: u64,
    out: PathBuf,
}

#[derive(Serialize)]
struct TopicsReport {
    sentiments: usize,
    topics: usize,
    words_per_cell: usize,
    config: TopicsConfig,
}

fn cmd_topics(opts: TopicsOpts, seed: u64, out: &Path) -> Result<()> {
    let checkpoint_path = required(opts.checkpoint, "topics.checkpoint")?;
    let vocabulary_path = required(opts.vocabulary, "topics.vocabulary")?;
    let requested = opts.top.unwrap_or(20);
    require_file(&checkpoint_path)?;
    let model = Checkpoint::read(&checkpoint_path)?;
    let vocabulary = load_vocabulary(&vocabulary_path)?;
    if vocabulary.sha256() != model.vocab_sha256 {
        return Err(Error::VocabularyMismatch {
            expected: model.vocab_sha256.clone(),
            actual: vocabulary.sha256(),
        });
    }
    let n = if requested > model.v {
        eprintln!(
            "warning: top={requested} exceeds the vocabulary ({}), clamping",
            model.v
        );
        model.v
    } else {
        requested
    };
    let params = model.params();
    let mut csv = String::from("sentiment,topic,rank,term,prob\n");
    for l in 0..model.s {
        let label = sentiment_label(model.s, l);
        for z in 0..model.k {
            for (rank, (term, prob)) in sampler::top_words(&params, &vocabulary, l, z, n)
                .into_iter()
                .enumerate()
            {
                csv.push_str(&format!("{label},{z},{},{term},{prob}\n", rank + 1));
            }
        }
    }
    write_csv(&out.join("top_words.csv"), &csv)?;
    let mut mu_csv = String::from("sentiment,rating,probability\n");
    for l in 0..model.s {
        let label = sentiment_label(model.s, l);
        for r in 1..=5u8 {
            mu_csv.push_str(&format!("{label},{r},{}\n", params.mu(l, r)));
        }
    }
    write_csv(&out.join("mu.csv"), &mu_csv)?;
    checkpoint::write_json_report(
        out.join("topics.json"),
        &TopicsReport {
            sentiments: model.s,
            topics: model.k,
            words_per_cell: n,
            config: TopicsConfig {
                checkpoint: checkpoint_path,
                vocabulary: vocabulary_path,
                top: requested,
                seed,
                out: out.to_path_buf(),
            },
        },
    )?;
    println!("top_words and mu tables written");
    Ok(())
}
