//! Review ingestion and the preprocessing pipeline: lowercasing,
//! punctuation stripping, whitespace tokenization, negation marking,
//! stopword removal, Porter stemming, document-frequency filtering and
//! class balancing.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;
use crate::stem;

/// Default negation triggers. Each trigger token is consumed and marks the
/// next non-trigger token with the `not_` prefix.
pub const DEFAULT_NEGATION_TRIGGERS: &[&str] = &["not", "no", "never", "n't", "cannot"];

/// A raw review: free text plus an overall star rating in 1..=5.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Review {
    pub id: String,
    pub text: String,
    pub rating: u8,
}

/// A tokenized document: word ids over a fixed vocabulary plus a bag of
/// rating values. Preprocessing produces one document per surviving review
/// with exactly one rating.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub word_ids: Vec<u32>,
    pub ratings: Vec<u8>,
}

impl Document {
    pub fn word_count(&self) -> usize {
        self.word_ids.len()
    }

    pub fn rating_count(&self) -> usize {
        self.ratings.len()
    }

    /// Copy of this document with the rating bag emptied.
    pub fn without_ratings(&self) -> Document {
        Document {
            id: self.id.clone(),
            word_ids: self.word_ids.clone(),
            ratings: Vec::new(),
        }
    }
}

/// Bijective term <-> id mapping, lexicographically ordered for
/// reproducibility. `doc_frequency[id]` counts the documents the term
/// appeared in when the vocabulary was built.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    doc_frequency: Vec<u32>,
}

impl Vocabulary {
    pub fn new(terms: Vec<String>, doc_frequency: Vec<u32>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if terms.len() != doc_frequency.len() {
            return Err(Error::LengthMismatch {
                left: terms.len(),
                right: doc_frequency.len(),
            });
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate term {t:?}")));
            }
        }
        Ok(Vocabulary {
            terms,
            index,
            doc_frequency,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_frequency(&self, id: u32) -> u32 {
        self.doc_frequency[id as usize]
    }

    /// SHA-256 over the newline-joined term list; identifies the vocabulary
    /// a model checkpoint was trained against.
    pub fn sha256(&self) -> String {
        let mut hasher = Sha256::new();
        for t in &self.terms {
            hasher.update(t.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    /// TSV export with columns id, term, document_frequency.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id\tterm\tdocument_frequency\n");
        for (i, t) in self.terms.iter().enumerate() {
            out.push_str(&format!("{i}\t{t}\t{}\n", self.doc_frequency[i]));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut dfs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 || line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(id), Some(term), Some(df)) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::MalformedRecord {
                    line: lineno + 1,
                    message: "expected id\\tterm\\tdocument_frequency".into(),
                });
            };
            let id: usize = id.parse().map_err(|_| Error::MalformedRecord {
                line: lineno + 1,
                message: "bad id".into(),
            })?;
            if id != terms.len() {
                return Err(Error::MalformedRecord {
                    line: lineno + 1,
                    message: format!("non-contiguous id {id}"),
                });
            }
            let df: u32 = df.parse().map_err(|_| Error::MalformedRecord {
                line: lineno + 1,
                message: "bad document_frequency".into(),
            })?;
            terms.push(term.to_string());
            dfs.push(df);
        }
        Vocabulary::new(terms, dfs)
    }
}

/// Options controlling the preprocessing pipeline.
#[derive(Debug, Clone)]
pub struct PreprocessOptions {
    pub stopwords: HashSet<String>,
    pub min_doc_frequency: u32,
    pub negation_triggers: HashSet<String>,
    pub enable_stemming: bool,
    pub balance_classes: bool,
    /// Seed for the balancing down-sample.
    pub seed: u64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            stopwords: HashSet::new(),
            min_doc_frequency: 5,
            negation_triggers: DEFAULT_NEGATION_TRIGGERS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            enable_stemming: true,
            balance_classes: false,
            seed: 0,
        }
    }
}

#[derive(Deserialize)]
struct RawReview {
    id: Option<String>,
    text: String,
    rating: i64,
}

/// Loads reviews from a JSON Lines file: one object per line with keys
/// `id` (optional), `text` and `rating`. Missing ids are the zero-based
/// line index.
pub fn load_reviews(path: impl AsRef<Path>) -> Result<Vec<Review>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reviews = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawReview = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !(1..=5).contains(&raw.rating) {
            return Err(Error::RatingOutOfRange {
                line: i + 1,
                rating: raw.rating,
            });
        }
        reviews.push(Review {
            id: raw.id.unwrap_or_else(|| i.to_string()),
            text: raw.text,
            rating: raw.rating as u8,
        });
    }
    Ok(reviews)
}

/// Loads a plain-text token list: one token per line, `#` comments and
/// blank lines skipped. Used for stopword and negation-trigger files.
pub fn load_token_list(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut set = HashSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let tok = line.trim();
        if tok.is_empty() || tok.starts_with('#') {
            continue;
        }
        set.insert(tok.to_lowercase());
    }
    Ok(set)
}

/// Lowercases and splits on whitespace, with every character that is
/// neither alphanumeric nor `_` treated as a separator.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '_' {
                c
            } else {
                ' '
            }
        })
        .collect::<String>()
        .split_whitespace()
        .map(|s| s.to_string())
        .collect()
}

/// Removes trigger tokens and prefixes the next non-trigger token with
/// `not_`. A trailing trigger with nothing after it is dropped; a token
/// already carrying the prefix is not prefixed twice.
pub fn apply_negation(tokens: &[String], triggers: &HashSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut pending = false;
    for tok in tokens {
        if triggers.contains(tok) {
            pending = true;
            continue;
        }
        if pending && !tok.starts_with("not_") {
            out.push(format!("not_{tok}"));
        } else {
            out.push(tok.clone());
        }
        pending = false;
    }
    out
}

fn pipeline_tokens(text: &str, opts: &PreprocessOptions) -> Vec<String> {
    let tokens = tokenize(text);
    let tokens = apply_negation(&tokens, &opts.negation_triggers);
    tokens
        .into_iter()
        .filter(|t| !opts.stopwords.contains(t))
        .map(|t| {
            if opts.enable_stemming {
                stem::stem(&t)
            } else {
                t
            }
        })
        .collect()
}

/// Runs the full pipeline over raw reviews and builds the vocabulary from
/// terms whose document frequency reaches `min_doc_frequency`. Documents
/// left without words are dropped; each surviving review becomes one
/// document carrying its single rating.
pub fn preprocess(
    reviews: &[Review],
    opts: &PreprocessOptions,
) -> Result<(Vec<Document>, Vocabulary)> {
    if reviews.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let token_docs: Vec<Vec<String>> = reviews
        .iter()
        .map(|r| pipeline_tokens(&r.text, opts))
        .collect();

    // Document frequency over distinct terms per document.
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for tokens in &token_docs {
        let distinct: HashSet<&str> = tokens.iter().map(|s| s.as_str()).collect();
        for t in distinct {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let mut terms = Vec::new();
    let mut dfs = Vec::new();
    for (term, count) in &df {
        if *count >= opts.min_doc_frequency {
            terms.push(term.to_string());
            dfs.push(*count);
        }
    }
    if terms.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vocab = Vocabulary::new(terms, dfs)?;

    let mut documents = Vec::new();
    for (review, tokens) in reviews.iter().zip(&token_docs) {
        let word_ids: Vec<u32> = tokens.iter().filter_map(|t| vocab.id(t)).collect();
        if word_ids.is_empty() {
            continue;
        }
        documents.push(Document {
            id: review.id.clone(),
            word_ids,
            ratings: vec![review.rating],
        });
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if opts.balance_classes {
        documents = balance_classes(&documents, opts.seed)?;
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
    }
    Ok((documents, vocab))
}

/// Balances positive (rating >= 4) against negative (rating <= 2)
/// documents by down-sampling the majority class uniformly at random;
/// rating-3 documents are discarded. Output preserves input order.
pub fn balance_classes(documents: &[Document], seed: u64) -> Result<Vec<Document>> {
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for (i, doc) in documents.iter().enumerate() {
        if doc.ratings.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "balance_classes requires single-rating documents, document {:?} has {}",
                doc.id,
                doc.ratings.len()
            )));
        }
        match doc.ratings[0] {
            r if r >= 4 => positive.push(i),
            r if r <= 2 => negative.push(i),
            _ => {}
        }
    }
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::EmptyClass);
    }
    let target = positive.len().min(negative.len());
    let mut rng = rng::seeded(rng::child_seed(seed, 0xBA1A));
    let mut keep: HashSet<usize> = HashSet::new();
    for class in [&mut positive, &mut negative] {
        class.shuffle(&mut rng);
        keep.extend(class.iter().take(target));
    }
    Ok(documents
        .iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, d)| d.clone())
        .collect())
}

/// Seeded uniform shuffle followed by a split at
/// `floor(train_fraction * D)`.
pub fn split(
    documents: &[Document],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<Document>, Vec<Document>)> {
    if documents.len() < 2 {
        return Err(Error::InvalidArgument(
            "split requires at least 2 documents".into(),
        ));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut shuffled: Vec<Document> = documents.to_vec();
    let mut rng = rng::seeded(rng::child_seed(seed, 0x5B117));
    shuffled.shuffle(&mut rng);
    let cut = (train_fraction * documents.len() as f64).floor() as usize;
    if cut == 0 || cut == documents.len() {
        return Err(Error::EmptySplit {
            fraction: train_fraction,
            documents: documents.len(),
        });
    }
    let test = shuffled.split_off(cut);
    Ok((shuffled, test))
}

/// Writes documents as JSON Lines.
pub fn documents_to_jsonl(documents: &[Document]) -> String {
    let mut out = String::new();
    for d in documents {
        out.push_str(&serde_json::to_string(d).expect("document serializes"));
        out.push('\n');
    }
    out
}

/// Reads documents from JSON Lines, validating ids against `vocab_size`
/// when given.
pub fn documents_from_jsonl(text: &str, vocab_size: Option<usize>) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
            line: i + 1,
            message: e.to_string(),
        })?;
        if let Some(v) = vocab_size {
            if let Some(&w) = doc.word_ids.iter().find(|&&w| w as usize >= v) {
                return Err(Error::MalformedRecord {
                    line: i + 1,
                    message: format!("word id {w} out of range for vocabulary of {v}"),
                });
            }
        }
        if let Some(&r) = doc.ratings.iter().find(|&&r| !(1..=5).contains(&r)) {
            return Err(Error::RatingOutOfRange {
                line: i + 1,
                rating: r as i64,
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}
