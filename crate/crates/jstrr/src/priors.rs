//! Hyperparameter construction: symmetric gamma and alpha, rating-informed
//! delta, and the lexicon-seeded asymmetric beta that pins sentiment words
//! to their polarity.

use std::collections::BTreeSet;
use std::path::Path;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::stem;

/// Sentiment index convention, fixed globally: 0 = positive, 1 = negative.
pub const POSITIVE: usize = 0;
pub const NEGATIVE: usize = 1;

/// Number of rating levels (stars 1..=5).
pub const RATING_LEVELS: usize = 5;

/// Polarity word lists, stored as stems. The two sets are disjoint.
#[derive(Debug, Clone, Default)]
pub struct SentimentLexicon {
    positive: BTreeSet<String>,
    negative: BTreeSet<String>,
}

impl SentimentLexicon {
    /// Builds a lexicon from raw terms: lowercase, stem, dedupe. A term
    /// landing in both lists after stemming is rejected.
    pub fn from_terms<'a>(
        positive: impl IntoIterator<Item = &'a str>,
        negative: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self> {
        let positive: BTreeSet<String> = positive
            .into_iter()
            .map(|t| stem::stem(&t.to_lowercase()))
            .collect();
        let negative: BTreeSet<String> = negative
            .into_iter()
            .map(|t| stem::stem(&t.to_lowercase()))
            .collect();
        if let Some(term) = positive.intersection(&negative).next() {
            return Err(Error::LexiconConflict { term: term.clone() });
        }
        Ok(SentimentLexicon { positive, negative })
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }

    pub fn positive(&self) -> &BTreeSet<String> {
        &self.positive
    }

    pub fn negative(&self) -> &BTreeSet<String> {
        &self.negative
    }
}

/// Loads a lexicon from two plain-text files (one term per line, `#`
/// comments allowed), stemming with the corpus pipeline's stemmer.
pub fn load_lexicon(
    positive_path: impl AsRef<Path>,
    negative_path: impl AsRef<Path>,
) -> Result<SentimentLexicon> {
    let positive = crate::corpus::load_token_list(positive_path)?;
    let negative = crate::corpus::load_token_list(negative_path)?;
    SentimentLexicon::from_terms(
        positive.iter().map(|s| s.as_str()),
        negative.iter().map(|s| s.as_str()),
    )
}

/// The full prior set for one model: dimensions, Dirichlet concentration
/// parameters and the rating weight sigma. Immutable after construction;
/// prior sums are cached.
#[derive(Debug, Clone)]
pub struct Hyperparams {
    s: usize,
    k: usize,
    v: usize,
    gamma: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    delta: Vec<f64>,
    sigma: f64,
    sum_gamma: f64,
    sum_alpha: Vec<f64>,
    sum_beta: Vec<f64>,
    sum_delta: Vec<f64>,
}

impl Hyperparams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        s: usize,
        k: usize,
        v: usize,
        gamma: Vec<f64>,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        delta: Vec<f64>,
        sigma: f64,
    ) -> Result<Self> {
        if s == 0 || k == 0 || v == 0 {
            return Err(Error::InvalidHyperparams(format!(
                "dimensions must be positive (S={s}, K={k}, V={v})"
            )));
        }
        if gamma.len() != s
            || alpha.len() != s * k
            || beta.len() != s * k * v
            || delta.len() != s * RATING_LEVELS
        {
            return Err(Error::InvalidHyperparams("dimension mismatch".into()));
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidHyperparams(format!(
                "sigma must be nonnegative, got {sigma}"
            )));
        }
        for (name, values) in [
            ("gamma", &gamma),
            ("alpha", &alpha),
            ("beta", &beta),
            ("delta", &delta),
        ] {
            if values.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::InvalidHyperparams(format!(
                    "{name} entries must be nonnegative and finite"
                )));
            }
        }
        let sum_gamma: f64 = gamma.iter().sum();
        if sum_gamma <= 0.0 {
            return Err(Error::InvalidHyperparams("gamma sums to zero".into()));
        }
        let sum_alpha: Vec<f64> = (0..s)
            .map(|l| alpha[l * k..(l + 1) * k].iter().sum())
            .collect();
        if sum_alpha.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidHyperparams(
                "every alpha row must have positive mass".into(),
            ));
        }
        let sum_beta: Vec<f64> = (0..s * k)
            .map(|lz| beta[lz * v..(lz + 1) * v].iter().sum())
            .collect();
        if sum_beta.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidHyperparams(
                "every beta row must have positive mass".into(),
            ));
        }
        let sum_delta: Vec<f64> = (0..s)
            .map(|l| {
                delta[l * RATING_LEVELS..(l + 1) * RATING_LEVELS]
                    .iter()
                    .sum()
            })
            .collect();
        if sum_delta.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidHyperparams(
                "every delta row must have positive mass".into(),
            ));
        }
        Ok(Hyperparams {
            s,
            k,
            v,
            gamma,
            alpha,
            beta,
            delta,
            sigma,
            sum_gamma,
            sum_alpha,
            sum_beta,
            sum_delta,
        })
    }

    /// The standard prior set: symmetric gamma = 3/S and alpha = 3/(S*K),
    /// symmetric beta = 0.01, and for S = 2 the rating-informed delta
    /// (10*r for positive, 10*(6-r) for negative; symmetric 10 otherwise).
    pub fn standard(s: usize, k: usize, v: usize, sigma: f64) -> Result<Self> {
        let gamma = vec![3.0 / s as f64; s];
        let alpha = vec![3.0 / (s * k) as f64; s * k];
        let beta = vec![0.01; s * k * v];
        let delta = informative_delta(s);
        Hyperparams::new(s, k, v, gamma, alpha, beta, delta, sigma)
    }

    /// Same priors with a different rating weight.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Hyperparams::new(
            self.s,
            self.k,
            self.v,
            self.gamma.clone(),
            self.alpha.clone(),
            self.beta.clone(),
            self.delta.clone(),
            sigma,
        )
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self, l: usize) -> f64 {
        self.gamma[l]
    }

    pub fn gamma_all(&self) -> &[f64] {
        &self.gamma
    }

    pub fn alpha(&self, l: usize, z: usize) -> f64 {
        self.alpha[l * self.k + z]
    }

    pub fn alpha_all(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self, l: usize, z: usize, w: usize) -> f64 {
        self.beta[(l * self.k + z) * self.v + w]
    }

    pub fn beta_row(&self, l: usize, z: usize) -> &[f64] {
        let lz = l * self.k + z;
        &self.beta[lz * self.v..(lz + 1) * self.v]
    }

    pub fn beta_all(&self) -> &[f64] {
        &self.beta
    }

    /// delta for rating r in 1..=5.
    pub fn delta(&self, l: usize, r: u8) -> f64 {
        self.delta[l * RATING_LEVELS + (r - 1) as usize]
    }

    pub fn delta_all(&self) -> &[f64] {
        &self.delta
    }

    pub fn sum_gamma(&self) -> f64 {
        self.sum_gamma
    }

    pub fn sum_alpha(&self, l: usize) -> f64 {
        self.sum_alpha[l]
    }

    pub fn sum_beta(&self, l: usize, z: usize) -> f64 {
        self.sum_beta[l * self.k + z]
    }

    pub fn sum_delta(&self, l: usize) -> f64 {
        self.sum_delta[l]
    }

    /// Label pairs (l, z) a word may take, i.e. those with positive prior
    /// mass. Empty exactly when the word is excluded everywhere.
    pub fn admissible_pairs(&self, word: u32) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for l in 0..self.s {
            for z in 0..self.k {
                if self.beta(l, z, word as usize) > 0.0 {
                    pairs.push((l, z));
                }
            }
        }
        pairs
    }
}

fn informative_delta(s: usize) -> Vec<f64> {
    let mut delta = vec![10.0; s * RATING_LEVELS];
    if s == 2 {
        for r in 0..RATING_LEVELS {
            delta[POSITIVE * RATING_LEVELS + r] = 10.0 * (r + 1) as f64;
            delta[NEGATIVE * RATING_LEVELS + r] = 10.0 * (5 - r) as f64;
        }
    }
    delta
}

/// Builds the full prior set for a corpus vocabulary. Lexicon seeding sets
/// beta to zero for every (sentiment, topic) of the opposite polarity;
/// lexicon terms absent from the vocabulary are ignored. Seeding requires
/// S = 2.
pub fn build_hyperparams(
    s: usize,
    k: usize,
    vocab: &Vocabulary,
    lexicon: &SentimentLexicon,
    sigma: f64,
) -> Result<Hyperparams> {
    if s != 2 && !lexicon.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "lexicon seeding is defined only for binary sentiment, got S = {s}"
        )));
    }
    let v = vocab.len();
    let mut beta = vec![0.01; s * k * v];
    if s == 2 {
        for (terms, opposite) in [
            (lexicon.positive(), NEGATIVE),
            (lexicon.negative(), POSITIVE),
        ] {
            for term in terms {
                if let Some(w) = vocab.id(term) {
                    for z in 0..k {
                        beta[(opposite * k + z) * v + w as usize] = 0.0;
                    }
                }
            }
        }
    }
    let gamma = vec![3.0 / s as f64; s];
    let alpha = vec![3.0 / (s * k) as f64; s * k];
    let delta = informative_delta(s);
    Hyperparams::new(s, k, v, gamma, alpha, beta, delta, sigma)
}
