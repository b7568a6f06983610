//! Collapsed Gibbs inference.
//!
//! Word tokens carry a (sentiment, topic) label, rating tokens a sentiment
//! label; the multinomial parameters are integrated out and the chain
//! walks over label assignments by decrement / draw / increment updates of
//! the count tables.
//!
//! Word draws and rating draws consume two separate random streams derived
//! from the chain seed. With `sigma = 0` the word-label chain is therefore
//! bit-identical to a run on the same corpus with all ratings deleted.

use rand::Rng;
use serde::Serialize;

use crate::corpus::{Document, Vocabulary};
use crate::error::{Error, Result};
use crate::priors::{Hyperparams, RATING_LEVELS};
use crate::rng::{self, SeededRng};

/// Per-token label assignments, indexed [document][position].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignments {
    pub word_sentiment: Vec<Vec<usize>>,
    pub word_topic: Vec<Vec<usize>>,
    pub rating_sentiment: Vec<Vec<usize>>,
}

/// Sufficient statistics of the chain: every count table the conditionals
/// touch, the assignments they tally, and the chain's random streams.
#[derive(Debug, Clone)]
pub struct CountState {
    s: usize,
    k: usize,
    v: usize,
    /// words per document (fixed)
    n_doc: Vec<u32>,
    /// document x sentiment word counts
    n_doc_sent: Vec<u32>,
    /// document x sentiment x topic word counts
    n_doc_sent_topic: Vec<u32>,
    /// corpus sentiment x topic word counts
    n_sent_topic: Vec<u32>,
    /// corpus sentiment x topic x word counts
    n_sent_topic_word: Vec<u32>,
    /// ratings per document (fixed)
    m_doc: Vec<u32>,
    /// document x sentiment rating counts
    m_doc_sent: Vec<u32>,
    /// corpus sentiment rating counts
    m_sent: Vec<u32>,
    /// corpus sentiment x rating counts
    m_sent_rating: Vec<u32>,
    assignments: Assignments,
    word_rng: SeededRng,
    rating_rng: SeededRng,
}

impl CountState {
    pub fn assignments(&self) -> &Assignments {
        &self.assignments
    }

    pub fn n_doc(&self, i: usize) -> u32 {
        self.n_doc[i]
    }

    pub fn n_doc_sent(&self, i: usize, l: usize) -> u32 {
        self.n_doc_sent[i * self.s + l]
    }

    pub fn n_doc_sent_topic(&self, i: usize, l: usize, z: usize) -> u32 {
        self.n_doc_sent_topic[(i * self.s + l) * self.k + z]
    }

    pub fn n_sent_topic(&self, l: usize, z: usize) -> u32 {
        self.n_sent_topic[l * self.k + z]
    }

    pub fn n_sent_topic_word(&self, l: usize, z: usize, w: usize) -> u32 {
        self.n_sent_topic_word[(l * self.k + z) * self.v + w]
    }

    pub fn m_doc(&self, i: usize) -> u32 {
        self.m_doc[i]
    }

    pub fn m_doc_sent(&self, i: usize, l: usize) -> u32 {
        self.m_doc_sent[i * self.s + l]
    }

    pub fn m_sent(&self, l: usize) -> u32 {
        self.m_sent[l]
    }

    pub fn m_sent_rating(&self, l: usize, r: u8) -> u32 {
        self.m_sent_rating[l * RATING_LEVELS + (r - 1) as usize]
    }

    /// Removes word token (i, j) from all word count tables and returns
    /// its labels. Counts then satisfy the exclude-token convention the
    /// conditionals expect.
    pub fn remove_word(&mut self, i: usize, j: usize, word: u32) -> (usize, usize) {
        let l = self.assignments.word_sentiment[i][j];
        let z = self.assignments.word_topic[i][j];
        self.n_doc[i] -= 1;
        self.n_doc_sent[i * self.s + l] -= 1;
        self.n_doc_sent_topic[(i * self.s + l) * self.k + z] -= 1;
        self.n_sent_topic[l * self.k + z] -= 1;
        self.n_sent_topic_word[(l * self.k + z) * self.v + word as usize] -= 1;
        (l, z)
    }

    /// Inserts word token (i, j) with the given labels.
    pub fn insert_word(&mut self, i: usize, j: usize, word: u32, l: usize, z: usize) {
        self.assignments.word_sentiment[i][j] = l;
        self.assignments.word_topic[i][j] = z;
        self.n_doc[i] += 1;
        self.n_doc_sent[i * self.s + l] += 1;
        self.n_doc_sent_topic[(i * self.s + l) * self.k + z] += 1;
        self.n_sent_topic[l * self.k + z] += 1;
        self.n_sent_topic_word[(l * self.k + z) * self.v + word as usize] += 1;
    }

    /// Removes rating token (i, j) from all rating count tables and
    /// returns its label.
    pub fn remove_rating(&mut self, i: usize, j: usize, rating: u8) -> usize {
        let l = self.assignments.rating_sentiment[i][j];
        self.m_doc[i] -= 1;
        self.m_doc_sent[i * self.s + l] -= 1;
        self.m_sent[l] -= 1;
        self.m_sent_rating[l * RATING_LEVELS + (rating - 1) as usize] -= 1;
        l
    }

    /// Inserts rating token (i, j) with the given label.
    pub fn insert_rating(&mut self, i: usize, j: usize, rating: u8, l: usize) {
        self.assignments.rating_sentiment[i][j] = l;
        self.m_doc[i] += 1;
        self.m_doc_sent[i * self.s + l] += 1;
        self.m_sent[l] += 1;
        self.m_sent_rating[l * RATING_LEVELS + (rating - 1) as usize] += 1;
    }

    /// Checks every count identity against a from-scratch tally of the
    /// assignments. Used by tests after each sweep.
    pub fn verify(&self, documents: &[Document]) -> Result<()> {
        let fresh = tally(documents, &self.assignments, self.s, self.k, self.v)?;
        let same = fresh.n_doc == self.n_doc
            && fresh.n_doc_sent == self.n_doc_sent
            && fresh.n_doc_sent_topic == self.n_doc_sent_topic
            && fresh.n_sent_topic == self.n_sent_topic
            && fresh.n_sent_topic_word == self.n_sent_topic_word
            && fresh.m_doc == self.m_doc
            && fresh.m_doc_sent == self.m_doc_sent
            && fresh.m_sent == self.m_sent
            && fresh.m_sent_rating == self.m_sent_rating;
        if !same {
            return Err(Error::InvalidArgument(
                "count tables disagree with assignments".into(),
            ));
        }
        for (i, document) in documents.iter().enumerate() {
            let by_sent: u32 = (0..self.s).map(|l| self.n_doc_sent(i, l)).sum();
            if by_sent != self.n_doc[i] || self.n_doc[i] as usize != document.word_count() {
                return Err(Error::InvalidArgument(format!(
                    "word counts of document {i} do not add up"
                )));
            }
            let m_by_sent: u32 = (0..self.s).map(|l| self.m_doc_sent(i, l)).sum();
            if m_by_sent != self.m_doc[i] || self.m_doc[i] as usize != document.rating_count() {
                return Err(Error::InvalidArgument(format!(
                    "rating counts of document {i} do not add up"
                )));
            }
            for l in 0..self.s {
                let by_topic: u32 = (0..self.k).map(|z| self.n_doc_sent_topic(i, l, z)).sum();
                if by_topic != self.n_doc_sent(i, l) {
                    return Err(Error::InvalidArgument(format!(
                        "topic counts of document {i} sentiment {l} do not add up"
                    )));
                }
            }
        }
        for l in 0..self.s {
            for z in 0..self.k {
                let by_doc: u32 = (0..documents.len())
                    .map(|i| self.n_doc_sent_topic(i, l, z))
                    .sum();
                if by_doc != self.n_sent_topic(l, z) {
                    return Err(Error::InvalidArgument(format!(
                        "corpus topic counts ({l}, {z}) do not add up"
                    )));
                }
                let by_word: u32 = (0..self.v).map(|w| self.n_sent_topic_word(l, z, w)).sum();
                if by_word != self.n_sent_topic(l, z) {
                    return Err(Error::InvalidArgument(format!(
                        "word counts of cell ({l}, {z}) do not add up"
                    )));
                }
            }
            let m_by_doc: u32 = (0..documents.len()).map(|i| self.m_doc_sent(i, l)).sum();
            let m_by_rating: u32 = (1..=RATING_LEVELS as u8)
                .map(|r| self.m_sent_rating(l, r))
                .sum();
            if m_by_doc != self.m_sent(l) || m_by_rating != self.m_sent(l) {
                return Err(Error::InvalidArgument(format!(
                    "corpus rating counts for sentiment {l} do not add up"
                )));
            }
        }
        Ok(())
    }
}

struct Tables {
    n_doc: Vec<u32>,
    n_doc_sent: Vec<u32>,
    n_doc_sent_topic: Vec<u32>,
    n_sent_topic: Vec<u32>,
    n_sent_topic_word: Vec<u32>,
    m_doc: Vec<u32>,
    m_doc_sent: Vec<u32>,
    m_sent: Vec<u32>,
    m_sent_rating: Vec<u32>,
}

fn tally(
    documents: &[Document],
    assignments: &Assignments,
    s: usize,
    k: usize,
    v: usize,
) -> Result<Tables> {
    let d = documents.len();
    let mut t = Tables {
        n_doc: vec![0; d],
        n_doc_sent: vec![0; d * s],
        n_doc_sent_topic: vec![0; d * s * k],
        n_sent_topic: vec![0; s * k],
        n_sent_topic_word: vec![0; s * k * v],
        m_doc: vec![0; d],
        m_doc_sent: vec![0; d * s],
        m_sent: vec![0; s],
        m_sent_rating: vec![0; s * RATING_LEVELS],
    };
    for (i, doc) in documents.iter().enumerate() {
        for (j, &w) in doc.word_ids.iter().enumerate() {
            let l = assignments.word_sentiment[i][j];
            let z = assignments.word_topic[i][j];
            if l >= s || z >= k || w as usize >= v {
                return Err(Error::InvalidArgument("label out of range".into()));
            }
            t.n_doc[i] += 1;
            t.n_doc_sent[i * s + l] += 1;
            t.n_doc_sent_topic[(i * s + l) * k + z] += 1;
            t.n_sent_topic[l * k + z] += 1;
            t.n_sent_topic_word[(l * k + z) * v + w as usize] += 1;
        }
        for (j, &r) in doc.ratings.iter().enumerate() {
            let l = assignments.rating_sentiment[i][j];
            if l >= s {
                return Err(Error::InvalidArgument("label out of range".into()));
            }
            t.m_doc[i] += 1;
            t.m_doc_sent[i * s + l] += 1;
            t.m_sent[l] += 1;
            t.m_sent_rating[l * RATING_LEVELS + (r - 1) as usize] += 1;
        }
    }
    Ok(t)
}

/// Assigns initial labels at random: each word uniform over the (l, z)
/// pairs its prior admits, each rating uniform over sentiments.
pub fn init_assignments(
    documents: &[Document],
    hyper: &Hyperparams,
    seed: u64,
) -> Result<CountState> {
    let s = hyper.s();
    let k = hyper.k();
    let v = hyper.v();
    for doc in documents {
        if doc.word_count() == 0 {
            return Err(Error::InvalidArgument(format!(
                "document {:?} has no words",
                doc.id
            )));
        }
        if let Some(&w) = doc.word_ids.iter().find(|&&w| w as usize >= v) {
            return Err(Error::InvalidArgument(format!(
                "word id {w} out of range for vocabulary of {v}"
            )));
        }
    }
    let mut word_rng = rng::seeded(rng::child_seed(seed, 0));
    let mut rating_rng = rng::seeded(rng::child_seed(seed, 1));
    let mut assignments = Assignments {
        word_sentiment: Vec::with_capacity(documents.len()),
        word_topic: Vec::with_capacity(documents.len()),
        rating_sentiment: Vec::with_capacity(documents.len()),
    };
    for doc in documents {
        let mut sent = Vec::with_capacity(doc.word_count());
        let mut topic = Vec::with_capacity(doc.word_count());
        for &w in &doc.word_ids {
            let pairs = hyper.admissible_pairs(w);
            if pairs.is_empty() {
                return Err(Error::WordExcludedByPrior { word: w });
            }
            let (l, z) = pairs[word_rng.random_range(0..pairs.len())];
            sent.push(l);
            topic.push(z);
        }
        let ratings = (0..doc.rating_count())
            .map(|_| rating_rng.random_range(0..s))
            .collect();
        assignments.word_sentiment.push(sent);
        assignments.word_topic.push(topic);
        assignments.rating_sentiment.push(ratings);
    }
    let t = tally(documents, &assignments, s, k, v)?;
    Ok(CountState {
        s,
        k,
        v,
        n_doc: t.n_doc,
        n_doc_sent: t.n_doc_sent,
        n_doc_sent_topic: t.n_doc_sent_topic,
        n_sent_topic: t.n_sent_topic,
        n_sent_topic_word: t.n_sent_topic_word,
        m_doc: t.m_doc,
        m_doc_sent: t.m_doc_sent,
        m_sent: t.m_sent,
        m_sent_rating: t.m_sent_rating,
        assignments,
        word_rng,
        rating_rng,
    })
}

/// Unnormalized sampling weights for word token (i, j) over (l, z) cells,
/// l-major. Counts must currently exclude the token. The document-level
/// denominator is constant across cells and omitted.
fn word_weights(state: &CountState, hyper: &Hyperparams, i: usize, word: u32, weights: &mut [f64]) {
    let s = state.s;
    let k = state.k;
    let v = state.v;
    let sigma = hyper.sigma();
    let w = word as usize;
    for l in 0..s {
        let doc_factor = state.n_doc_sent[i * s + l] as f64
            + sigma * state.m_doc_sent[i * s + l] as f64
            + hyper.gamma(l);
        let topic_denom = state.n_doc_sent[i * s + l] as f64 + hyper.sum_alpha(l);
        for z in 0..k {
            let lz = l * k + z;
            let topic_factor = (state.n_doc_sent_topic[(i * s + l) * k + z] as f64
                + hyper.alpha(l, z))
                / topic_denom;
            let word_factor = (state.n_sent_topic_word[lz * v + w] as f64 + hyper.beta(l, z, w))
                / (state.n_sent_topic[lz] as f64 + hyper.sum_beta(l, z));
            weights[lz] = doc_factor * topic_factor * word_factor;
        }
    }
}

/// Full conditional over (l, z) for word token (i, j), normalized, laid
/// out l-major. Counts must currently exclude the token.
pub fn word_conditional(
    state: &CountState,
    documents: &[Document],
    hyper: &Hyperparams,
    i: usize,
    j: usize,
) -> Result<Vec<f64>> {
    let mut weights = vec![0.0; state.s * state.k];
    word_weights(state, hyper, i, documents[i].word_ids[j], &mut weights);
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroConditional {
            doc: i,
            position: j,
        });
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Unnormalized sampling weights for rating token (i, j) over sentiments.
/// Counts must currently exclude the token.
fn rating_weights(
    state: &CountState,
    hyper: &Hyperparams,
    i: usize,
    rating: u8,
    weights: &mut [f64],
) {
    let s = state.s;
    let sigma = hyper.sigma();
    let r = (rating - 1) as usize;
    for (l, weight) in weights.iter_mut().enumerate().take(s) {
        let doc_factor = state.n_doc_sent[i * s + l] as f64
            + sigma * state.m_doc_sent[i * s + l] as f64
            + hyper.gamma(l);
        let rating_factor = (state.m_sent_rating[l * RATING_LEVELS + r] as f64
            + hyper.delta(l, rating))
            / (state.m_sent[l] as f64 + hyper.sum_delta(l));
        *weight = doc_factor * rating_factor;
    }
}

/// Full conditional over sentiments for rating token (i, j), normalized.
/// Counts must currently exclude the token.
pub fn rating_conditional(
    state: &CountState,
    documents: &[Document],
    hyper: &Hyperparams,
    i: usize,
    j: usize,
) -> Vec<f64> {
    let mut weights = vec![0.0; state.s];
    rating_weights(state, hyper, i, documents[i].ratings[j], &mut weights);
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// One full Gibbs pass: per document, every word token is resampled from
/// its full conditional, then every rating token.
pub fn gibbs_sweep(
    state: &mut CountState,
    documents: &[Document],
    hyper: &Hyperparams,
) -> Result<()> {
    let mut word_table = vec![0.0; state.s * state.k];
    let mut rating_table = vec![0.0; state.s];
    for (i, doc) in documents.iter().enumerate() {
        for (j, &w) in doc.word_ids.iter().enumerate() {
            state.remove_word(i, j, w);
            word_weights(state, hyper, i, w, &mut word_table);
            let cell = rng::draw_categorical(&mut state.word_rng, &word_table).ok_or(
                Error::ZeroConditional {
                    doc: i,
                    position: j,
                },
            )?;
            state.insert_word(i, j, w, cell / state.k, cell % state.k);
        }
        for (j, &r) in doc.ratings.iter().enumerate() {
            state.remove_rating(i, j, r);
            rating_weights(state, hyper, i, r, &mut rating_table);
            let l = rng::draw_categorical(&mut state.rating_rng, &rating_table).ok_or(
                Error::ZeroConditional {
                    doc: i,
                    position: j,
                },
            )?;
            state.insert_rating(i, j, r, l);
        }
    }
    Ok(())
}

/// Posterior point estimates from the current counts.
#[derive(Debug, Clone, Serialize)]
pub struct ModelParams {
    pub d: usize,
    pub s: usize,
    pub k: usize,
    pub v: usize,
    /// document x sentiment, row-normalized
    pub pi: Vec<f64>,
    /// document x sentiment x topic, normalized over topics
    pub theta: Vec<f64>,
    /// sentiment x topic x word, normalized over words
    pub phi: Vec<f64>,
    /// sentiment x rating, row-normalized
    pub mu: Vec<f64>,
}

impl ModelParams {
    pub fn pi(&self, i: usize, l: usize) -> f64 {
        self.pi[i * self.s + l]
    }

    pub fn pi_row(&self, i: usize) -> &[f64] {
        &self.pi[i * self.s..(i + 1) * self.s]
    }

    pub fn theta(&self, i: usize, l: usize, z: usize) -> f64 {
        self.theta[(i * self.s + l) * self.k + z]
    }

    pub fn phi(&self, l: usize, z: usize, w: usize) -> f64 {
        self.phi[(l * self.k + z) * self.v + w]
    }

    pub fn phi_row(&self, l: usize, z: usize) -> &[f64] {
        let lz = l * self.k + z;
        &self.phi[lz * self.v..(lz + 1) * self.v]
    }

    pub fn mu(&self, l: usize, r: u8) -> f64 {
        self.mu[l * RATING_LEVELS + (r - 1) as usize]
    }

    pub fn mu_row(&self, l: usize) -> &[f64] {
        &self.mu[l * RATING_LEVELS..(l + 1) * RATING_LEVELS]
    }

    /// A model whose word rows are all uniform 1/V; document-level rows
    /// come from bare priors. Useful as a perplexity reference point.
    pub fn uniform(d: usize, s: usize, k: usize, v: usize) -> ModelParams {
        ModelParams {
            d,
            s,
            k,
            v,
            pi: vec![1.0 / s as f64; d * s],
            theta: vec![1.0 / k as f64; d * s * k],
            phi: vec![1.0 / v as f64; s * k * v],
            mu: vec![1.0 / RATING_LEVELS as f64; s * RATING_LEVELS],
        }
    }
}

/// Point estimates of pi, theta, phi and mu from the current counts:
/// posterior Dirichlet means given the assignments, with ratings entering
/// the document sentiment row at weight sigma.
pub fn estimate_params(state: &CountState, hyper: &Hyperparams) -> ModelParams {
    let s = state.s;
    let k = state.k;
    let v = state.v;
    let d = state.n_doc.len();
    let sigma = hyper.sigma();
    let mut pi = vec![0.0; d * s];
    let mut theta = vec![0.0; d * s * k];
    for i in 0..d {
        let denom = state.n_doc[i] as f64 + sigma * state.m_doc[i] as f64 + hyper.sum_gamma();
        for l in 0..s {
            pi[i * s + l] = (state.n_doc_sent[i * s + l] as f64
                + sigma * state.m_doc_sent[i * s + l] as f64
                + hyper.gamma(l))
                / denom;
            let topic_denom = state.n_doc_sent[i * s + l] as f64 + hyper.sum_alpha(l);
            for z in 0..k {
                theta[(i * s + l) * k + z] = (state.n_doc_sent_topic[(i * s + l) * k + z] as f64
                    + hyper.alpha(l, z))
                    / topic_denom;
            }
        }
    }
    let mut phi = vec![0.0; s * k * v];
    for l in 0..s {
        for z in 0..k {
            let lz = l * k + z;
            let denom = state.n_sent_topic[lz] as f64 + hyper.sum_beta(l, z);
            for w in 0..v {
                phi[lz * v + w] =
                    (state.n_sent_topic_word[lz * v + w] as f64 + hyper.beta(l, z, w)) / denom;
            }
        }
    }
    let mut mu = vec![0.0; s * RATING_LEVELS];
    for l in 0..s {
        let denom = state.m_sent[l] as f64 + hyper.sum_delta(l);
        for r in 0..RATING_LEVELS {
            mu[l * RATING_LEVELS + r] = (state.m_sent_rating[l * RATING_LEVELS + r] as f64
                + hyper.delta(l, (r + 1) as u8))
                / denom;
        }
    }
    ModelParams {
        d,
        s,
        k,
        v,
        pi,
        theta,
        phi,
        mu,
    }
}

/// Log of the collapsed joint of data and assignments under the current
/// state: one Dirichlet-multinomial evidence block per document sentiment
/// row (with sigma-weighted rating counts), per document topic row, per
/// (sentiment, topic) word row and per sentiment rating row.
pub fn collapsed_log_score(state: &CountState, hyper: &Hyperparams) -> f64 {
    fn block(prior_sum: f64, total: f64) -> f64 {
        libm::lgamma(prior_sum) - libm::lgamma(total + prior_sum)
    }
    fn term(count: f64, prior: f64) -> f64 {
        libm::lgamma(count + prior) - libm::lgamma(prior)
    }
    let s = state.s;
    let k = state.k;
    let v = state.v;
    let d = state.n_doc.len();
    let sigma = hyper.sigma();
    let mut score = 0.0;
    for i in 0..d {
        let total = state.n_doc[i] as f64 + sigma * state.m_doc[i] as f64;
        score += block(hyper.sum_gamma(), total);
        for l in 0..s {
            let c = state.n_doc_sent[i * s + l] as f64 + sigma * state.m_doc_sent[i * s + l] as f64;
            if c > 0.0 {
                score += term(c, hyper.gamma(l));
            }
            score += block(hyper.sum_alpha(l), state.n_doc_sent[i * s + l] as f64);
            for z in 0..k {
                let c = state.n_doc_sent_topic[(i * s + l) * k + z];
                if c > 0 {
                    score += term(c as f64, hyper.alpha(l, z));
                }
            }
        }
    }
    for l in 0..s {
        for z in 0..k {
            let lz = l * k + z;
            score += block(hyper.sum_beta(l, z), state.n_sent_topic[lz] as f64);
            for w in 0..v {
                let c = state.n_sent_topic_word[lz * v + w];
                if c > 0 {
                    score += term(c as f64, hyper.beta(l, z, w));
                }
            }
        }
        score += block(hyper.sum_delta(l), state.m_sent[l] as f64);
        for r in 0..RATING_LEVELS {
            let c = state.m_sent_rating[l * RATING_LEVELS + r];
            if c > 0 {
                score += term(c as f64, hyper.delta(l, (r + 1) as u8));
            }
        }
    }
    score
}

/// How a chain is run and read out.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub iterations: usize,
    pub seed: u64,
    /// When set, parameters average the estimates of the last
    /// `samples` states taken every `every` sweeps instead of reading the
    /// final state only.
    pub average: Option<SampleAverage>,
}

#[derive(Debug, Clone, Copy)]
pub struct SampleAverage {
    pub samples: usize,
    pub every: usize,
}

/// Training output: point estimates plus the per-sweep collapsed joint
/// log-score for convergence inspection.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: ModelParams,
    pub log_scores: Vec<f64>,
}

pub fn train(
    documents: &[Document],
    hyper: &Hyperparams,
    iterations: usize,
    seed: u64,
) -> Result<TrainResult> {
    train_with(
        documents,
        hyper,
        &TrainOptions {
            iterations,
            seed,
            average: None,
        },
    )
}

pub fn train_with(
    documents: &[Document],
    hyper: &Hyperparams,
    options: &TrainOptions,
) -> Result<TrainResult> {
    if options.iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be >= 1".into()));
    }
    let mut state = init_assignments(documents, hyper, options.seed)?;
    let mut log_scores = Vec::with_capacity(options.iterations);
    let sample_sweeps: Vec<usize> = match options.average {
        Some(SampleAverage { samples, every }) => {
            let every = every.max(1);
            (0..samples)
                .filter_map(|m| (options.iterations - 1).checked_sub(m * every))
                .collect()
        }
        None => vec![options.iterations - 1],
    };
    let mut collected: Option<ModelParams> = None;
    let mut collected_count = 0usize;
    for sweep in 0..options.iterations {
        gibbs_sweep(&mut state, documents, hyper)?;
        log_scores.push(collapsed_log_score(&state, hyper));
        if sample_sweeps.contains(&sweep) {
            let sample = estimate_params(&state, hyper);
            collected_count += 1;
            collected = Some(match collected {
                None => sample,
                Some(mut acc) => {
                    for (a, b) in acc.pi.iter_mut().zip(&sample.pi) {
                        *a += b;
                    }
                    for (a, b) in acc.theta.iter_mut().zip(&sample.theta) {
                        *a += b;
                    }
                    for (a, b) in acc.phi.iter_mut().zip(&sample.phi) {
                        *a += b;
                    }
                    for (a, b) in acc.mu.iter_mut().zip(&sample.mu) {
                        *a += b;
                    }
                    acc
                }
            });
        }
    }
    let mut params = collected.expect("at least the final sweep is sampled");
    if collected_count > 1 {
        let scale = 1.0 / collected_count as f64;
        for x in params
            .pi
            .iter_mut()
            .chain(&mut params.theta)
            .chain(&mut params.phi)
            .chain(&mut params.mu)
        {
            *x *= scale;
        }
    }
    Ok(TrainResult { params, log_scores })
}

/// The n most probable terms of the (l, z) word row, ties broken toward
/// the lexicographically smaller term. n is clamped to the vocabulary.
pub fn top_words(
    params: &ModelParams,
    vocab: &Vocabulary,
    l: usize,
    z: usize,
    n: usize,
) -> Vec<(String, f64)> {
    let row = params.phi_row(l, z);
    let mut ids: Vec<usize> = (0..params.v).collect();
    // Vocabulary ids are lexicographic, so the id order is the tie order.
    ids.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
    ids.truncate(n.min(params.v));
    ids.into_iter()
        .map(|w| (vocab.term(w as u32).to_string(), row[w]))
        .collect()
}
