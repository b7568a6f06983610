//! Held-out evaluation: word and rating perplexity, the entropy upper
//! bound, KL divergence, information gain, and cross-validation of the
//! rating weight sigma.

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::priors::{Hyperparams, RATING_LEVELS};
use crate::rng::{self, SeededRng};
use crate::sampler::{self, ModelParams};

/// Perplexity scores of one test set.
#[derive(Debug, Clone, Serialize)]
pub struct PerplexityReport {
    pub word_perplexity: f64,
    pub rating_perplexity: Option<f64>,
    pub upper_bound: f64,
    pub particles: usize,
    pub seed: u64,
}

/// Cross-validation outcome over a sigma grid. `fold_scores[g][f]` is the
/// word perplexity of fold f under grid point g.
#[derive(Debug, Clone, Serialize)]
pub struct CvReport {
    pub grid: Vec<f64>,
    pub fold_scores: Vec<Vec<f64>>,
    pub selected_sigma: f64,
    pub folds: usize,
    pub seed: u64,
}

/// One particle of the left-to-right estimator: its own label history for
/// the document prefix plus the document's rating tokens.
struct Particle {
    n_sent: Vec<u32>,
    n_sent_topic: Vec<u32>,
    m_sent: Vec<u32>,
    word_labels: Vec<(usize, usize)>,
    rating_labels: Vec<usize>,
    word_rng: SeededRng,
    rating_rng: SeededRng,
}

impl Particle {
    fn new(s: usize, k: usize, ratings: usize, seed: u64) -> Particle {
        Particle {
            n_sent: vec![0; s],
            n_sent_topic: vec![0; s * k],
            m_sent: vec![0; s],
            word_labels: Vec::new(),
            rating_labels: Vec::with_capacity(ratings),
            word_rng: rng::seeded(rng::child_seed(seed, 0)),
            rating_rng: rng::seeded(rng::child_seed(seed, 1)),
        }
    }

    /// Joint label distribution over (l, z) given the particle's counts:
    /// the sigma-weighted document sentiment factor times the topic factor.
    /// Both factors are exactly normalized, so the table is a distribution.
    fn label_distribution(&self, hyper: &Hyperparams, table: &mut [f64]) {
        let s = hyper.s();
        let k = hyper.k();
        let sigma = hyper.sigma();
        let n: u32 = self.n_sent.iter().sum();
        let m: u32 = self.m_sent.iter().sum();
        let doc_denom = n as f64 + sigma * m as f64 + hyper.sum_gamma();
        for l in 0..s {
            let doc_factor =
                (self.n_sent[l] as f64 + sigma * self.m_sent[l] as f64 + hyper.gamma(l))
                    / doc_denom;
            let topic_denom = self.n_sent[l] as f64 + hyper.sum_alpha(l);
            for z in 0..k {
                table[l * k + z] = doc_factor
                    * (self.n_sent_topic[l * k + z] as f64 + hyper.alpha(l, z))
                    / topic_denom;
            }
        }
    }

    fn add_word(&mut self, k: usize, l: usize, z: usize) {
        self.n_sent[l] += 1;
        self.n_sent_topic[l * k + z] += 1;
    }

    fn remove_word(&mut self, k: usize, l: usize, z: usize) {
        self.n_sent[l] -= 1;
        self.n_sent_topic[l * k + z] -= 1;
    }

    /// Draws a label for word w from the held-out conditional
    /// (label distribution times the fixed word row of the model).
    fn draw_word_label(
        &mut self,
        params: &ModelParams,
        hyper: &Hyperparams,
        w: u32,
        table: &mut [f64],
    ) -> Option<(usize, usize)> {
        let k = hyper.k();
        self.label_distribution(hyper, table);
        for (lz, weight) in table.iter_mut().enumerate() {
            *weight *= params.phi[lz * params.v + w as usize];
        }
        rng::draw_categorical(&mut self.word_rng, table).map(|cell| (cell / k, cell % k))
    }

    /// Resamples every rating token once from its held-out conditional:
    /// the sigma-weighted sentiment factor times the fixed rating row.
    fn resample_ratings(&mut self, params: &ModelParams, hyper: &Hyperparams, ratings: &[u8]) {
        let s = hyper.s();
        let sigma = hyper.sigma();
        let mut table = vec![0.0; s];
        for (u, &r) in ratings.iter().enumerate() {
            if let Some(&old) = self.rating_labels.get(u) {
                self.m_sent[old] -= 1;
            }
            for (l, weight) in table.iter_mut().enumerate() {
                *weight = (self.n_sent[l] as f64 + sigma * self.m_sent[l] as f64 + hyper.gamma(l))
                    * params.mu(l, r);
            }
            let l = rng::draw_categorical(&mut self.rating_rng, &table)
                .expect("rating rows of estimated models are positive");
            if u < self.rating_labels.len() {
                self.rating_labels[u] = l;
            } else {
                self.rating_labels.push(l);
            }
            self.m_sent[l] += 1;
        }
    }
}

/// Left-to-right sequential estimate of log P(words | model) for one
/// document, with R particles.
///
/// Word positions are processed in order; at each position every particle
/// first resamples the labels of earlier positions (and of the document's
/// rating tokens, which enter the sentiment factor at weight sigma) once,
/// then contributes its predictive probability for the current word. The
/// returned value sums the log of the particle means. Ratings themselves
/// are not scored here.
pub fn doc_log_likelihood(
    doc: &Document,
    params: &ModelParams,
    hyper: &Hyperparams,
    particles: usize,
    seed: u64,
) -> Result<f64> {
    if particles == 0 {
        return Err(Error::InvalidArgument("particles must be >= 1".into()));
    }
    let s = hyper.s();
    let k = hyper.k();
    let mut swarm: Vec<Particle> = (0..particles)
        .map(|p| {
            let mut particle =
                Particle::new(s, k, doc.rating_count(), rng::child_seed(seed, p as u64));
            particle.resample_ratings(params, hyper, &doc.ratings);
            particle
        })
        .collect();
    let mut table = vec![0.0; s * k];
    let mut total = 0.0;
    for (n, &w) in doc.word_ids.iter().enumerate() {
        let mut mean = 0.0;
        for particle in &mut swarm {
            for j in 0..n {
                let (l, z) = particle.word_labels[j];
                particle.remove_word(k, l, z);
                let labels = particle
                    .draw_word_label(params, hyper, doc.word_ids[j], &mut table)
                    .expect("previously admissible word");
                particle.word_labels[j] = labels;
                particle.add_word(k, labels.0, labels.1);
            }
            if !doc.ratings.is_empty() {
                particle.resample_ratings(params, hyper, &doc.ratings);
            }
            particle.label_distribution(hyper, &mut table);
            let predictive: f64 = table
                .iter()
                .enumerate()
                .map(|(lz, p)| p * params.phi[lz * params.v + w as usize])
                .sum();
            mean += predictive;
            if predictive > 0.0 {
                let labels = particle
                    .draw_word_label(params, hyper, w, &mut table)
                    .expect("positive predictive mass");
                particle.word_labels.push(labels);
                particle.add_word(k, labels.0, labels.1);
            }
        }
        mean /= particles as f64;
        if !(mean > 0.0) {
            return Err(Error::UnpredictableWord {
                doc: doc.id.clone(),
                word: w,
            });
        }
        total += mean.ln();
    }
    Ok(total)
}

/// Word perplexity of a test set: exp of the negative mean held-out word
/// log-likelihood per token. Scoring uses words only; rating tokens of
/// test documents are ignored here and scored by `rating_perplexity`.
pub fn word_perplexity(
    test_docs: &[Document],
    params: &ModelParams,
    hyper: &Hyperparams,
    particles: usize,
    seed: u64,
) -> Result<f64> {
    if test_docs.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let scores: Vec<Result<f64>> = test_docs
        .par_iter()
        .enumerate()
        .map(|(i, doc)| {
            doc_log_likelihood(
                &doc.without_ratings(),
                params,
                hyper,
                particles,
                rng::child_seed(seed, i as u64),
            )
        })
        .collect();
    let mut log_sum = 0.0;
    let mut failed = Vec::new();
    for (doc, score) in test_docs.iter().zip(scores) {
        match score {
            Ok(s) => log_sum += s,
            Err(_) => failed.push(doc.id.clone()),
        }
    }
    if !failed.is_empty() {
        return Err(Error::UnpredictableDocuments { docs: failed });
    }
    let tokens: usize = test_docs.iter().map(|d| d.word_count()).sum();
    if tokens == 0 {
        return Err(Error::InvalidArgument("test set has no words".into()));
    }
    Ok((-log_sum / tokens as f64).exp())
}

/// Exponentiated entropy of the empirical word distribution of the test
/// set: the perplexity of predicting words at random from their observed
/// frequencies.
pub fn perplexity_upper_bound(test_docs: &[Document]) -> Result<f64> {
    let mut counts: std::collections::BTreeMap<u32, u64> = std::collections::BTreeMap::new();
    let mut total = 0u64;
    for doc in test_docs {
        for &w in &doc.word_ids {
            *counts.entry(w).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::InvalidArgument("test set has no words".into()));
    }
    let mut entropy = 0.0;
    for &c in counts.values() {
        let p = c as f64 / total as f64;
        entropy -= p * p.ln();
    }
    Ok(entropy.exp())
}

/// Rating perplexity under the prior sentiment mixture: each test rating
/// is scored by P(r) = sum_l (gamma_l / sum gamma) mu_{l,r}.
pub fn rating_perplexity(
    test_docs: &[Document],
    params: &ModelParams,
    hyper: &Hyperparams,
) -> Result<f64> {
    let s = hyper.s();
    let mut marginal = [0.0; RATING_LEVELS];
    for (r, slot) in marginal.iter_mut().enumerate() {
        for l in 0..s {
            *slot += hyper.gamma(l) / hyper.sum_gamma() * params.mu(l, (r + 1) as u8);
        }
    }
    let mut log_sum = 0.0;
    let mut ratings = 0usize;
    for doc in test_docs {
        for &r in &doc.ratings {
            let p = marginal[(r - 1) as usize];
            if !(p > 0.0) {
                return Err(Error::ZeroRatingProbability { rating: r });
            }
            log_sum += p.ln();
            ratings += 1;
        }
    }
    if ratings == 0 {
        return Err(Error::InvalidArgument("test set has no ratings".into()));
    }
    Ok((-log_sum / ratings as f64).exp())
}

/// KL divergence of `p_hat` from `p` (estimate first), natural log, with
/// the 0 log 0 = 0 convention. Errors where `p` lacks mass that `p_hat`
/// has.
pub fn kl_divergence(p_hat: &[f64], p: &[f64]) -> Result<f64> {
    if p_hat.len() != p.len() {
        return Err(Error::LengthMismatch {
            left: p_hat.len(),
            right: p.len(),
        });
    }
    let mut total = 0.0;
    for (i, (&a, &b)) in p_hat.iter().zip(p).enumerate() {
        if a > 0.0 {
            if !(b > 0.0) {
                return Err(Error::AbsoluteContinuity { index: i });
            }
            total += a * (a / b).ln();
        }
    }
    Ok(total)
}

/// Information gain of a rating about the sentiment label:
/// H(l) - H(l | r) for the joint P(l, r) = prior_l mu_{l,r}. Computed in
/// mutual-information form, so identical rating rows give exactly zero
/// and disjoint-support rows give exactly H(prior).
pub fn information_gain(mu: &[f64], prior: &[f64]) -> f64 {
    let s = prior.len();
    assert_eq!(mu.len(), s * RATING_LEVELS, "mu must be S x 5");
    let mut marginal = [0.0; RATING_LEVELS];
    for (r, slot) in marginal.iter_mut().enumerate() {
        for l in 0..s {
            *slot += prior[l] * mu[l * RATING_LEVELS + r];
        }
    }
    let mut gain = 0.0;
    for l in 0..s {
        for r in 0..RATING_LEVELS {
            let joint = prior[l] * mu[l * RATING_LEVELS + r];
            if joint > 0.0 {
                gain += joint * (mu[l * RATING_LEVELS + r] / marginal[r]).ln();
            }
        }
    }
    gain
}

/// K-fold cross-validation of the rating weight: every grid point is
/// scored on the same seeded fold partition with the same per-fold
/// training seeds, and the sigma with the lowest mean word perplexity is
/// selected (ties toward the smaller sigma).
pub fn cross_validate_sigma(
    train_docs: &[Document],
    hyper_base: &Hyperparams,
    sigma_grid: &[f64],
    folds: usize,
    iterations: usize,
    particles: usize,
    seed: u64,
) -> Result<CvReport> {
    if sigma_grid.is_empty() {
        return Err(Error::InvalidArgument("sigma grid is empty".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidArgument("folds must be >= 2".into()));
    }
    if train_docs.len() < folds {
        return Err(Error::InvalidArgument(format!(
            "{} documents cannot fill {folds} folds",
            train_docs.len()
        )));
    }
    let assignment = fold_assignment(train_docs.len(), folds, seed);
    let jobs: Vec<(usize, usize)> = (0..sigma_grid.len())
        .flat_map(|g| (0..folds).map(move |f| (g, f)))
        .collect();
    let scores: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let hyper = hyper_base.with_sigma(sigma_grid[g])?;
            let mut train_set = Vec::new();
            let mut held = Vec::new();
            for (i, doc) in train_docs.iter().enumerate() {
                if assignment[i] == f {
                    held.push(doc.clone());
                } else {
                    train_set.push(doc.clone());
                }
            }
            let result = sampler::train(
                &train_set,
                &hyper,
                iterations,
                rng::child_seed(seed, 1000 + f as u64),
            )?;
            word_perplexity(
                &held,
                &result.params,
                &hyper,
                particles,
                rng::child_seed(seed, 2000 + f as u64),
            )
        })
        .collect();
    let mut fold_scores = vec![vec![0.0; folds]; sigma_grid.len()];
    for (&(g, f), score) in jobs.iter().zip(scores) {
        fold_scores[g][f] = score?;
    }
    let mut selected = (f64::INFINITY, f64::INFINITY);
    for (g, scores) in fold_scores.iter().enumerate() {
        let mean = scores.iter().sum::<f64>() / folds as f64;
        if mean < selected.0 || (mean == selected.0 && sigma_grid[g] < selected.1) {
            selected = (mean, sigma_grid[g]);
        }
    }
    Ok(CvReport {
        grid: sigma_grid.to_vec(),
        fold_scores,
        selected_sigma: selected.1,
        folds,
        seed,
    })
}

fn fold_assignment(documents: usize, folds: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..documents).collect();
    let mut rng = rng::seeded(rng::child_seed(seed, 0xF01D));
    order.shuffle(&mut rng);
    let mut assignment = vec![0; documents];
    for (position, &doc) in order.iter().enumerate() {
        assignment[doc] = position % folds;
    }
    assignment
}
