//! Synthetic corpora with known parameters and the sentiment-recovery
//! experiment: generate documents from the model's own generative process,
//! fit the sampler, and measure KL divergence between estimated and true
//! document sentiment distributions.

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::evaluate;
use crate::priors::{Hyperparams, RATING_LEVELS};
use crate::rng::{self, SeededRng};
use crate::sampler;

/// Ground truth for the generator: dimensions, Dirichlet priors for the
/// per-document draws, and fixed word and rating distributions.
#[derive(Debug, Clone)]
pub struct GenerativeSpec {
    pub s: usize,
    pub k: usize,
    pub v: usize,
    /// length S
    pub gamma: Vec<f64>,
    /// S x K
    pub alpha: Vec<f64>,
    /// S x K x V, rows normalized
    pub phi_true: Vec<f64>,
    /// S x 5, rows normalized
    pub mu_true: Vec<f64>,
}

impl GenerativeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.gamma.len() != self.s
            || self.alpha.len() != self.s * self.k
            || self.phi_true.len() != self.s * self.k * self.v
            || self.mu_true.len() != self.s * RATING_LEVELS
        {
            return Err(Error::InvalidArgument(
                "generative spec dimensions are inconsistent".into(),
            ));
        }
        for lz in 0..self.s * self.k {
            let sum: f64 = self.phi_true[lz * self.v..(lz + 1) * self.v].iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "phi_true row {lz} sums to {sum}"
                )));
            }
        }
        for l in 0..self.s {
            let sum: f64 = self.mu_true[l * RATING_LEVELS..(l + 1) * RATING_LEVELS]
                .iter()
                .sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "mu_true row {l} sums to {sum}"
                )));
            }
        }
        Ok(())
    }

    /// Standard experiment spec: symmetric gamma and alpha, a seeded
    /// sparse word distribution with polarity-exclusive vocabulary
    /// fractions, and the requested rating distribution.
    pub fn standard(
        s: usize,
        k: usize,
        v: usize,
        concentration: f64,
        mu_true: Vec<f64>,
        seed: u64,
    ) -> Result<GenerativeSpec> {
        let phi_true = if s == 2 {
            polar_phi(k, v, concentration, 0.15, 0.25, seed)?
        } else {
            synthetic_phi(s, k, v, concentration, seed)?
        };
        let spec = GenerativeSpec {
            s,
            k,
            v,
            gamma: vec![3.0 / s as f64; s],
            alpha: vec![3.0 / (s * k) as f64; s * k],
            phi_true,
            mu_true,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Latent per-document truth returned alongside each generated document.
#[derive(Debug, Clone)]
pub struct DocumentTruth {
    /// length S
    pub pi: Vec<f64>,
    /// S x K
    pub theta: Vec<f64>,
}

/// Which canonical rating distribution to generate from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuKind {
    /// Disjoint supports: positive mass on ratings 4-5, negative on 1-2.
    Diff,
    /// Both sentiments uniform over all five ratings.
    Unif,
}

impl std::str::FromStr for MuKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<MuKind> {
        match s {
            "diff" => Ok(MuKind::Diff),
            "unif" => Ok(MuKind::Unif),
            other => Err(Error::InvalidArgument(format!(
                "unknown mu kind {other:?}, expected \"diff\" or \"unif\""
            ))),
        }
    }
}

impl std::fmt::Display for MuKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MuKind::Diff => write!(f, "diff"),
            MuKind::Unif => write!(f, "unif"),
        }
    }
}

/// The two reference rating distributions for S = 2, flattened S x 5.
/// `Diff` gives ratings that identify the sentiment exactly; `Unif` gives
/// ratings that carry no information about it.
pub fn canonical_mu(kind: MuKind) -> Vec<f64> {
    match kind {
        MuKind::Diff => vec![0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0],
        MuKind::Unif => vec![0.2; 10],
    }
}

fn sample_dirichlet(rng: &mut SeededRng, alpha: &[f64]) -> Vec<f64> {
    let mut draws: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
        .collect();
    let sum: f64 = draws.iter().sum();
    if sum > 0.0 {
        for x in &mut draws {
            *x /= sum;
        }
    } else {
        let uniform = 1.0 / alpha.len() as f64;
        draws.fill(uniform);
    }
    draws
}

fn draw(rng: &mut SeededRng, probs: &[f64]) -> usize {
    rng::draw_categorical(rng, probs).expect("normalized row")
}

/// Samples one document of `n_words` words and `m_ratings` ratings from
/// the generative process, returning the observables and the latent
/// document-level truth.
pub fn sample_document(
    spec: &GenerativeSpec,
    n_words: usize,
    m_ratings: usize,
    seed: u64,
) -> (Document, DocumentTruth) {
    sample_document_with_id(spec, n_words, m_ratings, seed, "sim".to_string())
}

fn sample_document_with_id(
    spec: &GenerativeSpec,
    n_words: usize,
    m_ratings: usize,
    seed: u64,
    id: String,
) -> (Document, DocumentTruth) {
    assert!(n_words >= 1, "documents need at least one word");
    let mut rng = rng::seeded(seed);
    let pi = sample_dirichlet(&mut rng, &spec.gamma);
    let mut theta = Vec::with_capacity(spec.s * spec.k);
    for l in 0..spec.s {
        theta.extend(sample_dirichlet(
            &mut rng,
            &spec.alpha[l * spec.k..(l + 1) * spec.k],
        ));
    }
    let mut word_ids = Vec::with_capacity(n_words);
    for _ in 0..n_words {
        let l = draw(&mut rng, &pi);
        let z = draw(&mut rng, &theta[l * spec.k..(l + 1) * spec.k]);
        let lz = l * spec.k + z;
        let w = draw(&mut rng, &spec.phi_true[lz * spec.v..(lz + 1) * spec.v]);
        word_ids.push(w as u32);
    }
    let mut ratings = Vec::with_capacity(m_ratings);
    for _ in 0..m_ratings {
        let l = draw(&mut rng, &pi);
        let r = draw(
            &mut rng,
            &spec.mu_true[l * RATING_LEVELS..(l + 1) * RATING_LEVELS],
        );
        ratings.push((r + 1) as u8);
    }
    (
        Document {
            id,
            word_ids,
            ratings,
        },
        DocumentTruth { pi, theta },
    )
}

/// D independent documents with split seeds; deterministic given `seed`.
pub fn make_corpus(
    spec: &GenerativeSpec,
    d: usize,
    n_words: usize,
    m_ratings: usize,
    seed: u64,
) -> (Vec<Document>, Vec<DocumentTruth>) {
    (0..d)
        .map(|i| {
            sample_document_with_id(
                spec,
                n_words,
                m_ratings,
                rng::child_seed(seed, i as u64),
                format!("sim{i}"),
            )
        })
        .unzip()
}

/// Word distributions drawn from a symmetric Dirichlet; low concentration
/// gives the sparse, well-separated rows of realistic topic vocabularies.
pub fn synthetic_phi(
    s: usize,
    k: usize,
    v: usize,
    concentration: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(concentration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "concentration must be positive, got {concentration}"
        )));
    }
    let alpha = vec![concentration; v];
    let mut phi = Vec::with_capacity(s * k * v);
    for lz in 0..s * k {
        let mut rng = rng::seeded(rng::child_seed(seed, 0x9D1 + lz as u64));
        phi.extend(sample_dirichlet(&mut rng, &alpha));
    }
    Ok(phi)
}

/// Binary-sentiment word distributions with a lexicon-like structure:
/// a `polar_fraction` of the vocabulary on each side is exclusive to that
/// sentiment (zero mass in every opposite row) and carries `polar_mass`
/// of each row; the rest of each row is a per-topic base distribution
/// shared by both sentiments. Topical words are therefore sentiment-free
/// and only the exclusive words tie a topic to a sentiment — the same
/// role lexicon words play in lexicon-seeded estimates, and the property
/// that makes the sentiment grouping of topics identifiable from words.
pub fn polar_phi(
    k: usize,
    v: usize,
    concentration: f64,
    polar_fraction: f64,
    polar_mass: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(concentration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "concentration must be positive, got {concentration}"
        )));
    }
    if !(0.0..=0.5).contains(&polar_fraction) {
        return Err(Error::InvalidArgument(format!(
            "polar_fraction must lie in [0, 0.5], got {polar_fraction}"
        )));
    }
    if !(0.0..=1.0).contains(&polar_mass) {
        return Err(Error::InvalidArgument(format!(
            "polar_mass must lie in [0, 1], got {polar_mass}"
        )));
    }
    let polar = (v as f64 * polar_fraction).floor() as usize;
    if v < 2 * polar + 1 {
        return Err(Error::InvalidArgument(
            "vocabulary too small for the polar fraction".into(),
        ));
    }
    // Words [0, polar) belong to sentiment 0, [polar, 2*polar) to
    // sentiment 1, the rest are shared.
    let shared = v - 2 * polar;
    let base: Vec<Vec<f64>> = (0..k)
        .map(|z| {
            let mut rng = rng::seeded(rng::child_seed(seed, 0xBA5E + z as u64));
            sample_dirichlet(&mut rng, &vec![concentration; shared])
        })
        .collect();
    let mut phi = Vec::with_capacity(2 * k * v);
    for lz in 0..2 * k {
        let l = lz / k;
        let z = lz % k;
        let mut row = vec![0.0; v];
        if polar > 0 && polar_mass > 0.0 {
            let mut rng = rng::seeded(rng::child_seed(seed, 0x9D1 + lz as u64));
            let own = sample_dirichlet(&mut rng, &vec![concentration; polar]);
            let offset = l * polar;
            for (w, mass) in own.into_iter().enumerate() {
                row[offset + w] = polar_mass * mass;
            }
        }
        let shared_mass = if polar > 0 { 1.0 - polar_mass } else { 1.0 };
        for (w, mass) in base[z].iter().enumerate() {
            row[2 * polar + w] = shared_mass * mass;
        }
        phi.extend(row);
    }
    Ok(phi)
}

/// Outcome of one recovery configuration.
#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub mean_kl: f64,
    pub std_error: f64,
    pub per_doc_kl: Vec<f64>,
    pub seed: u64,
}

/// Trains on a generated corpus and reports per-document
/// KL(pi_hat, pi_true), reduced over the corpus. Sentiment labels of an
/// unsupervised fit are only identified up to permutation, so the KL is
/// evaluated under the global sentiment permutation with the lowest mean.
pub fn run_recovery_experiment(
    spec: &GenerativeSpec,
    d: usize,
    m_list: &[usize],
    ratio_list: &[usize],
    sigma: f64,
    iterations: usize,
    seed: u64,
) -> Result<Vec<SimResult>> {
    spec.validate()?;
    if d == 0 || m_list.is_empty() || ratio_list.is_empty() {
        return Err(Error::InvalidArgument(
            "recovery experiment needs d >= 1 and non-empty M and ratio lists".into(),
        ));
    }
    let configs: Vec<(usize, usize)> = m_list
        .iter()
        .flat_map(|&m| ratio_list.iter().map(move |&ratio| (m, ratio * m)))
        .collect();
    let beta = seeded_beta(spec);
    configs
        .par_iter()
        .enumerate()
        .map(|(idx, &(m, n))| {
            let corpus_seed = rng::child_seed(seed, 2 * idx as u64);
            let train_seed = rng::child_seed(seed, 2 * idx as u64 + 1);
            let (documents, truths) = make_corpus(spec, d, n, m, corpus_seed);
            let hyper = Hyperparams::new(
                spec.s,
                spec.k,
                spec.v,
                spec.gamma.clone(),
                spec.alpha.clone(),
                beta.clone(),
                informative_delta_for(spec.s),
                sigma,
            )?;
            let result = best_of_chains(&documents, &hyper, iterations, train_seed)?;
            let per_doc_kl = aligned_kl(&result.params, &truths, spec.s)?;
            let (mean, se) = mean_and_standard_error(&per_doc_kl);
            Ok(SimResult {
                m,
                n,
                d,
                sigma,
                mean_kl: mean,
                std_error: se,
                per_doc_kl,
                seed,
            })
        })
        .collect()
}

/// Independent chains trained per recovery configuration; the read-out
/// comes from the chain with the highest final collapsed log score.
const RECOVERY_CHAINS: u64 = 4;

fn best_of_chains(
    documents: &[Document],
    hyper: &Hyperparams,
    iterations: usize,
    seed: u64,
) -> Result<sampler::TrainResult> {
    let mut best: Option<sampler::TrainResult> = None;
    for chain in 0..RECOVERY_CHAINS {
        let result = sampler::train(documents, hyper, iterations, rng::child_seed(seed, chain))?;
        let score = *result.log_scores.last().expect("at least one sweep");
        let replace = match &best {
            None => true,
            Some(b) => score > *b.log_scores.last().expect("at least one sweep"),
        };
        if replace {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one chain"))
}

/// Training prior over words: 0.01 everywhere except the (sentiment, word)
/// pairs the generator itself excludes, which stay at zero. Words with
/// zero mass under every topic of a sentiment are that sentiment's
/// opposite-polarity lexicon; seeding them mirrors how lexicon priors
/// accompany lexicon-structured corpora, and it is what makes the
/// sentiment grouping of topics identifiable without ratings.
fn seeded_beta(spec: &GenerativeSpec) -> Vec<f64> {
    let (s, k, v) = (spec.s, spec.k, spec.v);
    let mut beta = vec![0.01; s * k * v];
    for l in 0..s {
        for w in 0..v {
            let excluded = (0..k).all(|z| spec.phi_true[(l * k + z) * v + w] == 0.0);
            if excluded {
                for z in 0..k {
                    beta[(l * k + z) * v + w] = 0.0;
                }
            }
        }
    }
    beta
}

fn informative_delta_for(s: usize) -> Vec<f64> {
    // Matches the standard prior construction in `priors`.
    let mut delta = vec![10.0; s * RATING_LEVELS];
    if s == 2 {
        for r in 0..RATING_LEVELS {
            delta[r] = 10.0 * (r + 1) as f64;
            delta[RATING_LEVELS + r] = 10.0 * (5 - r) as f64;
        }
    }
    delta
}

/// Per-document KL under the best global sentiment permutation.
fn aligned_kl(
    params: &sampler::ModelParams,
    truths: &[DocumentTruth],
    s: usize,
) -> Result<Vec<f64>> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for perm in permutations(s) {
        let mut kls = Vec::with_capacity(truths.len());
        for (i, truth) in truths.iter().enumerate() {
            let permuted: Vec<f64> = (0..s).map(|l| params.pi(i, perm[l])).collect();
            kls.push(evaluate::kl_divergence(&permuted, &truth.pi)?);
        }
        let mean = kls.iter().sum::<f64>() / kls.len() as f64;
        if best.as_ref().is_none_or(|(m, _)| mean < *m) {
            best = Some((mean, kls));
        }
    }
    Ok(best.expect("at least the identity permutation").1)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for sub in permutations(n - 1) {
        for slot in 0..n {
            let mut perm: Vec<usize> = sub.iter().map(|&x| x + usize::from(x >= slot)).collect();
            perm.insert(0, slot);
            out.push(perm);
        }
    }
    out
}

fn mean_and_standard_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (variance / n).sqrt())
}

/// Picks sigma from a grid by mean recovery KL on a freshly generated
/// validation corpus (ties toward the smaller sigma).
pub fn select_sigma_by_recovery(
    spec: &GenerativeSpec,
    d: usize,
    n_words: usize,
    m_ratings: usize,
    grid: &[f64],
    iterations: usize,
    seed: u64,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("sigma grid is empty".into()));
    }
    let results: Vec<Result<SimResult>> = grid
        .par_iter()
        .map(|&sigma| {
            let mut out = run_recovery_experiment(
                spec,
                d,
                &[m_ratings],
                &[n_words / m_ratings.max(1)],
                sigma,
                iterations,
                rng::child_seed(seed, 0x5E1EC7),
            )?;
            Ok(out.remove(0))
        })
        .collect();
    let mut best = (f64::INFINITY, f64::INFINITY);
    for result in results {
        let result = result?;
        if result.mean_kl < best.0 || (result.mean_kl == best.0 && result.sigma < best.1) {
            best = (result.mean_kl, result.sigma);
        }
    }
    Ok(best.1)
}
