//! Independent oracles for the integration suites.
//!
//! Everything here recomputes probabilities from scratch — counts are
//! tallied fresh from label lists and the Dirichlet-multinomial evidence
//! is evaluated with log-gamma — so these paths share no code with the
//! incremental sampler they check.

// Each integration-test binary compiles this module separately and uses a
// different subset of it; `!(x > y)` comparisons reject NaN on purpose.
#![allow(dead_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

use jstrr::corpus::Document;
use jstrr::priors::{Hyperparams, RATING_LEVELS};
use jstrr::sampler::ModelParams;

/// Full label configuration of a corpus.
#[derive(Debug, Clone)]
pub struct Labels {
    /// per document, per word position: (sentiment, topic)
    pub word: Vec<Vec<(usize, usize)>>,
    /// per document, per rating position: sentiment
    pub rating: Vec<Vec<usize>>,
}

impl Labels {
    pub fn from_state(state: &jstrr::sampler::CountState) -> Labels {
        let assignments = state.assignments();
        Labels {
            word: assignments
                .word_sentiment
                .iter()
                .zip(&assignments.word_topic)
                .map(|(ls, zs)| ls.iter().copied().zip(zs.iter().copied()).collect())
                .collect(),
            rating: assignments.rating_sentiment.clone(),
        }
    }
}

fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Log joint of data and labels with all multinomial parameters
/// integrated out, evaluated directly from the definition. Ratings enter
/// the document-sentiment block at weight sigma. Returns -inf for
/// configurations that put mass on zero-prior cells.
pub fn collapsed_log_joint(docs: &[Document], hyper: &Hyperparams, labels: &Labels) -> f64 {
    collapsed_log_joint_impl(docs, hyper, labels, None)
}

/// Same joint, but one designated rating token enters the sentiment block
/// at unit weight instead of sigma. Resampling a rating draws its label
/// from the plain multinomial while the weighting applies to the
/// conditioning counts, so this is the joint whose token-conditional the
/// sampler's rating step targets; at sigma = 1 the two joints coincide.
pub fn collapsed_log_joint_unit_rating(
    docs: &[Document],
    hyper: &Hyperparams,
    labels: &Labels,
    i: usize,
    j: usize,
) -> f64 {
    collapsed_log_joint_impl(docs, hyper, labels, Some((i, j)))
}

fn collapsed_log_joint_impl(
    docs: &[Document],
    hyper: &Hyperparams,
    labels: &Labels,
    unit_rating: Option<(usize, usize)>,
) -> f64 {
    let s = hyper.s();
    let k = hyper.k();
    let v = hyper.v();
    let sigma = hyper.sigma();
    let mut score = 0.0;

    // Per-document sentiment blocks over pseudo-counts N_{i,l} + sigma M_{i,l}.
    for (i, doc) in docs.iter().enumerate() {
        let mut words_l = vec![0u32; s];
        let mut pseudo_l = vec![0f64; s];
        let mut total = doc.word_ids.len() as f64;
        for &(l, _) in &labels.word[i] {
            words_l[l] += 1;
            pseudo_l[l] += 1.0;
        }
        for (j, &l) in labels.rating[i].iter().enumerate() {
            let weight = if unit_rating == Some((i, j)) {
                1.0
            } else {
                sigma
            };
            pseudo_l[l] += weight;
            total += weight;
        }
        score += lgamma(hyper.sum_gamma()) - lgamma(total + hyper.sum_gamma());
        for l in 0..s {
            score += lgamma(pseudo_l[l] + hyper.gamma(l)) - lgamma(hyper.gamma(l));
        }
        // Per-document topic blocks over word tokens, one per sentiment.
        for l in 0..s {
            let mut n_lz = vec![0u32; k];
            for &(wl, wz) in &labels.word[i] {
                if wl == l {
                    n_lz[wz] += 1;
                }
            }
            score += lgamma(hyper.sum_alpha(l)) - lgamma(words_l[l] as f64 + hyper.sum_alpha(l));
            for z in 0..k {
                score += lgamma(n_lz[z] as f64 + hyper.alpha(l, z)) - lgamma(hyper.alpha(l, z));
            }
        }
    }

    // Corpus-wide word blocks, one per (sentiment, topic).
    for l in 0..s {
        for z in 0..k {
            let mut counts = vec![0u32; v];
            let mut total = 0u32;
            for (i, doc) in docs.iter().enumerate() {
                for (j, &w) in doc.word_ids.iter().enumerate() {
                    if labels.word[i][j] == (l, z) {
                        counts[w as usize] += 1;
                        total += 1;
                    }
                }
            }
            score += lgamma(hyper.sum_beta(l, z)) - lgamma(total as f64 + hyper.sum_beta(l, z));
            for w in 0..v {
                if counts[w] > 0 {
                    let beta = hyper.beta(l, z, w);
                    if beta == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    score += lgamma(counts[w] as f64 + beta) - lgamma(beta);
                }
            }
        }
    }

    // Corpus-wide rating blocks, one per sentiment.
    for l in 0..s {
        let mut counts = [0u32; RATING_LEVELS];
        let mut total = 0u32;
        for (i, doc) in docs.iter().enumerate() {
            for (j, &r) in doc.ratings.iter().enumerate() {
                if labels.rating[i][j] == l {
                    counts[(r - 1) as usize] += 1;
                    total += 1;
                }
            }
        }
        score += lgamma(hyper.sum_delta(l)) - lgamma(total as f64 + hyper.sum_delta(l));
        for r in 0..RATING_LEVELS {
            if counts[r] > 0 {
                score += lgamma(counts[r] as f64 + hyper.delta(l, (r + 1) as u8))
                    - lgamma(hyper.delta(l, (r + 1) as u8));
            }
        }
    }
    score
}

fn normalize_log_weights(log_weights: Vec<f64>) -> Vec<f64> {
    let max = log_weights
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        max > f64::NEG_INFINITY,
        "every configuration has zero probability"
    );
    let weights: Vec<f64> = log_weights.iter().map(|&lw| (lw - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Conditional over (l, z) for word (i, j) by enumerating the collapsed
/// joint over that token's labels with everything else held fixed.
pub fn oracle_word_conditional(
    docs: &[Document],
    hyper: &Hyperparams,
    labels: &Labels,
    i: usize,
    j: usize,
) -> Vec<f64> {
    let mut log_weights = Vec::with_capacity(hyper.s() * hyper.k());
    for l in 0..hyper.s() {
        for z in 0..hyper.k() {
            let mut candidate = labels.clone();
            candidate.word[i][j] = (l, z);
            log_weights.push(collapsed_log_joint(docs, hyper, &candidate));
        }
    }
    normalize_log_weights(log_weights)
}

/// Conditional over sentiments for rating (i, j), by the same enumeration
/// over the unit-weight joint for that token.
pub fn oracle_rating_conditional(
    docs: &[Document],
    hyper: &Hyperparams,
    labels: &Labels,
    i: usize,
    j: usize,
) -> Vec<f64> {
    let mut log_weights = Vec::with_capacity(hyper.s());
    for l in 0..hyper.s() {
        let mut candidate = labels.clone();
        candidate.rating[i][j] = l;
        log_weights.push(collapsed_log_joint_unit_rating(
            docs, hyper, &candidate, i, j,
        ));
    }
    normalize_log_weights(log_weights)
}

/// Exact P(words | phi) of a words-only document: sum over all label
/// sequences of the sequential label prior times the word probabilities.
pub fn oracle_doc_marginal(doc: &Document, params: &ModelParams, hyper: &Hyperparams) -> f64 {
    assert!(doc.ratings.is_empty(), "marginal oracle ignores ratings");
    let mut n_l = vec![0u32; hyper.s()];
    let mut n_lz = vec![0u32; hyper.s() * hyper.k()];
    marginal_recurse(doc, params, hyper, 0, &mut n_l, &mut n_lz)
}

fn marginal_recurse(
    doc: &Document,
    params: &ModelParams,
    hyper: &Hyperparams,
    position: usize,
    n_l: &mut [u32],
    n_lz: &mut [u32],
) -> f64 {
    if position == doc.word_ids.len() {
        return 1.0;
    }
    let w = doc.word_ids[position] as usize;
    let k = hyper.k();
    let mut total = 0.0;
    for l in 0..hyper.s() {
        let p_l = (n_l[l] as f64 + hyper.gamma(l)) / (position as f64 + hyper.sum_gamma());
        for z in 0..k {
            let p_z =
                (n_lz[l * k + z] as f64 + hyper.alpha(l, z)) / (n_l[l] as f64 + hyper.sum_alpha(l));
            let p = p_l * p_z * params.phi(l, z, w);
            if p > 0.0 {
                n_l[l] += 1;
                n_lz[l * k + z] += 1;
                total += p * marginal_recurse(doc, params, hyper, position + 1, n_l, n_lz);
                n_l[l] -= 1;
                n_lz[l * k + z] -= 1;
            }
        }
    }
    total
}

/// Mean and standard error of a sample.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub struct ConditionalComparison {
    pub checked: usize,
    pub max_word_error: f64,
    pub max_rating_error: f64,
}

/// Compares the sampler's conditionals against the enumeration oracle over
/// a family of tiny corpora (S = 2, K = 2, V = 3, at most 6 words and 2
/// ratings in total), at initialization and after two sweeps.
pub fn compare_conditionals_on_family(sigmas: &[f64]) -> ConditionalComparison {
    use jstrr::sampler;

    let shapes: &[(&[usize], &[usize])] = &[
        (&[6], &[2]),
        (&[6], &[0]),
        (&[3, 3], &[1, 1]),
        (&[4, 2], &[2, 0]),
        (&[2, 2, 2], &[1, 0, 1]),
        (&[1, 5], &[0, 2]),
    ];
    let v = 3u32;
    let mut result = ConditionalComparison {
        checked: 0,
        max_word_error: 0.0,
        max_rating_error: 0.0,
    };
    for (shape_idx, &(word_counts, rating_counts)) in shapes.iter().enumerate() {
        for pattern in 0..3u32 {
            let docs: Vec<Document> = word_counts
                .iter()
                .zip(rating_counts)
                .enumerate()
                .map(|(i, (&n, &m))| {
                    let words: Vec<u32> = (0..n)
                        .map(|t| (t as u32 * (pattern + 1) + i as u32) % v)
                        .collect();
                    let ratings: Vec<u8> = (0..m)
                        .map(|u| ((u as u32 * 3 + pattern) % 5 + 1) as u8)
                        .collect();
                    Document {
                        id: format!("d{i}"),
                        word_ids: words,
                        ratings,
                    }
                })
                .collect();
            for &sigma in sigmas {
                let hyper = Hyperparams::standard(2, 2, v as usize, sigma).unwrap();
                let seed = (shape_idx * 10 + pattern as usize) as u64;
                let mut state = sampler::init_assignments(&docs, &hyper, seed).unwrap();
                for sweeps in [0usize, 2] {
                    for _ in 0..sweeps {
                        sampler::gibbs_sweep(&mut state, &docs, &hyper).unwrap();
                    }
                    let labels = Labels::from_state(&state);
                    for (i, d) in docs.iter().enumerate() {
                        for j in 0..d.word_count() {
                            let w = d.word_ids[j];
                            let (l, z) = state.remove_word(i, j, w);
                            let got =
                                sampler::word_conditional(&state, &docs, &hyper, i, j).unwrap();
                            let want = oracle_word_conditional(&docs, &hyper, &labels, i, j);
                            state.insert_word(i, j, w, l, z);
                            for (a, b) in got.iter().zip(&want) {
                                result.max_word_error = result.max_word_error.max((a - b).abs());
                            }
                            result.checked += 1;
                        }
                        for j in 0..d.rating_count() {
                            let r = d.ratings[j];
                            let l = state.remove_rating(i, j, r);
                            let got = sampler::rating_conditional(&state, &docs, &hyper, i, j);
                            let want = oracle_rating_conditional(&docs, &hyper, &labels, i, j);
                            state.insert_rating(i, j, r, l);
                            for (a, b) in got.iter().zip(&want) {
                                result.max_rating_error =
                                    result.max_rating_error.max((a - b).abs());
                            }
                            result.checked += 1;
                        }
                    }
                }
            }
        }
    }
    result
}
