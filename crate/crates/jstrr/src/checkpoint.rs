//! Model checkpoints: a single JSON file holding the priors, the
//! vocabulary hash, the estimated parameters and the run provenance
//! (seed, iteration count, resolved configuration). Written atomically.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::{Hyperparams, RATING_LEVELS};
use crate::sampler::ModelParams;

/// Compact description of the word prior. Lexicon seeding produces a
/// shared base value with zeroed (sentiment, word) cells; anything else
/// is stored densely.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSpec {
    Uniform {
        value: f64,
    },
    Seeded {
        value: f64,
        /// (sentiment, word id) cells whose prior is zero for every topic.
        zero_cells: Vec<(usize, u32)>,
    },
    Dense {
        values: Vec<Vec<Vec<f64>>>,
    },
}

impl BetaSpec {
    pub fn from_hyper(hyper: &Hyperparams) -> BetaSpec {
        let (s, k, v) = (hyper.s(), hyper.k(), hyper.v());
        let mut base: Option<f64> = None;
        let mut zero_cells = Vec::new();
        for l in 0..s {
            for w in 0..v {
                let first = hyper.beta(l, 0, w);
                if (1..k).any(|z| hyper.beta(l, z, w) != first) {
                    return BetaSpec::dense(hyper);
                }
                if first == 0.0 {
                    zero_cells.push((l, w as u32));
                } else {
                    match base {
                        None => base = Some(first),
                        Some(b) if b == first => {}
                        Some(_) => return BetaSpec::dense(hyper),
                    }
                }
            }
        }
        match (base, zero_cells.is_empty()) {
            (Some(value), true) => BetaSpec::Uniform { value },
            (Some(value), false) => BetaSpec::Seeded { value, zero_cells },
            (None, _) => BetaSpec::dense(hyper),
        }
    }

    fn dense(hyper: &Hyperparams) -> BetaSpec {
        let values = (0..hyper.s())
            .map(|l| {
                (0..hyper.k())
                    .map(|z| hyper.beta_row(l, z).to_vec())
                    .collect()
            })
            .collect();
        BetaSpec::Dense { values }
    }

    pub fn to_dense(&self, s: usize, k: usize, v: usize) -> Result<Vec<f64>> {
        match self {
            BetaSpec::Uniform { value } => Ok(vec![*value; s * k * v]),
            BetaSpec::Seeded { value, zero_cells } => {
                let mut beta = vec![*value; s * k * v];
                for &(l, w) in zero_cells {
                    if l >= s || w as usize >= v {
                        return Err(Error::InvalidHyperparams(format!(
                            "beta_spec zero cell ({l}, {w}) out of range"
                        )));
                    }
                    for z in 0..k {
                        beta[(l * k + z) * v + w as usize] = 0.0;
                    }
                }
                Ok(beta)
            }
            BetaSpec::Dense { values } => {
                let mut beta = Vec::with_capacity(s * k * v);
                for row in values.iter().flatten() {
                    beta.extend_from_slice(row);
                }
                if beta.len() != s * k * v {
                    return Err(Error::InvalidHyperparams(
                        "dense beta_spec has wrong shape".into(),
                    ));
                }
                Ok(beta)
            }
        }
    }
}

/// Serialized model: hyperparameters under their conventional names plus
/// the estimated parameter tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub s: usize,
    pub k: usize,
    pub v: usize,
    pub d: usize,
    pub vocab_sha256: String,
    pub seed: u64,
    pub iterations: usize,
    pub sigma: f64,
    pub gamma: Vec<f64>,
    pub alpha: Vec<Vec<f64>>,
    pub beta_spec: BetaSpec,
    pub delta: Vec<Vec<f64>>,
    pub pi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<Vec<f64>>>,
    pub phi: Vec<Vec<Vec<f64>>>,
    pub mu: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl Checkpoint {
    pub fn new(
        hyper: &Hyperparams,
        params: &ModelParams,
        vocab_sha256: String,
        seed: u64,
        iterations: usize,
    ) -> Checkpoint {
        let (s, k, v) = (hyper.s(), hyper.k(), hyper.v());
        let d = params.d;
        Checkpoint {
            s,
            k,
            v,
            d,
            vocab_sha256,
            seed,
            iterations,
            sigma: hyper.sigma(),
            gamma: hyper.gamma_all().to_vec(),
            alpha: (0..s)
                .map(|l| (0..k).map(|z| hyper.alpha(l, z)).collect())
                .collect(),
            beta_spec: BetaSpec::from_hyper(hyper),
            delta: (0..s)
                .map(|l| {
                    (1..=RATING_LEVELS as u8)
                        .map(|r| hyper.delta(l, r))
                        .collect()
                })
                .collect(),
            pi: (0..d).map(|i| params.pi_row(i).to_vec()).collect(),
            theta: (0..d)
                .map(|i| {
                    (0..s)
                        .map(|l| (0..k).map(|z| params.theta(i, l, z)).collect())
                        .collect()
                })
                .collect(),
            phi: (0..s)
                .map(|l| (0..k).map(|z| params.phi_row(l, z).to_vec()).collect())
                .collect(),
            mu: (0..s).map(|l| params.mu_row(l).to_vec()).collect(),
            config: None,
        }
    }

    pub fn hyperparams(&self) -> Result<Hyperparams> {
        Hyperparams::new(
            self.s,
            self.k,
            self.v,
            self.gamma.clone(),
            self.alpha.iter().flatten().copied().collect(),
            self.beta_spec.to_dense(self.s, self.k, self.v)?,
            self.delta.iter().flatten().copied().collect(),
            self.sigma,
        )
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            d: self.d,
            s: self.s,
            k: self.k,
            v: self.v,
            pi: self.pi.iter().flatten().copied().collect(),
            theta: self.theta.iter().flatten().flatten().copied().collect(),
            phi: self.phi.iter().flatten().flatten().copied().collect(),
            mu: self.mu.iter().flatten().copied().collect(),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        write_atomic(path, json.as_bytes())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

/// Writes a file via a temporary sibling and an atomic rename.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Serializes a report as pretty JSON, atomically.
pub fn write_json_report<T: Serialize>(path: impl AsRef<Path>, report: &T) -> Result<()> {
    let mut json =
        serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))?;
    json.push('\n');
    write_atomic(path, json.as_bytes())
}
