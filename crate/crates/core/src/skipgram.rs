//! Skip-gram embeddings over walk corpora.
//!
//! Each walk is treated as a sentence: every node predicts its neighbors
//! within a fixed window, trained with negative sampling (SGNS). Negatives
//! come from the corpus unigram distribution raised to `noise_exponent`.
//! The published embedding is the input-vector matrix; context vectors are
//! training-only state.
//!
//! Training is single-threaded and deterministic: a fixed seed fixes the
//! initialization and every negative draw, so identical inputs give
//! bit-identical embeddings.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alias::AliasTable;
use crate::error::{Error, Result};
use crate::seeds::{self, tag};
use crate::txgraph::TxGraph;
use crate::walker::WalkCorpus;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedConfig {
    pub dimension: usize,
    /// Context window: pairs are formed with neighbors up to this many
    /// positions away, clipped at walk ends. No random shrinking, so the
    /// pair count is deterministic.
    pub window: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Linear decay over the total update count stops here.
    pub lr_floor: f64,
    pub noise_exponent: f64,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dimension: 64,
            window: 10,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            lr_floor: 1e-4,
            noise_exponent: 0.75,
            seed: 1,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.window == 0 || self.negatives == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig(
                "dimension, window, negatives and epochs must be >= 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !(self.lr_floor > 0.0) {
            return Err(Error::InvalidConfig(
                "learning_rate and lr_floor must be positive".into(),
            ));
        }
        if self.lr_floor > self.learning_rate {
            return Err(Error::InvalidConfig(
                "lr_floor must not exceed learning_rate".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    addresses: Vec<String>,
    dim: usize,
    /// Row-major `len x dim`.
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EmbeddingMatrix {
    pub fn from_rows(addresses: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != addresses.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: addresses.len() * dim,
                found: data.len(),
            });
        }
        let index = addresses
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        Ok(EmbeddingMatrix {
            addresses,
            dim,
            data,
            index,
        })
    }

    /// The deterministic seeded initialization `train` starts from: input
    /// vectors uniform in [-0.5/d, 0.5/d].
    pub fn initialize(addresses: Vec<String>, cfg: &EmbedConfig) -> Self {
        let d = cfg.dimension;
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(cfg.seed, &[tag::EMBED]));
        let half = 0.5 / d as f64;
        let data: Vec<f64> = (0..addresses.len() * d)
            .map(|_| rng.gen_range(-half..half))
            .collect();
        EmbeddingMatrix::from_rows(addresses, d, data).expect("sized by construction")
    }

    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn address(&self, row: usize) -> &str {
        &self.addresses[row]
    }

    pub fn addresses(&self) -> &[String] {
        &self.addresses
    }

    pub fn by_address(&self, address: &str) -> Option<&[f64]> {
        self.index.get(address).map(|&i| self.vector(i))
    }

    pub fn row_of(&self, address: &str) -> Option<usize> {
        self.index.get(address).copied()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Loss and exact gradients of one SGNS example:
/// `L = -log sigma(u.v) - sum_j log sigma(-u.w_j)`.
#[derive(Debug, Clone)]
pub struct SgnsGrad {
    pub loss: f64,
    pub grad_center: Vec<f64>,
    pub grad_context: Vec<f64>,
    pub grad_negatives: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log sigma(x) = -softplus(-x)`, stable at both tails.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn sgns_loss_and_grad(
    center: &[f64],
    context: &[f64],
    negatives: &[&[f64]],
) -> Result<SgnsGrad> {
    let d = center.len();
    for other in std::iter::once(&context).chain(negatives.iter()) {
        if other.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: other.len(),
            });
        }
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let pos_dot = dot(center, context);
    let mut loss = -log_sigmoid(pos_dot);
    let g_pos = sigmoid(pos_dot) - 1.0;

    let mut grad_center: Vec<f64> = context.iter().map(|&v| g_pos * v).collect();
    let grad_context: Vec<f64> = center.iter().map(|&u| g_pos * u).collect();

    let mut grad_negatives = Vec::with_capacity(negatives.len());
    for w in negatives {
        let neg_dot = dot(center, w);
        loss -= log_sigmoid(-neg_dot);
        let g_neg = sigmoid(neg_dot);
        for (gc, &wv) in grad_center.iter_mut().zip(w.iter()) {
            *gc += g_neg * wv;
        }
        grad_negatives.push(center.iter().map(|&u| g_neg * u).collect());
    }

    Ok(SgnsGrad {
        loss,
        grad_center,
        grad_context,
        grad_negatives,
    })
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub embeddings: EmbeddingMatrix,
    /// Mean per-pair loss of each epoch (0.0 for pairless corpora).
    pub epoch_losses: Vec<f64>,
}

/// Train SGNS embeddings for every graph node from the walk corpus.
pub fn train(graph: &TxGraph, corpus: &WalkCorpus, cfg: &EmbedConfig) -> Result<TrainResult> {
    cfg.validate()?;
    if corpus.walks.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if corpus.graph_fingerprint != graph.fingerprint() {
        return Err(Error::GraphMismatch {
            expected: graph.fingerprint(),
            found: corpus.graph_fingerprint,
        });
    }
    let n = graph.node_count();
    for w in &corpus.walks {
        if let Some(&u) = w.iter().find(|&&u| (u as usize) >= n) {
            return Err(Error::IdMismatch(format!(
                "walk node id {u} out of range for graph with {n} nodes"
            )));
        }
    }

    let d = cfg.dimension;
    let input = EmbeddingMatrix::initialize(graph.addresses().to_vec(), cfg);
    let mut input_data = input.data;
    let mut context_data = vec![0.0; n * d];

    // Noise distribution: corpus frequency ^ noise_exponent.
    let mut counts = vec![0u64; n];
    for w in &corpus.walks {
        for &u in w {
            counts[u as usize] += 1;
        }
    }
    let noise_weights: Vec<f64> = counts
        .iter()
        .map(|&c| (c as f64).powf(cfg.noise_exponent))
        .collect();
    let noise = AliasTable::new(&noise_weights);

    // Pairs per epoch, for the linear decay schedule.
    let pairs_per_epoch: usize = corpus
        .walks
        .iter()
        .map(|w| {
            let l = w.len();
            (0..l)
                .map(|i| (i.min(cfg.window)) + ((l - 1 - i).min(cfg.window)))
                .sum::<usize>()
        })
        .sum();
    let total_pairs = pairs_per_epoch * cfg.epochs;

    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(cfg.seed, &[tag::EMBED, 1]));
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;
    let mut center_snapshot = vec![0.0; d];
    for _ in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        for w in &corpus.walks {
            for i in 0..w.len() {
                let center = w[i] as usize;
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window).min(w.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let ctx = w[j] as usize;
                    let lr = (cfg.learning_rate
                        * (1.0 - step as f64 / total_pairs as f64))
                        .max(cfg.lr_floor);
                    step += 1;

                    center_snapshot.copy_from_slice(&input_data[center * d..(center + 1) * d]);

                    // Positive update.
                    let ctx_row = &mut context_data[ctx * d..(ctx + 1) * d];
                    let pos_dot: f64 = center_snapshot
                        .iter()
                        .zip(ctx_row.iter())
                        .map(|(u, v)| u * v)
                        .sum();
                    let mut loss = -log_sigmoid(pos_dot);
                    let g_pos = sigmoid(pos_dot) - 1.0;
                    let mut center_grad: Vec<f64> =
                        ctx_row.iter().map(|&v| g_pos * v).collect();
                    for (v, &u) in ctx_row.iter_mut().zip(&center_snapshot) {
                        *v -= lr * g_pos * u;
                    }

                    // Negative updates; re-draw collisions with the positive
                    // context a few times, then keep.
                    for _ in 0..cfg.negatives {
                        let mut neg = noise.sample(&mut rng);
                        for _ in 0..8 {
                            if neg != ctx {
                                break;
                            }
                            neg = noise.sample(&mut rng);
                        }
                        let neg_row = &mut context_data[neg * d..(neg + 1) * d];
                        let neg_dot: f64 = center_snapshot
                            .iter()
                            .zip(neg_row.iter())
                            .map(|(u, v)| u * v)
                            .sum();
                        loss -= log_sigmoid(-neg_dot);
                        let g_neg = sigmoid(neg_dot);
                        for (gc, &wv) in center_grad.iter_mut().zip(neg_row.iter()) {
                            *gc += g_neg * wv;
                        }
                        for (v, &u) in neg_row.iter_mut().zip(&center_snapshot) {
                            *v -= lr * g_neg * u;
                        }
                    }

                    let center_row = &mut input_data[center * d..(center + 1) * d];
                    for (u, g) in center_row.iter_mut().zip(&center_grad) {
                        *u -= lr * g;
                    }
                    loss_sum += loss;
                }
            }
        }
        epoch_losses.push(if pairs_per_epoch > 0 {
            loss_sum / pairs_per_epoch as f64
        } else {
            0.0
        });
    }

    let embeddings = EmbeddingMatrix::from_rows(graph.addresses().to_vec(), d, input_data)?;
    Ok(TrainResult {
        embeddings,
        epoch_losses,
    })
}

/// Text format: header `<node_count> <dimension>`, then one row per node:
/// the address followed by its vector components. Floats print with the
/// shortest representation that round-trips exactly.
pub fn save_embeddings(matrix: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "{} {}", matrix.len(), matrix.dimension()).map_err(|e| Error::io(path, e))?;
    let mut line = String::new();
    for row in 0..matrix.len() {
        line.clear();
        line.push_str(matrix.address(row));
        for v in matrix.vector(row) {
            line.push(' ');
            line.push_str(&format!("{v}"));
        }
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: u64, msg: String| Error::EmbeddingFormat { line, msg };
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| bad(1, "missing header".into()))?
        .map_err(|e| Error::io(path, e))?;
    let parse_header = |header: &str| -> Option<(usize, usize)> {
        let mut parts = header.split_whitespace();
        let count = parts.next()?.parse().ok()?;
        let dim = parts.next()?.parse().ok()?;
        parts.next().is_none().then_some((count, dim))
    };
    let (count, dim) = parse_header(&header).ok_or_else(|| {
        bad(1, format!("expected `<node_count> <dimension>`, found `{header}`"))
    })?;

    let mut addresses = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    for (i, line) in lines.enumerate() {
        let lineno = i as u64 + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let address = tokens.next().expect("non-empty line has a token");
        let mut row = Vec::with_capacity(dim);
        for t in tokens {
            let v: f64 = t
                .parse()
                .map_err(|_| bad(lineno, format!("bad float `{t}`")))?;
            row.push(v);
        }
        if row.len() != dim {
            return Err(bad(
                lineno,
                format!("expected {dim} components, found {}", row.len()),
            ));
        }
        addresses.push(address.to_string());
        data.extend(row);
    }
    if addresses.len() != count {
        return Err(Error::RowCountMismatch {
            expected: count,
            found: addresses.len(),
        });
    }
    EmbeddingMatrix::from_rows(addresses, dim, data)
}
