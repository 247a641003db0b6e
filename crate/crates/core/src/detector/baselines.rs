//! Supervised and unsupervised baseline classifiers for the comparison
//! table: L2-regularized logistic regression, Gaussian naive Bayes, and an
//! isolation forest. All share the detector's sign convention: positive
//! score means phishing (+1), and a score of exactly zero maps to +1.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::ocsvm::Prediction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Logreg,
    Gnb,
    Iforest,
}

/// Options steering the baseline classifiers; only the isolation forest
/// consumes the seed and contamination fraction.
#[derive(Debug, Clone, Copy)]
pub struct BaselineOptions {
    pub seed: u64,
    /// Fraction of the test set labeled anomalous by the isolation forest.
    pub contamination: f64,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        BaselineOptions {
            seed: 1,
            contamination: 0.5,
        }
    }
}

/// Fit the chosen baseline on the training set and score the test set.
/// Labels are +1 (phishing) / -1 (normal); the supervised baselines require
/// both classes in training.
pub fn baseline_fit_predict(
    train_x: &[Vec<f64>],
    train_y: &[i8],
    test_x: &[Vec<f64>],
    which: BaselineKind,
    opts: BaselineOptions,
) -> Result<Vec<Prediction>> {
    if train_x.len() != train_y.len() {
        return Err(Error::DimensionMismatch {
            expected: train_x.len(),
            found: train_y.len(),
        });
    }
    if train_x.is_empty() {
        return Err(Error::InvalidConfig("empty training set".into()));
    }
    let dim = train_x[0].len();
    if train_x
        .iter()
        .chain(test_x.iter())
        .any(|x| x.len() != dim)
    {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: 0,
        });
    }
    match which {
        BaselineKind::Logreg => logreg(train_x, train_y, test_x),
        BaselineKind::Gnb => gnb(train_x, train_y, test_x),
        BaselineKind::Iforest => Ok(iforest(train_x, test_x, opts)),
    }
}

fn require_both_classes(train_y: &[i8]) -> Result<()> {
    let pos = train_y.iter().any(|&y| y > 0);
    let neg = train_y.iter().any(|&y| y <= 0);
    if pos && neg {
        Ok(())
    } else {
        Err(Error::SingleClassTraining)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Mean binary cross-entropy with L2 strength 1.0 on the weights (bias
/// unregularized), minimized by gradient descent with backtracking line
/// search until the gradient norm drops below 1e-6.
fn logreg(train_x: &[Vec<f64>], train_y: &[i8], test_x: &[Vec<f64>]) -> Result<Vec<Prediction>> {
    require_both_classes(train_y)?;
    let n = train_x.len() as f64;
    let dim = train_x[0].len();
    let lambda = 1.0;

    let loss_grad = |w: &[f64], b: f64| -> (f64, Vec<f64>, f64) {
        let mut loss = 0.0;
        let mut gw = vec![0.0; dim];
        let mut gb = 0.0;
        for (x, &y) in train_x.iter().zip(train_y) {
            let y = y as f64;
            let z: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
            loss += softplus(-y * z);
            let g = -y * sigmoid(-y * z);
            for (gwi, xi) in gw.iter_mut().zip(x) {
                *gwi += g * xi;
            }
            gb += g;
        }
        loss /= n;
        gb /= n;
        for (gwi, wi) in gw.iter_mut().zip(w) {
            *gwi = *gwi / n + lambda * wi;
        }
        loss += 0.5 * lambda * w.iter().map(|wi| wi * wi).sum::<f64>();
        (loss, gw, gb)
    };

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut step = 1.0;
    let (mut loss, mut gw, mut gb) = loss_grad(&w, b);
    for _ in 0..50_000 {
        let gnorm_sq: f64 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if gnorm_sq.sqrt() < 1e-6 {
            break;
        }
        // Backtracking (Armijo) line search along -grad.
        loop {
            let w2: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - step * gi).collect();
            let b2 = b - step * gb;
            let (loss2, gw2, gb2) = loss_grad(&w2, b2);
            if loss2 <= loss - 1e-4 * step * gnorm_sq || step < 1e-16 {
                w = w2;
                b = b2;
                loss = loss2;
                gw = gw2;
                gb = gb2;
                step = (step * 2.0).min(1e6);
                break;
            }
            step *= 0.5;
        }
    }

    Ok(test_x
        .iter()
        .map(|x| {
            let z: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
            Prediction::from_score(z)
        })
        .collect())
}

/// Per-class diagonal Gaussians with a variance floor; score is the
/// positive-class log-posterior margin.
fn gnb(train_x: &[Vec<f64>], train_y: &[i8], test_x: &[Vec<f64>]) -> Result<Vec<Prediction>> {
    require_both_classes(train_y)?;
    let dim = train_x[0].len();
    const VAR_FLOOR: f64 = 1e-9;

    struct ClassStats {
        log_prior: f64,
        mean: Vec<f64>,
        var: Vec<f64>,
    }
    let fit_class = |positive: bool| -> ClassStats {
        let members: Vec<&Vec<f64>> = train_x
            .iter()
            .zip(train_y)
            .filter(|(_, &y)| (y > 0) == positive)
            .map(|(x, _)| x)
            .collect();
        let m = members.len() as f64;
        let mut mean = vec![0.0; dim];
        for x in &members {
            for (mu, xi) in mean.iter_mut().zip(x.iter()) {
                *mu += xi / m;
            }
        }
        let mut var = vec![0.0; dim];
        for x in &members {
            for ((v, xi), mu) in var.iter_mut().zip(x.iter()).zip(&mean) {
                *v += (xi - mu) * (xi - mu) / m;
            }
        }
        for v in &mut var {
            *v = v.max(VAR_FLOOR);
        }
        ClassStats {
            log_prior: (m / train_x.len() as f64).ln(),
            mean,
            var,
        }
    };
    let pos = fit_class(true);
    let neg = fit_class(false);

    let log_lik = |s: &ClassStats, x: &[f64]| -> f64 {
        let mut ll = s.log_prior;
        for ((xi, mu), v) in x.iter().zip(&s.mean).zip(&s.var) {
            ll += -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (xi - mu) * (xi - mu) / (2.0 * v);
        }
        ll
    };

    Ok(test_x
        .iter()
        .map(|x| Prediction::from_score(log_lik(&pos, x) - log_lik(&neg, x)))
        .collect())
}

enum IforestNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<IforestNode>,
        right: Box<IforestNode>,
    },
    Leaf {
        size: usize,
    },
}

/// Average unsuccessful-search path length of a binary search tree with n
/// external nodes; the normalizer in the isolation-forest score.
fn average_path_length(n: usize) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let nf = n as f64;
            2.0 * ((nf - 1.0).ln() + EULER_GAMMA) - 2.0 * (nf - 1.0) / nf
        }
    }
}

fn build_iforest_tree(
    data: &[Vec<f64>],
    indices: &mut [usize],
    depth: usize,
    limit: usize,
    rng: &mut ChaCha8Rng,
) -> IforestNode {
    if depth >= limit || indices.len() <= 1 {
        return IforestNode::Leaf {
            size: indices.len(),
        };
    }
    let dim = data[0].len();
    // Features with spread in this node's sample.
    let splittable: Vec<usize> = (0..dim)
        .filter(|&f| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in indices.iter() {
                lo = lo.min(data[i][f]);
                hi = hi.max(data[i][f]);
            }
            hi > lo
        })
        .collect();
    if splittable.is_empty() {
        return IforestNode::Leaf {
            size: indices.len(),
        };
    }
    let feature = splittable[rng.gen_range(0..splittable.len())];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in indices.iter() {
        lo = lo.min(data[i][feature]);
        hi = hi.max(data[i][feature]);
    }
    let threshold = rng.gen_range(lo..hi);
    let split = itertools_partition(indices, |&i| data[i][feature] < threshold);
    let (left_idx, right_idx) = indices.split_at_mut(split);
    let left = build_iforest_tree(data, left_idx, depth + 1, limit, rng);
    let right = build_iforest_tree(data, right_idx, depth + 1, limit, rng);
    IforestNode::Internal {
        feature,
        threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Stable in-place partition; returns the boundary index.
fn itertools_partition<T, F: Fn(&T) -> bool>(slice: &mut [T], pred: F) -> usize {
    let mut split = 0;
    for i in 0..slice.len() {
        if pred(&slice[i]) {
            slice.swap(split, i);
            split += 1;
        }
    }
    split
}

fn iforest_path_length(node: &IforestNode, x: &[f64], depth: usize) -> f64 {
    match node {
        IforestNode::Leaf { size } => depth as f64 + average_path_length(*size),
        IforestNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            if x[*feature] < *threshold {
                iforest_path_length(left, x, depth + 1)
            } else {
                iforest_path_length(right, x, depth + 1)
            }
        }
    }
}

/// 100 trees on subsamples of 256; anomaly score `2^(-E[h]/c(psi))`; the top
/// `contamination` fraction of test scores is labeled +1. Reported scores
/// are shifted by the threshold so the sign convention holds.
fn iforest(train_x: &[Vec<f64>], test_x: &[Vec<f64>], opts: BaselineOptions) -> Vec<Prediction> {
    const TREES: usize = 100;
    let psi = train_x.len().min(256);
    let limit = (psi as f64).log2().ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut trees = Vec::with_capacity(TREES);
    for _ in 0..TREES {
        let mut all: Vec<usize> = (0..train_x.len()).collect();
        all.shuffle(&mut rng);
        let mut sample: Vec<usize> = all.into_iter().take(psi).collect();
        trees.push(build_iforest_tree(train_x, &mut sample, 0, limit.max(1), &mut rng));
    }

    let norm = average_path_length(psi).max(f64::MIN_POSITIVE);
    let scores: Vec<f64> = test_x
        .iter()
        .map(|x| {
            let mean_path: f64 = trees
                .iter()
                .map(|t| iforest_path_length(t, x, 0))
                .sum::<f64>()
                / TREES as f64;
            2f64.powf(-mean_path / norm)
        })
        .collect();

    let mut sorted = scores.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k = ((opts.contamination * scores.len() as f64).round() as usize)
        .clamp(1, scores.len());
    let threshold = sorted[k - 1];

    scores
        .into_iter()
        .map(|s| Prediction {
            score: s - threshold,
            label: if s >= threshold { 1 } else { -1 },
        })
        .collect()
}
