//! One-class nu-SVM trained by sequential minimal optimization.
//!
//! Dual problem: minimize ½ αᵀQα over the scaled simplex
//! {0 ≤ α_i ≤ 1/(νn), Σα_i = 1} with Q_ij = K(x_i, x_j). Each step moves
//! mass between the maximal KKT-violating pair — the lowest-gradient index
//! still below its box bound and the highest-gradient index still above
//! zero — until the gradient spread falls under tolerance. The offset ρ is
//! the mean gradient over free support vectors, so a training point scores
//! `(Qα)_i − ρ`.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SNAPSHOT_VERSION: u32 = 1;
/// Alphas below this are treated as zero when extracting support vectors.
const ALPHA_EPS: f64 = 1e-12;
/// Kernel rows kept in the fit-time cache.
const CACHE_ROWS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Kernel::Rbf { gamma } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * sq).exp()
            }
            Kernel::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
        }
    }
}

/// Decision outcome for one point. Score 0 maps to the target label +1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub score: f64,
    /// +1 target (phishing), -1 outlier (normal).
    pub label: i8,
}

impl Prediction {
    pub fn from_score(score: f64) -> Self {
        Prediction {
            score,
            label: if score >= 0.0 { 1 } else { -1 },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OcsvmModel {
    version: u32,
    pub kernel: Kernel,
    pub nu: f64,
    pub rho: f64,
    dim: usize,
    support_vectors: Vec<Vec<f64>>,
    alphas: Vec<f64>,
}

impl OcsvmModel {
    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .map(|(sv, a)| a * self.kernel.eval(sv, x))
            .sum();
        Ok(sum - self.rho)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        Ok(Prediction::from_score(self.score(x)?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)
            .map_err(|e| Error::SnapshotFormat(e.to_string()))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<OcsvmModel> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let model: OcsvmModel = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::SnapshotFormat(e.to_string()))?;
        if model.version != SNAPSHOT_VERSION {
            return Err(Error::SnapshotVersion {
                expected: SNAPSHOT_VERSION,
                found: model.version,
            });
        }
        if model.support_vectors.len() != model.alphas.len()
            || model.support_vectors.iter().any(|sv| sv.len() != model.dim)
        {
            return Err(Error::SnapshotFormat(
                "support vector / alpha shapes disagree".into(),
            ));
        }
        Ok(model)
    }
}

/// Fit diagnostics alongside the model.
#[derive(Debug, Clone)]
pub struct OcsvmFit {
    pub model: OcsvmModel,
    /// ½ αᵀQα at the solution.
    pub dual_objective: f64,
    pub iterations: usize,
    /// Gradient spread `max_{α>0} G − min_{α<C} G` at termination.
    pub max_kkt_violation: f64,
    /// All training points identical: the dual is flat and the model trivial.
    pub degenerate: bool,
}

/// LRU cache of kernel-matrix rows.
struct RowCache<'a> {
    kernel: Kernel,
    data: &'a [Vec<f64>],
    rows: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
}

impl<'a> RowCache<'a> {
    fn new(kernel: Kernel, data: &'a [Vec<f64>]) -> Self {
        RowCache {
            kernel,
            data,
            rows: HashMap::new(),
            order: VecDeque::new(),
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if !self.rows.contains_key(&i) {
            let xi = &self.data[i];
            let row: Vec<f64> = self.data.iter().map(|xj| self.kernel.eval(xi, xj)).collect();
            if self.order.len() == CACHE_ROWS {
                if let Some(old) = self.order.pop_front() {
                    self.rows.remove(&old);
                }
            }
            self.rows.insert(i, row);
            self.order.push_back(i);
        } else {
            // refresh recency
            if let Some(pos) = self.order.iter().position(|&k| k == i) {
                self.order.remove(pos);
                self.order.push_back(i);
            }
        }
        &self.rows[&i]
    }
}

pub fn ocsvm_fit(train: &[Vec<f64>], nu: f64, kernel: Kernel) -> Result<OcsvmFit> {
    ocsvm_fit_with_tol(train, nu, kernel, 1e-3, 200_000)
}

/// Fit with explicit stopping tolerance on the gradient spread and an
/// iteration cap. The acceptance oracle comparison uses a tighter tolerance
/// than the 1e-3 default.
pub fn ocsvm_fit_with_tol(
    train: &[Vec<f64>],
    nu: f64,
    kernel: Kernel,
    tol: f64,
    max_iter: usize,
) -> Result<OcsvmFit> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidConfig(format!("nu must be in (0, 1], got {nu}")));
    }
    let n = train.len();
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "one-class SVM needs at least 2 training points, got {n}"
        )));
    }
    let dim = train[0].len();
    if train.iter().any(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: train.iter().find(|x| x.len() != dim).unwrap().len(),
        });
    }

    let c = 1.0 / (nu * n as f64);
    // Feasible start: fill the box from the front until the mass budget of 1
    // is spent, leaving one fractional coordinate.
    let mut alpha = vec![0.0; n];
    let mut remaining = 1.0f64;
    for a in alpha.iter_mut() {
        let take = remaining.min(c);
        *a = take;
        remaining -= take;
        if remaining <= 0.0 {
            break;
        }
    }

    let mut cache = RowCache::new(kernel, train);
    // Gradient G = Qα.
    let mut grad = vec![0.0; n];
    for i in 0..n {
        if alpha[i] > 0.0 {
            let ai = alpha[i];
            let row = cache.row(i);
            for (g, &q) in grad.iter_mut().zip(row) {
                *g += ai * q;
            }
        }
    }

    let bound_eps = c * 1e-12;
    let mut iterations = 0;
    let mut violation;
    loop {
        // Maximal violating pair: push mass from the highest gradient with
        // α > 0 toward the lowest gradient with α < C.
        let mut i_up: Option<usize> = None;
        let mut j_down: Option<usize> = None;
        for k in 0..n {
            if alpha[k] < c - bound_eps
                && i_up.map_or(true, |i| grad[k] < grad[i])
            {
                i_up = Some(k);
            }
            if alpha[k] > bound_eps && j_down.map_or(true, |j| grad[k] > grad[j]) {
                j_down = Some(k);
            }
        }
        let (Some(i), Some(j)) = (i_up, j_down) else {
            violation = 0.0;
            break;
        };
        violation = grad[j] - grad[i];
        if violation <= tol || iterations >= max_iter {
            break;
        }
        iterations += 1;

        let qii = cache.row(i)[i];
        let qjj = cache.row(j)[j];
        let qij = cache.row(i)[j];
        let eta = (qii + qjj - 2.0 * qij).max(1e-12);
        let t = (violation / eta).min(c - alpha[i]).min(alpha[j]);
        alpha[i] += t;
        alpha[j] -= t;
        let row_i = cache.row(i).to_vec();
        let row_j = cache.row(j);
        for ((g, &qi), &qj) in grad.iter_mut().zip(&row_i).zip(row_j) {
            *g += t * (qi - qj);
        }
    }

    let dual_objective = 0.5
        * alpha
            .iter()
            .zip(&grad)
            .map(|(a, g)| a * g)
            .sum::<f64>();

    // ρ: mean gradient over free support vectors; if none are free, the
    // midpoint of the active-bound gradients.
    let free: Vec<usize> = (0..n)
        .filter(|&k| alpha[k] > bound_eps && alpha[k] < c - bound_eps)
        .collect();
    let rho = if !free.is_empty() {
        free.iter().map(|&k| grad[k]).sum::<f64>() / free.len() as f64
    } else {
        let lo = (0..n)
            .filter(|&k| alpha[k] < c - bound_eps)
            .map(|k| grad[k])
            .fold(f64::INFINITY, f64::min);
        let hi = (0..n)
            .filter(|&k| alpha[k] > bound_eps)
            .map(|k| grad[k])
            .fold(f64::NEG_INFINITY, f64::max);
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    };

    let degenerate = train.iter().all(|x| x == &train[0]);

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    for k in 0..n {
        if alpha[k] > ALPHA_EPS {
            support_vectors.push(train[k].clone());
            alphas.push(alpha[k]);
        }
    }

    Ok(OcsvmFit {
        model: OcsvmModel {
            version: SNAPSHOT_VERSION,
            kernel,
            nu,
            rho,
            dim,
            support_vectors,
            alphas,
        },
        dual_objective,
        iterations,
        max_kkt_violation: violation.max(0.0),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian_cluster(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        // Box-Muller pairs from a seeded stream.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = move || {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        (0..n)
            .map(|_| (0..dim).map(|_| normal()).collect())
            .collect()
    }

    #[test]
    fn two_identical_points_split_mass_evenly() {
        let train = vec![vec![1.0, 2.0], vec![1.0, 2.0]];
        let fit = ocsvm_fit(&train, 1.0, Kernel::Rbf { gamma: 0.5 }).unwrap();
        assert_eq!(fit.model.alphas(), &[0.5, 0.5]);
        assert!(fit.degenerate);
        // Identical points sit exactly on the surface.
        let p = fit.model.predict(&[1.0, 2.0]).unwrap();
        assert!(p.score.abs() < 1e-12);
        assert_eq!(p.label, 1);
    }

    #[test]
    fn alphas_satisfy_box_and_simplex() {
        for seed in 0..10 {
            let train = gaussian_cluster(60, 3, seed);
            let nu = 0.3;
            let fit = ocsvm_fit(&train, nu, Kernel::Rbf { gamma: 0.5 }).unwrap();
            let c = 1.0 / (nu * train.len() as f64);
            let sum: f64 = fit.model.alphas().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");
            for &a in fit.model.alphas() {
                assert!(a >= 0.0 && a <= c + 1e-12);
            }
            assert!(fit.max_kkt_violation < 1e-3);
        }
    }

    #[test]
    fn free_support_vectors_sit_on_the_surface() {
        let train = gaussian_cluster(80, 2, 3);
        let nu = 0.25;
        let fit = ocsvm_fit(&train, nu, Kernel::Rbf { gamma: 0.5 }).unwrap();
        let c = 1.0 / (nu * train.len() as f64);
        let mut found = 0;
        for (sv, &a) in fit
            .model
            .support_vectors()
            .iter()
            .zip(fit.model.alphas())
        {
            if a > 1e-8 && a < c - 1e-8 {
                let score = fit.model.score(sv).unwrap();
                assert!(score.abs() < 1e-3, "free SV score {score}");
                found += 1;
            }
        }
        assert!(found > 0, "fixture produced no free support vectors");
    }

    #[test]
    fn centroid_is_inside_and_far_point_outside() {
        // The cluster must be tight relative to the kernel length scale:
        // when the spread rivals 1/sqrt(gamma) the fitted surface hugs the
        // points and the decision value at the center can touch zero.
        let mut train = gaussian_cluster(100, 2, 7);
        for x in &mut train {
            for v in x.iter_mut() {
                *v *= 0.2;
            }
        }
        let fit = ocsvm_fit(&train, 0.1, Kernel::Rbf { gamma: 0.5 }).unwrap();
        let mut centroid = vec![0.0; 2];
        for x in &train {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / train.len() as f64;
            }
        }
        assert_eq!(fit.model.predict(&centroid).unwrap().label, 1);

        let far = vec![100.0, 100.0];
        let p = fit.model.predict(&far).unwrap();
        assert_eq!(p.label, -1);
        // RBF terms vanish at distance, leaving exactly -rho.
        assert!((p.score + fit.model.rho).abs() < 1e-12);
        assert!(fit.model.rho > 0.0);
    }

    #[test]
    fn nu_one_puts_every_point_at_bound() {
        let train = gaussian_cluster(40, 2, 9);
        let fit = ocsvm_fit(&train, 1.0, Kernel::Rbf { gamma: 1.0 }).unwrap();
        // C = 1/n and the simplex forces alpha_i = 1/n for all i.
        assert_eq!(fit.model.alphas().len(), train.len());
        for &a in fit.model.alphas() {
            assert!((a - 1.0 / train.len() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn prediction_dimension_checked() {
        let train = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.5, 0.0]];
        let fit = ocsvm_fit(&train, 0.5, Kernel::Linear).unwrap();
        assert!(matches!(
            fit.model.predict(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn invalid_nu_rejected() {
        let train = vec![vec![0.0], vec![1.0]];
        assert!(ocsvm_fit(&train, 0.0, Kernel::Linear).is_err());
        assert!(ocsvm_fit(&train, 1.5, Kernel::Linear).is_err());
        assert!(ocsvm_fit(&[vec![0.0]], 0.5, Kernel::Linear).is_err());
    }

    #[test]
    fn rbf_kernel_basics() {
        let k = Kernel::Rbf { gamma: 0.7 };
        let x = vec![1.0, -2.0, 3.0];
        assert_eq!(k.eval(&x, &x), 1.0);
        let y = vec![0.0, 0.0, 0.0];
        assert_eq!(k.eval(&x, &y), k.eval(&y, &x));
        assert!(k.eval(&x, &y) < 1.0);
    }

    #[test]
    fn training_order_does_not_change_predictions() {
        let train = gaussian_cluster(50, 2, 21);
        let mut reversed = train.clone();
        reversed.reverse();
        let kernel = Kernel::Rbf { gamma: 0.5 };
        let f1 = ocsvm_fit_with_tol(&train, 0.2, kernel, 1e-8, 2_000_000).unwrap();
        let f2 = ocsvm_fit_with_tol(&reversed, 0.2, kernel, 1e-8, 2_000_000).unwrap();
        let test = gaussian_cluster(30, 2, 22);
        for x in &test {
            assert_eq!(
                f1.model.predict(x).unwrap().label,
                f2.model.predict(x).unwrap().label
            );
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let train = gaussian_cluster(30, 3, 5);
        let fit = ocsvm_fit(&train, 0.2, Kernel::Rbf { gamma: 0.33 }).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        fit.model.save(f.path()).unwrap();
        let loaded = OcsvmModel::load(f.path()).unwrap();
        assert_eq!(loaded.rho, fit.model.rho);
        assert_eq!(loaded.alphas(), fit.model.alphas());
        let x = vec![0.1, -0.2, 0.3];
        assert_eq!(
            loaded.score(&x).unwrap(),
            fit.model.score(&x).unwrap()
        );
    }

    #[test]
    fn snapshot_version_checked() {
        let train = vec![vec![0.0], vec![1.0], vec![2.0]];
        let fit = ocsvm_fit(&train, 0.5, Kernel::Linear).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        fit.model.save(f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        let bumped = text.replace("\"version\": 1", "\"version\": 9");
        std::fs::write(f.path(), bumped).unwrap();
        assert!(matches!(
            OcsvmModel::load(f.path()),
            Err(Error::SnapshotVersion { expected: 1, found: 9 })
        ));
    }
}
