//! Experiment harness: subnetwork extraction, repeated stratified
//! evaluation, detection metrics, parameter sweeps, and benchmark/synthetic
//! data generators (submodules).
//!
//! The protocol mirrors the intended field use: around each batch of
//! labeled phishing nodes plus an equal random draw of unlabeled "central"
//! nodes, the first-order neighborhood subnetwork is extracted and
//! embedded once; the central nodes are then split 80/20 many times, a
//! detector is fitted on the training targets, and precision/recall/F are
//! averaged over every subnetwork × repeat run. All randomness derives
//! from the plan's master seed, and the random central draws and splits
//! are shared across strategies (common random numbers), so two plans
//! differing only in strategy are evaluated on identical node sets.

pub mod bench;
pub mod synth;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detector::{
    baseline_fit_predict, ocsvm_fit, BaselineKind, BaselineOptions, Kernel,
};
use crate::error::{Error, Result};
use crate::featext::{self, FeatureMode};
use crate::seeds::{self, tag};
use crate::skipgram::{train, EmbedConfig};
use crate::txgraph::{LabelSet, NodeId, TxGraph, TxRecord};
use crate::walker::{generate_corpus, WalkConfig};

/// Central-node selection for one extracted subnetwork.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubnetworkSpec {
    /// Labeled phishing centrals, by address, in parent-graph id order.
    pub phishing_centrals: Vec<String>,
    /// Equal-count random unlabeled centrals, by address, in parent-graph
    /// id order.
    pub random_centrals: Vec<String>,
    pub seed: u64,
}

impl SubnetworkSpec {
    pub fn central_addresses(&self) -> impl Iterator<Item = &str> {
        self.phishing_centrals
            .iter()
            .chain(self.random_centrals.iter())
            .map(String::as_str)
    }
}

/// Which representation feeds the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    /// Random-walk embeddings per the plan's walk/embed configs.
    #[default]
    Embedding,
    /// The 8-dimensional hand-crafted transaction features.
    HandFeatures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    #[default]
    Ocsvm,
    Logreg,
    Gnb,
    Iforest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
    pub nu: f64,
    /// RBF width; defaults to 1/dimension when unset.
    pub gamma: Option<f64>,
    /// Isolation-forest positive fraction.
    pub contamination: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            kind: DetectorKind::Ocsvm,
            nu: 0.1,
            gamma: None,
            contamination: 0.5,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "nu must be in (0, 1], got {}",
                self.nu
            )));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "gamma must be positive, got {g}"
                )));
            }
        }
        if !(self.contamination > 0.0 && self.contamination <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "contamination must be in (0, 1], got {}",
                self.contamination
            )));
        }
        Ok(())
    }
}

/// Full experiment description. The seeds inside `walk` and `embed` are
/// ignored here: every stage seed is derived from `master_seed` so one
/// number reproduces the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentPlan {
    pub subnetworks: usize,
    pub repeats: usize,
    pub train_fraction: f64,
    pub representation: Representation,
    pub walk: WalkConfig,
    pub embed: EmbedConfig,
    pub detector: DetectorConfig,
    pub master_seed: u64,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            subnetworks: 50,
            repeats: 100,
            train_fraction: 0.8,
            representation: Representation::Embedding,
            walk: WalkConfig::default(),
            embed: EmbedConfig::default(),
            detector: DetectorConfig::default(),
            master_seed: 1,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.subnetworks < 1 || self.repeats < 1 {
            return Err(Error::InvalidConfig(
                "subnetworks and repeats must be at least 1".into(),
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        self.walk.validate()?;
        self.embed.validate()?;
        self.detector.validate()
    }
}

/// Detection quality of one train/test repeat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub subnetwork: usize,
    pub repeat: usize,
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub runs: usize,
    pub precision_mean: f64,
    pub precision_std: f64,
    pub recall_mean: f64,
    pub recall_std: f64,
    pub fscore_mean: f64,
    pub fscore_std: f64,
}

/// Full experiment output: config echo, per-run rows, aggregates. Contains
/// no timing or host information, so identical inputs produce identical
/// serialized reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub plan: ExperimentPlan,
    pub summary: ReportSummary,
    pub runs: Vec<RunMetrics>,
}

/// Precision/recall/F with the zero-denominator conventions: an undefined
/// ratio is reported as 0 and flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
    /// No positive predictions: precision denominator was zero.
    pub no_positive_predictions: bool,
    /// No positive ground truth: recall denominator was zero.
    pub no_positive_truth: bool,
}

/// Positive class = phishing (+1). Prediction and truth must cover exactly
/// the same ids.
pub fn compute_metrics(predictions: &[(NodeId, i8)], truth: &[(NodeId, i8)]) -> Result<Metrics> {
    if predictions.len() != truth.len() {
        return Err(Error::IdMismatch(format!(
            "{} predictions vs {} truths",
            predictions.len(),
            truth.len()
        )));
    }
    let mut truth_map: BTreeMap<NodeId, i8> = BTreeMap::new();
    for &(id, label) in truth {
        if truth_map.insert(id, label).is_some() {
            return Err(Error::IdMismatch(format!("duplicate truth id {id}")));
        }
    }
    let mut seen: BTreeSet<NodeId> = BTreeSet::new();
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for &(id, pred) in predictions {
        let Some(&actual) = truth_map.get(&id) else {
            return Err(Error::IdMismatch(format!("prediction for unknown id {id}")));
        };
        if !seen.insert(id) {
            return Err(Error::IdMismatch(format!("duplicate prediction id {id}")));
        }
        match (pred > 0, actual > 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }

    let no_positive_predictions = tp + fp == 0;
    let no_positive_truth = tp + fn_ == 0;
    let precision = if no_positive_predictions {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if no_positive_truth {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let fscore = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Metrics {
        precision,
        recall,
        fscore,
        no_positive_predictions,
        no_positive_truth,
    })
}

/// Extract the evaluation subnetwork around all labeled phishing nodes
/// plus an equal-count uniform draw of unlabeled nodes: centrals, their
/// first-order neighbors, and every parent edge among that node set.
/// Timestamp ranks are recomputed within the subnetwork.
pub fn extract_subnetwork(
    graph: &TxGraph,
    labels: &LabelSet,
    seed: u64,
) -> Result<(SubnetworkSpec, TxGraph)> {
    let join = labels.join(graph);
    if join.known.is_empty() {
        return Err(Error::InvalidConfig(
            "no labeled phishing node is present in the graph".into(),
        ));
    }
    let phishing: HashSet<NodeId> = join.known.iter().copied().collect();
    let pool: Vec<NodeId> = (0..graph.node_count() as NodeId)
        .filter(|id| !phishing.contains(id))
        .collect();
    if pool.len() < join.known.len() {
        return Err(Error::InsufficientUnlabeled {
            needed: join.known.len(),
            available: pool.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<NodeId> = rand::seq::index::sample(&mut rng, pool.len(), join.known.len())
        .into_iter()
        .map(|i| pool[i])
        .collect();
    chosen.sort_unstable();

    let mut centrals: HashSet<NodeId> = phishing.clone();
    centrals.extend(chosen.iter().copied());
    let mut induced: BTreeSet<NodeId> = centrals.iter().copied().collect();
    for e in graph.edges() {
        if centrals.contains(&e.from) {
            induced.insert(e.to);
        }
        if centrals.contains(&e.to) {
            induced.insert(e.from);
        }
    }

    let records: Vec<TxRecord> = graph
        .edges()
        .iter()
        .filter(|e| induced.contains(&e.from) && induced.contains(&e.to))
        .map(|e| {
            TxRecord::new(
                graph.address(e.from),
                graph.address(e.to),
                e.amount,
                e.timestamp,
            )
        })
        .collect();
    let names: Vec<String> = induced
        .iter()
        .map(|&id| graph.address(id).to_string())
        .collect();
    let subgraph = TxGraph::build(&records, graph.direction(), Some(&names))?;

    let spec = SubnetworkSpec {
        phishing_centrals: join
            .known
            .iter()
            .map(|&id| graph.address(id).to_string())
            .collect(),
        random_centrals: chosen
            .iter()
            .map(|&id| graph.address(id).to_string())
            .collect(),
        seed,
    };
    Ok((spec, subgraph))
}

/// Shuffled stratified split of `n` indices: `round(fraction * n)` train,
/// clamped so both sides are non-empty.
fn split_indices(
    n: usize,
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let k = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let test = order.split_off(k);
    (order, test)
}

/// Run the full protocol and aggregate precision/recall/F over every
/// subnetwork × repeat.
pub fn run_experiment(
    graph: &TxGraph,
    labels: &LabelSet,
    plan: &ExperimentPlan,
) -> Result<DetectionReport> {
    plan.validate()?;
    let mut runs: Vec<RunMetrics> = Vec::with_capacity(plan.subnetworks * plan.repeats);

    for s in 0..plan.subnetworks {
        let subnet_seed = seeds::derive(plan.master_seed, &[tag::SUBNET, s as u64]);
        let (spec, subgraph) = extract_subnetwork(graph, labels, subnet_seed)?;
        let n_ph = spec.phishing_centrals.len();
        let n_rand = spec.random_centrals.len();
        if n_ph < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 labeled phishing centrals to split, got {n_ph}"
            )));
        }

        let rows = central_rows(&spec, &subgraph, plan, s)?;
        let rows = featext::standardize(&rows);
        let dim = rows[0].len();
        let ids: Vec<NodeId> = spec
            .central_addresses()
            .map(|a| {
                subgraph
                    .node_id(a)
                    .ok_or_else(|| Error::UnknownAddress(a.to_string()))
            })
            .collect::<Result<_>>()?;

        for rep in 0..plan.repeats {
            let mut split_rng = ChaCha8Rng::seed_from_u64(seeds::derive(
                plan.master_seed,
                &[tag::SPLIT, s as u64, rep as u64],
            ));
            let (ph_train, ph_test) = split_indices(n_ph, plan.train_fraction, &mut split_rng);
            let (rd_train, rd_test) = split_indices(n_rand, plan.train_fraction, &mut split_rng);

            let test_idx: Vec<usize> = ph_test
                .iter()
                .copied()
                .chain(rd_test.iter().map(|&i| n_ph + i))
                .collect();
            let test_rows: Vec<Vec<f64>> = test_idx.iter().map(|&i| rows[i].clone()).collect();

            let pred_labels: Vec<i8> = match plan.detector.kind {
                DetectorKind::Ocsvm => {
                    let train_rows: Vec<Vec<f64>> =
                        ph_train.iter().map(|&i| rows[i].clone()).collect();
                    let gamma = plan.detector.gamma.unwrap_or(1.0 / dim as f64);
                    let fit = ocsvm_fit(&train_rows, plan.detector.nu, Kernel::Rbf { gamma })?;
                    test_rows
                        .iter()
                        .map(|x| fit.model.predict(x).map(|p| p.label))
                        .collect::<Result<_>>()?
                }
                kind => {
                    let train_rows: Vec<Vec<f64>> = ph_train
                        .iter()
                        .copied()
                        .chain(rd_train.iter().map(|&i| n_ph + i))
                        .map(|i| rows[i].clone())
                        .collect();
                    let train_labels: Vec<i8> = std::iter::repeat(1i8)
                        .take(ph_train.len())
                        .chain(std::iter::repeat(-1i8).take(rd_train.len()))
                        .collect();
                    let which = match kind {
                        DetectorKind::Logreg => BaselineKind::Logreg,
                        DetectorKind::Gnb => BaselineKind::Gnb,
                        DetectorKind::Iforest => BaselineKind::Iforest,
                        DetectorKind::Ocsvm => unreachable!(),
                    };
                    let opts = BaselineOptions {
                        seed: seeds::derive(plan.master_seed, &[tag::DETECT, s as u64, rep as u64]),
                        contamination: plan.detector.contamination,
                    };
                    baseline_fit_predict(&train_rows, &train_labels, &test_rows, which, opts)?
                        .into_iter()
                        .map(|p| p.label)
                        .collect()
                }
            };

            let predictions: Vec<(NodeId, i8)> = test_idx
                .iter()
                .zip(&pred_labels)
                .map(|(&i, &l)| (ids[i], l))
                .collect();
            let truth: Vec<(NodeId, i8)> = test_idx
                .iter()
                .map(|&i| (ids[i], if i < n_ph { 1 } else { -1 }))
                .collect();
            let m = compute_metrics(&predictions, &truth)?;
            runs.push(RunMetrics {
                subnetwork: s,
                repeat: rep,
                precision: m.precision,
                recall: m.recall,
                fscore: m.fscore,
            });
        }
    }

    let summary = summarize(&runs);
    Ok(DetectionReport {
        plan: plan.clone(),
        summary,
        runs,
    })
}

/// Representation rows for the centrals, phishing first then random, in
/// spec order.
fn central_rows(
    spec: &SubnetworkSpec,
    subgraph: &TxGraph,
    plan: &ExperimentPlan,
    subnet_index: usize,
) -> Result<Vec<Vec<f64>>> {
    match plan.representation {
        Representation::Embedding => {
            let mut wcfg = plan.walk;
            wcfg.seed = seeds::derive(plan.master_seed, &[tag::WALK, subnet_index as u64]);
            let corpus = generate_corpus(subgraph, &wcfg)?;
            let mut ecfg = plan.embed;
            ecfg.seed = seeds::derive(plan.master_seed, &[tag::EMBED, subnet_index as u64]);
            let trained = train(subgraph, &corpus, &ecfg)?;
            spec.central_addresses()
                .map(|a| {
                    trained
                        .embeddings
                        .by_address(a)
                        .map(<[f64]>::to_vec)
                        .ok_or_else(|| Error::UnknownAddress(a.to_string()))
                })
                .collect()
        }
        Representation::HandFeatures => {
            let records: Vec<TxRecord> = subgraph
                .edges()
                .iter()
                .map(|e| {
                    TxRecord::new(
                        subgraph.address(e.from),
                        subgraph.address(e.to),
                        e.amount,
                        e.timestamp,
                    )
                })
                .collect();
            spec.central_addresses()
                .map(|a| {
                    featext::extract_features(&records, a).map(|f| f.vector(FeatureMode::Both))
                })
                .collect()
        }
    }
}

fn summarize(runs: &[RunMetrics]) -> ReportSummary {
    let n = runs.len() as f64;
    let mean_std = |get: fn(&RunMetrics) -> f64| -> (f64, f64) {
        let mean = runs.iter().map(get).sum::<f64>() / n;
        let var = runs.iter().map(|r| (get(r) - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let (precision_mean, precision_std) = mean_std(|r| r.precision);
    let (recall_mean, recall_std) = mean_std(|r| r.recall);
    let (fscore_mean, fscore_std) = mean_std(|r| r.fscore);
    ReportSummary {
        runs: runs.len(),
        precision_mean,
        precision_std,
        recall_mean,
        recall_std,
        fscore_mean,
        fscore_std,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Alpha,
    Dimension,
    Window,
    WalkLength,
    WalksPerNode,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 5] = [
        SweepParameter::Alpha,
        SweepParameter::Dimension,
        SweepParameter::Window,
        SweepParameter::WalkLength,
        SweepParameter::WalksPerNode,
    ];

    /// Short token used in sweep tables and on the command line.
    pub fn token(self) -> &'static str {
        match self {
            SweepParameter::Alpha => "alpha",
            SweepParameter::Dimension => "d",
            SweepParameter::Window => "k",
            SweepParameter::WalkLength => "l",
            SweepParameter::WalksPerNode => "r",
        }
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParameter::ALL
            .into_iter()
            .find(|p| p.token() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown sweep parameter {s:?} (expected alpha, d, k, l, or r)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub precision_mean: f64,
    pub recall_mean: f64,
    pub fscore_mean: f64,
    pub fscore_std: f64,
}

fn positive_integer(parameter: SweepParameter, value: f64) -> Result<usize> {
    if value < 1.0 || value.fract() != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "sweep parameter {} requires a positive integer, got {value}",
            parameter.token()
        )));
    }
    Ok(value as usize)
}

/// One `run_experiment` per value with everything else fixed by the plan.
pub fn sweep(
    graph: &TxGraph,
    labels: &LabelSet,
    plan: &ExperimentPlan,
    parameter: SweepParameter,
    values: &[f64],
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one value".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut p = plan.clone();
        match parameter {
            SweepParameter::Alpha => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::InvalidConfig(format!(
                        "alpha must be in [0, 1], got {value}"
                    )));
                }
                p.walk.alpha = value;
            }
            SweepParameter::Dimension => p.embed.dimension = positive_integer(parameter, value)?,
            SweepParameter::Window => p.embed.window = positive_integer(parameter, value)?,
            SweepParameter::WalkLength => p.walk.walk_length = positive_integer(parameter, value)?,
            SweepParameter::WalksPerNode => {
                p.walk.walks_per_node = positive_integer(parameter, value)?
            }
        }
        let report = run_experiment(graph, labels, &p)?;
        rows.push(SweepRow {
            parameter: parameter.token().to_string(),
            value,
            precision_mean: report.summary.precision_mean,
            recall_mean: report.summary.recall_mean,
            fscore_mean: report.summary.fscore_mean,
            fscore_std: report.summary.fscore_std,
        });
    }
    Ok(rows)
}

/// `parameter,value,precision_mean,recall_mean,fscore_mean,fscore_std` CSV.
pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("parameter,value,precision_mean,recall_mean,fscore_mean,fscore_std\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.parameter, r.value, r.precision_mean, r.recall_mean, r.fscore_mean, r.fscore_std
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Machine-readable report (pretty JSON, newline-terminated).
pub fn save_report_json(report: &DetectionReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut body = serde_json::to_string_pretty(report)
        .map_err(|e| Error::SnapshotFormat(e.to_string()))?;
    body.push('\n');
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Per-run CSV table: `subnetwork,repeat,precision,recall,fscore`.
pub fn save_runs_csv(report: &DetectionReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("subnetwork,repeat,precision,recall,fscore\n");
    for r in &report.runs {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.subnetwork, r.repeat, r.precision, r.recall, r.fscore
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Human-readable summary with the full config echoed.
pub fn render_summary(report: &DetectionReport) -> String {
    let s = &report.summary;
    let plan_echo = serde_json::to_string_pretty(&report.plan)
        .unwrap_or_else(|e| format!("<plan serialization failed: {e}>"));
    format!(
        "runs: {} ({} subnetworks x {} repeats)\n\
         precision: mean {:.4} std {:.4}\n\
         recall:    mean {:.4} std {:.4}\n\
         f-score:   mean {:.4} std {:.4}\n\
         plan:\n{}\n",
        s.runs,
        report.plan.subnetworks,
        report.plan.repeats,
        s.precision_mean,
        s.precision_std,
        s.recall_mean,
        s.recall_std,
        s.fscore_mean,
        s.fscore_std,
        plan_echo
    )
}
