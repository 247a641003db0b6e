//! Biased random walks over the transaction graph.
//!
//! Transition probabilities come from two per-neighborhood biases: the
//! amount bias `PA` (normalized total transferred amount) and the time bias
//! `PT` (normalized global time rank of the latest transaction). A parameter
//! `alpha` blends them through the unnormalized weight
//! `PA^alpha * PT^(1-alpha)`, renormalized per neighborhood. All transition
//! distributions are precomputed into alias tables so each walk step costs
//! O(1) regardless of node degree.
//!
//! Five strategies share the machinery: the blended walk, its amount-only
//! and time-only extremes, uniform walks, and second-order p/q-biased walks
//! over the unweighted topology.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alias::AliasTable;
use crate::error::{Error, Result};
use crate::seeds::{self, tag};
use crate::txgraph::{NodeId, TxGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Trans2vec,
    AmountOnly,
    TimeOnly,
    Deepwalk,
    Node2vec,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Trans2vec,
        Strategy::AmountOnly,
        Strategy::TimeOnly,
        Strategy::Deepwalk,
        Strategy::Node2vec,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Trans2vec => "trans2vec",
            Strategy::AmountOnly => "amount_only",
            Strategy::TimeOnly => "time_only",
            Strategy::Deepwalk => "deepwalk",
            Strategy::Node2vec => "node2vec",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Strategy> {
        match s {
            "trans2vec" => Ok(Strategy::Trans2vec),
            "amount_only" => Ok(Strategy::AmountOnly),
            "time_only" => Ok(Strategy::TimeOnly),
            "deepwalk" => Ok(Strategy::Deepwalk),
            "node2vec" => Ok(Strategy::Node2vec),
            other => Err(Error::InvalidConfig(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkConfig {
    pub strategy: Strategy,
    /// Blend exponent: 1 = pure amount bias, 0 = pure time bias.
    pub alpha: f64,
    /// Return parameter for the second-order strategy.
    pub p: f64,
    /// In-out parameter for the second-order strategy.
    pub q: f64,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            strategy: Strategy::Trans2vec,
            alpha: 0.5,
            p: 0.25,
            q: 0.75,
            walks_per_node: 20,
            walk_length: 5,
            seed: 1,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.p > 0.0) || !(self.q > 0.0) {
            return Err(Error::InvalidConfig("p and q must be positive".into()));
        }
        if self.walks_per_node == 0 {
            return Err(Error::InvalidConfig("walks_per_node must be >= 1".into()));
        }
        Ok(())
    }
}

/// Normalize non-negative weights into a probability vector.
///
/// All-equal inputs (including all-zero, the amount-bias fallback) map to
/// the exact uniform vector so that degenerate biases reduce bit-for-bit to
/// the uniform strategy.
fn normalize(weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    debug_assert!(n > 0);
    let first = weights[0];
    if weights.iter().all(|&w| w == first) {
        return vec![1.0 / n as f64; n];
    }
    let sum: f64 = weights.iter().sum();
    if !(sum > 0.0) {
        return vec![1.0 / n as f64; n];
    }
    weights.iter().map(|w| w / sum).collect()
}

/// Amount bias `PA`: per-neighborhood normalized total amounts. `None` for
/// dead ends. All-zero amounts fall back to uniform.
pub fn amount_probs(graph: &TxGraph, u: NodeId) -> Option<Vec<f64>> {
    let adj = graph.adjacency(u);
    if adj.is_empty() {
        return None;
    }
    let weights: Vec<f64> = adj.iter().map(|n| n.amount).collect();
    Some(normalize(&weights))
}

/// Time bias `PT`: per-neighborhood normalized time ranks. Neighbors whose
/// underlying timestamps are tied share the mean rank of their tie group, so
/// an all-tied neighborhood is exactly uniform.
pub fn time_probs(graph: &TxGraph, u: NodeId) -> Option<Vec<f64>> {
    let adj = graph.adjacency(u);
    if adj.is_empty() {
        return None;
    }
    let mut groups: HashMap<u64, (f64, u32)> = HashMap::new();
    for n in adj {
        let e = groups.entry(n.timestamp).or_insert((0.0, 0));
        e.0 += n.time_rank as f64;
        e.1 += 1;
    }
    let weights: Vec<f64> = adj
        .iter()
        .map(|n| {
            let (sum, count) = groups[&n.timestamp];
            sum / count as f64
        })
        .collect();
    Some(normalize(&weights))
}

/// Blend of the two biases: unnormalized `PA^alpha * PT^(1-alpha)`,
/// renormalized. The extremes are returned through the pure bias paths so
/// they are bitwise identical to `amount_probs` / `time_probs`.
pub fn blended_probs(graph: &TxGraph, u: NodeId, alpha: f64) -> Option<Vec<f64>> {
    if alpha == 1.0 {
        return amount_probs(graph, u);
    }
    if alpha == 0.0 {
        return time_probs(graph, u);
    }
    let pa = amount_probs(graph, u)?;
    let pt = time_probs(graph, u)?;
    let weights: Vec<f64> = pa
        .iter()
        .zip(&pt)
        .map(|(&a, &t)| {
            if a > 0.0 && t > 0.0 && a < 1e-12 && t < 1e-12 {
                // log-space to dodge underflow in the product
                (alpha * a.ln() + (1.0 - alpha) * t.ln()).exp()
            } else {
                a.powf(alpha) * t.powf(1.0 - alpha)
            }
        })
        .collect();
    Some(normalize(&weights))
}

struct FirstOrder {
    probs: Vec<f64>,
    alias: AliasTable,
}

struct SecondOrder {
    probs: Vec<f64>,
    alias: AliasTable,
}

/// Precomputed transition distributions with alias structures.
pub struct TransitionTable {
    strategy: Strategy,
    first: Vec<Option<FirstOrder>>,
    /// Second-order distributions keyed by (previous, current); built only
    /// for the second-order strategy.
    second: HashMap<(NodeId, NodeId), SecondOrder>,
    graph_fingerprint: u64,
}

impl TransitionTable {
    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn graph_fingerprint(&self) -> u64 {
        self.graph_fingerprint
    }

    /// First-order transition vector of `u`, aligned with `graph.adjacency(u)`.
    pub fn probabilities(&self, u: NodeId) -> Option<&[f64]> {
        self.first[u as usize].as_ref().map(|f| f.probs.as_slice())
    }

    pub fn alias_table(&self, u: NodeId) -> Option<&AliasTable> {
        self.first[u as usize].as_ref().map(|f| &f.alias)
    }

    /// Second-order transition vector for a walk at `curr` that arrived from
    /// `prev`, aligned with `graph.adjacency(curr)`.
    pub fn second_order_probabilities(&self, prev: NodeId, curr: NodeId) -> Option<&[f64]> {
        self.second.get(&(prev, curr)).map(|s| s.probs.as_slice())
    }
}

/// Precompute per-node (and for the second-order strategy, per-edge)
/// transition distributions and their alias tables.
pub fn precompute_transitions(graph: &TxGraph, cfg: &WalkConfig) -> Result<TransitionTable> {
    cfg.validate()?;
    let n = graph.node_count();

    let first: Vec<Option<FirstOrder>> = (0..n as NodeId)
        .map(|u| {
            let probs = match cfg.strategy {
                Strategy::Trans2vec => blended_probs(graph, u, cfg.alpha),
                Strategy::AmountOnly => amount_probs(graph, u),
                Strategy::TimeOnly => time_probs(graph, u),
                Strategy::Deepwalk | Strategy::Node2vec => {
                    let k = graph.adjacency(u).len();
                    (k > 0).then(|| normalize(&vec![1.0; k]))
                }
            };
            probs.map(|p| FirstOrder {
                alias: AliasTable::new(&p),
                probs: p,
            })
        })
        .collect();

    let mut second = HashMap::new();
    if cfg.strategy == Strategy::Node2vec {
        for prev in 0..n as NodeId {
            for step in graph.adjacency(prev) {
                let curr = step.node;
                let adj = graph.adjacency(curr);
                if adj.is_empty() {
                    continue;
                }
                let weights: Vec<f64> = adj
                    .iter()
                    .map(|x| {
                        if x.node == prev {
                            1.0 / cfg.p
                        } else if graph
                            .adjacency(prev)
                            .binary_search_by_key(&x.node, |e| e.node)
                            .is_ok()
                        {
                            1.0
                        } else {
                            1.0 / cfg.q
                        }
                    })
                    .collect();
                let probs = normalize(&weights);
                second.insert(
                    (prev, curr),
                    SecondOrder {
                        alias: AliasTable::new(&probs),
                        probs,
                    },
                );
            }
        }
    }

    Ok(TransitionTable {
        strategy: cfg.strategy,
        first,
        second,
        graph_fingerprint: graph.fingerprint(),
    })
}

/// One truncated walk: starts at `u`, takes up to `length` alias-sampled
/// steps, stops early at dead ends.
pub fn walk<R: Rng + ?Sized>(
    graph: &TxGraph,
    table: &TransitionTable,
    u: NodeId,
    length: usize,
    rng: &mut R,
) -> Vec<NodeId> {
    let mut seq = Vec::with_capacity(length + 1);
    seq.push(u);
    let mut prev: Option<NodeId> = None;
    for _ in 0..length {
        let curr = *seq.last().unwrap();
        let choice = match (table.strategy, prev) {
            (Strategy::Node2vec, Some(p)) => table
                .second
                .get(&(p, curr))
                .map(|s| s.alias.sample(rng)),
            _ => table.first[curr as usize].as_ref().map(|f| f.alias.sample(rng)),
        };
        let Some(idx) = choice else { break };
        let next = graph.adjacency(curr)[idx].node;
        prev = Some(curr);
        seq.push(next);
    }
    seq
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<NodeId>>,
    pub config: WalkConfig,
    pub graph_fingerprint: u64,
}

/// Generate `walks_per_node` walks from every node. Node visitation order
/// within each pass is a seeded shuffle, and every (pass, source) pair gets
/// its own derived RNG stream, so output is identical whether walks are
/// generated sequentially or in parallel.
pub fn generate_corpus(graph: &TxGraph, cfg: &WalkConfig) -> Result<WalkCorpus> {
    let table = precompute_transitions(graph, cfg)?;
    Ok(generate_corpus_with_table(graph, &table, cfg))
}

pub fn generate_corpus_with_table(
    graph: &TxGraph,
    table: &TransitionTable,
    cfg: &WalkConfig,
) -> WalkCorpus {
    let n = graph.node_count();
    let mut walks = Vec::with_capacity(cfg.walks_per_node * n);
    for pass in 0..cfg.walks_per_node {
        let mut order: Vec<NodeId> = (0..n as NodeId).collect();
        let mut shuffle_rng =
            ChaCha8Rng::seed_from_u64(seeds::derive(cfg.seed, &[tag::SHUFFLE, pass as u64]));
        order.shuffle(&mut shuffle_rng);
        let batch: Vec<Vec<NodeId>> = order
            .par_iter()
            .map(|&u| {
                let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(
                    cfg.seed,
                    &[tag::WALK, pass as u64, u as u64],
                ));
                walk(graph, table, u, cfg.walk_length, &mut rng)
            })
            .collect();
        walks.extend(batch);
    }
    WalkCorpus {
        walks,
        config: *cfg,
        graph_fingerprint: table.graph_fingerprint,
    }
}

/// Corpus file: `#` header comments carrying the config and graph
/// fingerprint, then one walk per line as space-separated addresses.
pub fn save_corpus(corpus: &WalkCorpus, graph: &TxGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let c = &corpus.config;
    writeln!(out, "# corpus v1").map_err(|e| Error::io(path, e))?;
    writeln!(
        out,
        "# strategy={} alpha={} p={} q={} walks_per_node={} walk_length={} seed={}",
        c.strategy, c.alpha, c.p, c.q, c.walks_per_node, c.walk_length, c.seed
    )
    .map_err(|e| Error::io(path, e))?;
    writeln!(out, "# graph={:#018x}", corpus.graph_fingerprint).map_err(|e| Error::io(path, e))?;
    for w in &corpus.walks {
        let line: Vec<&str> = w.iter().map(|&u| graph.address(u)).collect();
        writeln!(out, "{}", line.join(" ")).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn load_corpus(path: impl AsRef<Path>, graph: &TxGraph) -> Result<WalkCorpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut walks = Vec::new();
    let mut config = WalkConfig::default();
    let mut fingerprint: Option<u64> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            for kv in rest.split_whitespace() {
                let Some((k, v)) = kv.split_once('=') else { continue };
                let bad = |what: &str| Error::CorpusFormat {
                    line: lineno,
                    msg: format!("bad {what} value `{v}`"),
                };
                match k {
                    "strategy" => config.strategy = v.parse()?,
                    "alpha" => config.alpha = v.parse().map_err(|_| bad("alpha"))?,
                    "p" => config.p = v.parse().map_err(|_| bad("p"))?,
                    "q" => config.q = v.parse().map_err(|_| bad("q"))?,
                    "walks_per_node" => {
                        config.walks_per_node = v.parse().map_err(|_| bad("walks_per_node"))?
                    }
                    "walk_length" => {
                        config.walk_length = v.parse().map_err(|_| bad("walk_length"))?
                    }
                    "seed" => config.seed = v.parse().map_err(|_| bad("seed"))?,
                    "graph" => {
                        let hex = v.trim_start_matches("0x");
                        fingerprint =
                            Some(u64::from_str_radix(hex, 16).map_err(|_| bad("graph"))?);
                    }
                    _ => {}
                }
            }
            continue;
        }
        let mut w = Vec::new();
        for token in line.split_whitespace() {
            let id = graph
                .node_id(token)
                .ok_or_else(|| Error::CorpusFormat {
                    line: lineno,
                    msg: format!("address `{token}` not present in graph"),
                })?;
            w.push(id);
        }
        walks.push(w);
    }
    let expected = graph.fingerprint();
    if let Some(found) = fingerprint {
        if found != expected {
            return Err(Error::GraphMismatch { expected, found });
        }
    }
    Ok(WalkCorpus {
        walks,
        config,
        graph_fingerprint: expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txgraph::{aggregate, DirectionMode, TxRecord};

    fn graph(records: &[(&str, &str, f64, u64)], mode: DirectionMode) -> TxGraph {
        let recs: Vec<TxRecord> = records
            .iter()
            .map(|&(f, t, a, ts)| TxRecord::new(f, t, a, ts))
            .collect();
        aggregate(&recs, mode).unwrap()
    }

    fn sum_one(probs: &[f64]) {
        let s: f64 = probs.iter().sum();
        assert!((s - 1.0).abs() < 1e-12, "sum {s}");
    }

    #[test]
    fn amount_probs_normalizes_amounts() {
        let g = graph(
            &[("u", "x1", 2.0, 10), ("u", "x2", 3.0, 20), ("u", "x3", 5.0, 30)],
            DirectionMode::DirectedOut,
        );
        let u = g.node_id("u").unwrap();
        let pa = amount_probs(&g, u).unwrap();
        assert_eq!(pa, vec![0.2, 0.3, 0.5]);
    }

    #[test]
    fn amount_probs_single_neighbor_is_one() {
        let g = graph(&[("u", "x", 42.0, 1)], DirectionMode::DirectedOut);
        let u = g.node_id("u").unwrap();
        assert_eq!(amount_probs(&g, u).unwrap(), vec![1.0]);
    }

    #[test]
    fn amount_probs_all_zero_falls_back_to_uniform() {
        let g = graph(
            &[("u", "x1", 0.0, 10), ("u", "x2", 0.0, 20), ("u", "x3", 0.0, 30), ("u", "x4", 0.0, 40)],
            DirectionMode::DirectedOut,
        );
        let u = g.node_id("u").unwrap();
        assert_eq!(amount_probs(&g, u).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn amount_probs_dead_end_is_none() {
        let g = graph(&[("u", "x", 1.0, 1)], DirectionMode::DirectedOut);
        let x = g.node_id("x").unwrap();
        assert!(amount_probs(&g, x).is_none());
    }

    #[test]
    fn time_probs_uses_global_ranks() {
        // u->x1 gets rank 1, a->b rank 2, u->x2 rank 3
        let g = graph(
            &[("u", "x1", 1.0, 100), ("a", "b", 1.0, 200), ("u", "x2", 1.0, 300)],
            DirectionMode::DirectedOut,
        );
        let u = g.node_id("u").unwrap();
        let pt = time_probs(&g, u).unwrap();
        assert_eq!(pt, vec![0.25, 0.75]);
    }

    #[test]
    fn time_probs_three_ranks() {
        let g = graph(
            &[("u", "x1", 1.0, 100), ("u", "x2", 1.0, 200), ("u", "x3", 1.0, 300)],
            DirectionMode::DirectedOut,
        );
        let u = g.node_id("u").unwrap();
        let pt = time_probs(&g, u).unwrap();
        assert_eq!(pt, vec![1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]);
    }

    #[test]
    fn time_probs_tied_timestamps_share_mass() {
        let g = graph(
            &[("u", "x1", 1.0, 100), ("u", "x2", 1.0, 100)],
            DirectionMode::DirectedOut,
        );
        let u = g.node_id("u").unwrap();
        assert_eq!(time_probs(&g, u).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn blended_extremes_equal_pure_biases_bitwise() {
        let g = graph(
            &[
                ("u", "x1", 2.0, 100),
                ("u", "x2", 5.0, 300),
                ("u", "x3", 0.5, 200),
                ("a", "x1", 1.0, 150),
            ],
            DirectionMode::Undirected,
        );
        for u in 0..g.node_count() as NodeId {
            if g.adjacency(u).is_empty() {
                continue;
            }
            assert_eq!(blended_probs(&g, u, 1.0).unwrap(), amount_probs(&g, u).unwrap());
            assert_eq!(blended_probs(&g, u, 0.0).unwrap(), time_probs(&g, u).unwrap());
        }
    }

    #[test]
    fn blended_hand_computed_case() {
        // Two neighbors with PA = {0.25, 0.75} and PT = {0.04, 0.96}:
        // ranks must be 1 and 24, so pad with 22 filler edges in between.
        let mut records = vec![("u", "x1", 1.0, 100u64)];
        let fillers: Vec<(String, String)> = (0..22)
            .map(|i| (format!("f{i}"), format!("g{i}")))
            .collect();
        let mut all: Vec<(&str, &str, f64, u64)> = records.drain(..).collect();
        for (i, (f, g_)) in fillers.iter().enumerate() {
            all.push((f, g_, 1.0, 200 + i as u64));
        }
        all.push(("u", "x2", 3.0, 5000));
        let g = graph(&all, DirectionMode::DirectedOut);
        let u = g.node_id("u").unwrap();
        assert_eq!(amount_probs(&g, u).unwrap(), vec![0.25, 0.75]);
        assert_eq!(time_probs(&g, u).unwrap(), vec![0.04, 0.96]);
        let b = blended_probs(&g, u, 0.5).unwrap();
        assert!((b[0] - 0.10543).abs() < 1e-4, "{}", b[0]);
        assert!((b[1] - 0.89457).abs() < 1e-4, "{}", b[1]);
        sum_one(&b);
    }

    #[test]
    fn blended_zero_amount_edge_gets_zero_mass() {
        let g = graph(
            &[("u", "x1", 0.0, 100), ("u", "x2", 2.0, 200)],
            DirectionMode::DirectedOut,
        );
        let u = g.node_id("u").unwrap();
        let b = blended_probs(&g, u, 0.5).unwrap();
        assert_eq!(b[0], 0.0);
        assert_eq!(b[1], 1.0);
    }

    #[test]
    fn blended_alpha_monotonicity_favors_amount_neighbor() {
        // Amount favors x4, time favors x1 (latest edge), like the blended
        // walk illustration: increasing alpha must strictly increase the
        // relative mass on x4.
        let g = graph(
            &[
                ("u", "x1", 0.5, 900),
                ("u", "x2", 1.0, 300),
                ("u", "x3", 2.0, 200),
                ("u", "x4", 10.0, 100),
            ],
            DirectionMode::DirectedOut,
        );
        let u = g.node_id("u").unwrap();
        let idx_x4 = g
            .adjacency(u)
            .iter()
            .position(|n| n.node == g.node_id("x4").unwrap())
            .unwrap();
        let mut last = -1.0;
        for alpha in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
            let b = blended_probs(&g, u, alpha).unwrap();
            assert!(b[idx_x4] > last, "alpha={alpha}: {} !> {last}", b[idx_x4]);
            last = b[idx_x4];
        }
    }

    #[test]
    fn deepwalk_table_is_uniform() {
        let g = graph(
            &[("u", "a", 5.0, 1), ("u", "b", 1.0, 2), ("u", "c", 9.0, 3)],
            DirectionMode::DirectedOut,
        );
        let cfg = WalkConfig {
            strategy: Strategy::Deepwalk,
            ..WalkConfig::default()
        };
        let table = precompute_transitions(&g, &cfg).unwrap();
        let u = g.node_id("u").unwrap();
        assert_eq!(table.probabilities(u).unwrap(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn unit_attribute_graph_reduces_to_deepwalk() {
        // All amounts and timestamps 1: every strategy's first-order table
        // must equal the uniform table exactly.
        let g = graph(
            &[
                ("a", "b", 1.0, 1),
                ("b", "c", 1.0, 1),
                ("c", "a", 1.0, 1),
                ("c", "d", 1.0, 1),
                ("d", "a", 1.0, 1),
            ],
            DirectionMode::Undirected,
        );
        let uniform = precompute_transitions(
            &g,
            &WalkConfig {
                strategy: Strategy::Deepwalk,
                ..WalkConfig::default()
            },
        )
        .unwrap();
        for alpha in [0.0, 0.3, 0.5, 1.0] {
            let t = precompute_transitions(
                &g,
                &WalkConfig {
                    strategy: Strategy::Trans2vec,
                    alpha,
                    ..WalkConfig::default()
                },
            )
            .unwrap();
            for u in 0..g.node_count() as NodeId {
                assert_eq!(t.probabilities(u), uniform.probabilities(u), "alpha={alpha} u={u}");
            }
        }
    }

    #[test]
    fn amount_only_alias_expansion_matches_distribution() {
        let g = graph(
            &[("u", "x1", 0.2, 1), ("u", "x2", 0.3, 2), ("u", "x3", 0.5, 3)],
            DirectionMode::DirectedOut,
        );
        let cfg = WalkConfig {
            strategy: Strategy::AmountOnly,
            ..WalkConfig::default()
        };
        let table = precompute_transitions(&g, &cfg).unwrap();
        let u = g.node_id("u").unwrap();
        let mass = table.alias_table(u).unwrap().outcome_probabilities();
        for (m, expect) in mass.iter().zip([0.2, 0.3, 0.5]) {
            assert!((m - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn node2vec_second_order_weights() {
        // Path a-b-c: at b coming from a, the return step is weighted 1/p
        // and the forward step (distance 2 from a) 1/q.
        let (p, q) = (0.25, 0.75);
        let g = graph(
            &[("a", "b", 1.0, 1), ("b", "c", 1.0, 2)],
            DirectionMode::Undirected,
        );
        let cfg = WalkConfig {
            strategy: Strategy::Node2vec,
            p,
            q,
            ..WalkConfig::default()
        };
        let table = precompute_transitions(&g, &cfg).unwrap();
        let (a, b, c) = (
            g.node_id("a").unwrap(),
            g.node_id("b").unwrap(),
            g.node_id("c").unwrap(),
        );
        let probs = table.second_order_probabilities(a, b).unwrap();
        let adj = g.adjacency(b);
        let ia = adj.iter().position(|n| n.node == a).unwrap();
        let ic = adj.iter().position(|n| n.node == c).unwrap();
        let z = 1.0 / p + 1.0 / q;
        assert!((probs[ia] - (1.0 / p) / z).abs() < 1e-12);
        assert!((probs[ic] - (1.0 / q) / z).abs() < 1e-12);

        // Triangle: common neighbor keeps weight 1.
        let g = graph(
            &[("a", "b", 1.0, 1), ("b", "c", 1.0, 2), ("a", "c", 1.0, 3)],
            DirectionMode::Undirected,
        );
        let table = precompute_transitions(&g, &cfg).unwrap();
        let (a, b, c) = (
            g.node_id("a").unwrap(),
            g.node_id("b").unwrap(),
            g.node_id("c").unwrap(),
        );
        let probs = table.second_order_probabilities(a, b).unwrap();
        let adj = g.adjacency(b);
        let ia = adj.iter().position(|n| n.node == a).unwrap();
        let ic = adj.iter().position(|n| n.node == c).unwrap();
        let z = 1.0 / p + 1.0;
        assert!((probs[ia] - (1.0 / p) / z).abs() < 1e-12);
        assert!((probs[ic] - 1.0 / z).abs() < 1e-12);
    }

    #[test]
    fn walk_zero_length_is_source_only() {
        let g = graph(&[("a", "b", 1.0, 1)], DirectionMode::Undirected);
        let cfg = WalkConfig::default();
        let table = precompute_transitions(&g, &cfg).unwrap();
        let a = g.node_id("a").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(walk(&g, &table, a, 0, &mut rng), vec![a]);
    }

    #[test]
    fn walk_on_path_graph_is_forced() {
        let g = graph(&[("a", "b", 1.0, 1)], DirectionMode::Undirected);
        let cfg = WalkConfig::default();
        let table = precompute_transitions(&g, &cfg).unwrap();
        let a = g.node_id("a").unwrap();
        let b = g.node_id("b").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(walk(&g, &table, a, 3, &mut rng), vec![a, b, a, b]);
    }

    #[test]
    fn walk_truncates_at_dead_end() {
        let g = graph(&[("a", "b", 1.0, 1)], DirectionMode::DirectedOut);
        let cfg = WalkConfig::default();
        let table = precompute_transitions(&g, &cfg).unwrap();
        let a = g.node_id("a").unwrap();
        let b = g.node_id("b").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(walk(&g, &table, a, 5, &mut rng), vec![a, b]);
    }

    #[test]
    fn walk_concentrates_on_heavy_neighbor() {
        let g = graph(
            &[("u", "x", 0.999, 10), ("u", "y", 0.001, 20)],
            DirectionMode::DirectedOut,
        );
        let cfg = WalkConfig {
            strategy: Strategy::AmountOnly,
            ..WalkConfig::default()
        };
        let table = precompute_transitions(&g, &cfg).unwrap();
        let u = g.node_id("u").unwrap();
        let x = g.node_id("x").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| walk(&g, &table, u, 1, &mut rng)[1] == x)
            .count();
        let frac = hits as f64 / n as f64;
        assert!((0.996..=1.0).contains(&frac), "fraction {frac}");
    }

    #[test]
    fn corpus_has_r_walks_per_node_and_is_deterministic() {
        let g = graph(
            &[
                ("a", "b", 1.0, 1),
                ("b", "c", 2.0, 2),
                ("c", "d", 3.0, 3),
                ("d", "a", 4.0, 4),
                ("a", "c", 5.0, 5),
            ],
            DirectionMode::Undirected,
        );
        let cfg = WalkConfig {
            walks_per_node: 20,
            walk_length: 5,
            seed: 42,
            ..WalkConfig::default()
        };
        let corpus = generate_corpus(&g, &cfg).unwrap();
        assert_eq!(corpus.walks.len(), 20 * g.node_count());
        let again = generate_corpus(&g, &cfg).unwrap();
        assert_eq!(corpus.walks, again.walks);

        let other = generate_corpus(
            &g,
            &WalkConfig {
                seed: 43,
                ..cfg
            },
        )
        .unwrap();
        assert_ne!(corpus.walks, other.walks);
    }

    #[test]
    fn corpus_singleton_walks_when_length_zero() {
        let g = graph(&[("a", "b", 1.0, 1)], DirectionMode::Undirected);
        let cfg = WalkConfig {
            walks_per_node: 1,
            walk_length: 0,
            ..WalkConfig::default()
        };
        let corpus = generate_corpus(&g, &cfg).unwrap();
        assert_eq!(corpus.walks.len(), g.node_count());
        assert!(corpus.walks.iter().all(|w| w.len() == 1));
    }

    #[test]
    fn corpus_file_round_trip() {
        let g = graph(
            &[("a", "b", 1.0, 1), ("b", "c", 2.0, 2), ("c", "a", 3.0, 3)],
            DirectionMode::Undirected,
        );
        let cfg = WalkConfig {
            walks_per_node: 3,
            walk_length: 4,
            seed: 9,
            ..WalkConfig::default()
        };
        let corpus = generate_corpus(&g, &cfg).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_corpus(&corpus, &g, f.path()).unwrap();
        let loaded = load_corpus(f.path(), &g).unwrap();
        assert_eq!(loaded.walks, corpus.walks);
        assert_eq!(loaded.config, corpus.config);
        assert_eq!(loaded.graph_fingerprint, corpus.graph_fingerprint);
    }

    #[test]
    fn corpus_load_rejects_wrong_graph() {
        let g1 = graph(&[("a", "b", 1.0, 1)], DirectionMode::Undirected);
        let g2 = graph(&[("a", "b", 2.0, 1)], DirectionMode::Undirected);
        let cfg = WalkConfig {
            walks_per_node: 1,
            walk_length: 2,
            ..WalkConfig::default()
        };
        let corpus = generate_corpus(&g1, &cfg).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_corpus(&corpus, &g1, f.path()).unwrap();
        assert!(matches!(
            load_corpus(f.path(), &g2),
            Err(Error::GraphMismatch { .. })
        ));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_alpha = WalkConfig {
            alpha: 1.5,
            ..WalkConfig::default()
        };
        assert!(bad_alpha.validate().is_err());
        let bad_p = WalkConfig {
            p: 0.0,
            ..WalkConfig::default()
        };
        assert!(bad_p.validate().is_err());
        let bad_r = WalkConfig {
            walks_per_node: 0,
            ..WalkConfig::default()
        };
        assert!(bad_r.validate().is_err());
    }

    mod properties {
        use super::*;
        use crate::walker::Strategy;
        use proptest::prelude::*;

        fn random_graph(
            nodes: usize,
            edges: &[(usize, usize, f64, u64)],
        ) -> Option<TxGraph> {
            let recs: Vec<TxRecord> = edges
                .iter()
                .map(|&(f, t, a, ts)| {
                    TxRecord::new(format!("n{}", f % nodes), format!("n{}", t % nodes), a, ts)
                })
                .collect();
            aggregate(&recs, DirectionMode::Undirected).ok()
        }

        proptest! {
            #[test]
            fn transition_vectors_sum_to_one(
                nodes in 2usize..12,
                edges in proptest::collection::vec(
                    (0usize..12, 0usize..12, 0.0f64..100.0, 0u64..1000), 1..40),
                alpha in 0.0f64..=1.0,
            ) {
                if let Some(g) = random_graph(nodes, &edges) {
                    for strategy in Strategy::ALL {
                        let cfg = WalkConfig { strategy, alpha, ..WalkConfig::default() };
                        let table = precompute_transitions(&g, &cfg).unwrap();
                        for u in 0..g.node_count() as NodeId {
                            if let Some(p) = table.probabilities(u) {
                                let s: f64 = p.iter().sum();
                                prop_assert!((s - 1.0).abs() < 1e-12);
                            }
                        }
                    }
                }
            }

            #[test]
            fn walks_are_wellformed(
                edges in proptest::collection::vec(
                    (0usize..8, 0usize..8, 0.1f64..10.0, 0u64..100), 1..20),
                length in 0usize..6,
                seed in 0u64..1000,
            ) {
                if let Some(g) = random_graph(8, &edges) {
                    let cfg = WalkConfig { seed, ..WalkConfig::default() };
                    let table = precompute_transitions(&g, &cfg).unwrap();
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    for u in 0..g.node_count() as NodeId {
                        let w = walk(&g, &table, u, length, &mut rng);
                        prop_assert_eq!(w[0], u);
                        prop_assert!(w.len() <= length + 1);
                        for &n in &w {
                            prop_assert!((n as usize) < g.node_count());
                        }
                        for pair in w.windows(2) {
                            prop_assert!(g.adjacency(pair[0]).iter().any(|x| x.node == pair[1]));
                        }
                    }
                }
            }
        }
    }
}
