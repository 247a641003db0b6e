//! Erdős–Rényi graph generation and the walk-generation scalability
//! benchmark over increasing node counts.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::txgraph::{DirectionMode, TxGraph, TxRecord};
use crate::walker::{generate_corpus_with_table, precompute_transitions, WalkConfig};

/// G(n, p) with p = avg_degree/(n−1); every edge carries amount 1 and
/// timestamp 1, so biased and uniform strategies coincide on the result.
/// All n nodes are materialized even when isolated.
pub fn gen_er_graph(n: usize, avg_degree: f64, seed: u64) -> Result<TxGraph> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "ER graph needs at least 2 nodes, got {n}"
        )));
    }
    if !(avg_degree >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "avg_degree must be non-negative, got {avg_degree}"
        )));
    }
    let p = (avg_degree / (n as f64 - 1.0)).min(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Geometric skipping over the n(n−1)/2 pair slots: draw the gap to the
    // next present edge instead of flipping every pair.
    let total: u64 = n as u64 * (n as u64 - 1) / 2;
    let mut records = Vec::new();
    let mut next = skip(&mut rng, p);
    let mut row = 0usize;
    let mut row_start: u64 = 0;
    while next < total {
        while next - row_start >= (n - 1 - row) as u64 {
            row_start += (n - 1 - row) as u64;
            row += 1;
        }
        let col = row + 1 + (next - row_start) as usize;
        records.push(TxRecord::new(node_name(row), node_name(col), 1.0, 1));
        match skip(&mut rng, p) {
            u64::MAX => break,
            gap => match next.checked_add(1 + gap) {
                Some(v) => next = v,
                None => break,
            },
        }
    }

    let names: Vec<String> = (0..n).map(node_name).collect();
    TxGraph::build(&records, DirectionMode::Undirected, Some(&names))
}

fn node_name(i: usize) -> String {
    format!("v{i}")
}

/// Number of absent pairs before the next edge under inclusion probability
/// p; u64::MAX stands for "no further edge".
fn skip(rng: &mut ChaCha8Rng, p: f64) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    if p <= 0.0 {
        return u64::MAX;
    }
    let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let g = (u.ln() / (1.0 - p).ln()).floor();
    if g >= u64::MAX as f64 {
        u64::MAX
    } else {
        g as u64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub nodes: usize,
    pub edges: usize,
    pub mean_seconds: f64,
    pub median_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of log(mean time) against log(node count).
    pub loglog_slope: f64,
}

/// Time transition-table precomputation plus corpus generation on ER graphs
/// of the given sizes. Graph generation happens outside the timed section.
pub fn scalability_bench(
    sizes: &[usize],
    trials: usize,
    avg_degree: f64,
    walk: &WalkConfig,
    seed: u64,
) -> Result<BenchReport> {
    if sizes.len() < 2 {
        return Err(Error::InvalidConfig(
            "scalability bench needs at least 2 sizes".into(),
        ));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("sizes must be strictly ascending".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be positive".into()));
    }
    walk.validate()?;

    let mut rows = Vec::with_capacity(sizes.len());
    for (si, &n) in sizes.iter().enumerate() {
        let graph = gen_er_graph(n, avg_degree, seed.wrapping_add(si as u64))?;
        let mut times = Vec::with_capacity(trials);
        for trial in 0..trials {
            let mut cfg = *walk;
            cfg.seed = seed.wrapping_add(trial as u64);
            let start = Instant::now();
            let table = precompute_transitions(&graph, &cfg)?;
            let corpus = generate_corpus_with_table(&graph, &table, &cfg);
            let elapsed = start.elapsed().as_secs_f64();
            assert_eq!(corpus.walks.len(), cfg.walks_per_node * graph.node_count());
            times.push(elapsed);
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        let median = if times.len() % 2 == 1 {
            times[times.len() / 2]
        } else {
            0.5 * (times[times.len() / 2 - 1] + times[times.len() / 2])
        };
        rows.push(BenchRow {
            nodes: n,
            edges: graph.edge_count(),
            mean_seconds: mean,
            median_seconds: median,
        });
    }

    let xs: Vec<f64> = rows.iter().map(|r| (r.nodes as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_seconds.max(1e-12).ln()).collect();
    Ok(BenchReport {
        loglog_slope: least_squares_slope(&xs, &ys),
        rows,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    num / den
}
