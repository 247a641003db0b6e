//! Aggregated transaction graph.
//!
//! Raw transaction records are collapsed into one directed edge per ordered
//! address pair carrying the summed amount and the latest timestamp. Every
//! aggregated edge also gets a global time rank: its 1-based position when
//! all edges are sorted by ascending timestamp (ties broken by the
//! lexicographic `(from, to)` address pair). The graph is immutable after
//! construction.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = u32;

/// One raw transaction. Self-loops are legal here; they are dropped during
/// aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct TxRecord {
    pub from: String,
    pub to: String,
    pub amount: f64,
    pub timestamp: u64,
}

impl TxRecord {
    pub fn new(from: impl Into<String>, to: impl Into<String>, amount: f64, timestamp: u64) -> Self {
        TxRecord {
            from: from.into(),
            to: to.into(),
            amount,
            timestamp,
        }
    }
}

/// Aggregated directed edge: total amount, latest timestamp, global time rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub amount: f64,
    pub timestamp: u64,
    pub time_rank: u64,
}

/// How adjacency is exposed to walkers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionMode {
    /// Merge both directions: the neighbor list of `u` contains `x` iff an
    /// edge exists in either direction. Amounts are summed, ranks and
    /// timestamps take the maximum of the two directions.
    #[default]
    Undirected,
    /// Follow out-edges only.
    DirectedOut,
}

/// One adjacency entry, direction-resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub node: NodeId,
    pub amount: f64,
    pub time_rank: u64,
    /// Latest raw timestamp behind this entry; used to detect tied
    /// neighborhoods in the time bias.
    pub timestamp: u64,
}

#[derive(Debug, Clone)]
pub struct TxGraph {
    nodes: Vec<String>,
    index: HashMap<String, NodeId>,
    edges: Vec<AggEdge>,
    adj: Vec<Vec<Neighbor>>,
    direction: DirectionMode,
}

impl TxGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn direction(&self) -> DirectionMode {
        self.direction
    }

    pub fn edges(&self) -> &[AggEdge] {
        &self.edges
    }

    pub fn address(&self, u: NodeId) -> &str {
        &self.nodes[u as usize]
    }

    pub fn addresses(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_id(&self, address: &str) -> Option<NodeId> {
        self.index.get(address).copied()
    }

    /// Direction-resolved adjacency of `u`, sorted by neighbor index.
    pub fn adjacency(&self, u: NodeId) -> &[Neighbor] {
        &self.adj[u as usize]
    }

    /// The neighbor set `V_u` with per-edge amount and time rank.
    pub fn neighbors(&self, u: NodeId) -> Result<Vec<(NodeId, f64, u64)>> {
        let adj = self
            .adj
            .get(u as usize)
            .ok_or(Error::InvalidNode {
                index: u,
                node_count: self.nodes.len(),
            })?;
        Ok(adj.iter().map(|n| (n.node, n.amount, n.time_rank)).collect())
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adj[u as usize].len()
    }

    /// Stable 64-bit fingerprint over nodes, edges and direction mode.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write(&[self.direction as u8]);
        h.write(&(self.nodes.len() as u64).to_le_bytes());
        for name in &self.nodes {
            h.write(name.as_bytes());
            h.write(&[0]);
        }
        for e in &self.edges {
            h.write(&e.from.to_le_bytes());
            h.write(&e.to.to_le_bytes());
            h.write(&e.amount.to_bits().to_le_bytes());
            h.write(&e.timestamp.to_le_bytes());
            h.write(&e.time_rank.to_le_bytes());
        }
        h.finish()
    }

    /// Build from records, optionally pre-registering nodes so that
    /// addresses without surviving edges still get indices (in list order,
    /// before any address first seen in the records).
    pub(crate) fn build(
        records: &[TxRecord],
        direction: DirectionMode,
        preregistered: Option<&[String]>,
    ) -> Result<TxGraph> {
        if records.is_empty() && preregistered.map_or(true, |p| p.is_empty()) {
            return Err(Error::EmptyGraph);
        }

        let mut nodes: Vec<String> = Vec::new();
        let mut index: HashMap<String, NodeId> = HashMap::new();
        let intern = |name: &str, nodes: &mut Vec<String>, index: &mut HashMap<String, NodeId>| {
            if let Some(&id) = index.get(name) {
                return id;
            }
            let id = nodes.len() as NodeId;
            nodes.push(name.to_string());
            index.insert(name.to_string(), id);
            id
        };

        if let Some(pre) = preregistered {
            for name in pre {
                intern(name, &mut nodes, &mut index);
            }
        }

        // Sum amounts and keep the latest timestamp per ordered pair.
        let mut agg: HashMap<(NodeId, NodeId), (f64, u64)> = HashMap::new();
        for r in records {
            let from = intern(&r.from, &mut nodes, &mut index);
            let to = intern(&r.to, &mut nodes, &mut index);
            if from == to {
                continue; // self-loops contribute nothing to walks
            }
            let entry = agg.entry((from, to)).or_insert((0.0, 0));
            entry.0 += r.amount;
            entry.1 = entry.1.max(r.timestamp);
        }

        let mut edges: Vec<AggEdge> = agg
            .into_iter()
            .map(|((from, to), (amount, timestamp))| AggEdge {
                from,
                to,
                amount,
                timestamp,
                time_rank: 0,
            })
            .collect();

        // Time ranks: ascending timestamp, ties by (from, to) address pair.
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by(|&a, &b| {
            let ea = &edges[a];
            let eb = &edges[b];
            ea.timestamp
                .cmp(&eb.timestamp)
                .then_with(|| nodes[ea.from as usize].cmp(&nodes[eb.from as usize]))
                .then_with(|| nodes[ea.to as usize].cmp(&nodes[eb.to as usize]))
        });
        for (rank0, &i) in order.iter().enumerate() {
            edges[i].time_rank = rank0 as u64 + 1;
        }

        edges.sort_by_key(|e| (e.from, e.to));

        let adj = build_adjacency(nodes.len(), &edges, direction);
        Ok(TxGraph {
            nodes,
            index,
            edges,
            adj,
            direction,
        })
    }
}

fn build_adjacency(node_count: usize, edges: &[AggEdge], direction: DirectionMode) -> Vec<Vec<Neighbor>> {
    let mut adj: Vec<Vec<Neighbor>> = vec![Vec::new(); node_count];
    match direction {
        DirectionMode::DirectedOut => {
            for e in edges {
                adj[e.from as usize].push(Neighbor {
                    node: e.to,
                    amount: e.amount,
                    time_rank: e.time_rank,
                    timestamp: e.timestamp,
                });
            }
        }
        DirectionMode::Undirected => {
            // Merge u->x and x->u into one entry per partner: amount summed,
            // rank and timestamp maxed.
            let mut merged: Vec<HashMap<NodeId, Neighbor>> =
                vec![HashMap::new(); node_count];
            let add = |u: NodeId, n: Neighbor, merged: &mut Vec<HashMap<NodeId, Neighbor>>| {
                merged[u as usize]
                    .entry(n.node)
                    .and_modify(|m| {
                        m.amount += n.amount;
                        m.time_rank = m.time_rank.max(n.time_rank);
                        m.timestamp = m.timestamp.max(n.timestamp);
                    })
                    .or_insert(n);
            };
            for e in edges {
                add(
                    e.from,
                    Neighbor {
                        node: e.to,
                        amount: e.amount,
                        time_rank: e.time_rank,
                        timestamp: e.timestamp,
                    },
                    &mut merged,
                );
                add(
                    e.to,
                    Neighbor {
                        node: e.from,
                        amount: e.amount,
                        time_rank: e.time_rank,
                        timestamp: e.timestamp,
                    },
                    &mut merged,
                );
            }
            for (u, map) in merged.into_iter().enumerate() {
                let mut list: Vec<Neighbor> = map.into_values().collect();
                list.sort_by_key(|n| n.node);
                adj[u] = list;
            }
        }
    }
    for list in &mut adj {
        list.sort_by_key(|n| n.node);
    }
    adj
}

/// Aggregate raw records into a transaction graph.
pub fn aggregate(records: &[TxRecord], direction: DirectionMode) -> Result<TxGraph> {
    if records.is_empty() {
        return Err(Error::EmptyGraph);
    }
    TxGraph::build(records, direction, None)
}

/// Load raw transactions from an edge-list CSV with header
/// `from,to,amount,timestamp`.
pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<TxRecord>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                if let csv::ErrorKind::Io(io) = e.into_kind() {
                    Error::io(path, io)
                } else {
                    unreachable!()
                }
            }
            _ => Error::CsvRead {
                path: path.to_path_buf(),
                source: Box::new(e),
            },
        })?;

    {
        let headers = rdr.headers().map_err(|e| Error::CsvRead {
            path: path.to_path_buf(),
            source: Box::new(e),
        })?;
        let expected = ["from", "to", "amount", "timestamp"];
        if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::BadHeader {
                path: path.to_path_buf(),
                found: headers.iter().collect::<Vec<_>>().join(","),
            });
        }
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::CsvRead {
            path: path.to_path_buf(),
            source: Box::new(e),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 4 {
            return Err(Error::FieldCount {
                line,
                found: row.len(),
            });
        }
        let amount: f64 = row[2].parse().map_err(|_| Error::NonNumericAmount {
            line,
            value: row[2].to_string(),
        })?;
        if !amount.is_finite() {
            return Err(Error::NonNumericAmount {
                line,
                value: row[2].to_string(),
            });
        }
        if amount < 0.0 {
            return Err(Error::NegativeAmount { line });
        }
        let timestamp: u64 = row[3].parse().map_err(|_| Error::NonNumericTimestamp {
            line,
            value: row[3].to_string(),
        })?;
        records.push(TxRecord {
            from: row[0].to_string(),
            to: row[1].to_string(),
            amount,
            timestamp,
        });
    }
    Ok(records)
}

/// Write records back out in the edge-list CSV format.
pub fn save_records(records: &[TxRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(out, "from,to,amount,timestamp").map_err(|e| Error::io(path, e))?;
    for r in records {
        writeln!(out, "{},{},{},{}", r.from, r.to, r.amount, r.timestamp)
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// The labeled phishing set. Every address not in it is implicitly normal.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSet {
    phishing: BTreeSet<String>,
}

/// Result of joining a label set against a graph.
#[derive(Debug, Clone)]
pub struct LabelJoin {
    /// Indices of labeled nodes present in the graph.
    pub known: Vec<NodeId>,
    /// Labeled addresses absent from the graph, reported rather than dropped.
    pub unknown: Vec<String>,
}

impl LabelSet {
    pub fn new(addresses: impl IntoIterator<Item = String>) -> Self {
        LabelSet {
            phishing: addresses.into_iter().collect(),
        }
    }

    /// One address per line; blank lines and `#` comments ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<LabelSet> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut phishing = BTreeSet::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            phishing.insert(line.to_string());
        }
        Ok(LabelSet { phishing })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        for addr in &self.phishing {
            writeln!(out, "{addr}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn contains(&self, address: &str) -> bool {
        self.phishing.contains(address)
    }

    pub fn len(&self) -> usize {
        self.phishing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phishing.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.phishing.iter().map(String::as_str)
    }

    pub fn join(&self, graph: &TxGraph) -> LabelJoin {
        let mut known = Vec::new();
        let mut unknown = Vec::new();
        for addr in &self.phishing {
            match graph.node_id(addr) {
                Some(id) => known.push(id),
                None => unknown.push(addr.clone()),
            }
        }
        known.sort_unstable();
        LabelJoin { known, unknown }
    }
}

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    direction: DirectionMode,
    nodes: Vec<String>,
    edges: Vec<AggEdge>,
}

/// Versioned graph snapshot; round-trip stable.
pub fn save_snapshot(graph: &TxGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let snap = Snapshot {
        version: SNAPSHOT_VERSION,
        direction: graph.direction,
        nodes: graph.nodes.clone(),
        edges: graph.edges.clone(),
    };
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer(std::io::BufWriter::new(file), &snap)
        .map_err(|e| Error::SnapshotFormat(e.to_string()))?;
    Ok(())
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<TxGraph> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let snap: Snapshot = serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::SnapshotFormat(e.to_string()))?;
    if snap.version != SNAPSHOT_VERSION {
        return Err(Error::SnapshotVersion {
            expected: SNAPSHOT_VERSION,
            found: snap.version,
        });
    }
    let n = snap.nodes.len();
    let mut seen_ranks = vec![false; snap.edges.len()];
    for e in &snap.edges {
        if e.from as usize >= n || e.to as usize >= n {
            return Err(Error::SnapshotFormat(format!(
                "edge ({}, {}) references a missing node",
                e.from, e.to
            )));
        }
        let r = e.time_rank as usize;
        if r == 0 || r > snap.edges.len() || seen_ranks[r - 1] {
            return Err(Error::SnapshotFormat(format!(
                "time ranks are not a permutation of 1..{}",
                snap.edges.len()
            )));
        }
        seen_ranks[r - 1] = true;
    }
    let index: HashMap<String, NodeId> = snap
        .nodes
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i as NodeId))
        .collect();
    if index.len() != n {
        return Err(Error::SnapshotFormat("duplicate node addresses".into()));
    }
    let mut edges = snap.edges;
    edges.sort_by_key(|e| (e.from, e.to));
    let adj = build_adjacency(n, &edges, snap.direction);
    Ok(TxGraph {
        nodes: snap.nodes,
        index,
        edges,
        adj,
        direction: snap.direction,
    })
}

struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Fnv1a(0xcbf29ce484222325)
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
    fn finish(&self) -> u64 {
        self.0
    }
}
