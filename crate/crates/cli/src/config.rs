//! One TOML document configures every stage; dotted `--set` overrides are
//! applied to the raw document before deserialization, and typed flags win
//! over both.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};

use trans2vec_core::evalbench::synth::SynthParams;
use trans2vec_core::evalbench::{DetectorConfig, ExperimentPlan, Representation};
use trans2vec_core::skipgram::EmbedConfig;
use trans2vec_core::txgraph::DirectionMode;
use trans2vec_core::walker::WalkConfig;

/// Scalar experiment settings; the walk/embed/detector configs live in
/// their own sections and are shared with the other subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub subnetworks: usize,
    pub repeats: usize,
    pub train_fraction: f64,
    pub representation: Representation,
    pub master_seed: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let plan = ExperimentPlan::default();
        ExperimentSection {
            subnetworks: plan.subnetworks,
            repeats: plan.repeats,
            train_fraction: plan.train_fraction,
            representation: plan.representation,
            master_seed: plan.master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub n_normal: usize,
    pub n_phish: usize,
    pub seed: u64,
    pub params: SynthParams,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            n_normal: 2000,
            n_phish: 50,
            seed: 1,
            params: SynthParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub avg_degree: f64,
    pub seed: u64,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            sizes: vec![100, 1_000, 10_000],
            trials: 3,
            avg_degree: 6.0,
            seed: 1,
        }
    }
}

/// The full run configuration. Every value can come from the config file
/// (`--config`), be patched by `--set section.key=value`, or be overridden
/// by a dedicated flag; later sources win in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Worker threads; 1 forces the deterministic single-threaded mode.
    pub threads: Option<usize>,
    /// Adjacency exposure for ingestion and walking.
    pub direction: DirectionMode,
    pub walk: WalkConfig,
    pub embed: EmbedConfig,
    pub detector: DetectorConfig,
    pub experiment: ExperimentSection,
    pub synth: SynthSection,
    pub bench: BenchSection,
}

impl RunConfig {
    /// Assemble an experiment plan from the config sections.
    pub fn experiment_plan(&self) -> ExperimentPlan {
        ExperimentPlan {
            subnetworks: self.experiment.subnetworks,
            repeats: self.experiment.repeats,
            train_fraction: self.experiment.train_fraction,
            representation: self.experiment.representation,
            walk: self.walk,
            embed: self.embed,
            detector: self.detector,
            master_seed: self.experiment.master_seed,
        }
    }
}

/// Read the config file (or start from defaults), apply `--set` patches,
/// and deserialize. Unknown keys are rejected.
pub fn load(path: Option<&Path>, sets: &[String]) -> Result<RunConfig> {
    let mut doc: toml::Table = match path {
        Some(p) => std::fs::read_to_string(p)
            .with_context(|| format!("reading config file {}", p.display()))?
            .parse()
            .with_context(|| format!("parsing config file {}", p.display()))?,
        None => toml::Table::new(),
    };
    for spec in sets {
        apply_set(&mut doc, spec)?;
    }
    toml::Value::Table(doc)
        .try_into()
        .context("invalid run configuration")
}

/// Deserialize an experiment plan from its own TOML file.
pub fn load_plan(path: &Path) -> Result<ExperimentPlan> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading plan file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing plan file {}", path.display()))
}

fn apply_set(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("--set expects key=value, got {spec:?}"))?;
    let parts: Vec<&str> = path.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(anyhow!("--set key {path:?} has an empty path segment"));
    }
    let mut cur = doc;
    for part in &parts[..parts.len() - 1] {
        cur = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("--set key {path:?}: {part} is not a table"))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim())?);
    Ok(())
}

/// Parse the right-hand side of a `--set` as a TOML value; bare words fall
/// back to strings so `--set walk.strategy=deepwalk` works unquoted.
fn parse_value(raw: &str) -> Result<toml::Value> {
    let attempt = |text: &str| -> Result<toml::Value, toml::de::Error> {
        let table: toml::Table = format!("x = {text}").parse()?;
        Ok(table.into_iter().next().expect("one key").1)
    };
    match attempt(raw) {
        Ok(v) => Ok(v),
        Err(_) => attempt(&format!("{raw:?}"))
            .map_err(|e| anyhow!("--set value {raw:?} is not a TOML value: {e}")),
    }
}
