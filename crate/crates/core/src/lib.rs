//! Transaction-network embedding and anomaly detection.
//!
//! The pipeline: ingest raw transfer records into an attributed graph
//! ([`txgraph`]), run amount/time-biased random walks ([`walker`]), train
//! Skip-gram embeddings on the walk corpus ([`skipgram`]), then flag
//! anomalous nodes with a one-class SVM over the embeddings ([`detector`]).
//! [`featext`] provides the hand-crafted per-node feature baseline and
//! [`evalbench`] the labeled-evaluation harness (subnetwork extraction,
//! metrics, parameter sweeps, synthetic data, scalability runs).

pub mod alias;
pub mod detector;
pub mod error;
pub mod evalbench;
pub mod featext;
pub mod seeds;
pub mod skipgram;
pub mod txgraph;
pub mod walker;

pub use error::{Error, Result};
