//! Anomaly detectors over node embeddings: a from-scratch one-class SVM
//! (the primary detector) plus supervised and unsupervised baselines used
//! for comparison runs.

pub mod baselines;
pub mod ocsvm;

pub use baselines::{baseline_fit_predict, BaselineKind, BaselineOptions};
pub use ocsvm::{ocsvm_fit, ocsvm_fit_with_tol, Kernel, OcsvmFit, OcsvmModel, Prediction};
