//! Flow-based intrusion detection with explainable classifiers.
//!
//! The crate is organised as a pipeline:
//!
//! * [`flow_meter`] decodes pcap captures, assembles bidirectional flows and
//!   computes NetFlow-style and CICFlowMeter-style feature vectors.
//! * [`dataset`] labels flows from ground-truth events, drops identifier
//!   columns, min-max scales and produces stratified k-fold splits.
//! * [`models`] holds from-scratch random-forest and feed-forward network
//!   classifiers.
//! * [`evaluation`] computes accuracy, F1, detection rate, false alarm rate,
//!   ROC AUC and per-sample prediction time under k-fold cross-validation.
//! * [`explain`] computes Shapley attributions by exact enumeration,
//!   KernelSHAP and interventional TreeSHAP, and aggregates global rankings.
//! * [`report`] renders metric tables and SVG charts.
//! * [`synth`] generates a labelled synthetic capture for end-to-end runs.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod explain;
pub mod flow_meter;
pub mod models;
pub mod report;
pub mod synth;
pub mod util;

pub use error::{Error, Result};
