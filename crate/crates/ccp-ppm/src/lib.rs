//! Joint Bayesian change point detection across multiple time series.
//!
//! Change points segment each series into contiguous blocks; a product
//! partition model scores a segmentation by the product of per-block
//! cohesions times per-block marginal likelihoods. This crate ties the
//! per-time change probabilities of all series together through a
//! multivariate Student-t law on their logits, so that a change point in
//! one series raises the odds of simultaneous change points in the
//! others, while every series keeps its own partition.
//!
//! What's here:
//!
//! * [`partition`] — contiguous partitions and their three encodings;
//! * [`cohesion`] — block cohesions and exact partition log
//!   probabilities;
//! * [`marglik`] — the conjugate Normal-Inverse-Gamma block marginal
//!   likelihood;
//! * [`tprior`] — the logit-scale t law: density, sampling, and the
//!   exact prior-property integrals (marginal, pairwise, and conditional
//!   change probabilities, change-count moments);
//! * [`tuning`] — empirical-Bayes selection of every tuning parameter;
//! * [`sampler`] — Gibbs / random-walk Metropolis posterior simulation,
//!   plus an independent per-series baseline;
//! * [`chains`] — the posterior sample archive and its file formats;
//! * [`posterior`] — change probabilities, loss-based partition
//!   estimates, and evaluation metrics;
//! * [`simgen`] — synthetic scenarios and the replicated study harness.
//!
//! Replicate-level work runs on rayon when the default `parallel`
//! feature is enabled; disabling it leaves sequential fallbacks with
//! identical results.

pub mod chains;
pub mod cohesion;
pub mod error;
pub mod exec;
pub mod marglik;
pub mod partition;
pub mod posterior;
pub mod quad;
pub mod sampler;
pub mod simgen;
pub mod tprior;
pub mod tuning;
pub mod util;

pub use chains::{Chains, ChainsFormat, Method};
pub use error::{CcpError, Result};
pub use marglik::{MargLikParams, SeriesData};
pub use partition::{BlockSet, ChangeIndicators, ClusterLabels, PartitionRecord};
pub use posterior::{ChangeProbReport, LossConfig};
pub use sampler::{run_ccp_ppm, run_indep_ppm, McmcConfig};
pub use simgen::{ScenarioSpec, SigmaMode, StudyConfig, StudyResult};
pub use tprior::TPriorParams;
