//! Message-as-agent model of information spread.
//!
//! Each message is an agent whose integer energy performs a random walk
//! driven by likes and reposts until it is absorbed at zero. The crate
//! simulates single agents and whole flows, computes the exact like-count
//! distribution, fits Weibull laws to count histograms and runs a
//! file-based ingestion pipeline for observed like/retweet snapshots.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod compare;
pub mod config;
pub mod error;
pub mod exact;
pub mod fit;
pub mod histogram;
pub mod ingest;
pub mod model;
pub mod optimize;
pub mod par;
pub mod rng;
pub mod sim;

pub use error::{ExactError, FitError, IngestError, ModelError, SimError};
pub use exact::{lifetime_pmf_dp, like_count_pmf_dp, like_count_pmf_enum, LifetimePmf, LikeCountPmf};
pub use fit::{
    fit_least_squares, fit_mle, ks_histogram, ks_samples, sample_weibull, FitMethod, FitReport, WeibullParams,
};
pub use histogram::Histogram;
pub use model::{ModelParams, ResponseCurve, StepDistribution, TransitionKernel};
pub use par::Execution;
pub use sim::{
    collect_histogram, simulate_agent, simulate_ensemble, simulate_flow, AgentOutcome, FlowResult, Metric, Trajectory,
};
