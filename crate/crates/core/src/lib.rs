//! Car-following velocity control with deep deterministic policy gradient.
//!
//! Trajectory ingestion and event extraction, the reward and car-following
//! simulator, a small MLP with hand-written backprop and Adam, the DDPG
//! trainer, and held-out evaluation against recorded drivers.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod ddpg;
pub mod env;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod mlp;
pub mod reward;
pub mod rng;
pub mod selftest;
pub mod synthetic;
pub mod trajectory;

pub use config::RunConfig;
pub use ddpg::{train, Agent, Checkpoint, EpisodeRecord, OuNoise, ReplayBuffer, StateScales, TrainConfig, Transition};
pub use env::{CfState, Policy, Simulator, StepOutcome, TerminalReason};
pub use error::{Error, FitError, Result};
pub use eval::{ComparisonReport, EventMetrics, ReportConfig};
pub use mlp::{Architecture, MlpParams, OutputActivation};
pub use reward::{RewardBreakdown, RewardConfig, RewardWeights};
pub use trajectory::{CfEvent, ColumnMapping, ExtractConfig, LognormalParams, TrajectorySample};
