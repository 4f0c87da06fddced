//! Adaptive pilot patterns for OFDM links over fast-varying channels.
//!
//! The core is generic over the scalar type (`f32` or `f64`); the `*F64`
//! aliases at the crate root fix it to double precision.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codebook;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod link;
pub mod mse_cache;
pub mod optimizer;
pub mod scalar;
pub mod scenario;
mod seed;

pub use channel::{ChannelParams, ChannelRealization, LinkBudget, LinkCondition, PathLossParams};
pub use codebook::{Codebook, Codeword, CodewordPair};
pub use error::{Error, Result};
pub use estimator::{ChannelEstimate, CorrelationDomain, CorrelationProfile};
pub use grid::{GridDims, PilotConfig, PowerAllocation, ResourceGrid};
pub use link::{EpochState, FeedbackMessage, FeedbackMode, FeedbackPayload, LinkContext};
pub use mse_cache::{MonteCarloMse, MseCache, MseKey};
pub use optimizer::{FeasibleSets, MseProvider, Optimum, SinrTerms};
pub use scalar::Real;
pub use scenario::{RunReport, ScenarioStage, SimParams, TauProfile};

pub type GridDimsF64 = GridDims<f64>;
pub type PilotConfigF64 = PilotConfig<f64>;
pub type ResourceGridF64 = ResourceGrid<f64>;
pub type ChannelRealizationF64 = ChannelRealization<f64>;
pub type ChannelEstimateF64 = ChannelEstimate<f64>;
pub type CorrelationProfileF64 = CorrelationProfile<f64>;
pub type CodebookF64 = Codebook<f64>;
pub type FeasibleSetsF64 = FeasibleSets<f64>;
pub type MonteCarloMseF64 = MonteCarloMse<f64>;
pub type SimParamsF64 = SimParams<f64>;

pub type GridDimsF32 = GridDims<f32>;
pub type PilotConfigF32 = PilotConfig<f32>;
pub type CodebookF32 = Codebook<f32>;
