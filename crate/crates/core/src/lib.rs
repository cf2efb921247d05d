//! Arbitrage analysis for markets of AI model providers.
//!
//! Starting from per-problem attempt logs, the crate builds budget-indexed
//! performance and cost curves for each provider, inverts them into
//! cost-to-performance frontiers, and evaluates provider cascades with
//! per-provider spending caps as arbitrage policies: profit against the
//! market price, cap optimization, price competition between arbitrageurs,
//! revenue attribution, and robustness of fitted policies.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the common `f64` instantiation.

pub mod arbitrage;
pub mod cascade;
pub mod competition;
pub mod curves;
mod error;
pub mod grid;
pub mod ingest;
pub mod mc_oracle;
pub mod robustness;
mod scalar;

pub use error::{ArbError, Result};
pub use grid::UniformGrid;
pub use scalar::Scalar;

pub type Dataset64 = ingest::Dataset<f64>;
pub type ProblemStats64 = ingest::ProblemStats<f64>;
pub type AttemptRecord64 = ingest::AttemptRecord<f64>;
pub type AttemptLog64 = ingest::AttemptLog<f64>;
pub type ProviderCurve64 = curves::ProviderCurve<f64>;
pub type PriceFrontier64 = curves::PriceFrontier<f64>;
pub type MarketFrontier64 = curves::MarketFrontier<f64>;
pub type CascadePolicy64 = cascade::CascadePolicy<f64>;
pub type ProfitCurve64 = arbitrage::ProfitCurve<f64>;
pub type OptimizerConfig64 = arbitrage::OptimizerConfig<f64>;
pub type MarketState64 = competition::MarketState<f64>;

pub type Dataset32 = ingest::Dataset<f32>;
pub type ProviderCurve32 = curves::ProviderCurve<f32>;
pub type PriceFrontier32 = curves::PriceFrontier<f32>;
pub type CascadePolicy32 = cascade::CascadePolicy<f32>;
