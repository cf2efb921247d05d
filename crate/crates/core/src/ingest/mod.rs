//! Attempt-log ingestion: pricing, aggregation into per-provider×problem
//! statistics, and tag-based dataset splits.

mod dataset;
mod log;
mod pricing;
mod record;

pub use dataset::{Dataset, ProblemStats};
pub use log::{aggregate, Attempt, AttemptLog};
pub use pricing::{
    flop_cost, price_attempt, read_parameter_table, read_pricing_table, CostModel,
    ParameterTable, PricingEntry, PricingTable,
};
pub use record::{read_attempt_log, AttemptRecord, CostUnit};
