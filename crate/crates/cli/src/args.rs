use std::path::PathBuf;

use arbitrage_core::ingest::CostUnit;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "arbitrage", version, about = "Arbitrage analysis for AI model markets")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Attempt log, one JSON record per line
    #[arg(long, global = true)]
    pub logs: Option<PathBuf>,

    /// Dataset written by `ingest` (alternative to --logs)
    #[arg(long, global = true, conflicts_with = "logs")]
    pub dataset: Option<PathBuf>,

    /// Token price table (provider_id,input_price,output_price,cache_discount),
    /// or parameter counts (provider_id,params) with --cost-unit flops
    #[arg(long, global = true)]
    pub pricing: Option<PathBuf>,

    /// Unit of recorded costs
    #[arg(long, global = true, value_parser = parse_unit)]
    pub cost_unit: Option<CostUnit>,

    /// Output directory
    #[arg(long, global = true, env = "ARB_OUT_DIR", default_value = "arbitrage-out")]
    pub out: PathBuf,

    /// Per-issue budget ceiling
    #[arg(long, global = true, default_value_t = 1.0)]
    pub b_max: f64,

    /// Budget grid spacing
    #[arg(long, global = true, default_value_t = 0.001)]
    pub grid_step: f64,

    /// Performance grid spacing
    #[arg(long, global = true, default_value_t = 0.001)]
    pub u_step: f64,

    /// Lower end of the performance range analysed
    #[arg(long, global = true)]
    pub u_min: Option<f64>,

    /// Upper end of the performance range analysed
    #[arg(long, global = true)]
    pub u_max: Option<f64>,

    /// Cap search grid spacing
    #[arg(long, global = true, default_value_t = 0.01)]
    pub cap_step: f64,

    /// Provider orderings searched by the optimizer
    #[arg(long, global = true, value_enum, default_value_t = OrderArg::Efficiency)]
    pub order: OrderArg,

    /// Cascade order for --order fixed, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub providers: Vec<String>,

    /// Fraction by which sellers undercut the prevailing price
    #[arg(long, global = true)]
    pub undercut: Option<f64>,

    /// Master random seed
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Efficiency,
    Exhaustive,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Continuous,
    Lumpy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AccountingArg {
    WorstCase,
    Optimistic,
}

fn parse_unit(s: &str) -> Result<CostUnit, String> {
    s.parse().map_err(|e: arbitrage_core::ArbError| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price and aggregate attempt logs into a dataset
    Ingest,
    /// Per-provider performance and cost curves and the market price
    Frontier,
    /// Search for the profit-maximizing cascade caps
    Optimize,
    /// Price competition between arbitrageurs reselling one policy
    Compete {
        /// Policy file (provider_id,cap); optimized when omitted
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Maximum number of rounds
        #[arg(long, default_value_t = 1000)]
        rounds: usize,
        /// Number of competing arbitrageurs
        #[arg(long, default_value_t = 2)]
        arbitrageurs: usize,
    },
    /// Provider revenue before and after arbitrage
    Revenue {
        /// Extra candidate policy (provider_id,cap)
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Margin of policies fitted under limited search budgets
    Robustness {
        /// Total search budgets to sweep, comma separated
        #[arg(long, value_delimiter = ',', default_value = "10")]
        search_budget: Vec<f64>,
        /// Spend allowed per provider and problem while searching
        #[arg(long, default_value_t = 0.5)]
        per_query_cap: f64,
        /// Bootstrap replicates per budget
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
        #[arg(long, value_enum, default_value_t = AccountingArg::WorstCase)]
        accounting: AccountingArg,
    },
    /// Fit on problems with a tag, evaluate on the rest, and vice versa
    Ood {
        #[arg(long)]
        split_tag: String,
    },
    /// Compare analytic curves with Monte Carlo simulation
    Simulate {
        /// Cascade to simulate; every provider alone when omitted
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Continuous)]
        mode: ModeArg,
        /// Number of budgets evaluated, evenly spaced up to --b-max
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Frontier => "frontier",
            Command::Optimize => "optimize",
            Command::Compete { .. } => "compete",
            Command::Revenue { .. } => "revenue",
            Command::Robustness { .. } => "robustness",
            Command::Ood { .. } => "ood",
            Command::Simulate { .. } => "simulate",
        }
    }
}
