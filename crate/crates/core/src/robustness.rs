//! Search cost of fitting a policy from a limited number of price
//! comparisons, bootstrap intervals over those samples, and evaluation under
//! distribution shift.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arbitrage::{optimize_policy, MarketContext, OptimizerConfig, ProfitCurve};
use crate::cascade::CascadePolicy;
use crate::error::{ArbError, Result};
use crate::ingest::{Attempt, AttemptLog, Dataset};
use crate::scalar::Scalar;

/// How a sampled problem is charged against the search budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SpendAccounting {
    /// Every problem costs the full per-query cap.
    #[default]
    WorstCase,
    /// Every problem costs what was actually spent on redundant providers:
    /// all truncated spend except that of the provider with the largest
    /// spend, whose answer is the one served.
    Optimistic,
}

/// Problems bought within a search budget, with attempts truncated to the
/// per-query cap.
#[derive(Debug, Clone)]
pub struct SearchSample<T> {
    pub log: AttemptLog<T>,
    /// In sampling order.
    pub problems: Vec<String>,
    /// Amount charged against the budget.
    pub charged: T,
    /// Actual truncated spend over all providers.
    pub total_spend: T,
    pub seed: u64,
}

impl<T: Scalar> SearchSample<T> {
    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn dataset(&self) -> Result<Dataset<T>> {
        self.log.to_dataset()
    }
}

/// Leading attempts whose cumulative cost stays within `cap`.
fn within_cap<T: Scalar>(attempts: &[Attempt<T>], cap: T) -> usize {
    let mut spent = T::zero();
    for (i, a) in attempts.iter().enumerate() {
        spent = spent + a.cost;
        if spent > cap {
            return i;
        }
    }
    attempts.len()
}

fn truncated_spend<T: Scalar>(log: &AttemptLog<T>, problem: &str, cap: T) -> (T, T) {
    let per_provider: Vec<T> = log
        .providers()
        .map(|p| {
            let attempts = log.attempts(p, problem);
            let k = within_cap(attempts, cap);
            attempts[..k].iter().fold(T::zero(), |acc, a| acc + a.cost)
        })
        .collect();
    let total = per_provider.iter().fold(T::zero(), |a, &x| a + x);
    let served = per_provider.iter().copied().fold(T::zero(), T::max);
    (total, total - served)
}

/// Shuffles the problems with `seed` and buys them in that order until the
/// budget runs out. Within a bought problem each provider's attempts are
/// kept in recorded order while their cumulative cost stays within
/// `per_query_cap`.
pub fn draw_search_sample<T: Scalar>(
    log: &AttemptLog<T>,
    total_budget: T,
    per_query_cap: T,
    seed: u64,
    accounting: SpendAccounting,
) -> Result<SearchSample<T>> {
    if !(total_budget > T::zero()) || !(per_query_cap > T::zero()) {
        return Err(ArbError::invalid("search budget and per-query cap must be > 0"));
    }
    let empty = || ArbError::EmptySample {
        budget: total_budget.as_f64(),
        per_query: per_query_cap.as_f64(),
    };
    let mut order: Vec<String> = log.problems().map(str::to_owned).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut chosen = Vec::new();
    let (mut charged, mut spent) = (T::zero(), T::zero());
    match accounting {
        SpendAccounting::WorstCase => {
            let slots = ((total_budget / per_query_cap).as_f64() + 1e-9).floor() as usize;
            if slots == 0 {
                return Err(empty());
            }
            for p in order.into_iter().take(slots) {
                spent = spent + truncated_spend(log, &p, per_query_cap).0;
                charged = charged + per_query_cap;
                chosen.push(p);
            }
        }
        SpendAccounting::Optimistic => {
            for p in order {
                let (total, redundant) = truncated_spend(log, &p, per_query_cap);
                if charged + redundant > total_budget {
                    break;
                }
                charged = charged + redundant;
                spent = spent + total;
                chosen.push(p);
            }
        }
    }
    if chosen.is_empty() {
        return Err(empty());
    }
    tracing::debug!(problems = chosen.len(), charged = charged.as_f64(), seed, "search sample drawn");
    let truncated = log.select(&chosen, |a| within_cap(a, per_query_cap));
    Ok(SearchSample {
        log: truncated,
        problems: chosen,
        charged,
        total_spend: spent,
        seed,
    })
}

/// A fitted policy and its margin on the evaluation data.
#[derive(Debug, Clone)]
pub struct FitOutcome<T> {
    pub policy: CascadePolicy<T>,
    /// Mean of profit / sell price over the evaluation range.
    pub margin: T,
}

fn fitting_config<T: Scalar>(config: &OptimizerConfig<T>, u_range: (T, T)) -> OptimizerConfig<T> {
    let mut c = config.clone();
    c.u_range.get_or_insert(u_range);
    c
}

fn check_range<T: Scalar>((lo, hi): (T, T)) -> Result<()> {
    if T::zero() <= lo && lo <= hi && hi <= T::one() {
        Ok(())
    } else {
        Err(ArbError::invalid(format!("performance range [{lo}, {hi}] must lie within [0, 1]")))
    }
}

fn evaluate<T: Scalar>(
    context: &MarketContext<T>,
    eval: &Dataset<T>,
    policy: &CascadePolicy<T>,
    u_range: (T, T),
) -> Result<T> {
    let frontier = context.policy_frontier(policy, eval)?;
    ProfitCurve::against_market(&context.market.frontier, &frontier)?.mean_margin(u_range)
}

fn fit_with_context<T: Scalar>(
    train: &Dataset<T>,
    context: &MarketContext<T>,
    eval: &Dataset<T>,
    config: &OptimizerConfig<T>,
    u_range: (T, T),
) -> Result<FitOutcome<T>> {
    let fitted = optimize_policy(train, &fitting_config(config, u_range))?;
    let margin = evaluate(context, eval, &fitted.policy, u_range)?;
    Ok(FitOutcome {
        policy: fitted.policy,
        margin,
    })
}

/// Optimizes on the sample, then measures the policy's mean margin against
/// `eval`'s market prices over `u_range`.
pub fn fit_and_evaluate<T: Scalar>(
    sample: &SearchSample<T>,
    eval: &Dataset<T>,
    config: &OptimizerConfig<T>,
    u_range: (T, T),
) -> Result<FitOutcome<T>> {
    check_range(u_range)?;
    if sample.is_empty() {
        return Err(ArbError::Empty("search sample has no problems"));
    }
    let context = MarketContext::from_config(eval, config)?;
    fit_with_context(&sample.dataset()?, &context, eval, config, u_range)
}

/// Type-7 sample quantile of sorted data.
pub(crate) fn quantile<T: Scalar>(sorted: &[T], p: f64) -> T {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    crate::scalar::lerp(sorted[lo], sorted[hi], T::lit(h - lo as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi<T> {
    pub mean: T,
    /// 2.5th percentile.
    pub lo: T,
    /// 97.5th percentile.
    pub hi: T,
    /// Margin of each replicate, in replicate order.
    pub estimates: Vec<T>,
}

impl<T: Scalar> BootstrapCi<T> {
    pub fn contains(&self, value: T) -> bool {
        self.lo <= value && value <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig<T> {
    pub total_budget: T,
    pub per_query_cap: T,
    pub resamples: usize,
    pub seed: u64,
    pub accounting: SpendAccounting,
}

impl<T: Scalar> BootstrapConfig<T> {
    pub fn new(total_budget: T, per_query_cap: T, resamples: usize, seed: u64) -> Self {
        Self {
            total_budget,
            per_query_cap,
            resamples,
            seed,
            accounting: SpendAccounting::WorstCase,
        }
    }

    /// Replicate seeds, drawn from a generator seeded with the master seed.
    pub fn replicate_seeds(&self) -> Vec<u64> {
        let mut master = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.resamples).map(|_| master.next_u64()).collect()
    }
}

/// Repeats draw, fit and evaluate with independent seeds and reports the
/// mean margin with a 95% percentile interval. Evaluation is against the
/// full log's market prices.
pub fn bootstrap_profit_ci<T: Scalar>(
    log: &AttemptLog<T>,
    bootstrap: &BootstrapConfig<T>,
    config: &OptimizerConfig<T>,
    u_range: (T, T),
) -> Result<BootstrapCi<T>> {
    check_range(u_range)?;
    if bootstrap.resamples == 0 {
        return Err(ArbError::invalid("bootstrap needs at least one resample"));
    }
    let eval = log.to_dataset()?;
    let context = MarketContext::from_config(&eval, config)?;
    let mut estimates = bootstrap
        .replicate_seeds()
        .into_par_iter()
        .map(|seed| {
            let sample = draw_search_sample(
                log,
                bootstrap.total_budget,
                bootstrap.per_query_cap,
                seed,
                bootstrap.accounting,
            )?;
            Ok(fit_with_context(&sample.dataset()?, &context, &eval, config, u_range)?.margin)
        })
        .collect::<Result<Vec<T>>>()?;
    let mean = crate::scalar::mean(estimates.iter().copied());
    let original = estimates.clone();
    estimates.sort_by(|a, b| a.partial_cmp(b).expect("margins are finite"));
    Ok(BootstrapCi {
        mean,
        lo: quantile(&estimates, 0.025),
        hi: quantile(&estimates, 0.975),
        estimates: original,
    })
}

/// Fits on `train` and evaluates against `test`'s market prices. Splits
/// sharing problem ids are rejected unless `allow_overlap` is set.
pub fn ood_evaluate<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    config: &OptimizerConfig<T>,
    u_range: (T, T),
    allow_overlap: bool,
) -> Result<FitOutcome<T>> {
    check_range(u_range)?;
    if train.unit() != test.unit() {
        return Err(ArbError::UnitMismatch {
            expected: train.unit(),
            found: test.unit(),
        });
    }
    let test_ids: BTreeSet<&String> = test.problems().iter().collect();
    let shared = train.problems().iter().filter(|p| test_ids.contains(p)).count();
    if shared > 0 && !allow_overlap {
        return Err(ArbError::OverlappingSplits(shared));
    }
    let context = MarketContext::from_config(test, config)?;
    fit_with_context(train, &context, test, config, u_range)
}
