use std::cmp::Ordering;

use rayon::prelude::*;

use super::{DemandWeights, ProfitCurve};
use crate::cascade::{efficiency_order, BoundCascade, CascadePolicy, CascadeStep};
use crate::curves::{provider_frontiers, MarketFrontier, PriceFrontier, ProviderCurve};
use crate::error::{ArbError, Result};
use crate::grid::UniformGrid;
use crate::ingest::Dataset;
use crate::scalar::Scalar;

/// Which provider orderings the cap search considers.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum OrderStrategy {
    /// Most cost-efficient provider at the lowest budget first.
    #[default]
    Efficiency,
    /// Every ordering for markets of at most four providers; larger markets
    /// fall back to [`OrderStrategy::Efficiency`]. The null policy still
    /// follows the efficiency order.
    Exhaustive,
    Fixed(Vec<String>),
}

const MAX_EXHAUSTIVE_PROVIDERS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig<T> {
    pub order: OrderStrategy,
    /// Per-issue budget ceiling; caps sum to this value.
    pub b_max: T,
    pub cap_step: T,
    /// Budget grid spacing for curves and cost integrals.
    pub grid_step: T,
    /// Performance grid spacing for frontiers.
    pub u_step: T,
    pub weights: DemandWeights<T>,
    /// Profit integration range; `None` uses the market's full reachable range.
    pub u_range: Option<(T, T)>,
}

impl<T: Scalar> OptimizerConfig<T> {
    pub fn new(b_max: T) -> Self {
        Self {
            order: OrderStrategy::Efficiency,
            b_max,
            cap_step: T::lit(0.01),
            grid_step: T::lit(0.001),
            u_step: T::lit(0.001),
            weights: DemandWeights::Uniform,
            u_range: None,
        }
    }

    pub fn budget_grid(&self) -> Result<UniformGrid<T>> {
        UniformGrid::new(self.b_max, self.grid_step)
    }

    pub fn u_grid(&self) -> Result<UniformGrid<T>> {
        UniformGrid::unit(self.u_step)
    }
}

/// Provider curves, frontiers and the market price for one dataset.
#[derive(Debug, Clone)]
pub struct MarketContext<T> {
    pub budget_grid: UniformGrid<T>,
    pub u_grid: UniformGrid<T>,
    pub providers: Vec<(ProviderCurve<T>, PriceFrontier<T>)>,
    pub market: MarketFrontier<T>,
}

impl<T: Scalar> MarketContext<T> {
    pub fn new(dataset: &Dataset<T>, budget_grid: UniformGrid<T>, u_grid: UniformGrid<T>) -> Result<Self> {
        let providers = provider_frontiers(dataset, &budget_grid, &u_grid)?;
        let frontiers: Vec<PriceFrontier<T>> = providers.iter().map(|(_, f)| f.clone()).collect();
        let market = MarketFrontier::new(&frontiers)?;
        Ok(Self {
            budget_grid,
            u_grid,
            providers,
            market,
        })
    }

    pub fn from_config(dataset: &Dataset<T>, config: &OptimizerConfig<T>) -> Result<Self> {
        Self::new(dataset, config.budget_grid()?, config.u_grid()?)
    }

    /// `[0, highest level any provider reaches]`.
    pub fn reachable_range(&self) -> Option<(T, T)> {
        self.market.frontier.max_reachable().map(|hi| (T::zero(), hi))
    }

    pub fn policy_curve(&self, policy: &CascadePolicy<T>, dataset: &Dataset<T>) -> Result<ProviderCurve<T>> {
        if dataset.is_empty() {
            return Err(ArbError::Empty("dataset has no problems"));
        }
        Ok(BoundCascade::new(policy, dataset)?.curve(&self.budget_grid))
    }

    pub fn policy_frontier(&self, policy: &CascadePolicy<T>, dataset: &Dataset<T>) -> Result<PriceFrontier<T>> {
        let curve = self.policy_curve(policy, dataset)?;
        Ok(PriceFrontier::from_curve(&curve, &self.u_grid))
    }

    pub fn profit_curve(&self, policy: &CascadePolicy<T>, dataset: &Dataset<T>) -> Result<ProfitCurve<T>> {
        ProfitCurve::against_market(&self.market.frontier, &self.policy_frontier(policy, dataset)?)
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult<T> {
    pub policy: CascadePolicy<T>,
    /// Aggregate profit of `policy` over `u_range`.
    pub profit: T,
    pub u_range: (T, T),
    pub frontier: PriceFrontier<T>,
    pub context: MarketContext<T>,
    pub evaluated: usize,
}

impl<T: Scalar> OptimizationResult<T> {
    pub fn profit_curve(&self) -> Result<ProfitCurve<T>> {
        ProfitCurve::against_market(&self.context.market.frontier, &self.frontier)
    }
}

fn orders<T: Scalar>(dataset: &Dataset<T>, strategy: &OrderStrategy, grid_step: T) -> Result<Vec<Vec<String>>> {
    match strategy {
        OrderStrategy::Fixed(order) => {
            let mut seen = std::collections::BTreeSet::new();
            for p in order {
                dataset.provider_index(p)?;
                if !seen.insert(p) {
                    return Err(ArbError::invalid(format!("provider `{p}` listed twice")));
                }
            }
            Ok(vec![order.clone()])
        }
        OrderStrategy::Efficiency => Ok(vec![efficiency_order(dataset, grid_step)?]),
        OrderStrategy::Exhaustive => {
            let base = efficiency_order(dataset, grid_step)?;
            if base.len() > MAX_EXHAUSTIVE_PROVIDERS {
                tracing::warn!(
                    providers = base.len(),
                    "too many providers for exhaustive ordering; using efficiency order"
                );
                return Ok(vec![base]);
            }
            let mut sorted = base;
            sorted.sort();
            let mut out = Vec::new();
            permutations(&mut sorted, 0, &mut out);
            out.sort();
            Ok(out)
        }
    }
}

fn permutations(items: &mut Vec<String>, k: usize, out: &mut Vec<Vec<String>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Integer compositions: all `parts`-vectors of non-negative integers with
/// sum at most `total`, in lexicographic order.
fn bounded_compositions(parts: usize, total: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(parts);
    fn rec(parts: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == parts {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(parts, left - v, cur, out);
            cur.pop();
        }
    }
    rec(parts, total, &mut cur, &mut out);
    out
}

/// Every cascade on the cap grid: the first providers take multiples of
/// `cap_step`, the last holds the residual up to `b_max`.
pub fn enumerate_policies<T: Scalar>(
    dataset: &Dataset<T>,
    strategy: &OrderStrategy,
    b_max: T,
    cap_step: T,
) -> Result<Vec<CascadePolicy<T>>> {
    if !(cap_step > T::zero()) {
        return Err(ArbError::invalid("cap step must be > 0"));
    }
    if !(b_max > T::zero()) {
        return Err(ArbError::invalid("budget ceiling must be > 0"));
    }
    let units = ((b_max / cap_step).as_f64() + 1e-9).floor() as usize;
    let mut out = Vec::new();
    for order in orders(dataset, strategy, cap_step.min(b_max))? {
        for comp in bounded_compositions(order.len() - 1, units) {
            let mut caps: Vec<T> = comp.iter().map(|&c| T::count(c) * cap_step).collect();
            let used = caps.iter().fold(T::zero(), |a, &c| a + c);
            caps.push((b_max - used).max(T::zero()));
            let steps = order
                .iter()
                .zip(caps)
                .map(|(p, cap)| CascadeStep {
                    provider_id: p.clone(),
                    cap,
                })
                .collect();
            out.push(CascadePolicy::new(steps, Some(b_max))?);
        }
    }
    Ok(out)
}

/// Higher profit first; ties prefer lexicographically larger caps (budget
/// spent earlier in the cascade), then the lexicographically smaller order.
fn rank<T: Scalar>(a: &(T, &CascadePolicy<T>), b: &(T, &CascadePolicy<T>)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| {
            let (ca, cb) = (a.1.caps(), b.1.caps());
            cb.partial_cmp(&ca).unwrap_or(Ordering::Equal)
        })
        .then_with(|| a.1.providers().cmp(b.1.providers()))
}

/// Grid search for the cap vector (and, optionally, order) maximizing
/// aggregate profit against the dataset's own market price.
///
/// When no cascade earns positive profit the result is the null policy: the
/// whole budget on the first provider of the preferred order, with profit 0.
pub fn optimize_policy<T: Scalar>(
    dataset: &Dataset<T>,
    config: &OptimizerConfig<T>,
) -> Result<OptimizationResult<T>> {
    if dataset.providers().len() < 2 {
        return Err(ArbError::invalid("optimization needs at least two providers"));
    }
    if dataset.is_empty() {
        return Err(ArbError::Empty("dataset has no problems"));
    }
    let context = MarketContext::from_config(dataset, config)?;
    config.weights.validate(context.u_grid.len())?;
    let u_range = match config.u_range {
        Some(r) => r,
        None => context
            .reachable_range()
            .ok_or(ArbError::Empty("no provider reaches any performance level"))?,
    };
    let candidates = enumerate_policies(dataset, &config.order, config.b_max, config.cap_step)?;
    tracing::debug!(candidates = candidates.len(), "cap search started");

    let scored = candidates
        .par_iter()
        .map(|policy| {
            let frontier = context.policy_frontier(policy, dataset)?;
            let profit = ProfitCurve::against_market(&context.market.frontier, &frontier)?
                .integrate(&config.weights, u_range)?;
            Ok(profit)
        })
        .collect::<Result<Vec<T>>>()?;

    let best = scored
        .iter()
        .copied()
        .zip(&candidates)
        .min_by(rank)
        .expect("at least one candidate");
    tracing::info!(
        evaluated = candidates.len(),
        profit = best.0.as_f64(),
        policy = %best.1,
        "cap search finished"
    );

    let (policy, profit) = if best.0 > T::zero() {
        (best.1.clone(), best.0)
    } else {
        let order = match &config.order {
            OrderStrategy::Fixed(order) => order.clone(),
            _ => efficiency_order(dataset, config.cap_step.min(config.b_max))?,
        };
        let caps = order
            .into_iter()
            .enumerate()
            .map(|(i, p)| (p, if i == 0 { config.b_max } else { T::zero() }));
        (CascadePolicy::from_caps(caps)?.with_ceiling(config.b_max)?, T::zero())
    };
    let frontier = context.policy_frontier(&policy, dataset)?;
    Ok(OptimizationResult {
        policy,
        profit,
        u_range,
        frontier,
        context,
        evaluated: candidates.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{CostUnit, ProblemStats};

    #[test]
    fn compositions_count() {
        assert_eq!(bounded_compositions(1, 100).len(), 101);
        assert_eq!(bounded_compositions(2, 4).len(), 15);
        assert_eq!(bounded_compositions(0, 4), vec![Vec::<usize>::new()]);
    }

    fn dataset(providers: &[&str]) -> Dataset<f64> {
        let mut stats = Vec::new();
        for (k, p) in providers.iter().enumerate() {
            for j in 0..3 {
                stats.push(ProblemStats::new(p, &format!("q{j}"), 4, (j + k) as u64 % 5, 0.1 * (k + 1) as f64).unwrap());
            }
        }
        Dataset::new(CostUnit::Usd, Vec::<String>::new(), stats).unwrap()
    }

    #[test]
    fn enumeration_sums_to_budget() {
        let ds = dataset(&["a", "b", "c"]);
        let pols = enumerate_policies(&ds, &OrderStrategy::Efficiency, 1.0, 0.25).unwrap();
        assert_eq!(pols.len(), 15);
        for p in &pols {
            assert!((p.total_cap() - 1.0).abs() < 1e-12);
        }
        let all = enumerate_policies(&ds, &OrderStrategy::Exhaustive, 1.0, 0.5).unwrap();
        assert_eq!(all.len(), 6 * 6);
    }

    #[test]
    fn fixed_order_is_validated() {
        let ds = dataset(&["a", "b"]);
        let bad = OrderStrategy::Fixed(vec!["a".into(), "zzz".into()]);
        assert!(enumerate_policies(&ds, &bad, 1.0, 0.1).is_err());
        let dup = OrderStrategy::Fixed(vec!["a".into(), "a".into()]);
        assert!(enumerate_policies(&ds, &dup, 1.0, 0.1).is_err());
    }

    #[test]
    fn needs_two_providers() {
        let ds = dataset(&["a"]);
        assert!(optimize_policy(&ds, &OptimizerConfig::new(1.0)).is_err());
    }
}
