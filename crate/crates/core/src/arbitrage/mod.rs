//! Arbitrage opportunities, marginal and aggregate profit, resale pricing,
//! and the search for profit-maximizing cascade caps.

mod optimize;

pub use optimize::{
    enumerate_policies, optimize_policy, MarketContext, OptimizationResult, OptimizerConfig,
    OrderStrategy,
};

use serde::{Deserialize, Serialize};

use crate::curves::PriceFrontier;
use crate::error::{ArbError, Result};
use crate::grid::{indices_in_range, trapezoid};
use crate::scalar::Scalar;

/// Profit available at one performance level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MarginalProfit<T> {
    Value(T),
    /// The policy reaches a level no provider offers; there is no market
    /// price to compare against, so the level is left out of aggregation.
    UnboundedReference,
}

impl<T: Scalar> MarginalProfit<T> {
    /// Value used in aggregation (unbounded levels count as zero).
    pub fn value(self) -> T {
        match self {
            MarginalProfit::Value(v) => v,
            MarginalProfit::UnboundedReference => T::zero(),
        }
    }
}

fn profit_from<T: Scalar>(market: Option<T>, buy: Option<T>) -> MarginalProfit<T> {
    match (market, buy) {
        (_, None) => MarginalProfit::Value(T::zero()),
        (None, Some(_)) => MarginalProfit::UnboundedReference,
        (Some(cp), Some(cq)) => MarginalProfit::Value((cp - cq).max(T::zero())),
    }
}

/// `Π_q(u) = max(C_P(u) - C_q(u), 0)`.
pub fn marginal_profit<T: Scalar>(
    market: &PriceFrontier<T>,
    policy: &PriceFrontier<T>,
    u: T,
) -> MarginalProfit<T> {
    profit_from(market.cost_at(u), policy.cost_at(u))
}

/// Lowest grid level at which the policy buys strictly below the market
/// price, if any.
pub fn detect_opportunity<T: Scalar>(
    market: &PriceFrontier<T>,
    policy: &PriceFrontier<T>,
) -> Result<Option<T>> {
    market.check_grid(policy)?;
    Ok(market
        .performance
        .iter()
        .zip(market.cost.iter().zip(&policy.cost))
        .find(|(_, (cp, cq))| matches!((cp, cq), (Some(cp), Some(cq)) if cq < cp))
        .map(|(&u, _)| u))
}

/// Demand weighting `w(u)` over performance levels.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum DemandWeights<T> {
    /// `w ≡ 1`.
    #[default]
    Uniform,
    Constant(T),
    /// One weight per performance grid point.
    PerPoint(Vec<T>),
}

impl<T: Scalar> DemandWeights<T> {
    pub fn validate(&self, grid_len: usize) -> Result<()> {
        match self {
            DemandWeights::Uniform => Ok(()),
            DemandWeights::Constant(w) if *w >= T::zero() => Ok(()),
            DemandWeights::Constant(_) => Err(ArbError::invalid("demand weight must be >= 0")),
            DemandWeights::PerPoint(ws) => {
                if ws.len() != grid_len {
                    Err(ArbError::invalid(format!(
                        "{} demand weights for a grid of {grid_len} points",
                        ws.len()
                    )))
                } else if ws.iter().any(|w| !(*w >= T::zero())) {
                    Err(ArbError::invalid("demand weights must be >= 0"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn at(&self, index: usize) -> T {
        match self {
            DemandWeights::Uniform => T::one(),
            DemandWeights::Constant(w) => *w,
            DemandWeights::PerPoint(ws) => ws[index],
        }
    }
}

/// Buy cost, resale price and resulting profit of a policy over a
/// performance grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitCurve<T> {
    pub performance: Vec<T>,
    pub market_cost: Vec<Option<T>>,
    pub buy_cost: Vec<Option<T>>,
    pub sell_price: Vec<Option<T>>,
    pub profit: Vec<MarginalProfit<T>>,
    /// profit / sell price
    pub margin: Vec<Option<T>>,
    /// profit / buy cost
    pub markup: Vec<Option<T>>,
}

impl<T: Scalar> ProfitCurve<T> {
    /// Reselling at exactly the market price.
    pub fn against_market(market: &PriceFrontier<T>, policy: &PriceFrontier<T>) -> Result<Self> {
        market.check_grid(policy)?;
        let sell = market
            .cost
            .iter()
            .zip(&policy.cost)
            .map(|(cp, cq)| match (cp, cq) {
                (Some(cp), Some(cq)) => Some(cp.max(*cq)),
                _ => None,
            })
            .collect();
        Ok(Self::assemble(market, policy, sell))
    }

    /// Reselling at the undercut price from [`sell_prices`].
    pub fn with_undercut(
        market: &PriceFrontier<T>,
        policy: &PriceFrontier<T>,
        undercut_fraction: T,
    ) -> Result<Self> {
        let sell = sell_prices(policy, market, undercut_fraction)?;
        Ok(Self::assemble(market, policy, sell.cost))
    }

    fn assemble(market: &PriceFrontier<T>, policy: &PriceFrontier<T>, sell: Vec<Option<T>>) -> Self {
        let n = market.len();
        let mut profit = Vec::with_capacity(n);
        let mut margin = Vec::with_capacity(n);
        let mut markup = Vec::with_capacity(n);
        for i in 0..n {
            let p = match (market.cost[i], policy.cost[i], sell[i]) {
                (None, Some(_), _) => MarginalProfit::UnboundedReference,
                (_, Some(cq), Some(s)) => MarginalProfit::Value((s - cq).max(T::zero())),
                _ => MarginalProfit::Value(T::zero()),
            };
            let value = match p {
                MarginalProfit::Value(v) => Some(v),
                MarginalProfit::UnboundedReference => None,
            };
            margin.push(match (value, sell[i]) {
                (Some(v), Some(s)) if s > T::zero() => Some(v / s),
                _ => None,
            });
            markup.push(match (value, policy.cost[i]) {
                (Some(v), Some(c)) if c > T::zero() => Some(v / c),
                _ => None,
            });
            profit.push(p);
        }
        Self {
            performance: market.performance.clone(),
            market_cost: market.cost.clone(),
            buy_cost: policy.cost.clone(),
            sell_price: sell,
            profit,
            margin,
            markup,
        }
    }

    /// Trapezoid integral of `Π(u) w(u)` over grid points in `[lo, hi]`.
    pub fn integrate(&self, weights: &DemandWeights<T>, u_range: (T, T)) -> Result<T> {
        weights.validate(self.performance.len())?;
        let idx = range_indices(&self.performance, u_range)?;
        let xs: Vec<T> = idx.iter().map(|&i| self.performance[i]).collect();
        let ys: Vec<T> = idx
            .iter()
            .map(|&i| self.profit[i].value() * weights.at(i))
            .collect();
        Ok(trapezoid(&xs, &ys))
    }

    /// Mean margin over grid points in `[lo, hi]` where the market price is
    /// defined.
    pub fn mean_margin(&self, u_range: (T, T)) -> Result<T> {
        let idx = range_indices(&self.performance, u_range)?;
        let values: Vec<T> = idx
            .into_iter()
            .filter(|&i| self.market_cost[i].is_some())
            .map(|i| self.margin[i].unwrap_or(T::zero()))
            .collect();
        if values.is_empty() {
            return Err(ArbError::Empty("no priced performance levels in range"));
        }
        Ok(crate::scalar::mean(values))
    }
}

pub(crate) fn range_indices<T: Scalar>(points: &[T], (lo, hi): (T, T)) -> Result<Vec<usize>> {
    if !(lo <= hi) {
        return Err(ArbError::Empty("performance range is empty"));
    }
    let idx = indices_in_range(points, lo, hi);
    if idx.is_empty() {
        return Err(ArbError::Empty("performance range contains no grid points"));
    }
    Ok(idx)
}

/// `∫ Π_q(u) w(u) du` over `u_range`.
pub fn aggregate_profit<T: Scalar>(
    market: &PriceFrontier<T>,
    policy: &PriceFrontier<T>,
    weights: &DemandWeights<T>,
    u_range: (T, T),
) -> Result<T> {
    ProfitCurve::against_market(market, policy)?.integrate(weights, u_range)
}

/// Resale price undercutting the market by `undercut_fraction`, floored at
/// the policy's own buy cost. Levels the policy cannot reach, or that have no
/// market price, are left unpriced.
pub fn sell_prices<T: Scalar>(
    policy: &PriceFrontier<T>,
    market: &PriceFrontier<T>,
    undercut_fraction: T,
) -> Result<PriceFrontier<T>> {
    if !(undercut_fraction > T::zero() && undercut_fraction < T::one()) {
        return Err(ArbError::invalid(format!(
            "undercut fraction must lie in (0, 1), got {undercut_fraction}"
        )));
    }
    market.check_grid(policy)?;
    let keep = T::one() - undercut_fraction;
    let cost = market
        .cost
        .iter()
        .zip(&policy.cost)
        .map(|(cp, cq)| match (cp, cq) {
            (Some(cp), Some(cq)) => Some((*cp * keep).max(*cq)),
            _ => None,
        })
        .collect();
    Ok(PriceFrontier {
        label: format!("{} (sell)", policy.label),
        performance: market.performance.clone(),
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frontier(label: &str, costs: &[Option<f64>]) -> PriceFrontier<f64> {
        let n = costs.len();
        PriceFrontier {
            label: label.into(),
            performance: (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
            cost: costs.to_vec(),
        }
    }

    #[test]
    fn marginal_profit_examples() {
        let market = frontier("m", &[Some(0.0), Some(120.0), None]);
        let pol = frontier("q", &[Some(0.0), Some(80.0), Some(300.0)]);
        assert_eq!(marginal_profit(&market, &pol, 0.5), MarginalProfit::Value(40.0));
        let pricey = frontier("q", &[Some(0.0), Some(130.0), None]);
        assert_eq!(marginal_profit(&market, &pricey, 0.5), MarginalProfit::Value(0.0));
        let none = frontier("q", &[Some(0.0), None, None]);
        assert_eq!(marginal_profit(&market, &none, 0.5), MarginalProfit::Value(0.0));
        assert_eq!(marginal_profit(&market, &pol, 1.0), MarginalProfit::UnboundedReference);
    }

    #[test]
    fn detect_opportunity_examples() {
        let market = frontier("m", &[Some(0.0), Some(120.0), Some(200.0)]);
        let pol = frontier("q", &[Some(0.0), Some(80.0), Some(150.0)]);
        assert_eq!(detect_opportunity(&market, &pol).unwrap(), Some(0.5));
        assert_eq!(detect_opportunity(&market, &market).unwrap(), None);
        let other_grid = PriceFrontier {
            performance: vec![0.0, 1.0],
            cost: vec![Some(0.0), Some(1.0)],
            label: "x".into(),
        };
        assert!(matches!(detect_opportunity(&market, &other_grid), Err(ArbError::GridMismatch)));
    }

    #[test]
    fn aggregate_profit_examples() {
        let performance: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let market_cost: Vec<Option<f64>> = performance.iter().map(|u| Some(100.0 + 100.0 * u)).collect();
        let market = PriceFrontier { label: "m".into(), performance: performance.clone(), cost: market_cost.clone() };
        // Π = 40 on [0.70, 0.75], zero elsewhere
        let pol_cost: Vec<Option<f64>> = performance
            .iter()
            .zip(&market_cost)
            .map(|(u, c)| {
                let c = c.unwrap();
                if *u >= 0.7 - 1e-9 && *u <= 0.75 + 1e-9 { Some(c - 40.0) } else { Some(c) }
            })
            .collect();
        let pol = PriceFrontier { label: "q".into(), performance, cost: pol_cost };
        let area = aggregate_profit(&market, &pol, &DemandWeights::Uniform, (0.7, 0.75)).unwrap();
        assert!((area - 2.0).abs() < 1e-9, "{area}");
        assert_eq!(aggregate_profit(&market, &market, &DemandWeights::Uniform, (0.0, 1.0)).unwrap(), 0.0);
        assert_eq!(aggregate_profit(&market, &pol, &DemandWeights::Constant(0.0), (0.0, 1.0)).unwrap(), 0.0);
        assert!(aggregate_profit(&market, &pol, &DemandWeights::Uniform, (0.8, 0.7)).is_err());
        assert!(aggregate_profit(&market, &pol, &DemandWeights::Constant(-1.0), (0.0, 1.0)).is_err());
    }

    #[test]
    fn sell_price_examples() {
        let market = frontier("m", &[Some(0.0), Some(120.0), Some(100.0)]);
        let pol = frontier("q", &[Some(0.0), Some(80.0), Some(100.0)]);
        let sell = sell_prices(&pol, &market, 0.01).unwrap();
        assert!((sell.cost[1].unwrap() - 118.8).abs() < 1e-12);
        assert_eq!(sell.cost[2], Some(100.0));
        let curve = ProfitCurve::with_undercut(&market, &pol, 0.01).unwrap();
        assert!((curve.margin[1].unwrap() - 38.8 / 118.8).abs() < 1e-12);
        assert!((curve.margin[1].unwrap() - 0.327).abs() < 1e-3);
        assert_eq!(curve.profit[2], MarginalProfit::Value(0.0));
        assert!(sell_prices(&pol, &market, 0.0).is_err());
        assert!(sell_prices(&pol, &market, 1.0).is_err());

        let at_market = ProfitCurve::against_market(&market, &pol).unwrap();
        assert!((at_market.markup[1].unwrap() - 0.5).abs() < 1e-12);
        assert!((at_market.margin[1].unwrap() - 40.0 / 120.0).abs() < 1e-12);
    }

    #[test]
    fn profit_curve_invariants() {
        let market = frontier("m", &[Some(0.0), Some(50.0), Some(120.0), None]);
        let pol = frontier("q", &[Some(0.0), Some(60.0), Some(80.0), Some(200.0)]);
        for f in [0.01, 0.2, 0.9] {
            let c = ProfitCurve::with_undercut(&market, &pol, f).unwrap();
            for i in 0..c.performance.len() {
                if let (Some(s), Some(b)) = (c.sell_price[i], c.buy_cost[i]) {
                    assert!(s >= b);
                    if s > 0.0 {
                        assert!((0.0..1.0).contains(&c.margin[i].unwrap()));
                        assert!(c.markup[i].unwrap() >= 0.0);
                    }
                }
                if let MarginalProfit::Value(v) = c.profit[i] {
                    assert!(v >= 0.0);
                }
            }
            assert_eq!(c.profit[3], MarginalProfit::UnboundedReference);
        }
    }
}
