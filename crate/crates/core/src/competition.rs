//! Price competition between arbitrageurs reselling the same policy, and
//! the shift of provider revenue once arbitrage enters the market.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arbitrage::{range_indices, MarketContext};
use crate::cascade::{BoundCascade, CascadePolicy};
use crate::curves::{MarketFrontier, PriceFrontier, ProviderCurve};
use crate::error::{ArbError, Result};
use crate::ingest::Dataset;
use crate::scalar::{lerp, Scalar};

/// Relative price movement over a full round below which a simulation stops.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arbitrageur<T> {
    pub id: String,
    /// What the arbitrageur pays to serve each level.
    pub buy: PriceFrontier<T>,
    /// Current quote; `None` where the arbitrageur is not selling.
    pub sell: Vec<Option<T>>,
}

/// Provider prices plus every arbitrageur's quote.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState<T> {
    pub market: MarketFrontier<T>,
    pub arbitrageurs: Vec<Arbitrageur<T>>,
    pub round: usize,
}

impl<T: Scalar> MarketState<T> {
    pub fn new(market: MarketFrontier<T>) -> Self {
        Self {
            market,
            arbitrageurs: Vec::new(),
            round: 0,
        }
    }

    /// Adds an arbitrageur buying at `buy`; it does not quote until its
    /// first turn.
    pub fn with_arbitrageur(mut self, id: impl Into<String>, buy: PriceFrontier<T>) -> Result<Self> {
        let id = id.into();
        self.market.frontier.check_grid(&buy)?;
        if self.arbitrageurs.iter().any(|a| a.id == id) {
            return Err(ArbError::invalid(format!("arbitrageur `{id}` already present")));
        }
        let sell = vec![None; buy.len()];
        self.arbitrageurs.push(Arbitrageur { id, buy, sell });
        Ok(self)
    }

    /// `n` arbitrageurs `arb1..arbn` all buying at `buy`.
    pub fn duopoly_like(market: MarketFrontier<T>, buy: &PriceFrontier<T>, n: usize) -> Result<Self> {
        (1..=n).try_fold(Self::new(market), |s, i| s.with_arbitrageur(format!("arb{i}"), buy.clone()))
    }

    pub fn performance(&self) -> &[T] {
        &self.market.frontier.performance
    }

    fn index(&self, id: &str) -> Result<usize> {
        self.arbitrageurs
            .iter()
            .position(|a| a.id == id)
            .ok_or_else(|| ArbError::not_found("arbitrageur", id))
    }

    fn prevailing_without(&self, skip: Option<usize>) -> Vec<Option<T>> {
        (0..self.market.frontier.len())
            .map(|i| {
                let quotes = self
                    .arbitrageurs
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| Some(*k) != skip)
                    .filter_map(|(_, a)| a.sell[i]);
                std::iter::once(self.market.frontier.cost[i])
                    .flatten()
                    .chain(quotes)
                    .reduce(T::min)
            })
            .collect()
    }

    /// Lowest price on offer at each level.
    pub fn prevailing(&self) -> Vec<Option<T>> {
        self.prevailing_without(None)
    }

    pub fn prevailing_frontier(&self) -> PriceFrontier<T> {
        PriceFrontier {
            label: "prevailing".into(),
            performance: self.performance().to_vec(),
            cost: self.prevailing(),
        }
    }
}

fn check_fraction<T: Scalar>(f: T) -> Result<()> {
    if f > T::zero() && f < T::one() {
        Ok(())
    } else {
        Err(ArbError::invalid(format!("undercut fraction must lie in (0, 1), got {f}")))
    }
}

/// One turn: the arbitrageur quotes `max(buy, p · (1 - f))`, where `p` is
/// the lowest price offered by everyone else.
pub fn undercut_step<T: Scalar>(
    state: &MarketState<T>,
    arbitrageur_id: &str,
    undercut_fraction: T,
) -> Result<MarketState<T>> {
    check_fraction(undercut_fraction)?;
    let k = state.index(arbitrageur_id)?;
    let others = state.prevailing_without(Some(k));
    let keep = T::one() - undercut_fraction;
    let buy = &state.arbitrageurs[k].buy.cost;
    let sell = others
        .par_iter()
        .zip(buy.par_iter())
        .map(|(p, b)| match (p, b) {
            (Some(p), Some(b)) => Some((*p * keep).max(*b)),
            _ => None,
        })
        .collect();
    let mut next = state.clone();
    next.arbitrageurs[k].sell = sell;
    Ok(next)
}

/// Prices after one full round of turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSnapshot<T> {
    pub round: usize,
    pub prevailing: Vec<Option<T>>,
    /// Quotes per arbitrageur, in state order.
    pub sellers: Vec<Vec<Option<T>>>,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub performance: Vec<T>,
    pub sellers: Vec<String>,
    /// Round 0 is the initial state.
    pub rounds: Vec<RoundSnapshot<T>>,
    pub converged: bool,
    pub final_state: MarketState<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn final_prices(&self) -> &[Option<T>] {
        &self.rounds.last().expect("round 0 is always recorded").prevailing
    }
}

fn snapshot<T: Scalar>(state: &MarketState<T>) -> RoundSnapshot<T> {
    RoundSnapshot {
        round: state.round,
        prevailing: state.prevailing(),
        sellers: state.arbitrageurs.iter().map(|a| a.sell.clone()).collect(),
    }
}

fn max_relative_change<T: Scalar>(old: &[Option<T>], new: &[Option<T>]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => {
                let (a, b) = (a.as_f64(), b.as_f64());
                if a == b {
                    0.0
                } else {
                    (a - b).abs() / a.abs().max(b.abs())
                }
            }
            (None, None) => 0.0,
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Arbitrageurs take turns undercutting in state order for up to `rounds`
/// rounds, stopping once a full round moves no price by more than
/// [`CONVERGENCE_TOLERANCE`] relative.
pub fn bertrand_simulate<T: Scalar>(
    state: &MarketState<T>,
    rounds: usize,
    undercut_fraction: T,
) -> Result<Trajectory<T>> {
    check_fraction(undercut_fraction)?;
    if state.arbitrageurs.is_empty() {
        return Err(ArbError::Empty("no arbitrageurs in the market"));
    }
    if state.arbitrageurs.len() < 2 {
        tracing::warn!("a single arbitrageur has no competitor; prices settle after one turn");
    }
    let mut current = state.clone();
    let mut history = vec![snapshot(&current)];
    let mut converged = false;
    for _ in 0..rounds {
        let before = current.prevailing();
        let before_quotes: Vec<_> = current.arbitrageurs.iter().map(|a| a.sell.clone()).collect();
        let ids: Vec<String> = current.arbitrageurs.iter().map(|a| a.id.clone()).collect();
        for id in &ids {
            current = undercut_step(&current, id, undercut_fraction)?;
        }
        current.round += 1;
        let snap = snapshot(&current);
        let moved = before_quotes
            .iter()
            .zip(&snap.sellers)
            .map(|(a, b)| max_relative_change(a, b))
            .fold(max_relative_change(&before, &snap.prevailing), f64::max);
        history.push(snap);
        tracing::debug!(round = current.round, moved, "competition round");
        if moved < CONVERGENCE_TOLERANCE {
            converged = true;
            break;
        }
    }
    Ok(Trajectory {
        performance: current.performance().to_vec(),
        sellers: current.arbitrageurs.iter().map(|a| a.id.clone()).collect(),
        rounds: history,
        converged,
        final_state: current,
    })
}

/// `C_P′(u) = min(C_P(u), C_q*(u))`; whichever side is unreachable drops out.
pub fn equilibrium_price<T: Scalar>(market: &PriceFrontier<T>, q_star: &PriceFrontier<T>, u: T) -> Option<T> {
    match (market.cost_at(u), q_star.cost_at(u)) {
        (Some(cp), Some(cq)) => Some(cp.min(cq)),
        (cp, cq) => cp.or(cq),
    }
}

/// [`equilibrium_price`] at every grid level.
pub fn equilibrium_frontier<T: Scalar>(market: &PriceFrontier<T>, q_star: &PriceFrontier<T>) -> Result<PriceFrontier<T>> {
    market.check_grid(q_star)?;
    let cost = market
        .cost
        .iter()
        .zip(&q_star.cost)
        .map(|(cp, cq)| match (cp, cq) {
            (Some(cp), Some(cq)) => Some(cp.min(*cq)),
            (cp, cq) => cp.or(*cq),
        })
        .collect();
    Ok(PriceFrontier {
        label: "equilibrium".into(),
        performance: market.performance.clone(),
        cost,
    })
}

/// Provider revenue at one performance level, before and after arbitrage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevenueRow<T> {
    pub performance: T,
    /// What the consumer pays: the market price.
    pub expenditure: T,
    pub arbitrage_profit: T,
    /// Index into the candidate policies, `None` when buying directly from
    /// the market leader is cheapest.
    pub serving_policy: Option<usize>,
    /// Per provider, in dataset order.
    pub before: Vec<T>,
    pub after: Vec<T>,
}

impl<T: Scalar> RevenueRow<T> {
    pub fn delta(&self) -> Vec<T> {
        self.after.iter().zip(&self.before).map(|(a, b)| *a - *b).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevenueAnalysis<T> {
    pub providers: Vec<String>,
    pub rows: Vec<RevenueRow<T>>,
    /// Levels where the provider earning the most revenue changes.
    pub boundaries_before: Vec<T>,
    pub boundaries_after: Vec<T>,
}

impl<T: Scalar> RevenueAnalysis<T> {
    /// Largest relative revenue loss of each provider over the analysed
    /// range (0 for providers that never lose revenue).
    pub fn max_relative_loss(&self) -> Vec<T> {
        (0..self.providers.len())
            .map(|p| {
                self.rows
                    .iter()
                    .filter(|r| r.before[p] > T::zero())
                    .map(|r| (r.before[p] - r.after[p]) / r.before[p])
                    .fold(T::zero(), T::max)
            })
            .collect()
    }
}

fn dominant<T: Scalar>(revenue: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &r) in revenue.iter().enumerate() {
        if r > T::zero() && best.is_none_or(|b| r > revenue[b]) {
            best = Some(i);
        }
    }
    best
}

fn boundaries<T: Scalar>(rows: &[RevenueRow<T>], pick: impl Fn(&RevenueRow<T>) -> &[T]) -> Vec<T> {
    let mut out = Vec::new();
    let mut prev: Option<usize> = None;
    // levels where nobody earns anything do not start a segment
    for row in rows {
        let Some(d) = dominant(pick(row)) else { continue };
        if prev.is_some_and(|p| p != d) {
            out.push(row.performance);
        }
        prev = Some(d);
    }
    out
}

struct Candidate<'a, T: Scalar> {
    curve: ProviderCurve<T>,
    /// `[node][provider]`, providers in dataset order
    revenue: Vec<Vec<T>>,
    policy: &'a CascadePolicy<T>,
}

/// Provider revenue per performance level before arbitrage (the market
/// leader receives the full market price) and after (the cheapest candidate
/// cascade serves the level, paying each provider its share of spend, while
/// the arbitrageur resells at the market price and keeps the difference).
pub fn marginal_revenue_change<T: Scalar>(
    dataset: &Dataset<T>,
    context: &MarketContext<T>,
    candidates: &[CascadePolicy<T>],
    u_range: (T, T),
) -> Result<RevenueAnalysis<T>> {
    let providers = dataset.providers().to_vec();
    let grid = &context.budget_grid;
    let built = candidates
        .par_iter()
        .map(|policy| {
            let bound = BoundCascade::new(policy, dataset)?;
            let curve = bound.curve(grid);
            let by_order = crate::cascade::revenue_curve(policy, dataset, grid.max, grid.step)?;
            let columns = policy
                .providers()
                .map(|p| dataset.provider_index(p))
                .collect::<Result<Vec<_>>>()?;
            let revenue = by_order
                .into_iter()
                .map(|row| {
                    let mut full = vec![T::zero(); providers.len()];
                    for (v, &c) in row.into_iter().zip(&columns) {
                        full[c] = v;
                    }
                    full
                })
                .collect();
            Ok(Candidate { curve, revenue, policy })
        })
        .collect::<Result<Vec<_>>>()?;
    let frontiers: Vec<PriceFrontier<T>> = built
        .iter()
        .map(|c| PriceFrontier::from_curve(&c.curve, &context.u_grid))
        .collect();

    let market = &context.market;
    let mut rows = Vec::new();
    for i in range_indices(&market.frontier.performance, u_range)? {
        let (Some(cp), Some(leader)) = (market.frontier.cost[i], market.leaders[i].as_deref()) else {
            continue;
        };
        let u = market.frontier.performance[i];
        let mut before = vec![T::zero(); providers.len()];
        before[dataset.provider_index(leader)?] = cp;

        let cheapest = frontiers
            .iter()
            .enumerate()
            .filter_map(|(k, f)| f.cost[i].map(|c| (c, k)))
            .filter(|(c, _)| *c < cp)
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let (after, profit, serving) = match cheapest {
            None => (before.clone(), T::zero(), None),
            Some((cq, k)) => {
                let cand = &built[k];
                let (node, t) = cand.curve.crossing(u).expect("reachable frontier has a crossing");
                let after = if t == T::one() {
                    cand.revenue[node].clone()
                } else {
                    cand.revenue[node - 1]
                        .iter()
                        .zip(&cand.revenue[node])
                        .map(|(a, b)| lerp(*a, *b, t))
                        .collect()
                };
                tracing::trace!(u = u.as_f64(), policy = %cand.policy, "revenue served by cascade");
                (after, cp - cq, Some(k))
            }
        };
        rows.push(RevenueRow {
            performance: u,
            expenditure: cp,
            arbitrage_profit: profit,
            serving_policy: serving,
            before,
            after,
        });
    }
    if rows.is_empty() {
        return Err(ArbError::Empty("no priced performance levels in range"));
    }
    Ok(RevenueAnalysis {
        boundaries_before: boundaries(&rows, |r| &r.before),
        boundaries_after: boundaries(&rows, |r| &r.after),
        providers,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frontier(label: &str, cost: &[Option<f64>]) -> PriceFrontier<f64> {
        PriceFrontier {
            label: label.into(),
            performance: (0..cost.len()).map(|i| i as f64 / cost.len() as f64).collect(),
            cost: cost.to_vec(),
        }
    }

    fn state(market: &[Option<f64>], buy: &[Option<f64>], n: usize) -> MarketState<f64> {
        let m = MarketFrontier::new(&[frontier("p", market)]).unwrap();
        MarketState::duopoly_like(m, &frontier("q", buy), n).unwrap()
    }

    #[test]
    fn undercut_example() {
        let s = state(&[Some(120.0), Some(120.0)], &[Some(80.0), Some(80.0)], 2);
        let next = undercut_step(&s, "arb1", 0.01).unwrap();
        assert!((next.arbitrageurs[0].sell[0].unwrap() - 118.8).abs() < 1e-12);
        assert_eq!(next.arbitrageurs[1].sell[0], None);
        assert!((next.prevailing()[0].unwrap() - 118.8).abs() < 1e-12);
    }

    #[test]
    fn undercut_floors_at_buy_cost() {
        let s = state(&[Some(80.0), None], &[Some(80.0), Some(50.0)], 1);
        let next = undercut_step(&s, "arb1", 0.01).unwrap();
        assert_eq!(next.arbitrageurs[0].sell, vec![Some(80.0), None]);
        assert_eq!(next.prevailing()[0], Some(80.0));
    }

    #[test]
    fn undercut_rejects_bad_input() {
        let s = state(&[Some(1.0)], &[Some(0.5)], 1);
        assert!(undercut_step(&s, "arb1", 0.0).is_err());
        assert!(undercut_step(&s, "nobody", 0.01).is_err());
    }

    #[test]
    fn duopoly_converges_to_buy_cost() {
        let s = state(&[Some(120.0), Some(10.0), None], &[Some(80.0), Some(20.0), Some(5.0)], 2);
        let traj = bertrand_simulate(&s, 10_000, 0.01).unwrap();
        assert!(traj.converged);
        let last = traj.final_prices();
        assert!(last[0].unwrap() >= 80.0 && last[0].unwrap() <= 80.0 / 0.99);
        assert_eq!(last[1], Some(10.0));
        assert_eq!(last[2], None);
        for w in traj.rounds.windows(2) {
            for (a, b) in w[0].prevailing.iter().zip(&w[1].prevailing) {
                assert!(b.unwrap_or(f64::INFINITY) <= a.unwrap_or(f64::INFINITY));
            }
        }
    }

    #[test]
    fn single_arbitrageur_undercuts_once() {
        let s = state(&[Some(120.0)], &[Some(80.0)], 1);
        let traj = bertrand_simulate(&s, 50, 0.01).unwrap();
        assert!(traj.converged);
        assert_eq!(traj.rounds.len(), 3);
        assert!((traj.final_prices()[0].unwrap() - 118.8).abs() < 1e-12);
    }

    #[test]
    fn zero_rounds_is_initial_state() {
        let s = state(&[Some(120.0)], &[Some(80.0)], 2);
        let traj = bertrand_simulate(&s, 0, 0.01).unwrap();
        assert_eq!(traj.rounds.len(), 1);
        assert_eq!(traj.final_state, s);
    }

    #[test]
    fn equilibrium_examples() {
        let p = frontier("p", &[Some(120.0), Some(100.0), Some(3.0)]);
        let q = frontier("q", &[Some(80.0), Some(150.0), None]);
        assert_eq!(equilibrium_price(&p, &q, 0.0), Some(80.0));
        assert_eq!(equilibrium_price(&p, &q, 1.0 / 3.0), Some(100.0));
        assert_eq!(equilibrium_price(&p, &q, 2.0 / 3.0), Some(3.0));
        let e = equilibrium_frontier(&p, &q).unwrap();
        assert_eq!(e.cost, vec![Some(80.0), Some(100.0), Some(3.0)]);
    }
}
