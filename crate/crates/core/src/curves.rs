//! pass@k, budget-indexed performance and cost curves, and their inversion
//! into cost-to-performance frontiers and market prices.
//!
//! A per-attempt budget `b` buys `k = b / s_hat` attempts. Fractional `k`
//! interpolates linearly between adjacent integer pass@k values (anchored at
//! pass@0 = 0) and saturates at pass@n. Expected spend follows from the
//! survival identity `c(b) = |J| ∫₀ᵇ (1 - ū(x)) dx`, integrated with the
//! trapezoid rule on a uniform budget grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ArbError, Result};
use crate::grid::{cumulative_trapezoid, nodes_up_to, trapezoid, UniformGrid};
use crate::ingest::{Dataset, ProblemStats};
use crate::scalar::{lerp, mean, Scalar};

/// Unbiased pass@k: probability that a uniformly drawn `k`-subset of `n`
/// attempts with `m` successes contains at least one success.
pub fn pass_at_k<T: Scalar>(n: u64, m: u64, k: u64) -> Result<T> {
    if m > n {
        return Err(ArbError::invalid(format!("{m} successes out of {n} attempts")));
    }
    if k > n {
        return Err(ArbError::OutOfSupport { n, k });
    }
    let mut miss = T::one();
    for i in 0..k {
        miss = miss * miss_factor(n, m, i);
    }
    Ok(T::one() - miss)
}

/// `(n - m - i) / (n - i)`: probability the `(i+1)`-th draw fails given the
/// first `i` failed.
#[inline]
fn miss_factor<T: Scalar>(n: u64, m: u64, i: u64) -> T {
    let fails = (n - m).saturating_sub(i);
    T::from_u64(fails).unwrap() / T::from_u64(n - i).unwrap()
}

/// Budget-to-probability map of one provider on one problem, with pass@k
/// precomputed for every `k ≤ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveProfile<T> {
    n: u64,
    m: u64,
    s_hat: T,
    pass: Vec<T>,
}

impl<T: Scalar> SolveProfile<T> {
    pub fn from_stats(stats: &ProblemStats<T>) -> Self {
        Self::new(stats.n, stats.m, stats.s_hat)
    }

    pub fn new(n: u64, m: u64, s_hat: T) -> Self {
        assert!(m <= n, "m must not exceed n");
        let mut pass = Vec::with_capacity(n as usize + 1);
        let mut miss = T::one();
        pass.push(T::one() - miss);
        for i in 0..n {
            miss = miss * miss_factor(n, m, i);
            pass.push(T::one() - miss);
        }
        Self { n, m, s_hat, pass }
    }

    /// A pair with no observations: never solves.
    pub fn unobserved(s_hat: T) -> Self {
        Self::new(0, 0, s_hat)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn s_hat(&self) -> T {
        self.s_hat
    }

    /// pass@k for integer `k ≤ n`.
    pub fn pass_at(&self, k: usize) -> T {
        self.pass[k.min(self.n as usize)]
    }

    /// Solve probability when `b` is spent at `s_hat` per attempt.
    pub fn pass_at_budget(&self, b: T) -> T {
        if self.n == 0 || !(b > T::zero()) {
            return T::zero();
        }
        let k = b / self.s_hat;
        let n = T::from_u64(self.n).unwrap();
        if k >= n {
            return self.pass[self.n as usize];
        }
        let lo = k.floor();
        let i = lo.to_usize().unwrap();
        let frac = k - lo;
        if frac == T::zero() {
            self.pass[i]
        } else {
            lerp(self.pass[i], self.pass[i + 1], frac)
        }
    }
}

/// Solve probability of a single pair at per-issue budget `b`.
pub fn pass_at_budget<T: Scalar>(stats: &ProblemStats<T>, b: T) -> T {
    SolveProfile::from_stats(stats).pass_at_budget(b)
}

fn require_problems<T: Scalar>(dataset: &Dataset<T>) -> Result<()> {
    if dataset.is_empty() {
        Err(ArbError::Empty("dataset has no problems"))
    } else {
        Ok(())
    }
}

/// Mean solve probability `ū(b)` of one provider over the dataset's problems.
pub fn provider_performance<T: Scalar>(dataset: &Dataset<T>, provider: &str, b: T) -> Result<T> {
    let pi = dataset.provider_index(provider)?;
    require_problems(dataset)?;
    Ok(mean_performance(dataset.profiles(pi), b))
}

pub(crate) fn mean_performance<T: Scalar>(profiles: &[SolveProfile<T>], b: T) -> T {
    mean(profiles.iter().map(|p| p.pass_at_budget(b)))
}

/// Expected total spend `|J| ∫₀ᵇ (1 - ū(x)) dx` on the grid of spacing
/// `grid_step`.
pub fn provider_expected_cost<T: Scalar>(
    dataset: &Dataset<T>,
    provider: &str,
    b: T,
    grid_step: T,
) -> Result<T> {
    let pi = dataset.provider_index(provider)?;
    require_problems(dataset)?;
    if !(grid_step > T::zero()) {
        return Err(ArbError::invalid("grid step must be > 0"));
    }
    if b < T::zero() {
        return Err(ArbError::invalid("budget must be >= 0"));
    }
    let profiles = dataset.profiles(pi);
    Ok(survival_cost(&nodes_up_to(b, grid_step), dataset.problem_count(), |x| {
        mean_performance(profiles, x)
    }))
}

pub(crate) fn survival_cost<T: Scalar, F: Fn(T) -> T>(nodes: &[T], problems: usize, perf: F) -> T {
    let survival: Vec<T> = nodes.iter().map(|&x| T::one() - perf(x)).collect();
    T::count(problems) * trapezoid(nodes, &survival)
}

/// Performance `ū(b)` and expected cost `c(b)` of a provider or policy,
/// sampled on a budget grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderCurve<T> {
    pub provider_id: String,
    pub budget_grid: Vec<T>,
    pub performance: Vec<T>,
    pub expected_cost: Vec<T>,
    pub problem_count: usize,
}

impl<T: Scalar> ProviderCurve<T> {
    /// Samples `perf` on `grid` and integrates its survival. Spend stops
    /// accruing beyond `spend_limit` (a cascade cannot spend more than the
    /// sum of its caps).
    pub(crate) fn from_fn<F>(
        label: &str,
        grid: &UniformGrid<T>,
        problem_count: usize,
        spend_limit: Option<T>,
        perf: F,
    ) -> Self
    where
        F: Fn(T) -> T + Sync,
    {
        let budgets = grid.points();
        let performance: Vec<T> = budgets.par_iter().map(|&b| perf(b)).collect();
        let limit = spend_limit.unwrap_or(grid.max);
        // nodes strictly inside the spend window
        let inside = budgets.iter().take_while(|&&b| b <= limit).count();
        let survival: Vec<T> = performance[..inside].iter().map(|&u| T::one() - u).collect();
        let mut cumulative = cumulative_trapezoid(&budgets[..inside], &survival);
        if inside < budgets.len() {
            let last = cumulative.last().copied().unwrap_or(T::zero());
            let x0 = budgets[inside - 1];
            let tail = if limit > x0 {
                let f0 = survival[inside - 1];
                let f1 = T::one() - perf(limit);
                T::half() * (f0 + f1) * (limit - x0)
            } else {
                T::zero()
            };
            cumulative.resize(budgets.len(), last + tail);
        }
        let j = T::count(problem_count);
        let expected_cost = cumulative.into_iter().map(|c| j * c).collect();
        Self {
            provider_id: label.to_owned(),
            budget_grid: budgets,
            performance,
            expected_cost,
            problem_count,
        }
    }

    pub fn len(&self) -> usize {
        self.budget_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.budget_grid.is_empty()
    }

    /// Highest performance reached on the grid.
    pub fn max_performance(&self) -> T {
        self.performance.last().copied().unwrap_or(T::zero())
    }

    /// Bracket of the first grid point whose performance reaches `u`:
    /// `(i, t)` such that the crossing is at `lerp(point[i-1], point[i], t)`;
    /// `t == 1` means exactly at point `i`. `None` if `u` is never reached.
    pub(crate) fn crossing(&self, u: T) -> Option<(usize, T)> {
        let i = self.performance.partition_point(|&p| p < u);
        if i >= self.performance.len() {
            return None;
        }
        if i == 0 || self.performance[i] == u {
            return Some((i, T::one()));
        }
        let (p0, p1) = (self.performance[i - 1], self.performance[i]);
        Some((i, (u - p0) / (p1 - p0)))
    }
}

/// Evaluates a provider on `{0, grid_step, ..., b_max}`.
pub fn build_provider_curve<T: Scalar>(
    dataset: &Dataset<T>,
    provider: &str,
    b_max: T,
    grid_step: T,
) -> Result<ProviderCurve<T>> {
    let pi = dataset.provider_index(provider)?;
    require_problems(dataset)?;
    let grid = UniformGrid::new(b_max, grid_step)?;
    let profiles = dataset.profiles(pi);
    Ok(ProviderCurve::from_fn(
        provider,
        &grid,
        dataset.problem_count(),
        None,
        |b| mean_performance(profiles, b),
    ))
}

/// Minimum expected cost at which the curve reaches performance `u`, linearly
/// interpolated between the bracketing grid points. `None` if unreachable.
pub fn cost_to_performance<T: Scalar>(curve: &ProviderCurve<T>, u: T) -> Option<T> {
    let (i, t) = curve.crossing(u)?;
    if t == T::one() {
        Some(curve.expected_cost[i])
    } else {
        Some(lerp(curve.expected_cost[i - 1], curve.expected_cost[i], t))
    }
}

/// Minimal cost `C(u)` on a performance grid; `None` marks unreachable levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceFrontier<T> {
    pub label: String,
    pub performance: Vec<T>,
    pub cost: Vec<Option<T>>,
}

impl<T: Scalar> PriceFrontier<T> {
    pub fn from_curve(curve: &ProviderCurve<T>, u_grid: &UniformGrid<T>) -> Self {
        let performance = u_grid.points();
        let cost = performance
            .iter()
            .map(|&u| cost_to_performance(curve, u))
            .collect();
        Self {
            label: curve.provider_id.clone(),
            performance,
            cost,
        }
    }

    pub fn len(&self) -> usize {
        self.performance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.performance.is_empty()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.performance == other.performance
    }

    pub(crate) fn check_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(ArbError::GridMismatch)
        }
    }

    /// Cost at an arbitrary `u`, interpolating between grid points.
    pub fn cost_at(&self, u: T) -> Option<T> {
        let eps = T::lit(1e-12);
        let i = self.performance.partition_point(|&p| p < u - eps);
        if i >= self.performance.len() {
            return None;
        }
        if (self.performance[i] - u).abs() <= eps || i == 0 {
            return self.cost[i];
        }
        let (c0, c1) = (self.cost[i - 1]?, self.cost[i]?);
        let (u0, u1) = (self.performance[i - 1], self.performance[i]);
        Some(lerp(c0, c1, (u - u0) / (u1 - u0)))
    }

    /// Highest grid performance with a finite cost.
    pub fn max_reachable(&self) -> Option<T> {
        self.performance
            .iter()
            .zip(&self.cost)
            .filter(|(_, c)| c.is_some())
            .map(|(&u, _)| u)
            .last()
    }
}

/// Pointwise minimum over provider frontiers, with the provider setting the
/// price at each level.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketFrontier<T> {
    pub frontier: PriceFrontier<T>,
    pub leaders: Vec<Option<String>>,
}

impl<T: Scalar> MarketFrontier<T> {
    pub fn new(frontiers: &[PriceFrontier<T>]) -> Result<Self> {
        let first = frontiers.first().ok_or(ArbError::Empty("market has no providers"))?;
        for f in &frontiers[1..] {
            first.check_grid(f)?;
        }
        let mut cost = Vec::with_capacity(first.len());
        let mut leaders = Vec::with_capacity(first.len());
        for i in 0..first.len() {
            let best = frontiers
                .iter()
                .filter_map(|f| f.cost[i].map(|c| (c, f.label.as_str())))
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(b.1)));
            cost.push(best.map(|b| b.0));
            leaders.push(best.map(|b| b.1.to_owned()));
        }
        Ok(Self {
            frontier: PriceFrontier {
                label: "market".into(),
                performance: first.performance.clone(),
                cost,
            },
            leaders,
        })
    }
}

/// Market price `min_p C_p(u)` and the provider offering it; ties go to the
/// lexicographically smallest provider id.
pub fn market_price<T: Scalar>(frontiers: &[PriceFrontier<T>], u: T) -> Result<Option<(T, String)>> {
    if frontiers.is_empty() {
        return Err(ArbError::Empty("market has no providers"));
    }
    Ok(frontiers
        .iter()
        .filter_map(|f| f.cost_at(u).map(|c| (c, f.label.clone())))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1))))
}

/// Curves of every provider in the dataset plus their frontiers on `u_grid`.
pub fn provider_frontiers<T: Scalar>(
    dataset: &Dataset<T>,
    budget_grid: &UniformGrid<T>,
    u_grid: &UniformGrid<T>,
) -> Result<Vec<(ProviderCurve<T>, PriceFrontier<T>)>> {
    dataset
        .providers()
        .iter()
        .map(|p| {
            let curve = build_provider_curve(dataset, p, budget_grid.max, budget_grid.step)?;
            let frontier = PriceFrontier::from_curve(&curve, u_grid);
            Ok((curve, frontier))
        })
        .collect()
}
