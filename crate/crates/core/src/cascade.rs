//! Provider cascades with spending caps.
//!
//! Providers are queried in order; provider `i` may spend up to `τ_i` per
//! issue once the providers before it have exhausted their caps. Spend is
//! continuous: cumulative spend `x` is routed through the caps in order, so
//! the probability that an issue is still open after spending `x` is
//! `∏_i (1 - u_i(b_i(x)))`.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::curves::{PriceFrontier, ProviderCurve, SolveProfile};
use crate::error::{ArbError, Result};
use crate::grid::{nodes_up_to, UniformGrid};
use crate::ingest::Dataset;
use crate::scalar::{lerp, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeStep<T> {
    pub provider_id: String,
    pub cap: T,
}

/// Ordered providers with per-issue spending caps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadePolicy<T> {
    steps: Vec<CascadeStep<T>>,
    budget_ceiling: Option<T>,
}

impl<T: Scalar> CascadePolicy<T> {
    pub fn new(steps: Vec<CascadeStep<T>>, budget_ceiling: Option<T>) -> Result<Self> {
        if steps.is_empty() {
            return Err(ArbError::Empty("cascade has no providers"));
        }
        let mut seen = BTreeSet::new();
        for s in &steps {
            if !seen.insert(s.provider_id.as_str()) {
                return Err(ArbError::invalid(format!(
                    "provider `{}` appears twice in cascade",
                    s.provider_id
                )));
            }
            if !(s.cap >= T::zero()) || !s.cap.is_finite() {
                return Err(ArbError::invalid(format!(
                    "cap of `{}` must be finite and >= 0",
                    s.provider_id
                )));
            }
        }
        let policy = Self {
            steps,
            budget_ceiling,
        };
        if let Some(ceiling) = budget_ceiling {
            let total = policy.total_cap();
            if total < ceiling * (T::one() - T::lit(1e-9)) {
                return Err(ArbError::invalid(format!(
                    "caps sum to {total}, below the budget ceiling {ceiling}"
                )));
            }
        }
        Ok(policy)
    }

    /// Convenience constructor from `(provider, cap)` pairs.
    pub fn from_caps<S: Into<String>>(caps: impl IntoIterator<Item = (S, T)>) -> Result<Self> {
        let steps = caps
            .into_iter()
            .map(|(p, cap)| CascadeStep {
                provider_id: p.into(),
                cap,
            })
            .collect();
        Self::new(steps, None)
    }

    pub fn single(provider: &str, cap: T) -> Self {
        Self::from_caps([(provider, cap)]).expect("single-provider policy is valid")
    }

    pub fn with_ceiling(self, ceiling: T) -> Result<Self> {
        Self::new(self.steps, Some(ceiling))
    }

    pub fn steps(&self) -> &[CascadeStep<T>] {
        &self.steps
    }

    pub fn budget_ceiling(&self) -> Option<T> {
        self.budget_ceiling
    }

    pub fn providers(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().map(|s| s.provider_id.as_str())
    }

    pub fn caps(&self) -> Vec<T> {
        self.steps.iter().map(|s| s.cap).collect()
    }

    pub fn total_cap(&self) -> T {
        self.steps.iter().fold(T::zero(), |acc, s| acc + s.cap)
    }

    /// Cumulative cap boundaries `[τ_1, τ_1 + τ_2, ...]`.
    fn boundaries(&self) -> Vec<T> {
        let mut acc = T::zero();
        self.steps
            .iter()
            .map(|s| {
                acc = acc + s.cap;
                acc
            })
            .collect()
    }

    /// Reads `provider_id,cap` rows in cascade order.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut steps = Vec::new();
        for row in rdr.deserialize::<CascadeStep<T>>() {
            steps.push(row.map_err(|e| ArbError::Parse {
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                message: e.to_string(),
            })?);
        }
        Self::new(steps, None)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for s in &self.steps {
            wtr.serialize(s)
                .map_err(|e| ArbError::invalid(format!("policy serialization failed: {e}")))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

impl<T: Scalar> fmt::Display for CascadePolicy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" > ")?;
            }
            write!(f, "{}[{}]", s.provider_id, s.cap)?;
        }
        Ok(())
    }
}

/// Per-provider budgets `b_i = min(max(b - Σ_{k<i} τ_k, 0), τ_i)`.
pub fn allocate_budget<T: Scalar>(policy: &CascadePolicy<T>, b: T) -> Vec<T> {
    let mut claimed = T::zero();
    policy
        .steps
        .iter()
        .map(|s| {
            let share = (b - claimed).max(T::zero()).min(s.cap);
            claimed = claimed + s.cap;
            share
        })
        .collect()
}

/// A policy bound to a dataset's solve profiles.
pub(crate) struct BoundCascade<'a, T: Scalar> {
    pub(crate) policy: &'a CascadePolicy<T>,
    pub(crate) profiles: Vec<&'a [SolveProfile<T>]>,
    pub(crate) problems: usize,
}

impl<'a, T: Scalar> BoundCascade<'a, T> {
    pub(crate) fn new(policy: &'a CascadePolicy<T>, dataset: &'a Dataset<T>) -> Result<Self> {
        let profiles = policy
            .providers()
            .map(|p| dataset.provider_index(p).map(|i| dataset.profiles(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            policy,
            profiles,
            problems: dataset.problem_count(),
        })
    }

    /// Solve probability of problem `j` given per-provider allocations,
    /// accumulated as `p ← p + (1 - p) u_i` (equal to `1 - ∏(1 - u_i)`).
    pub(crate) fn issue_prob(&self, j: usize, allocations: &[T]) -> T {
        let mut solved = T::zero();
        for (profiles, &b) in self.profiles.iter().zip(allocations) {
            let u = profiles[j].pass_at_budget(b);
            solved = solved + (T::one() - solved) * u;
        }
        solved
    }

    pub(crate) fn performance(&self, b: T) -> T {
        let alloc = allocate_budget(self.policy, b);
        let mut sum = T::zero();
        for j in 0..self.problems {
            sum = sum + self.issue_prob(j, &alloc);
        }
        sum / T::count(self.problems)
    }

    fn spend_limit(&self, b: T) -> T {
        b.min(self.policy.total_cap())
    }

    pub(crate) fn curve(&self, grid: &UniformGrid<T>) -> ProviderCurve<T> {
        let total = self.policy.total_cap();
        let limit = if total < grid.max { Some(total) } else { None };
        ProviderCurve::from_fn(
            &self.policy.to_string(),
            grid,
            self.problems,
            limit,
            |b| self.performance(b),
        )
    }

    /// Cumulative spend attributed to each provider at every node of `nodes`
    /// (`[node][provider]`), integrating survival on those nodes and splitting
    /// trapezoids at cap boundaries.
    fn revenue_on_nodes(&self, nodes: &[T], limit: T) -> Vec<Vec<T>> {
        let providers = self.profiles.len();
        let bounds = self.policy.boundaries();
        let owner = |x: T| bounds.iter().position(|&b| x < b).unwrap_or(providers - 1);
        let survival = |x: T| T::one() - self.performance(x);

        let mut acc = vec![T::zero(); providers];
        let mut out = Vec::with_capacity(nodes.len());
        out.push(acc.clone());
        let mut f_prev = survival(nodes[0]);
        for w in nodes.windows(2) {
            let (x0, x1_node) = (w[0], w[1]);
            let x1 = x1_node.min(limit);
            if x1 > x0 {
                let f1 = if x1 == x1_node { survival(x1_node) } else { survival(limit) };
                // split points inside the segment
                let mut cuts = vec![x0];
                cuts.extend(bounds.iter().copied().filter(|&b| b > x0 && b < x1));
                cuts.push(x1);
                let f_at = |x: T| {
                    if x == x0 {
                        f_prev
                    } else if x == x1 {
                        f1
                    } else {
                        lerp(f_prev, f1, (x - x0) / (x1 - x0))
                    }
                };
                for c in cuts.windows(2) {
                    let (a, b) = (c[0], c[1]);
                    let area = T::half() * (f_at(a) + f_at(b)) * (b - a);
                    let who = owner(T::half() * (a + b));
                    acc[who] = acc[who] + area;
                }
                f_prev = if x1 == x1_node { f1 } else { survival(x1_node) };
            } else {
                f_prev = survival(x1_node);
            }
            out.push(acc.clone());
        }
        let j = T::count(self.problems);
        for row in &mut out {
            for v in row.iter_mut() {
                *v = *v * j;
            }
        }
        out
    }
}

fn require_problems<T: Scalar>(dataset: &Dataset<T>) -> Result<()> {
    if dataset.is_empty() {
        Err(ArbError::Empty("dataset has no problems"))
    } else {
        Ok(())
    }
}

/// Probability that `problem` is solved by at least one provider.
pub fn cascade_issue_prob<T: Scalar>(
    policy: &CascadePolicy<T>,
    dataset: &Dataset<T>,
    problem: &str,
    b: T,
) -> Result<T> {
    let j = dataset.problem_index(problem)?;
    let bound = BoundCascade::new(policy, dataset)?;
    Ok(bound.issue_prob(j, &allocate_budget(policy, b)))
}

/// Mean cascade solve probability `ū^τ(b)` over all problems.
pub fn cascade_performance<T: Scalar>(policy: &CascadePolicy<T>, dataset: &Dataset<T>, b: T) -> Result<T> {
    require_problems(dataset)?;
    Ok(BoundCascade::new(policy, dataset)?.performance(b))
}

/// Expected total spend `|J| ∫₀^{min(b, Στ)} (1 - ū^τ(x)) dx`.
pub fn cascade_expected_cost<T: Scalar>(
    policy: &CascadePolicy<T>,
    dataset: &Dataset<T>,
    b: T,
    grid_step: T,
) -> Result<T> {
    require_problems(dataset)?;
    if !(grid_step > T::zero()) {
        return Err(ArbError::invalid("grid step must be > 0"));
    }
    let bound = BoundCascade::new(policy, dataset)?;
    let nodes = nodes_up_to(bound.spend_limit(b), grid_step);
    Ok(crate::curves::survival_cost(&nodes, bound.problems, |x| bound.performance(x)))
}

/// Cascade performance and expected cost on `{0, grid_step, ..., b_max}`.
pub fn cascade_curve<T: Scalar>(
    policy: &CascadePolicy<T>,
    dataset: &Dataset<T>,
    b_max: T,
    grid_step: T,
) -> Result<ProviderCurve<T>> {
    require_problems(dataset)?;
    let grid = UniformGrid::new(b_max, grid_step)?;
    Ok(BoundCascade::new(policy, dataset)?.curve(&grid))
}

/// Cost-to-performance frontier `C_q(u)` of the cascade.
pub fn cascade_frontier<T: Scalar>(
    policy: &CascadePolicy<T>,
    dataset: &Dataset<T>,
    b_max: T,
    grid_step: T,
    u_grid: &UniformGrid<T>,
) -> Result<PriceFrontier<T>> {
    let curve = cascade_curve(policy, dataset, b_max, grid_step)?;
    Ok(PriceFrontier::from_curve(&curve, u_grid))
}

/// Expected spend each provider receives at budget `b`: the survival integral
/// over that provider's cumulative-spend segment. Amounts sum to
/// [`cascade_expected_cost`].
pub fn revenue_split<T: Scalar>(
    policy: &CascadePolicy<T>,
    dataset: &Dataset<T>,
    b: T,
    grid_step: T,
) -> Result<Vec<(String, T)>> {
    require_problems(dataset)?;
    if !(grid_step > T::zero()) {
        return Err(ArbError::invalid("grid step must be > 0"));
    }
    let bound = BoundCascade::new(policy, dataset)?;
    let limit = bound.spend_limit(b);
    let nodes = nodes_up_to(limit, grid_step);
    let table = bound.revenue_on_nodes(&nodes, limit);
    let last = table.last().expect("at least one node");
    Ok(policy
        .providers()
        .map(str::to_owned)
        .zip(last.iter().copied())
        .collect())
}

/// Cumulative per-provider revenue at every node of the budget grid
/// (`[node][provider]`, providers in cascade order).
pub fn revenue_curve<T: Scalar>(
    policy: &CascadePolicy<T>,
    dataset: &Dataset<T>,
    b_max: T,
    grid_step: T,
) -> Result<Vec<Vec<T>>> {
    require_problems(dataset)?;
    let grid = UniformGrid::new(b_max, grid_step)?;
    let bound = BoundCascade::new(policy, dataset)?;
    let limit = bound.spend_limit(grid.max);
    Ok(bound.revenue_on_nodes(&grid.points(), limit))
}

/// Orders providers by expected cost per unit of performance at the first
/// positive budget grid point (most cost-efficient first); ties by id.
pub fn efficiency_order<T: Scalar>(dataset: &Dataset<T>, grid_step: T) -> Result<Vec<String>> {
    require_problems(dataset)?;
    let mut keyed = dataset
        .providers()
        .iter()
        .map(|p| {
            let u = crate::curves::provider_performance(dataset, p, grid_step)?;
            let c = crate::curves::provider_expected_cost(dataset, p, grid_step, grid_step)?;
            let ratio = if u > T::zero() { c / u } else { T::infinity() };
            Ok((ratio, p.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
    Ok(keyed.into_iter().map(|(_, p)| p).collect())
}
