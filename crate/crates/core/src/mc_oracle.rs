//! Monte Carlo ground truth for the analytic curves.
//!
//! Each simulated attempt sequence is a uniformly random ordering of a
//! problem's `n` recorded attempts (`m` of them successful), drawn without
//! replacement, which is the sampling model behind pass@k.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{allocate_budget, CascadePolicy};
use crate::curves::SolveProfile;
use crate::error::{ArbError, Result};
use crate::ingest::{Dataset, ProblemStats};
use crate::scalar::Scalar;

/// How budget turns into spend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SpendMode {
    /// The `k`-th attempt occupies `[(k-1) s, k s)`; a success at position
    /// `(k - 1 + U) s`, `U ~ Uniform(0,1)`, stops spending there.
    #[default]
    Continuous,
    /// Only whole attempts are bought; leftover budget is not spent.
    Lumpy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: usize,
    pub seed: u64,
    pub mode: SpendMode,
}

impl SimConfig {
    pub fn new(trials: usize, seed: u64, mode: SpendMode) -> Self {
        Self { trials, seed, mode }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(ArbError::invalid("simulation needs at least one trial"));
        }
        Ok(())
    }

    fn rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub mean: T,
    pub std_err: T,
}

impl<T: Scalar> Estimate<T> {
    pub fn from_samples(samples: &[T]) -> Self {
        let n = T::count(samples.len());
        let mean = crate::scalar::mean(samples.iter().copied());
        if samples.len() < 2 {
            return Self { mean, std_err: T::zero() };
        }
        let ss = samples.iter().fold(T::zero(), |acc, &x| acc + (x - mean) * (x - mean));
        let var = ss / (n - T::one());
        Self {
            mean,
            std_err: (var / n).sqrt(),
        }
    }

    /// `|value - mean| ≤ k · std_err`.
    pub fn within_sigma(&self, value: T, k: T) -> bool {
        (value - self.mean).abs() <= k * self.std_err
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProviderSim<T> {
    /// Fraction of problems solved per trial.
    pub solve_rate: Estimate<T>,
    /// Total spend over all problems per trial.
    pub spend: Estimate<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSim<T> {
    pub performance: Estimate<T>,
    pub cost: Estimate<T>,
    /// Spend attributed to each provider, in cascade order.
    pub provider_spend: Vec<(String, Estimate<T>)>,
}

/// 1-based position of the first success in a random ordering of `n`
/// attempts with `m` successes; `None` if `m == 0`.
fn first_success<R: Rng>(n: u64, m: u64, rng: &mut R) -> Option<u64> {
    if m == 0 {
        return None;
    }
    let mut left = n;
    for k in 1..=n {
        if rng.random_range(0..left) < m {
            return Some(k);
        }
        left -= 1;
    }
    unreachable!("a success exists among the attempts")
}

/// One provider run on one problem with allocation `b`: `(solved, spend)`.
fn run<T: Scalar, R: Rng>(n: u64, m: u64, s: T, b: T, mode: SpendMode, rng: &mut R) -> (bool, T) {
    if !(b > T::zero()) {
        return (false, T::zero());
    }
    if n == 0 {
        // unobserved pair: never solves; continuous spend burns the budget
        let spend = match mode {
            SpendMode::Continuous => b,
            SpendMode::Lumpy => T::zero(),
        };
        return (false, spend);
    }
    let k = first_success(n, m, rng);
    match mode {
        SpendMode::Continuous => {
            let Some(k) = k else { return (false, b) };
            let u = T::lit(rng.random::<f64>());
            let x = (T::lit((k - 1) as f64) + u) * s;
            if x <= b {
                (true, x)
            } else {
                (false, b)
            }
        }
        SpendMode::Lumpy => {
            let whole = ((b / s).as_f64() + 1e-9).floor() as u64;
            let l = whole.min(n);
            match k {
                Some(k) if k <= l => (true, T::lit(k as f64) * s),
                _ => (false, T::lit(l as f64) * s),
            }
        }
    }
}

fn profile_of<T: Scalar>(p: &SolveProfile<T>) -> (u64, u64, T) {
    (p.n(), p.m(), p.s_hat())
}

/// Repeated sampling of a single provider on a single problem at budget `b`.
pub fn simulate_provider<T: Scalar>(stats: &ProblemStats<T>, b: T, config: &SimConfig) -> Result<ProviderSim<T>> {
    config.validate()?;
    stats.validate()?;
    check_budget(b)?;
    let runs: Vec<(T, T)> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = config.rng(t);
            let (ok, spend) = run(stats.n, stats.m, stats.s_hat, b, config.mode, &mut rng);
            (if ok { T::one() } else { T::zero() }, spend)
        })
        .collect();
    Ok(summarize(&runs))
}

fn summarize<T: Scalar>(runs: &[(T, T)]) -> ProviderSim<T> {
    let rates: Vec<T> = runs.iter().map(|r| r.0).collect();
    let spends: Vec<T> = runs.iter().map(|r| r.1).collect();
    ProviderSim {
        solve_rate: Estimate::from_samples(&rates),
        spend: Estimate::from_samples(&spends),
    }
}

fn check_budget<T: Scalar>(b: T) -> Result<()> {
    if b >= T::zero() && b.is_finite() {
        Ok(())
    } else {
        Err(ArbError::invalid(format!("budget must be finite and >= 0, got {b}")))
    }
}

/// Every problem of the dataset once per trial with one provider.
pub fn simulate_dataset_provider<T: Scalar>(
    dataset: &Dataset<T>,
    provider: &str,
    b: T,
    config: &SimConfig,
) -> Result<ProviderSim<T>> {
    let policy = CascadePolicy::single(provider, b);
    let sim = simulate_cascade(&policy, dataset, b, config)?;
    Ok(ProviderSim {
        solve_rate: sim.performance,
        spend: sim.cost,
    })
}

/// Runs the cascade on every problem once per trial: each provider gets its
/// allocation in turn and the first success stops the cascade.
pub fn simulate_cascade<T: Scalar>(
    policy: &CascadePolicy<T>,
    dataset: &Dataset<T>,
    b: T,
    config: &SimConfig,
) -> Result<CascadeSim<T>> {
    config.validate()?;
    check_budget(b)?;
    if dataset.is_empty() {
        return Err(ArbError::Empty("dataset has no problems"));
    }
    let profiles = policy
        .providers()
        .map(|p| dataset.provider_index(p).map(|i| dataset.profiles(i)))
        .collect::<Result<Vec<_>>>()?;
    let alloc = allocate_budget(policy, b);
    let problems = dataset.problem_count();
    let width = profiles.len();

    // per trial: solved fraction, then spend per provider
    let runs: Vec<(T, Vec<T>)> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = config.rng(t);
            let mut solved = 0usize;
            let mut spend = vec![T::zero(); width];
            for j in 0..problems {
                for (i, prof) in profiles.iter().enumerate() {
                    let (n, m, s) = profile_of(&prof[j]);
                    let (ok, x) = run(n, m, s, alloc[i], config.mode, &mut rng);
                    spend[i] = spend[i] + x;
                    if ok {
                        solved += 1;
                        break;
                    }
                }
            }
            (T::count(solved) / T::count(problems), spend)
        })
        .collect();

    let perf: Vec<T> = runs.iter().map(|r| r.0).collect();
    let totals: Vec<T> = runs.iter().map(|r| r.1.iter().copied().fold(T::zero(), |a, x| a + x)).collect();
    let provider_spend = policy
        .providers()
        .enumerate()
        .map(|(i, p)| {
            let col: Vec<T> = runs.iter().map(|r| r.1[i]).collect();
            (p.to_owned(), Estimate::from_samples(&col))
        })
        .collect();
    Ok(CascadeSim {
        performance: Estimate::from_samples(&perf),
        cost: Estimate::from_samples(&totals),
        provider_spend,
    })
}
