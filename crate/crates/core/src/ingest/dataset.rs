use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::record::CostUnit;
use crate::curves::SolveProfile;
use crate::error::{ArbError, Result};
use crate::scalar::Scalar;

/// Aggregated attempts of one provider on one problem: `n` attempts, `m`
/// successes, mean cost `s_hat` per attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemStats<T> {
    pub provider_id: String,
    pub problem_id: String,
    pub n: u64,
    pub m: u64,
    pub s_hat: T,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub tags: BTreeSet<String>,
}

impl<T: Scalar> ProblemStats<T> {
    pub fn new(provider: &str, problem: &str, n: u64, m: u64, s_hat: T) -> Result<Self> {
        let stats = Self {
            provider_id: provider.to_owned(),
            problem_id: problem.to_owned(),
            n,
            m,
            s_hat,
            tags: BTreeSet::new(),
        };
        stats.validate()?;
        Ok(stats)
    }

    pub fn with_tags<I, S>(mut self, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.tags.extend(tags.into_iter().map(Into::into));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(ArbError::invalid(format!(
                "`{}`/`{}`: attempt count must be >= 1",
                self.provider_id, self.problem_id
            )));
        }
        if self.m > self.n {
            return Err(ArbError::invalid(format!(
                "`{}`/`{}`: {} successes out of {} attempts",
                self.provider_id, self.problem_id, self.m, self.n
            )));
        }
        if !(self.s_hat > T::zero()) || !self.s_hat.is_finite() {
            return Err(ArbError::DegenerateCost {
                provider: self.provider_id.clone(),
                problem: self.problem_id.clone(),
            });
        }
        Ok(())
    }

    /// Empirical single-attempt success rate `m / n`.
    pub fn success_rate(&self) -> T {
        T::from_u64(self.m).unwrap() / T::from_u64(self.n).unwrap()
    }
}

/// Per-provider×problem statistics over a provider set and a problem set,
/// all in a single cost unit.
///
/// Pairs without observations behave as `n = 0`: the provider never solves
/// the problem, and its per-attempt cost is imputed as the provider's mean
/// `s_hat` over the problems it did attempt.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DatasetFile<T>", into = "DatasetFile<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Dataset<T: Scalar> {
    unit: CostUnit,
    providers: Vec<String>,
    problems: Vec<String>,
    problem_tags: Vec<BTreeSet<String>>,
    observed: Vec<Vec<Option<ProblemStats<T>>>>,
    profiles: Vec<Vec<SolveProfile<T>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
struct DatasetFile<T: Scalar> {
    cost_unit: CostUnit,
    providers: Vec<String>,
    stats: Vec<ProblemStats<T>>,
}

impl<T: Scalar> From<Dataset<T>> for DatasetFile<T> {
    fn from(ds: Dataset<T>) -> Self {
        DatasetFile {
            cost_unit: ds.unit,
            providers: ds.providers.clone(),
            stats: ds.iter_stats().cloned().collect(),
        }
    }
}

impl<T: Scalar> TryFrom<DatasetFile<T>> for Dataset<T> {
    type Error = ArbError;

    fn try_from(file: DatasetFile<T>) -> Result<Self> {
        Dataset::new(file.cost_unit, file.providers, file.stats)
    }
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from statistics. `providers` may list providers with
    /// no observations at all; every provider appearing in `stats` is added.
    pub fn new<I, S>(unit: CostUnit, providers: I, stats: Vec<ProblemStats<T>>) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut provider_set: BTreeSet<String> = providers.into_iter().map(Into::into).collect();
        let mut tags: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for s in &stats {
            s.validate()?;
            provider_set.insert(s.provider_id.clone());
            tags.entry(s.problem_id.clone())
                .or_default()
                .extend(s.tags.iter().cloned());
        }
        let providers: Vec<String> = provider_set.into_iter().collect();
        let problems: Vec<String> = tags.keys().cloned().collect();
        let problem_tags: Vec<BTreeSet<String>> = tags.into_values().collect();

        let mut observed: Vec<Vec<Option<ProblemStats<T>>>> =
            vec![vec![None; problems.len()]; providers.len()];
        for mut s in stats {
            let pi = providers.binary_search(&s.provider_id).expect("provider registered");
            let ji = problems.binary_search(&s.problem_id).expect("problem registered");
            if observed[pi][ji].is_some() {
                return Err(ArbError::invalid(format!(
                    "duplicate statistics for `{}` on `{}`",
                    s.provider_id, s.problem_id
                )));
            }
            s.tags = problem_tags[ji].clone();
            observed[pi][ji] = Some(s);
        }

        let profiles = observed
            .iter()
            .map(|row| {
                let costs: Vec<T> = row.iter().flatten().map(|s| s.s_hat).collect();
                let imputed = if costs.is_empty() {
                    T::one()
                } else {
                    crate::scalar::mean(costs)
                };
                row.iter()
                    .map(|s| match s {
                        Some(s) => SolveProfile::from_stats(s),
                        None => SolveProfile::unobserved(imputed),
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            unit,
            providers,
            problems,
            problem_tags,
            observed,
            profiles,
        })
    }

    pub fn unit(&self) -> CostUnit {
        self.unit
    }

    /// Provider ids in lexicographic order.
    pub fn providers(&self) -> &[String] {
        &self.providers
    }

    /// Problem ids in lexicographic order.
    pub fn problems(&self) -> &[String] {
        &self.problems
    }

    pub fn problem_count(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn provider_index(&self, provider: &str) -> Result<usize> {
        self.providers
            .binary_search_by(|p| p.as_str().cmp(provider))
            .map_err(|_| ArbError::not_found("provider", provider))
    }

    pub fn problem_index(&self, problem: &str) -> Result<usize> {
        self.problems
            .binary_search_by(|p| p.as_str().cmp(problem))
            .map_err(|_| ArbError::not_found("problem", problem))
    }

    pub fn problem_tags(&self, problem_index: usize) -> &BTreeSet<String> {
        &self.problem_tags[problem_index]
    }

    pub fn stats(&self, provider: &str, problem: &str) -> Option<&ProblemStats<T>> {
        let pi = self.provider_index(provider).ok()?;
        let ji = self.problem_index(problem).ok()?;
        self.observed[pi][ji].as_ref()
    }

    /// Observed statistics, provider-major.
    pub fn iter_stats(&self) -> impl Iterator<Item = &ProblemStats<T>> {
        self.observed.iter().flatten().flatten()
    }

    /// Solve profiles of one provider, aligned with [`Dataset::problems`].
    /// Unobserved pairs are included with `n = 0`.
    pub fn profiles(&self, provider_index: usize) -> &[SolveProfile<T>] {
        &self.profiles[provider_index]
    }

    /// Keeps only the problems for which `keep` returns true. All providers
    /// are retained.
    pub fn restrict<F: Fn(&str, &BTreeSet<String>) -> bool>(&self, keep: F) -> Result<Self> {
        let stats = self
            .iter_stats()
            .filter(|s| {
                let ji = self.problem_index(&s.problem_id).expect("known problem");
                keep(&s.problem_id, &self.problem_tags[ji])
            })
            .cloned()
            .collect();
        Dataset::new(self.unit, self.providers.clone(), stats)
    }

    /// Partitions problems by membership of `tag`: `(with, without)`.
    pub fn split_by_tag(&self, tag: &str) -> Result<(Self, Self)> {
        if self.is_empty() {
            return Err(ArbError::Empty("dataset has no problems to split"));
        }
        let with = self.restrict(|_, tags| tags.contains(tag))?;
        let without = self.restrict(|_, tags| !tags.contains(tag))?;
        if with.is_empty() || without.is_empty() {
            tracing::warn!(tag, with = with.problem_count(), without = without.problem_count(), "tag split produced an empty side");
        }
        Ok((with, without))
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)
            .map_err(|e| ArbError::invalid(format!("dataset serialization failed: {e}")))
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        serde_json::from_reader(reader).map_err(|e| ArbError::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }
}
