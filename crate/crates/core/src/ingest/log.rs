use std::collections::{BTreeMap, BTreeSet};

use super::dataset::{Dataset, ProblemStats};
use super::pricing::CostModel;
use super::record::{AttemptRecord, CostUnit};
use crate::error::{ArbError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attempt<T> {
    pub success: bool,
    pub cost: T,
}

/// Priced attempts grouped by (provider, problem), in recorded order.
#[derive(Debug, Clone)]
pub struct AttemptLog<T> {
    unit: CostUnit,
    providers: BTreeSet<String>,
    problem_tags: BTreeMap<String, BTreeSet<String>>,
    attempts: BTreeMap<(String, String), Vec<Attempt<T>>>,
}

impl<T: Scalar> AttemptLog<T> {
    /// Prices and groups records. Records carrying different unit labels, or
    /// a label different from `declared`, are rejected.
    pub fn from_records(
        records: &[AttemptRecord<T>],
        model: &CostModel<T>,
        declared: Option<CostUnit>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(ArbError::Empty("attempt log has no records"));
        }
        let mut unit = declared;
        let mut providers = BTreeSet::new();
        let mut problem_tags: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut attempts: BTreeMap<(String, String), Vec<Attempt<T>>> = BTreeMap::new();
        for rec in records {
            let (cost, label) = model.resolve(rec)?;
            if let Some(label) = label {
                match unit {
                    None => unit = Some(label),
                    Some(u) if u != label => {
                        return Err(ArbError::UnitMismatch {
                            expected: u,
                            found: label,
                        })
                    }
                    Some(_) => {}
                }
            }
            providers.insert(rec.provider_id.clone());
            problem_tags
                .entry(rec.problem_id.clone())
                .or_default()
                .extend(rec.tags.iter().cloned());
            attempts
                .entry((rec.provider_id.clone(), rec.problem_id.clone()))
                .or_default()
                .push(Attempt {
                    success: rec.success,
                    cost,
                });
        }
        Ok(Self {
            unit: unit.or(model.unit()).unwrap_or(CostUnit::Abstract),
            providers,
            problem_tags,
            attempts,
        })
    }

    pub fn unit(&self) -> CostUnit {
        self.unit
    }

    pub fn providers(&self) -> impl Iterator<Item = &str> {
        self.providers.iter().map(String::as_str)
    }

    pub fn problems(&self) -> impl Iterator<Item = &str> {
        self.problem_tags.keys().map(String::as_str)
    }

    pub fn problem_count(&self) -> usize {
        self.problem_tags.len()
    }

    pub fn tags(&self, problem: &str) -> Option<&BTreeSet<String>> {
        self.problem_tags.get(problem)
    }

    /// Attempts of `provider` on `problem` in recorded order.
    pub fn attempts(&self, provider: &str, problem: &str) -> &[Attempt<T>] {
        self.attempts
            .get(&(provider.to_owned(), problem.to_owned()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Sub-log over `problems`, where `keep` decides, attempt by attempt in
    /// recorded order, how many leading attempts of each pair to retain.
    pub(crate) fn select<F>(&self, problems: &[String], mut keep: F) -> Self
    where
        F: FnMut(&[Attempt<T>]) -> usize,
    {
        let mut attempts = BTreeMap::new();
        let mut problem_tags = BTreeMap::new();
        for problem in problems {
            if let Some(tags) = self.problem_tags.get(problem) {
                problem_tags.insert(problem.clone(), tags.clone());
            }
            for provider in &self.providers {
                let all = self.attempts(provider, problem);
                let n = keep(all).min(all.len());
                if n > 0 {
                    attempts.insert((provider.clone(), problem.clone()), all[..n].to_vec());
                }
            }
        }
        Self {
            unit: self.unit,
            providers: self.providers.clone(),
            problem_tags,
            attempts,
        }
    }

    /// Aggregates into per-pair `(n, m, s_hat)`. Costs within a pair are
    /// summed in sorted order so the result does not depend on record order.
    pub fn to_dataset(&self) -> Result<Dataset<T>> {
        let mut stats = Vec::with_capacity(self.attempts.len());
        for ((provider, problem), attempts) in &self.attempts {
            let mut costs: Vec<T> = attempts.iter().map(|a| a.cost).collect();
            costs.sort_by(|a, b| a.partial_cmp(b).expect("costs are finite"));
            let total = costs.into_iter().fold(T::zero(), |acc, c| acc + c);
            let n = attempts.len() as u64;
            let m = attempts.iter().filter(|a| a.success).count() as u64;
            let s_hat = total / T::from_u64(n).unwrap();
            if !(s_hat > T::zero()) {
                return Err(ArbError::DegenerateCost {
                    provider: provider.clone(),
                    problem: problem.clone(),
                });
            }
            let tags = self.problem_tags.get(problem).cloned().unwrap_or_default();
            stats.push(ProblemStats::new(provider, problem, n, m, s_hat)?.with_tags(tags));
        }
        Dataset::new(self.unit, self.providers.iter().cloned(), stats)
    }
}

/// Prices and aggregates attempt records into a [`Dataset`].
pub fn aggregate<T: Scalar>(records: &[AttemptRecord<T>], model: &CostModel<T>) -> Result<Dataset<T>> {
    AttemptLog::from_records(records, model, None)?.to_dataset()
}
