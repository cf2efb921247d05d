use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::record::{AttemptRecord, CostUnit};
use crate::error::{ArbError, Result};
use crate::scalar::Scalar;

/// Per-provider token prices, quoted per one million tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingEntry<T> {
    pub provider_id: String,
    pub input_price: T,
    pub output_price: T,
    /// Fraction of the input price waived for cached input tokens.
    pub cache_discount: T,
}

impl<T: Scalar> PricingEntry<T> {
    pub fn new(provider: &str, input_price: T, output_price: T, cache_discount: T) -> Result<Self> {
        let entry = Self {
            provider_id: provider.to_owned(),
            input_price,
            output_price,
            cache_discount,
        };
        entry.validate()?;
        Ok(entry)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| ArbError::InvalidPricing {
            provider: self.provider_id.clone(),
            reason: reason.to_owned(),
        };
        if !(self.input_price >= T::zero()) || !(self.output_price >= T::zero()) {
            return Err(bad("prices must be non-negative"));
        }
        if !(self.cache_discount >= T::zero() && self.cache_discount <= T::one()) {
            return Err(bad("cache_discount must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Cost of one attempt from its token counts.
///
/// Uncached input, cached input and output are billed separately; cached
/// input pays `input_price * (1 - cache_discount)`.
pub fn price_attempt<T: Scalar>(
    input_tokens: u64,
    output_tokens: u64,
    cached_input_tokens: u64,
    pricing: &PricingEntry<T>,
) -> Result<T> {
    if cached_input_tokens > input_tokens {
        return Err(ArbError::InvalidRecord(format!(
            "cached_input_tokens ({cached_input_tokens}) exceeds input_tokens ({input_tokens})"
        )));
    }
    let tokens = |n: u64| T::from_u64(n).expect("token count representable");
    let uncached = tokens(input_tokens - cached_input_tokens);
    let cached = tokens(cached_input_tokens);
    let output = tokens(output_tokens);
    let total = uncached * pricing.input_price
        + cached * pricing.input_price * (T::one() - pricing.cache_discount)
        + output * pricing.output_price;
    Ok(total / T::lit(1e6))
}

/// Approximate inference compute `2 N D` for a model of `params` parameters
/// generating `generated_tokens` tokens.
pub fn flop_cost<T: Scalar>(params: T, generated_tokens: T) -> T {
    T::lit(2.0) * params * generated_tokens
}

pub type PricingTable<T> = BTreeMap<String, PricingEntry<T>>;

/// Model size (parameter count) per provider, for FLOP accounting.
pub type ParameterTable<T> = BTreeMap<String, T>;

/// How an attempt's cost is obtained.
#[derive(Debug, Clone, Default)]
pub enum CostModel<T> {
    /// Use the `cost` field recorded in the log.
    #[default]
    Recorded,
    /// Price token counts in USD; records with an explicit `cost` keep it.
    Tokens(PricingTable<T>),
    /// `2 N D` with `D` the output token count.
    Flops(ParameterTable<T>),
}

impl<T: Scalar> CostModel<T> {
    pub fn unit(&self) -> Option<CostUnit> {
        match self {
            CostModel::Recorded => None,
            CostModel::Tokens(_) => Some(CostUnit::Usd),
            CostModel::Flops(_) => Some(CostUnit::Flops),
        }
    }

    /// Cost and unit label of one record. `None` as the unit means the
    /// record carried a bare cost with no label.
    pub(crate) fn resolve(&self, rec: &AttemptRecord<T>) -> Result<(T, Option<CostUnit>)> {
        rec.validate()?;
        if let Some(cost) = rec.cost {
            return Ok((cost, rec.cost_unit));
        }
        let input = rec.input_tokens.unwrap_or(0);
        let output = rec.output_tokens.unwrap_or(0);
        let cached = rec.cached_input_tokens.unwrap_or(0);
        match self {
            CostModel::Recorded => Err(ArbError::InvalidRecord(format!(
                "record for `{}` on `{}` has token counts but no pricing was supplied",
                rec.provider_id, rec.problem_id
            ))),
            CostModel::Tokens(table) => {
                let entry = table
                    .get(&rec.provider_id)
                    .ok_or_else(|| ArbError::not_found("pricing entry", &rec.provider_id))?;
                Ok((price_attempt(input, output, cached, entry)?, Some(CostUnit::Usd)))
            }
            CostModel::Flops(table) => {
                let params = *table
                    .get(&rec.provider_id)
                    .ok_or_else(|| ArbError::not_found("parameter count", &rec.provider_id))?;
                let d = T::from_u64(output).expect("token count representable");
                Ok((flop_cost(params, d), Some(CostUnit::Flops)))
            }
        }
    }
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn csv_error(e: csv::Error) -> ArbError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    ArbError::Parse {
        line,
        message: e.to_string(),
    }
}

/// Reads a pricing table with columns
/// `provider_id,input_price,output_price,cache_discount`.
pub fn read_pricing_table<T: Scalar, R: Read>(reader: R) -> Result<PricingTable<T>> {
    let mut table = PricingTable::new();
    for row in csv_reader(reader).deserialize::<PricingEntry<T>>() {
        let entry = row.map_err(csv_error)?;
        entry.validate()?;
        if table.insert(entry.provider_id.clone(), entry).is_some() {
            return Err(ArbError::invalid("duplicate provider in pricing table"));
        }
    }
    Ok(table)
}

#[derive(Deserialize)]
struct ParameterRow<T> {
    provider_id: String,
    params: T,
}

/// Reads a parameter-count table with columns `provider_id,params`.
pub fn read_parameter_table<T: Scalar, R: Read>(reader: R) -> Result<ParameterTable<T>> {
    let mut table = ParameterTable::new();
    for row in csv_reader(reader).deserialize::<ParameterRow<T>>() {
        let row = row.map_err(csv_error)?;
        if !(row.params > T::zero()) {
            return Err(ArbError::invalid(format!(
                "parameter count for `{}` must be > 0",
                row.provider_id
            )));
        }
        table.insert(row.provider_id, row.params);
    }
    Ok(table)
}
