use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ArbError, Result};
use crate::scalar::Scalar;

/// Unit every cost in a dataset is expressed in. Units are never converted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostUnit {
    Usd,
    Flops,
    Abstract,
}

impl fmt::Display for CostUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostUnit::Usd => "usd",
            CostUnit::Flops => "flops",
            CostUnit::Abstract => "abstract",
        })
    }
}

impl FromStr for CostUnit {
    type Err = ArbError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "usd" => Ok(CostUnit::Usd),
            "flops" => Ok(CostUnit::Flops),
            "abstract" => Ok(CostUnit::Abstract),
            other => Err(ArbError::invalid(format!("unknown cost unit `{other}`"))),
        }
    }
}

/// One observed attempt of a provider on a problem.
///
/// Either `cost` or token counts must be present. Token counts are priced at
/// ingestion time through a [`CostModel`](super::CostModel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord<T> {
    pub provider_id: String,
    pub problem_id: String,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_unit: Option<CostUnit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cached_input_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub tags: BTreeSet<String>,
}

impl<T: Scalar> AttemptRecord<T> {
    /// Record with an explicit cost and no token counts.
    pub fn with_cost(provider: &str, problem: &str, success: bool, cost: T) -> Self {
        Self {
            provider_id: provider.to_owned(),
            problem_id: problem.to_owned(),
            success,
            cost: Some(cost),
            cost_unit: None,
            input_tokens: None,
            output_tokens: None,
            cached_input_tokens: None,
            tags: BTreeSet::new(),
        }
    }

    pub fn has_tokens(&self) -> bool {
        self.input_tokens.is_some() || self.output_tokens.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if self.provider_id.is_empty() || self.problem_id.is_empty() {
            return Err(ArbError::InvalidRecord(
                "provider_id and problem_id must be non-empty".into(),
            ));
        }
        if let (Some(cached), input) = (self.cached_input_tokens, self.input_tokens) {
            let input = input.unwrap_or(0);
            if cached > input {
                return Err(ArbError::InvalidRecord(format!(
                    "cached_input_tokens ({cached}) exceeds input_tokens ({input})"
                )));
            }
        }
        match self.cost {
            Some(c) if !(c >= T::zero()) || !c.is_finite() => Err(ArbError::InvalidRecord(
                format!("cost must be a finite non-negative number, got {c}"),
            )),
            None if !self.has_tokens() => Err(ArbError::InvalidRecord(
                "record needs either `cost` or token counts".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Reads a line-delimited JSON attempt log. Blank lines are skipped; every
/// other line must hold exactly one record.
pub fn read_attempt_log<T: Scalar, R: BufRead>(reader: R) -> Result<Vec<AttemptRecord<T>>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let record: AttemptRecord<T> =
            serde_json::from_str(trimmed).map_err(|e| ArbError::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        record.validate().map_err(|e| ArbError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_cost_and_token_records() {
        let text = r#"{"provider_id":"a","problem_id":"p1","success":true,"cost":0.5,"tags":["django"]}

{"provider_id":"b","problem_id":"p1","success":false,"input_tokens":100,"output_tokens":20,"cached_input_tokens":50}
"#;
        let recs: Vec<AttemptRecord<f64>> = read_attempt_log(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].cost, Some(0.5));
        assert!(recs[0].tags.contains("django"));
        assert_eq!(recs[1].cached_input_tokens, Some(50));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"provider_id\":\"a\",\"problem_id\":\"p\",\"success\":true,\"cost\":1}\nnot json\n";
        let err = read_attempt_log::<f64, _>(text.as_bytes()).unwrap_err();
        match err {
            ArbError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn cached_above_input_is_invalid() {
        let text = r#"{"provider_id":"a","problem_id":"p","success":true,"input_tokens":10,"output_tokens":1,"cached_input_tokens":11}"#;
        let err = read_attempt_log::<f64, _>(text.as_bytes()).unwrap_err();
        assert!(matches!(err, ArbError::Parse { line: 1, .. }));
    }

    #[test]
    fn record_without_cost_or_tokens_is_invalid() {
        let rec = AttemptRecord::<f64> {
            cost: None,
            ..AttemptRecord::with_cost("a", "p", true, 1.0)
        };
        assert!(matches!(rec.validate(), Err(ArbError::InvalidRecord(_))));
        let neg = AttemptRecord::with_cost("a", "p", true, -1.0_f64);
        assert!(neg.validate().is_err());
    }

    #[test]
    fn cost_unit_round_trips_through_text() {
        for u in [CostUnit::Usd, CostUnit::Flops, CostUnit::Abstract] {
            assert_eq!(u.to_string().parse::<CostUnit>().unwrap(), u);
        }
        assert!("yen".parse::<CostUnit>().is_err());
    }
}
