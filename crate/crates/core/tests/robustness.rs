mod common;

use arbitrage_core::arbitrage::{optimize_policy, OptimizerConfig};
use arbitrage_core::ingest::{AttemptLog, AttemptRecord, CostModel, ProblemStats};
use arbitrage_core::robustness::{
    bootstrap_profit_ci, draw_search_sample, fit_and_evaluate, ood_evaluate, BootstrapConfig, SpendAccounting,
};
use arbitrage_core::ArbError;

fn config() -> OptimizerConfig<f64> {
    let mut c = OptimizerConfig::new(1.0);
    c.cap_step = 0.05;
    c.grid_step = 0.01;
    c.u_step = 0.01;
    c
}

#[test]
fn full_sample_reproduces_unconstrained_fit() {
    let log = common::two_type_log(20);
    let ds = log.to_dataset().unwrap();
    let full = draw_search_sample(&log, 100.0, 0.5, 3, SpendAccounting::WorstCase).unwrap();
    let range = (0.6, 0.8);
    let fitted = fit_and_evaluate(&full, &ds, &config(), range).unwrap();
    let mut c = config();
    c.u_range = Some(range);
    let direct = optimize_policy(&ds, &c).unwrap();
    assert_eq!(fitted.policy, direct.policy);
    assert!(fitted.margin > 0.0 && fitted.margin < 1.0);
}

#[test]
fn dominated_market_yields_zero_margin() {
    let mut recs = Vec::new();
    for j in 0..12 {
        for k in 0..6 {
            recs.push(AttemptRecord::with_cost("a", &format!("q{j}"), k == 5, 0.1));
            recs.push(AttemptRecord::with_cost("b", &format!("q{j}"), k % 2 == 0, 0.05));
        }
    }
    let log = AttemptLog::from_records(&recs, &CostModel::Recorded, None).unwrap();
    let ds = log.to_dataset().unwrap();
    let sample = draw_search_sample(&log, 3.0, 0.5, 1, SpendAccounting::WorstCase).unwrap();
    let out = fit_and_evaluate(&sample, &ds, &config(), (0.0, 1.0)).unwrap();
    assert_eq!(out.margin, 0.0);
}

#[test]
fn bootstrap_edge_cases() {
    let log = common::two_type_log(20);
    let range = (0.6, 0.8);
    let one = bootstrap_profit_ci(&log, &BootstrapConfig::new(4.0, 0.5, 1, 5), &config(), range).unwrap();
    assert_eq!(one.lo, one.hi);
    assert_eq!(one.mean, one.lo);
    assert!(bootstrap_profit_ci(&log, &BootstrapConfig::new(4.0, 0.5, 0, 5), &config(), range).is_err());

    // identical problems: every sample looks like the full data
    let mut recs = Vec::new();
    for j in 0..10 {
        for k in 0..4 {
            recs.push(AttemptRecord::with_cost("a", &format!("q{j}"), k == 0, 0.01));
            recs.push(AttemptRecord::with_cost("b", &format!("q{j}"), k < 3, 0.1));
        }
    }
    let same = AttemptLog::from_records(&recs, &CostModel::Recorded, None).unwrap();
    let ci = bootstrap_profit_ci(&same, &BootstrapConfig::new(2.0, 0.5, 20, 8), &config(), (0.0, 0.9)).unwrap();
    assert_eq!(ci.lo, ci.hi);
}

#[test]
fn interval_narrows_with_search_budget() {
    let log = common::two_type_log(60);
    let range = (0.6, 0.8);
    let width = |budget: f64| {
        let ci = bootstrap_profit_ci(&log, &BootstrapConfig::new(budget, 0.5, 200, 77), &config(), range).unwrap();
        ci.hi - ci.lo
    };
    let small = width(1.5);
    let large = width(20.0);
    assert!(large <= small, "{large} > {small}");
}

#[test]
fn empty_sample_is_an_error() {
    let log = common::two_type_log(10);
    assert!(matches!(
        draw_search_sample(&log, 0.1, 0.5, 0, SpendAccounting::WorstCase),
        Err(ArbError::EmptySample { .. })
    ));
    assert!(draw_search_sample(&log, 0.0, 0.5, 0, SpendAccounting::WorstCase).is_err());
}

/// `a` is reliable on the training distribution and slightly weaker on the
/// test distribution, so the caps fitted on training are off for testing.
fn shifted(m_easy: u64, prefix: &str) -> arbitrage_core::Dataset64 {
    let mut stats = Vec::new();
    for j in 0..12 {
        let id = format!("{prefix}{j:02}");
        let easy = j % 2 == 0;
        stats.push(ProblemStats::new("a", &id, 10, if easy { m_easy } else { 0 }, 0.01).unwrap());
        stats.push(ProblemStats::new("b", &id, 10, 5, 0.1).unwrap());
    }
    common::dataset(stats)
}

#[test]
fn out_of_distribution_margin_does_not_exceed_in_distribution() {
    let train = shifted(9, "tr");
    let test = shifted(3, "te");
    let range = (0.55, 0.9);
    let ood = ood_evaluate(&train, &test, &config(), range, false).unwrap();
    let within = ood_evaluate(&test, &test, &config(), range, true).unwrap();
    assert!(ood.margin <= within.margin, "{} > {}", ood.margin, within.margin);
    assert!(matches!(
        ood_evaluate(&test, &test, &config(), range, false),
        Err(ArbError::OverlappingSplits(12))
    ));
    assert!(ood_evaluate(&train, &test, &config(), (0.5, 1.5), false).is_err());
}

#[test]
fn tag_split_is_a_partition() {
    let log = common::two_type_log(14);
    let ds = log.to_dataset().unwrap();
    let (easy, hard) = ds.split_by_tag("easy").unwrap();
    assert_eq!(easy.problem_count() + hard.problem_count(), ds.problem_count());
    assert!(easy.problems().iter().all(|p| !hard.problems().contains(p)));
    let out = ood_evaluate(&easy, &hard, &config(), (0.0, 1.0), false);
    assert!(out.is_ok());
}
