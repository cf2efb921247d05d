#![allow(dead_code)]

use arbitrage_core::ingest::{AttemptLog, AttemptRecord, CostModel, CostUnit, Dataset, ProblemStats};

pub fn dataset(stats: Vec<ProblemStats<f64>>) -> Dataset<f64> {
    Dataset::new(CostUnit::Usd, Vec::<String>::new(), stats).unwrap()
}

/// `a` solves "easy" problems with probability 0.9 per attempt at 0.01 and
/// never solves "hard" ones; `b` solves everything with probability 0.5 at
/// 0.1 per attempt.
pub fn two_segment() -> Dataset<f64> {
    let mut stats = Vec::new();
    for j in 0..10 {
        let easy = format!("easy{j:02}");
        let hard = format!("hard{j:02}");
        stats.push(ProblemStats::new("a", &easy, 10, 9, 0.01).unwrap().with_tags(["easy"]));
        stats.push(ProblemStats::new("a", &hard, 10, 0, 0.01).unwrap().with_tags(["hard"]));
        stats.push(ProblemStats::new("b", &easy, 10, 5, 0.1).unwrap().with_tags(["easy"]));
        stats.push(ProblemStats::new("b", &hard, 10, 5, 0.1).unwrap().with_tags(["hard"]));
    }
    dataset(stats)
}

/// `b` is cheaper per attempt and more reliable than `a` on every problem.
pub fn dominated() -> Dataset<f64> {
    let mut stats = Vec::new();
    for j in 0..8 {
        let p = format!("q{j}");
        stats.push(ProblemStats::new("a", &p, 10, 3, 0.1).unwrap());
        stats.push(ProblemStats::new("b", &p, 10, 6, 0.05).unwrap());
    }
    dataset(stats)
}

/// Fifty problems of one provider with assorted attempt counts, success
/// counts and per-attempt costs.
pub fn fifty_problems() -> Dataset<f64> {
    let stats = (0..50)
        .map(|j| {
            let n = 4 + (j % 9) as u64;
            let m = (j as u64 * 7) % (n + 1);
            let s = 0.02 + 0.01 * (j % 5) as f64;
            ProblemStats::new("x", &format!("q{j:02}"), n, m, s).unwrap()
        })
        .collect();
    dataset(stats)
}

pub fn cheap_and_strong() -> Dataset<f64> {
    let mut stats = Vec::new();
    for j in 0..20 {
        let p = format!("q{j:02}");
        stats.push(ProblemStats::new("cheap", &p, 8, (j % 5) as u64, 0.02).unwrap());
        stats.push(ProblemStats::new("strong", &p, 8, 3 + (j % 4) as u64, 0.15).unwrap());
    }
    dataset(stats)
}

/// Raw attempts: `a` answers easy problems on the first try at 0.01 and
/// never solves hard ones; `b` costs 0.1 per attempt with 1 to 3 successes
/// out of 4 depending on the problem.
pub fn two_type_log(problems: usize) -> AttemptLog<f64> {
    let mut recs = Vec::new();
    for j in 0..problems {
        let easy = j % 2 == 0;
        let id = format!("{}{j:03}", if easy { "e" } else { "h" });
        let tag = if easy { "easy" } else { "hard" };
        for k in 0..4 {
            let mut a = AttemptRecord::with_cost("a", &id, easy, 0.01);
            a.tags.insert(tag.into());
            recs.push(a);
            let mut b = AttemptRecord::with_cost("b", &id, k < 1 + j % 3, 0.1);
            b.tags.insert(tag.into());
            recs.push(b);
        }
    }
    AttemptLog::from_records(&recs, &CostModel::Recorded, None).unwrap()
}
