//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use arbitrage_core::arbitrage::{
    aggregate_profit, detect_opportunity, enumerate_policies, optimize_policy, DemandWeights,
    MarginalProfit, OptimizerConfig, OrderStrategy, ProfitCurve,
};
use arbitrage_core::cascade::{
    cascade_curve, cascade_expected_cost, cascade_frontier, cascade_performance, efficiency_order,
    revenue_split, CascadePolicy,
};
use arbitrage_core::competition::{bertrand_simulate, marginal_revenue_change, MarketState};
use arbitrage_core::curves::{build_provider_curve, pass_at_k, provider_expected_cost, MarketFrontier, PriceFrontier};
use arbitrage_core::ingest::{flop_cost, price_attempt, PricingEntry};
use arbitrage_core::mc_oracle::{simulate_cascade, simulate_dataset_provider, SimConfig, SpendMode};
use arbitrage_core::robustness::{bootstrap_profit_ci, draw_search_sample, fit_and_evaluate, BootstrapConfig, SpendAccounting};
use arbitrage_core::UniformGrid;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Probability that a uniformly random k-subset of n attempts, the first m
/// of which succeed, contains a success.
fn subset_enumeration(n: u32, m: u32, k: u32) -> f64 {
    let success = (1u32 << m) - 1;
    let (mut total, mut hit) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() == k {
            total += 1;
            if mask & success != 0 {
                hit += 1;
            }
        }
    }
    hit as f64 / total as f64
}

fn pass_at_k_exactness() -> Check {
    let mut worst = 0.0f64;
    for n in 1..=12u32 {
        for m in 0..=n {
            for k in 0..=n {
                let got: f64 = pass_at_k(n as u64, m as u64, k as u64).map_err(|e| e.to_string())?;
                let err = (got - subset_enumeration(n, m, k)).abs();
                worst = worst.max(err);
                ensure(err <= 1e-12, || format!("n={n} m={m} k={k}: error {err:e}"))?;
            }
        }
    }
    Ok(format!("max abs error {worst:.1e}"))
}

fn survival_cost_oracle() -> Check {
    let ds = common::fifty_problems();
    let config = SimConfig::new(100_000, 11, SpendMode::Continuous);
    let mut worst = 0.0f64;
    for i in 1..=10 {
        let b = 0.05 * i as f64;
        let analytic = provider_expected_cost(&ds, "x", b, 0.0005).map_err(|e| e.to_string())?;
        let sim = simulate_dataset_provider(&ds, "x", b, &config).map_err(|e| e.to_string())?;
        let rel = (analytic - sim.spend.mean).abs() / sim.spend.mean;
        worst = worst.max(rel);
        ensure(rel <= 0.02, || format!("b={b}: analytic {analytic} vs simulated {}", sim.spend.mean))?;
    }
    Ok(format!("max relative error {:.3}%", 100.0 * worst))
}

fn cascade_oracle() -> Check {
    let ds = common::cheap_and_strong();
    let policy = CascadePolicy::from_caps([("cheap", 0.1), ("strong", 0.9)]).map_err(|e| e.to_string())?;
    let config = SimConfig::new(100_000, 5, SpendMode::Continuous);
    let (mut worst_sigma, mut worst_cost, mut worst_split) = (0.0f64, 0.0f64, 0.0f64);
    for b in [0.05, 0.1, 0.3, 0.6, 1.0] {
        let sim = simulate_cascade(&policy, &ds, b, &config).map_err(|e| e.to_string())?;
        let perf = cascade_performance(&policy, &ds, b).map_err(|e| e.to_string())?;
        let gap = (perf - sim.performance.mean).abs();
        if sim.performance.std_err > 0.0 {
            worst_sigma = worst_sigma.max(gap / sim.performance.std_err);
        }
        ensure(sim.performance.within_sigma(perf, 3.0) || gap <= 1e-12, || {
            format!("b={b}: performance {perf} vs {:?}", sim.performance)
        })?;

        let cost = cascade_expected_cost(&policy, &ds, b, 0.0005).map_err(|e| e.to_string())?;
        let rel = (cost - sim.cost.mean).abs() / sim.cost.mean;
        worst_cost = worst_cost.max(rel);
        ensure(rel <= 0.02, || format!("b={b}: cost {cost} vs {}", sim.cost.mean))?;

        let split = revenue_split(&policy, &ds, b, 0.0005).map_err(|e| e.to_string())?;
        for ((p, analytic), (q, est)) in split.iter().zip(&sim.provider_spend) {
            ensure(p == q, || "provider order differs".into())?;
            if est.mean == 0.0 {
                ensure(*analytic == 0.0, || format!("b={b}: {p} earns {analytic}, simulated 0"))?;
                continue;
            }
            let rel = (analytic - est.mean).abs() / est.mean;
            worst_split = worst_split.max(rel);
            ensure(rel <= 0.02, || format!("b={b}: {p} revenue {analytic} vs {}", est.mean))?;
        }
    }
    Ok(format!(
        "performance within {worst_sigma:.2} sigma, cost {:.3}%, split {:.3}%",
        100.0 * worst_cost,
        100.0 * worst_split
    ))
}

struct Fitted {
    market: PriceFrontier<f64>,
    q_star: PriceFrontier<f64>,
    range: (f64, f64),
    profit: f64,
    result: arbitrage_core::arbitrage::OptimizationResult<f64>,
}

fn fit_two_segment() -> Result<Fitted, String> {
    let ds = common::two_segment();
    let config = OptimizerConfig::new(1.0);
    let result = optimize_policy(&ds, &config).map_err(|e| e.to_string())?;
    Ok(Fitted {
        market: result.context.market.frontier.clone(),
        q_star: result.frontier.clone(),
        range: result.u_range,
        profit: result.profit,
        result,
    })
}

fn optimizer_soundness(fit: &Fitted) -> Check {
    let ds = common::two_segment();
    let u_grid = UniformGrid::unit(0.001).unwrap();
    let providers: Vec<PriceFrontier<f64>> = ds
        .providers()
        .iter()
        .map(|p| PriceFrontier::from_curve(&build_provider_curve(&ds, p, 1.0, 0.001).unwrap(), &u_grid))
        .collect();
    let market = MarketFrontier::new(&providers).map_err(|e| e.to_string())?.frontier;
    ensure(market == fit.market, || "optimizer market differs from direct construction".into())?;
    let range = (0.0, market.max_reachable().ok_or("market unreachable")?);
    let order = efficiency_order(&ds, 0.01).map_err(|e| e.to_string())?;

    let mut best: Option<(f64, Vec<f64>)> = None;
    for units in 0..=100 {
        let first = units as f64 * 0.01;
        let caps = vec![first, (1.0 - first).max(0.0)];
        let policy = CascadePolicy::from_caps(order.iter().cloned().zip(caps.iter().copied()))
            .map_err(|e| e.to_string())?;
        let frontier = cascade_frontier(&policy, &ds, 1.0, 0.001, &u_grid).map_err(|e| e.to_string())?;
        let profit = aggregate_profit(&market, &frontier, &DemandWeights::Uniform, range).map_err(|e| e.to_string())?;
        if best.as_ref().is_none_or(|(p, _)| profit > *p) {
            best = Some((profit, caps));
        }
    }
    let (brute_profit, brute_caps) = best.unwrap();
    let caps = fit.result.policy.caps();
    ensure(brute_profit > 0.0, || "fixture has no arbitrage opportunity".into())?;
    ensure((fit.profit - brute_profit).abs() <= 1e-12 * brute_profit, || {
        format!("optimizer profit {} vs brute force {brute_profit}", fit.profit)
    })?;
    ensure(caps == brute_caps, || format!("optimizer caps {caps:?} vs brute force {brute_caps:?}"))?;
    ensure(fit.result.policy.providers().eq(order.iter().map(String::as_str)), || "order differs".into())?;
    Ok(format!("tau* = {} with profit {:.6}, {} candidates", fit.result.policy, fit.profit, fit.result.evaluated))
}

fn equilibrium(fit: &Fitted) -> Check {
    let f = 0.01;
    let state = MarketState::duopoly_like(fit.result.context.market.clone(), &fit.q_star, 2).map_err(|e| e.to_string())?;
    let traj = bertrand_simulate(&state, 100_000, f).map_err(|e| e.to_string())?;
    ensure(traj.converged, || "price war did not converge".into())?;
    let last = traj.final_prices();
    let mut checked = 0;
    for i in 0..fit.market.len() {
        let Some(cp) = fit.market.cost[i] else { continue };
        let eq = fit.q_star.cost[i].map_or(cp, |cq| cp.min(cq));
        let p = last[i].ok_or_else(|| format!("no price at u={}", fit.market.performance[i]))?;
        ensure(p >= eq * (1.0 - 1e-12) && p <= eq / (1.0 - f) * (1.0 + 1e-12), || {
            format!("u={}: price {p} vs equilibrium {eq}", fit.market.performance[i])
        })?;
        checked += 1;
    }
    let after = ProfitCurve::against_market(&traj.final_state.prevailing_frontier(), &fit.q_star)
        .and_then(|c| c.integrate(&DemandWeights::Uniform, fit.range))
        .map_err(|e| e.to_string())?;
    ensure(after < 0.01 * fit.profit, || format!("profit after competition {after} vs {}", fit.profit))?;
    Ok(format!(
        "{} rounds, {checked} levels at equilibrium, profit {:.6} -> {after:.2e}",
        traj.rounds.len() - 1,
        fit.profit
    ))
}

fn conservation(fit: &Fitted) -> Check {
    let ds = common::two_segment();
    let mut candidates = enumerate_policies(&ds, &OrderStrategy::Exhaustive, 1.0, 0.05).map_err(|e| e.to_string())?;
    candidates.push(fit.result.policy.clone());
    let analysis = marginal_revenue_change(&ds, &fit.result.context, &candidates, fit.range).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut served = 0;
    for row in &analysis.rows {
        let paid: f64 = row.after.iter().sum::<f64>() + row.arbitrage_profit;
        let rel = (paid - row.expenditure).abs() / row.expenditure.max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        ensure(rel <= 1e-6, || format!("u={}: {paid} vs {}", row.performance, row.expenditure))?;
        let before: f64 = row.before.iter().sum();
        ensure(before == row.expenditure, || "before-revenue differs from expenditure".into())?;
        served += row.serving_policy.is_some() as usize;
    }
    ensure(served > 0, || "no level is served by arbitrage".into())?;
    Ok(format!("{} levels ({served} arbitraged), max relative gap {worst:.1e}", analysis.rows.len()))
}

fn degenerate_reductions() -> Check {
    let mut compared = 0;
    for ds in [common::two_segment(), common::cheap_and_strong(), common::fifty_problems()] {
        for p in ds.providers() {
            let direct = build_provider_curve(&ds, p, 1.0, 0.001).map_err(|e| e.to_string())?;
            let single = cascade_curve(&CascadePolicy::single(p, 1.0), &ds, 1.0, 0.001).map_err(|e| e.to_string())?;
            ensure(direct.budget_grid == single.budget_grid, || "grids differ".into())?;
            ensure(direct.performance == single.performance, || format!("{p}: performance differs"))?;
            ensure(direct.expected_cost == single.expected_cost, || format!("{p}: cost differs"))?;
            compared += 1;
        }
    }

    let ds = common::dominated();
    let mut config = OptimizerConfig::new(1.0);
    config.order = OrderStrategy::Exhaustive;
    let result = optimize_policy(&ds, &config).map_err(|e| e.to_string())?;
    ensure(result.profit == 0.0, || format!("dominated market profit {}", result.profit))?;
    for step in result.policy.steps() {
        if step.provider_id == "a" {
            ensure(step.cap == 0.0, || format!("dominated provider capped at {}", step.cap))?;
        }
    }
    let market = &result.context.market.frontier;
    let policies = enumerate_policies(&ds, &OrderStrategy::Exhaustive, 1.0, 0.01).map_err(|e| e.to_string())?;
    for policy in &policies {
        let frontier = result.context.policy_frontier(policy, &ds).map_err(|e| e.to_string())?;
        let curve = ProfitCurve::against_market(market, &frontier).map_err(|e| e.to_string())?;
        ensure(curve.profit.iter().all(|p| *p == MarginalProfit::Value(0.0) || *p == MarginalProfit::UnboundedReference), || {
            format!("{policy} earns profit in a dominated market")
        })?;
        ensure(detect_opportunity(market, &frontier).map_err(|e| e.to_string())?.is_none(), || {
            format!("{policy} undercuts a dominated market")
        })?;
    }
    Ok(format!("{compared} single-provider curves bit-identical, {} dominated cascades earn 0", policies.len()))
}

fn robustness_determinism() -> Check {
    let log = common::two_type_log(30);
    let mut config = OptimizerConfig::new(1.0);
    config.cap_step = 0.05;
    config.grid_step = 0.01;
    config.u_step = 0.01;
    let range = (0.6, 0.8);

    let full = draw_search_sample(&log, 1e6, 0.5, 0, SpendAccounting::WorstCase).map_err(|e| e.to_string())?;
    ensure(full.len() == 30, || "full sample misses problems".into())?;
    let eval = log.to_dataset().map_err(|e| e.to_string())?;
    let truth = fit_and_evaluate(&full, &eval, &config, range).map_err(|e| e.to_string())?.margin;
    ensure(truth > 0.0, || "fixture has no profitable policy".into())?;

    let boot = BootstrapConfig::new(5.0, 0.5, 50, 2024);
    let a = bootstrap_profit_ci(&log, &boot, &config, range).map_err(|e| e.to_string())?;
    let b = bootstrap_profit_ci(&log, &boot, &config, range).map_err(|e| e.to_string())?;
    ensure(a == b, || "bootstrap differs under the same seed".into())?;

    let (mut covered, mut widest) = (0, 0.0f64);
    for meta in 0..100u64 {
        let boot = BootstrapConfig::new(5.0, 0.5, 50, 1_000 + meta);
        let ci = bootstrap_profit_ci(&log, &boot, &config, range).map_err(|e| e.to_string())?;
        covered += ci.contains(truth) as usize;
        widest = widest.max(ci.hi - ci.lo);
    }
    ensure(covered >= 90, || format!("CI covered the full-data margin in {covered}/100 meta-trials"))?;
    Ok(format!(
        "full-data margin {truth:.4}, covered in {covered}/100 meta-trials, widest interval {widest:.4}"
    ))
}

fn pricing() -> Check {
    let mini = PricingEntry::new("gpt-5-mini", 0.25, 2.00, 0.9).map_err(|e| e.to_string())?;
    let fresh: f64 = price_attempt(1_000_000, 1_000_000, 0, &mini).map_err(|e| e.to_string())?;
    let cached: f64 = price_attempt(1_000_000, 1_000_000, 1_000_000, &mini).map_err(|e| e.to_string())?;
    let zero: f64 = price_attempt(0, 0, 0, &mini).map_err(|e| e.to_string())?;
    ensure(fresh == 2.25, || format!("uncached {fresh}"))?;
    ensure(cached == 2.025, || format!("cached {cached}"))?;
    ensure(zero == 0.0, || format!("zero tokens {zero}"))?;
    for (n, d) in [(1.7e9, 1000.0), (7e10, 12345.0), (4.8e11, 0.0), (3.0, 7.0)] {
        let c: f64 = flop_cost(n, d);
        ensure(c == 2.0 * n * d, || format!("flop_cost({n}, {d}) = {c}"))?;
    }
    ensure(flop_cost(1.7e9_f64, 1000.0) == 3.4e12, || "flop example".into())?;
    Ok("2.25, 2.025, 0 and 2·N·D exact".into())
}

fn run(id: u32, name: &str, limit: Duration, check: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = check();
    let elapsed = start.elapsed();
    let outcome = match outcome {
        Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:.1?}, limit {limit:?}")),
        other => other,
    };
    match outcome {
        Ok(detail) => {
            println!("PASS criterion {id} ({name}): {detail} [{elapsed:.2?}]");
            true
        }
        Err(why) => {
            println!("FAIL criterion {id} ({name}): {why} [{elapsed:.2?}]");
            false
        }
    }
}

#[test]
fn acceptance_criteria() {
    let minute = Duration::from_secs(60);
    let mut ok = true;
    ok &= run(1, "pass@k exactness", Duration::from_secs(10), pass_at_k_exactness);
    ok &= run(2, "survival-cost oracle", minute, survival_cost_oracle);
    ok &= run(3, "cascade oracle", minute, cascade_oracle);

    let start = Instant::now();
    let fit = fit_two_segment().expect("two-segment fixture optimizes");
    let fit_time = start.elapsed();
    ok &= run(4, "optimizer soundness", minute.saturating_sub(fit_time), || optimizer_soundness(&fit));
    ok &= run(5, "equilibrium", minute, || equilibrium(&fit));
    ok &= run(6, "conservation", minute, || conservation(&fit));
    ok &= run(7, "degenerate reductions", minute, degenerate_reductions);
    ok &= run(8, "robustness determinism", Duration::from_secs(300), robustness_determinism);
    ok &= run(9, "pricing", minute, pricing);
    assert!(ok, "at least one acceptance criterion failed");
}
