use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use arbitrage_core::arbitrage::{
    detect_opportunity, enumerate_policies, optimize_policy, MarginalProfit, MarketContext, OptimizerConfig,
    OrderStrategy, ProfitCurve,
};
use arbitrage_core::cascade::{cascade_expected_cost, cascade_performance, revenue_split, CascadePolicy};
use arbitrage_core::competition::{bertrand_simulate, equilibrium_frontier, marginal_revenue_change, MarketState};
use arbitrage_core::curves::{provider_expected_cost, provider_performance};
use arbitrage_core::ingest::{
    read_attempt_log, read_parameter_table, read_pricing_table, AttemptLog, CostModel, CostUnit,
};
use arbitrage_core::mc_oracle::{simulate_cascade, SimConfig, SpendMode};
use arbitrage_core::robustness::{
    bootstrap_profit_ci, draw_search_sample, fit_and_evaluate, ood_evaluate, BootstrapConfig, SpendAccounting,
};
use arbitrage_core::{ArbError, AttemptLog64, CascadePolicy64, Dataset64, UniformGrid};

use crate::args::{AccountingArg, Command, Common, ModeArg, OrderArg};
use crate::error::{CliError, Context};
use crate::output::{num, opt, slug, Output, Table};

const DEFAULT_UNDERCUT: f64 = 0.01;

pub fn run(common: &Common, command: &Command) -> Result<Vec<PathBuf>, CliError> {
    validate(common)?;
    let mut out = Output::create(&common.out, command.name())?;
    match command {
        Command::Ingest => ingest(common, &mut out)?,
        Command::Frontier => frontier(common, &mut out)?,
        Command::Optimize => optimize(common, &mut out)?,
        Command::Compete {
            policy,
            rounds,
            arbitrageurs,
        } => compete(common, &mut out, policy.as_deref(), *rounds, *arbitrageurs)?,
        Command::Revenue { policy } => revenue(common, &mut out, policy.as_deref())?,
        Command::Robustness {
            search_budget,
            per_query_cap,
            resamples,
            accounting,
        } => robustness(common, &mut out, search_budget, *per_query_cap, *resamples, *accounting)?,
        Command::Ood { split_tag } => ood(common, &mut out, split_tag)?,
        Command::Simulate {
            policy,
            trials,
            mode,
            points,
        } => simulate(common, &mut out, policy.as_deref(), *trials, *mode, *points)?,
    }
    out.finish()
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::usage(format!("--{name} must be a positive number, got {v}")))
    }
}

fn validate(c: &Common) -> Result<(), CliError> {
    positive("b-max", c.b_max)?;
    positive("grid-step", c.grid_step)?;
    positive("u-step", c.u_step)?;
    positive("cap-step", c.cap_step)?;
    for (name, v) in [("u-min", c.u_min), ("u-max", c.u_max)] {
        if let Some(v) = v {
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::usage(format!("--{name} must lie in [0, 1], got {v}")));
            }
        }
    }
    if let (Some(lo), Some(hi)) = (c.u_min, c.u_max) {
        if lo > hi {
            return Err(CliError::usage(format!("--u-min {lo} exceeds --u-max {hi}")));
        }
    }
    if let Some(f) = c.undercut {
        if !(f > 0.0 && f < 1.0) {
            return Err(CliError::usage(format!("--undercut must lie in (0, 1), got {f}")));
        }
    }
    if c.order == OrderArg::Fixed && c.providers.is_empty() {
        return Err(CliError::usage("--order fixed needs --providers"));
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data {
            context: format!("cannot open {}", path.display()),
            source: ArbError::Io(e),
        })
}

fn cost_model(c: &Common) -> Result<CostModel<f64>, CliError> {
    let Some(path) = &c.pricing else {
        return Ok(CostModel::Recorded);
    };
    let what = format!("pricing table {}", path.display());
    Ok(if c.cost_unit == Some(CostUnit::Flops) {
        CostModel::Flops(read_parameter_table(open(path)?).context(what)?)
    } else {
        CostModel::Tokens(read_pricing_table(open(path)?).context(what)?)
    })
}

fn load_log(c: &Common) -> Result<AttemptLog64, CliError> {
    let path = c
        .logs
        .as_ref()
        .ok_or_else(|| CliError::usage("this command needs --logs"))?;
    let what = format!("attempt log {}", path.display());
    let records = read_attempt_log(open(path)?).context(what.clone())?;
    AttemptLog::from_records(&records, &cost_model(c)?, c.cost_unit).context(what)
}

fn load_dataset(c: &Common) -> Result<Dataset64, CliError> {
    match (&c.dataset, &c.logs) {
        (Some(path), _) => {
            let what = format!("dataset {}", path.display());
            let ds = Dataset64::read_json(open(path)?).context(what.clone())?;
            if let Some(unit) = c.cost_unit {
                if unit != ds.unit() {
                    return Err(ArbError::UnitMismatch {
                        expected: unit,
                        found: ds.unit(),
                    })
                    .context(what);
                }
            }
            Ok(ds)
        }
        (None, Some(_)) => load_log(c)?.to_dataset().context("aggregating attempts"),
        (None, None) => Err(CliError::usage("this command needs --logs or --dataset")),
    }
}

fn load_policy(path: &Path) -> Result<CascadePolicy64, CliError> {
    CascadePolicy64::read_csv(open(path)?).context(format!("policy {}", path.display()))
}

fn grids(c: &Common) -> Result<(UniformGrid<f64>, UniformGrid<f64>), CliError> {
    let b = UniformGrid::new(c.b_max, c.grid_step).context("budget grid")?;
    let u = UniformGrid::unit(c.u_step).context("performance grid")?;
    Ok((b, u))
}

fn user_range(c: &Common) -> Option<(f64, f64)> {
    match (c.u_min, c.u_max) {
        (None, None) => None,
        (lo, hi) => Some((lo.unwrap_or(0.0), hi.unwrap_or(1.0))),
    }
}

fn optimizer_config(c: &Common) -> OptimizerConfig<f64> {
    let mut config = OptimizerConfig::new(c.b_max);
    config.cap_step = c.cap_step;
    config.grid_step = c.grid_step;
    config.u_step = c.u_step;
    config.u_range = user_range(c);
    config.order = match c.order {
        OrderArg::Efficiency => OrderStrategy::Efficiency,
        OrderArg::Exhaustive => OrderStrategy::Exhaustive,
        OrderArg::Fixed => OrderStrategy::Fixed(c.providers.clone()),
    };
    config
}

fn describe_run(c: &Common, out: &mut Output, unit: CostUnit) {
    out.param("cost_unit", unit);
    out.param("b_max", num(c.b_max));
    out.param("grid_step", num(c.grid_step));
    out.param("u_step", num(c.u_step));
}

fn describe_search(c: &Common, out: &mut Output) {
    out.param("cap_step", num(c.cap_step));
    out.param(
        "order",
        match c.order {
            OrderArg::Efficiency => "efficiency".to_owned(),
            OrderArg::Exhaustive => "exhaustive".to_owned(),
            OrderArg::Fixed => format!("fixed:{}", c.providers.join(">")),
        },
    );
}

fn ingest(c: &Common, out: &mut Output) -> Result<(), CliError> {
    let ds = load_dataset(c)?;
    out.param("cost_unit", ds.unit());
    let mut json = Vec::new();
    ds.write_json(&mut json).context("serializing dataset")?;
    json.push(b'\n');
    out.write_raw("dataset.json", "aggregated per-pair statistics", &json)?;
    let mut table = Table::new(
        "stats.csv",
        "attempts, successes and mean attempt cost per provider and problem",
        &["provider_id", "problem_id", "n", "m", "s_hat", "tags"],
    );
    for s in ds.iter_stats() {
        let tags: Vec<&str> = s.tags.iter().map(String::as_str).collect();
        table.push(vec![
            s.provider_id.clone(),
            s.problem_id.clone(),
            s.n.to_string(),
            s.m.to_string(),
            num(s.s_hat),
            tags.join(";"),
        ]);
    }
    out.write(table)?;
    println!(
        "{} providers, {} problems, costs in {}",
        ds.providers().len(),
        ds.problem_count(),
        ds.unit()
    );
    Ok(())
}

fn frontier(c: &Common, out: &mut Output) -> Result<(), CliError> {
    let ds = load_dataset(c)?;
    describe_run(c, out, ds.unit());
    let (b, u) = grids(c)?;
    let ctx = MarketContext::new(&ds, b, u).context("building frontiers")?;
    for (curve, _) in &ctx.providers {
        let mut table = Table::new(
            format!("curve_{}.csv", slug(&curve.provider_id)),
            format!("performance and expected cost of {} by per-issue budget", curve.provider_id),
            &["budget", "performance", "expected_cost"],
        );
        for i in 0..curve.len() {
            table.push(vec![
                num(curve.budget_grid[i]),
                num(curve.performance[i]),
                num(curve.expected_cost[i]),
            ]);
        }
        out.write(table)?;
        println!("{}: max performance {:.4}", curve.provider_id, curve.max_performance());
    }
    let mut header = vec!["u".to_owned(), "market_cost".to_owned(), "leader".to_owned()];
    header.extend(ctx.providers.iter().map(|(c, _)| format!("cost_{}", c.provider_id)));
    let mut table = Table::with_header("market.csv", "cost to reach each performance level", header);
    for i in 0..ctx.u_grid.len() {
        let mut row = vec![
            num(ctx.market.frontier.performance[i]),
            opt(ctx.market.frontier.cost[i]),
            ctx.market.leaders[i].clone().unwrap_or_default(),
        ];
        row.extend(ctx.providers.iter().map(|(_, f)| opt(f.cost[i])));
        table.push(row);
    }
    out.write(table)
}

fn profit_table(curve: &ProfitCurve<f64>) -> Table {
    let mut table = Table::new(
        "profit.csv",
        "market price, policy buy cost, resale price and profit by performance level",
        &["u", "market_cost", "buy_cost", "sell_price", "profit", "margin", "markup"],
    );
    for i in 0..curve.performance.len() {
        let profit = match curve.profit[i] {
            MarginalProfit::Value(v) => num(v),
            MarginalProfit::UnboundedReference => "unbounded".to_owned(),
        };
        table.push(vec![
            num(curve.performance[i]),
            opt(curve.market_cost[i]),
            opt(curve.buy_cost[i]),
            opt(curve.sell_price[i]),
            profit,
            opt(curve.margin[i]),
            opt(curve.markup[i]),
        ]);
    }
    table
}

fn policy_table(policy: &CascadePolicy64) -> Table {
    let mut table = Table::new("policy.csv", "cascade order and per-provider caps", &["provider_id", "cap"]);
    for s in policy.steps() {
        table.push(vec![s.provider_id.clone(), num(s.cap)]);
    }
    table
}

fn optimize(c: &Common, out: &mut Output) -> Result<(), CliError> {
    let ds = load_dataset(c)?;
    describe_run(c, out, ds.unit());
    describe_search(c, out);
    let result = optimize_policy(&ds, &optimizer_config(c)).context("optimizing caps")?;
    out.param("u_range", format!("{}..{}", num(result.u_range.0), num(result.u_range.1)));
    let market = &result.context.market.frontier;
    let curve = match c.undercut {
        Some(f) => {
            out.param("undercut", num(f));
            ProfitCurve::with_undercut(market, &result.frontier, f)
        }
        None => ProfitCurve::against_market(market, &result.frontier),
    }
    .context("profit curve")?;
    out.write(policy_table(&result.policy))?;
    out.write(profit_table(&curve))?;
    let witness = detect_opportunity(market, &result.frontier).context("opportunity")?;
    println!("policy: {}", result.policy);
    println!(
        "aggregate profit {} over u in [{}, {}] ({} candidates)",
        num(result.profit),
        num(result.u_range.0),
        num(result.u_range.1),
        result.evaluated
    );
    match witness {
        Some(u) => println!("arbitrage opportunity from u = {}", num(u)),
        None => println!("no arbitrage opportunity"),
    }
    Ok(())
}

/// Policy from `path`, or the optimizer's choice.
fn policy_or_optimal(c: &Common, ds: &Dataset64, path: Option<&Path>) -> Result<CascadePolicy64, CliError> {
    match path {
        Some(p) => load_policy(p),
        None => Ok(optimize_policy(ds, &optimizer_config(c)).context("optimizing caps")?.policy),
    }
}

fn compete(
    c: &Common,
    out: &mut Output,
    policy: Option<&Path>,
    rounds: usize,
    sellers: usize,
) -> Result<(), CliError> {
    if sellers == 0 {
        return Err(CliError::usage("--arbitrageurs must be at least 1"));
    }
    let ds = load_dataset(c)?;
    describe_run(c, out, ds.unit());
    let f = c.undercut.unwrap_or(DEFAULT_UNDERCUT);
    out.param("undercut", num(f));
    let policy = policy_or_optimal(c, &ds, policy)?;
    out.param("policy", &policy);
    let (b, u) = grids(c)?;
    let ctx = MarketContext::new(&ds, b, u).context("building frontiers")?;
    let q = ctx.policy_frontier(&policy, &ds).context("policy frontier")?;
    let state = MarketState::duopoly_like(ctx.market.clone(), &q, sellers).context("market state")?;
    let traj = bertrand_simulate(&state, rounds, f).context("price competition")?;

    let mut header = vec!["round".to_owned(), "u".to_owned(), "prevailing".to_owned()];
    header.extend(traj.sellers.iter().cloned());
    let mut table = Table::with_header("trajectory.csv", "prevailing and quoted prices after each round", header);
    for snap in &traj.rounds {
        for (i, &level) in traj.performance.iter().enumerate() {
            let mut row = vec![snap.round.to_string(), num(level), opt(snap.prevailing[i])];
            row.extend(snap.sellers.iter().map(|s| opt(s[i])));
            table.push(row);
        }
    }
    out.write(table)?;

    let eq = equilibrium_frontier(&ctx.market.frontier, &q).context("equilibrium")?;
    let last = traj.final_prices();
    let mut table = Table::new(
        "equilibrium.csv",
        "market price, policy buy cost, equilibrium price and final simulated price",
        &["u", "market_cost", "buy_cost", "equilibrium", "final_price"],
    );
    for i in 0..eq.len() {
        table.push(vec![
            num(eq.performance[i]),
            opt(ctx.market.frontier.cost[i]),
            opt(q.cost[i]),
            opt(eq.cost[i]),
            opt(last[i]),
        ]);
    }
    out.write(table)?;

    let range = user_range(c)
        .or_else(|| ctx.reachable_range())
        .ok_or_else(|| CliError::Data {
            context: "price competition".into(),
            source: ArbError::Empty("no provider reaches any performance level"),
        })?;
    let profit = |prices: &arbitrage_core::PriceFrontier64| {
        ProfitCurve::against_market(prices, &q)
            .and_then(|p| p.integrate(&Default::default(), range))
            .context("aggregate profit")
    };
    let before = profit(&ctx.market.frontier)?;
    let after = profit(&traj.final_state.prevailing_frontier())?;
    println!(
        "{} rounds ({}), aggregate profit {} -> {}",
        traj.rounds.len() - 1,
        if traj.converged { "converged" } else { "round limit reached" },
        num(before),
        num(after)
    );
    Ok(())
}

fn revenue(c: &Common, out: &mut Output, policy: Option<&Path>) -> Result<(), CliError> {
    let ds = load_dataset(c)?;
    describe_run(c, out, ds.unit());
    describe_search(c, out);
    let config = optimizer_config(c);
    let mut candidates =
        enumerate_policies(&ds, &config.order, c.b_max, c.cap_step).context("enumerating policies")?;
    if let Some(p) = policy {
        candidates.push(load_policy(p)?);
    }
    let (b, u) = grids(c)?;
    let ctx = MarketContext::new(&ds, b, u).context("building frontiers")?;
    let range = user_range(c).unwrap_or((0.0, 1.0));
    out.param("u_range", format!("{}..{}", num(range.0), num(range.1)));
    let analysis = marginal_revenue_change(&ds, &ctx, &candidates, range).context("revenue analysis")?;

    let mut header = vec![
        "u".to_owned(),
        "expenditure".to_owned(),
        "arbitrage_profit".to_owned(),
        "serving_policy".to_owned(),
    ];
    for phase in ["before", "after", "delta"] {
        header.extend(analysis.providers.iter().map(|p| format!("{phase}_{p}")));
    }
    let mut table = Table::with_header("revenue.csv", "provider revenue per performance level before and after arbitrage", header);
    for row in &analysis.rows {
        let mut cells = vec![
            num(row.performance),
            num(row.expenditure),
            num(row.arbitrage_profit),
            row.serving_policy.map(|k| candidates[k].to_string()).unwrap_or_default(),
        ];
        cells.extend(row.before.iter().map(|v| num(*v)));
        cells.extend(row.after.iter().map(|v| num(*v)));
        cells.extend(row.delta().iter().map(|v| num(*v)));
        table.push(cells);
    }
    out.write(table)?;

    let mut table = Table::new("segments.csv", "levels where the top-earning provider changes", &["phase", "u"]);
    for (phase, bounds) in [("before", &analysis.boundaries_before), ("after", &analysis.boundaries_after)] {
        for b in bounds {
            table.push(vec![phase.to_owned(), num(*b)]);
        }
    }
    out.write(table)?;

    let mut table = Table::new("revenue_loss.csv", "largest relative revenue loss per provider", &["provider_id", "max_relative_loss"]);
    for (p, loss) in analysis.providers.iter().zip(analysis.max_relative_loss()) {
        println!("{p}: marginal revenue falls by up to {:.1}%", 100.0 * loss);
        table.push(vec![p.clone(), num(loss)]);
    }
    out.write(table)
}

fn robustness(
    c: &Common,
    out: &mut Output,
    budgets: &[f64],
    per_query_cap: f64,
    resamples: usize,
    accounting: AccountingArg,
) -> Result<(), CliError> {
    positive("per-query-cap", per_query_cap)?;
    for b in budgets {
        positive("search-budget", *b)?;
    }
    if resamples == 0 {
        return Err(CliError::usage("--resamples must be at least 1"));
    }
    let log = load_log(c)?;
    let eval = log.to_dataset().context("aggregating attempts")?;
    describe_run(c, out, eval.unit());
    describe_search(c, out);
    let range = user_range(c).unwrap_or((0.0, 1.0));
    out.param("u_range", format!("{}..{}", num(range.0), num(range.1)));
    out.param("per_query_cap", num(per_query_cap));
    out.param("resamples", resamples);
    out.param("seed", c.seed);
    let accounting = match accounting {
        AccountingArg::WorstCase => SpendAccounting::WorstCase,
        AccountingArg::Optimistic => SpendAccounting::Optimistic,
    };
    out.param("accounting", format!("{accounting:?}"));
    let config = optimizer_config(c);

    let unlimited = per_query_cap * log.problem_count() as f64;
    let full = draw_search_sample(&log, unlimited, per_query_cap, c.seed, SpendAccounting::WorstCase)
        .context("full sample")?;
    let reference = fit_and_evaluate(&full, &eval, &config, range).context("full-data fit")?;

    let mut summary = Table::new(
        "robustness.csv",
        "mean margin and 95% bootstrap interval by total search budget",
        &["search_budget", "mean_margin", "ci_lo", "ci_hi", "full_data_margin"],
    );
    let mut replicates = Table::new(
        "replicates.csv",
        "margin of every bootstrap replicate",
        &["search_budget", "replicate", "seed", "margin"],
    );
    for &budget in budgets {
        let mut boot = BootstrapConfig::new(budget, per_query_cap, resamples, c.seed);
        boot.accounting = accounting;
        let ci = bootstrap_profit_ci(&log, &boot, &config, range).context(format!("bootstrap at budget {budget}"))?;
        for (k, (seed, m)) in boot.replicate_seeds().into_iter().zip(&ci.estimates).enumerate() {
            replicates.push(vec![num(budget), k.to_string(), seed.to_string(), num(*m)]);
        }
        println!(
            "budget {}: margin {:.4} [{:.4}, {:.4}]",
            num(budget),
            ci.mean,
            ci.lo,
            ci.hi
        );
        summary.push(vec![num(budget), num(ci.mean), num(ci.lo), num(ci.hi), num(reference.margin)]);
    }
    out.write(summary)?;
    out.write(replicates)
}

fn ood(c: &Common, out: &mut Output, tag: &str) -> Result<(), CliError> {
    let ds = load_dataset(c)?;
    describe_run(c, out, ds.unit());
    describe_search(c, out);
    out.param("split_tag", tag);
    let range = user_range(c).unwrap_or((0.0, 1.0));
    out.param("u_range", format!("{}..{}", num(range.0), num(range.1)));
    let (with, without) = ds.split_by_tag(tag).context("splitting by tag")?;
    if with.is_empty() || without.is_empty() {
        return Err(CliError::Data {
            context: format!("splitting by tag `{tag}`"),
            source: ArbError::Empty("one side of the split has no problems"),
        });
    }
    let config = optimizer_config(c);
    let tagged = tag.to_owned();
    let other = format!("not {tag}");
    let mut table = Table::new(
        "ood.csv",
        "margin of policies fitted on one split and evaluated on another",
        &["train", "test", "margin", "policy"],
    );
    for (train_name, train, test_name, test) in [
        (&tagged, &with, &other, &without),
        (&other, &without, &tagged, &with),
        (&tagged, &with, &tagged, &with),
        (&other, &without, &other, &without),
    ] {
        let same = std::ptr::eq(train, test);
        let fit = ood_evaluate(train, test, &config, range, same).context(format!("fit on {train_name}"))?;
        println!("train {train_name}, test {test_name}: margin {:.4} with {}", fit.margin, fit.policy);
        table.push(vec![train_name.clone(), test_name.clone(), num(fit.margin), fit.policy.to_string()]);
    }
    out.write(table)
}

fn simulate(
    c: &Common,
    out: &mut Output,
    policy: Option<&Path>,
    trials: usize,
    mode: ModeArg,
    points: usize,
) -> Result<(), CliError> {
    if points == 0 {
        return Err(CliError::usage("--points must be at least 1"));
    }
    let ds = load_dataset(c)?;
    describe_run(c, out, ds.unit());
    let mode = match mode {
        ModeArg::Continuous => SpendMode::Continuous,
        ModeArg::Lumpy => SpendMode::Lumpy,
    };
    out.param("mode", format!("{mode:?}"));
    out.param("trials", trials);
    out.param("seed", c.seed);
    let sim = SimConfig::new(trials, c.seed, mode);
    let budgets: Vec<f64> = (1..=points).map(|k| c.b_max * k as f64 / points as f64).collect();

    let mut table = Table::new(
        "simulate.csv",
        "analytic performance and cost against Monte Carlo estimates",
        &[
            "subject",
            "budget",
            "analytic_performance",
            "simulated_performance",
            "performance_se",
            "analytic_cost",
            "simulated_cost",
            "cost_se",
        ],
    );
    let mut split = Table::new(
        "simulate_split.csv",
        "analytic revenue split against simulated spend per provider",
        &["budget", "provider_id", "analytic_revenue", "simulated_spend", "spend_se"],
    );
    let subjects: Vec<(String, CascadePolicy64, bool)> = match policy {
        Some(p) => {
            let pol = load_policy(p)?;
            vec![(pol.to_string(), pol, true)]
        }
        None => ds
            .providers()
            .iter()
            .map(|p| (p.clone(), CascadePolicy::single(p, c.b_max), false))
            .collect(),
    };
    for (name, pol, is_cascade) in &subjects {
        for &b in &budgets {
            let est = simulate_cascade(pol, &ds, b, &sim).context("simulation")?;
            let (perf, cost) = if *is_cascade {
                (
                    cascade_performance(pol, &ds, b).context("cascade performance")?,
                    cascade_expected_cost(pol, &ds, b, c.grid_step).context("cascade cost")?,
                )
            } else {
                (
                    provider_performance(&ds, name, b).context("provider performance")?,
                    provider_expected_cost(&ds, name, b, c.grid_step).context("provider cost")?,
                )
            };
            table.push(vec![
                name.clone(),
                num(b),
                num(perf),
                num(est.performance.mean),
                num(est.performance.std_err),
                num(cost),
                num(est.cost.mean),
                num(est.cost.std_err),
            ]);
            if *is_cascade {
                let analytic = revenue_split(pol, &ds, b, c.grid_step).context("revenue split")?;
                for ((p, r), (_, e)) in analytic.iter().zip(&est.provider_spend) {
                    split.push(vec![num(b), p.clone(), num(*r), num(e.mean), num(e.std_err)]);
                }
            }
        }
    }
    println!("{} budgets simulated with {trials} trials each", budgets.len() * subjects.len());
    out.write(table)?;
    if policy.is_some() {
        out.write(split)?;
    }
    Ok(())
}
