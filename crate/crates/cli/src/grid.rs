//! Grid orchestration: expand scenario and seed lists into runs, execute
//! them (possibly in parallel), write per-run artifacts, and aggregate a
//! summary CSV plus a human-readable report.
//!
//! Output layout under the chosen directory, for each run of scenario
//! `MU U NY` with seed 1:
//!
//! ```text
//! trades_MU_U_NY_1.csv    one row per execution
//! pending_MU_U_NY_1.csv   one row per recorded waiting time
//! summary_MU_U_NY_1.csv   one row per day
//! grid_summary.csv        one row per run, with fit results
//! report.txt              per-scenario means and the ranking comparison
//! ```
//!
//! Reruns with an identical grid are byte-identical: runs are seeded, rows
//! are emitted in plan order regardless of which worker finished first,
//! and every file is written to a temporary name and renamed into place.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;

use cdasim::csvio::{atomic_write, write_run_artifacts};
use cdasim::{
    fit_run, run, FitParams, FitResult, PriceProcess, PriorityRule, QuantityProcess, RunFits,
    Scenario, SimConfig,
};
use rayon::prelude::*;

/// A fully resolved sweep: which runs to do and how to simulate each one.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub scenarios: Vec<Scenario>,
    pub seeds: Vec<u64>,
    pub days: u32,
    pub agents: u32,
    pub turns: u32,
    pub auctions: bool,
    pub p0: f64,
    pub tail_crossover: Option<f64>,
    pub output_dir: PathBuf,
    /// Concurrent runs; `None` uses every available processor.
    pub jobs: Option<usize>,
}

/// Problems detected before any run starts. These map to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    Invalid(String),
    Setup(String),
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::Invalid(msg) => write!(f, "invalid grid: {msg}"),
            GridError::Setup(msg) => write!(f, "cannot set up output: {msg}"),
        }
    }
}

impl std::error::Error for GridError {}

/// One completed run, as a row of the grid summary.
#[derive(Clone, Debug)]
pub struct RunRow {
    pub scenario: Scenario,
    pub seed: u64,
    pub orders: u64,
    pub trades: u64,
    pub shares: u64,
    pub final_price: String,
    pub samples: u64,
    pub fits: RunFits,
}

/// Everything a grid invocation produced.
#[derive(Debug)]
pub struct GridOutcome {
    pub rows: Vec<RunRow>,
    /// One line per failed run; successes are still written.
    pub failures: Vec<String>,
    pub summary_path: PathBuf,
    pub report_path: PathBuf,
    /// CSV files written: three per successful run plus the summary.
    pub csv_files: usize,
    pub report: String,
}

/// Expand scenario tokens: either the single word "all" or explicit labels.
pub fn expand_scenarios(tokens: &[String]) -> Result<Vec<Scenario>, String> {
    if tokens.is_empty() {
        return Err("no scenarios given".to_string());
    }
    if tokens.iter().any(|t| t.eq_ignore_ascii_case("all")) {
        if tokens.len() > 1 {
            return Err("`all` cannot be combined with explicit labels".to_string());
        }
        return Ok(Scenario::all());
    }
    tokens
        .iter()
        .map(|t| t.parse::<Scenario>().map_err(|e| e.to_string()))
        .collect()
}

/// Parse a comma- or whitespace-separated seed list.
pub fn parse_seed_list(value: &str) -> Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for token in value.split(|c: char| c == ',' || c.is_whitespace()) {
        if token.is_empty() {
            continue;
        }
        seeds.push(
            token
                .parse::<u64>()
                .map_err(|_| format!("seed `{token}` is not a nonnegative integer"))?,
        );
    }
    if seeds.is_empty() {
        return Err("no seeds given".to_string());
    }
    Ok(seeds)
}

impl GridSpec {
    pub fn sim_config(&self, scenario: Scenario, seed: u64) -> SimConfig {
        let mut config = SimConfig::new(scenario, seed);
        config.n_days = self.days;
        config.n_agents = self.agents;
        config.turns_per_day = self.turns;
        config.auctions_enabled = self.auctions;
        config.initial_price = self.p0;
        config
    }

    /// Reject bad grids before any simulation work.
    pub fn validate(&self) -> Result<(), GridError> {
        if self.scenarios.is_empty() {
            return Err(GridError::Invalid("no scenarios selected".to_string()));
        }
        let mut labels = HashSet::new();
        for s in &self.scenarios {
            if !labels.insert(s.label()) {
                return Err(GridError::Invalid(format!(
                    "scenario `{}` appears more than once",
                    s.label()
                )));
            }
        }
        if self.seeds.is_empty() {
            return Err(GridError::Invalid("no seeds selected".to_string()));
        }
        let mut seen = HashSet::new();
        for &seed in &self.seeds {
            if !seen.insert(seed) {
                return Err(GridError::Invalid(format!("seed {seed} appears more than once")));
            }
        }
        if self.jobs == Some(0) {
            return Err(GridError::Invalid("jobs must be at least 1".to_string()));
        }
        if let Some(c) = self.tail_crossover {
            if !(c.is_finite() && c >= 1.0) {
                return Err(GridError::Invalid(format!(
                    "tail crossover must be a finite value >= 1, got {c}"
                )));
            }
        }
        for &seed in &self.seeds {
            for &scenario in &self.scenarios {
                self.sim_config(scenario, seed)
                    .validate()
                    .map_err(|e| GridError::Invalid(e.to_string()))?;
            }
        }
        Ok(())
    }
}

fn execute(spec: &GridSpec, scenario: Scenario, seed: u64) -> Result<RunRow, String> {
    let tag = format!("{} seed {seed}", scenario.label());
    let config = spec.sim_config(scenario, seed);
    let result = run(&config).map_err(|e| format!("{tag}: {e}"))?;
    let params =
        FitParams::new(config.ticks_per_day()).with_tail_crossover(spec.tail_crossover);
    let fits = fit_run(&result.pending_samples, &params);
    write_run_artifacts(&spec.output_dir, &result, None, config.tick_size)
        .map_err(|e| format!("{tag}: {e}"))?;
    Ok(RunRow {
        scenario,
        seed,
        orders: result.total_orders,
        trades: result.trades.len() as u64,
        shares: result.trades.iter().map(|t| t.quantity as u64).sum(),
        final_price: result
            .daily_closing_prices
            .last()
            .map(|&p| config.tick_size.format(p))
            .unwrap_or_default(),
        samples: result.pending_samples.len() as u64,
        fits,
    })
}

/// Run the whole grid. Individual run failures do not abort the sweep:
/// the summary and report are always written and list what failed.
pub fn run_grid(spec: &GridSpec) -> Result<GridOutcome, GridError> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.output_dir).map_err(|e| {
        GridError::Setup(format!("cannot create {}: {e}", spec.output_dir.display()))
    })?;
    let probe = spec.output_dir.join(".write_probe");
    std::fs::write(&probe, b"")
        .and_then(|()| std::fs::remove_file(&probe))
        .map_err(|e| {
            GridError::Setup(format!("{} is not writable: {e}", spec.output_dir.display()))
        })?;

    let plans: Vec<(Scenario, u64)> = spec
        .scenarios
        .iter()
        .flat_map(|&s| spec.seeds.iter().map(move |&seed| (s, seed)))
        .collect();

    let execute_all = || -> Vec<Result<RunRow, String>> {
        plans
            .par_iter()
            .map(|&(scenario, seed)| execute(spec, scenario, seed))
            .collect()
    };
    let results = match spec.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| GridError::Setup(e.to_string()))?
            .install(execute_all),
        None => execute_all(),
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(row) => rows.push(row),
            Err(msg) => failures.push(msg),
        }
    }

    let summary_path = spec.output_dir.join("grid_summary.csv");
    write_grid_summary(&summary_path, &rows)
        .map_err(|e| GridError::Setup(format!("cannot write grid summary: {e}")))?;

    let report = build_report(spec, &rows, &failures);
    let report_path = spec.output_dir.join("report.txt");
    atomic_write(&report_path, |w| {
        w.write_all(report.as_bytes())?;
        Ok(())
    })
    .map_err(|e| GridError::Setup(format!("cannot write report: {e}")))?;

    Ok(GridOutcome {
        csv_files: rows.len() * 3 + 1,
        rows,
        failures,
        summary_path,
        report_path,
        report,
    })
}

fn fit_fields(fit: &Option<FitResult>) -> [String; 2] {
    match fit {
        Some(f) => [format!("{}", f.alpha), format!("{}", f.r_squared)],
        None => [String::new(), String::new()],
    }
}

fn write_grid_summary(path: &PathBuf, rows: &[RunRow]) -> Result<(), cdasim::csvio::CsvError> {
    atomic_write(path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "scenario",
            "seed",
            "orders",
            "trades",
            "shares",
            "final_price",
            "pending_samples",
            "abs_exp_alpha",
            "abs_exp_r2",
            "bid_power_alpha",
            "bid_power_r2",
            "ask_power_alpha",
            "ask_power_r2",
            "bid_tail_alpha",
            "bid_tail_r2",
            "ask_tail_alpha",
            "ask_tail_r2",
        ])?;
        for row in rows {
            let mut record = vec![
                row.scenario.label(),
                row.seed.to_string(),
                row.orders.to_string(),
                row.trades.to_string(),
                row.shares.to_string(),
                row.final_price.clone(),
                row.samples.to_string(),
            ];
            for fit in [
                &row.fits.absolute_exponential,
                &row.fits.bid_power,
                &row.fits.ask_power,
                &row.fits.bid_tail,
                &row.fits.ask_tail,
            ] {
                record.extend(fit_fields(fit));
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0u64;
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn alpha_cell(rows: &[&RunRow], pick: impl Fn(&RunFits) -> Option<FitResult>) -> String {
    match mean(rows.iter().filter_map(|r| pick(&r.fits)).map(|f| f.alpha)) {
        Some(m) => format!("{m:.4e}"),
        None => "-".to_string(),
    }
}

/// The text report: run counts, per-scenario means over seeds, the
/// ranking-rule comparison, and any failures.
fn build_report(spec: &GridSpec, rows: &[RunRow], failures: &[String]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "grid: {} scenarios x {} seeds = {} runs, {} failed\n",
        spec.scenarios.len(),
        spec.seeds.len(),
        spec.scenarios.len() * spec.seeds.len(),
        failures.len(),
    ));
    out.push_str(&format!(
        "settings: agents={} days={} turns={} auctions={} p0={}\n\n",
        spec.agents, spec.days, spec.turns, if spec.auctions { "on" } else { "off" }, spec.p0,
    ));

    out.push_str("per-scenario means over seeds\n");
    out.push_str(&format!(
        "{:<10} {:>5} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
        "scenario", "runs", "trades", "abs_exp", "bid_power", "ask_power", "bid_tail", "ask_tail"
    ));
    for &scenario in &spec.scenarios {
        let mine: Vec<&RunRow> = rows.iter().filter(|r| r.scenario == scenario).collect();
        if mine.is_empty() {
            out.push_str(&format!("{:<10} {:>5}\n", scenario.label(), 0));
            continue;
        }
        let trades = mean(mine.iter().map(|r| r.trades as f64)).unwrap_or(0.0);
        out.push_str(&format!(
            "{:<10} {:>5} {:>12.1} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
            scenario.label(),
            mine.len(),
            trades,
            alpha_cell(&mine, |f| f.absolute_exponential),
            alpha_cell(&mine, |f| f.bid_power),
            alpha_cell(&mine, |f| f.ask_power),
            alpha_cell(&mine, |f| f.bid_tail),
            alpha_cell(&mine, |f| f.ask_tail),
        ));
    }

    out.push_str("\nranking-rule comparison: mean trades per run\n");
    out.push_str(&format!(
        "{:<6} {:<9} {:>12} {:>12}   {}\n",
        "price", "quantity", "PTQ(MI)", "PQT(NY)", "PTQ>=PQT"
    ));
    let mut compared = 0u32;
    let mut ptq_wins = 0u32;
    for price in PriceProcess::ALL {
        for quantity in QuantityProcess::ALL {
            let side_mean = |ranking: PriorityRule| {
                let matching: Vec<f64> = rows
                    .iter()
                    .filter(|r| {
                        r.scenario.price == price
                            && r.scenario.quantity == quantity
                            && r.scenario.ranking == ranking
                    })
                    .map(|r| r.trades as f64)
                    .collect();
                mean(matching.into_iter())
            };
            let (Some(mi), Some(ny)) = (side_mean(PriorityRule::Ptq), side_mean(PriorityRule::Pqt))
            else {
                continue;
            };
            compared += 1;
            let holds = mi >= ny;
            if holds {
                ptq_wins += 1;
            }
            out.push_str(&format!(
                "{:<6} {:<9} {:>12.1} {:>12.1}   {}\n",
                price.acronym(),
                quantity.acronym(),
                mi,
                ny,
                if holds { "yes" } else { "no" }
            ));
        }
    }
    if compared > 0 {
        let majority = compared / 2 + 1;
        if ptq_wins >= majority {
            out.push_str(&format!(
                "PTQ(MI) >= PQT(NY) in {ptq_wins} of {compared} pairs: majority holds\n"
            ));
        } else {
            out.push_str(&format!(
                "warning: PTQ(MI) >= PQT(NY) in only {ptq_wins} of {compared} pairs (majority expected)\n"
            ));
        }
    } else {
        out.push_str("no pair had both rankings present; nothing to compare\n");
    }

    if !failures.is_empty() {
        out.push_str("\nfailures\n");
        for f in failures {
            out.push_str(&format!("  {f}\n"));
        }
    }
    out
}
