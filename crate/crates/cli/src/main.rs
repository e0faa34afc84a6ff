//! `cdasim` — agent-based continuous double auction market simulator.
//!
//! Exit codes: 0 success, 1 run failure, 2 configuration or parse error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cdasim::csvio::{read_pending_csv, write_fits_csv, write_run_artifacts};
use cdasim::{fit_run, run, FitParams, FitResult, RunFits, Scenario, SimConfig};
use cdasim_cli::config::{parse_config, FileConfig};
use cdasim_cli::grid::{expand_scenarios, parse_seed_list, run_grid, GridError, GridSpec};

const EXIT_RUN_FAILURE: u8 = 1;
const EXIT_CONFIG_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "cdasim",
    version,
    about = "Agent-based continuous double auction market simulator",
    long_about = "Simulates zero-intelligence agents trading one stock through a continuous \
                  double auction, optionally bracketed by daily call auctions, under either a \
                  price/time/quantity (MI) or price/quantity/time (NY) ranking rule. Records \
                  every order's waiting time until execution and fits the decay laws the \
                  waiting-time distributions follow."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario with one seed and write its artifact set.
    Run(RunArgs),
    /// Sweep scenarios x seeds; write per-run artifacts, grid_summary.csv, and report.txt.
    Grid(GridArgs),
    /// Refit the waiting-time distributions from a pending CSV written earlier.
    Fit(FitArgs),
    /// List every scenario label.
    Scenarios,
}

/// Simulation settings shared by `run` and `grid`. Every setting can also
/// come from `--config FILE`; explicit flags win over file values.
#[derive(Args, Clone)]
struct Shared {
    /// Trading days to simulate [default: 100]
    #[arg(long)]
    days: Option<u32>,
    /// Number of agents (one order per agent per turn) [default: 1000]
    #[arg(long)]
    agents: Option<u32>,
    /// Turns per day [default: 12]
    #[arg(long)]
    turns: Option<u32>,
    /// Bracket each day with opening and closing call auctions [default: off]
    #[arg(long, num_args = 0..=1, default_missing_value = "true",
          value_parser = clap::builder::BoolishValueParser::new())]
    auctions: Option<bool>,
    /// Initial price [default: 100.0]
    #[arg(long)]
    p0: Option<f64>,
    /// Output directory [default: runs]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tail-fit crossover in ticks [default: 10x the median waiting time]
    #[arg(long)]
    tail_crossover: Option<f64>,
    /// Configuration file with `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario label: "<price> <quantity> <ranking>", e.g. "MU U NY"
    scenario: String,
    /// Seed for the run
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct GridArgs {
    /// Comma-separated scenario labels, or "all" [default: all]
    #[arg(long)]
    scenarios: Option<String>,
    /// Comma- or space-separated seeds [default: 1]
    #[arg(long)]
    seeds: Option<String>,
    /// Concurrent runs [default: all processors]
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct FitArgs {
    /// A pending_<scenario>_<seed>.csv file from a previous run
    pending: PathBuf,
    /// Agents the run used (fixes the day length the fit windows anchor to)
    #[arg(long, default_value_t = 1000)]
    agents: u32,
    /// Turns per day the run used
    #[arg(long, default_value_t = 12)]
    turns: u32,
    /// Whether the run had auctions enabled (two extra rounds per day)
    #[arg(long, num_args = 0..=1, default_missing_value = "true",
          value_parser = clap::builder::BoolishValueParser::new(),
          default_value_t = false)]
    auctions: bool,
    /// Tail-fit crossover in ticks [default: 10x the median waiting time]
    #[arg(long)]
    tail_crossover: Option<f64>,
    /// Also write the fits as CSV to this path
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Flags layered over the config file, over the defaults.
struct Effective {
    days: u32,
    agents: u32,
    turns: u32,
    auctions: bool,
    p0: f64,
    out: PathBuf,
    tail_crossover: Option<f64>,
    file: FileConfig,
}

fn resolve(shared: &Shared) -> Result<Effective, String> {
    let file = match &shared.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => FileConfig::default(),
    };
    Ok(Effective {
        days: shared.days.or(file.days).unwrap_or(100),
        agents: shared.agents.or(file.agents).unwrap_or(1000),
        turns: shared.turns.or(file.turns).unwrap_or(12),
        auctions: shared.auctions.or(file.auctions).unwrap_or(false),
        p0: shared.p0.or(file.p0).unwrap_or(100.0),
        out: shared
            .out
            .clone()
            .or_else(|| file.out.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs")),
        tail_crossover: shared.tail_crossover.or(file.tail_crossover),
        file,
    })
}

fn fit_line(name: &str, fit: &Option<FitResult>) -> String {
    match fit {
        Some(f) => format!(
            "  {name:<22} alpha={:>13.6e}  r2={:.4}  window=[{}, {}]  points={}",
            f.alpha, f.r_squared, f.x_lo, f.x_hi, f.n_points
        ),
        None => format!("  {name:<22} (not enough data)"),
    }
}

fn print_fits(fits: &RunFits) {
    println!("{}", fit_line("absolute exponential", &fits.absolute_exponential));
    println!("{}", fit_line("bid power law", &fits.bid_power));
    println!("{}", fit_line("ask power law", &fits.ask_power));
    println!("{}", fit_line("bid tail exponential", &fits.bid_tail));
    println!("{}", fit_line("ask tail exponential", &fits.ask_tail));
}

fn cmd_run(args: &RunArgs) -> Result<(), (u8, String)> {
    let scenario: Scenario = args
        .scenario
        .parse()
        .map_err(|e| (EXIT_CONFIG_ERROR, format!("{e}")))?;
    let eff = resolve(&args.shared).map_err(|e| (EXIT_CONFIG_ERROR, e))?;

    let mut config = SimConfig::new(scenario, args.seed);
    config.n_days = eff.days;
    config.n_agents = eff.agents;
    config.turns_per_day = eff.turns;
    config.auctions_enabled = eff.auctions;
    config.initial_price = eff.p0;
    config
        .validate()
        .map_err(|e| (EXIT_CONFIG_ERROR, e.to_string()))?;

    std::fs::create_dir_all(&eff.out)
        .map_err(|e| (EXIT_CONFIG_ERROR, format!("cannot create {}: {e}", eff.out.display())))?;

    let result = run(&config).map_err(|e| (EXIT_RUN_FAILURE, e.to_string()))?;
    let params = FitParams::new(config.ticks_per_day()).with_tail_crossover(eff.tail_crossover);
    let fits = fit_run(&result.pending_samples, &params);
    let written = write_run_artifacts(&eff.out, &result, Some(&fits), config.tick_size)
        .map_err(|e| (EXIT_RUN_FAILURE, e.to_string()))?;

    println!(
        "{} seed {}: {} orders, {} trades, {} waiting-time samples",
        scenario.label(),
        args.seed,
        result.total_orders,
        result.trades.len(),
        result.pending_samples.len()
    );
    print_fits(&fits);
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_grid(args: &GridArgs) -> Result<(), (u8, String)> {
    let eff = resolve(&args.shared).map_err(|e| (EXIT_CONFIG_ERROR, e))?;

    let scenario_tokens: Vec<String> = match &args.scenarios {
        Some(value) => value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
        None => eff
            .file
            .scenarios
            .clone()
            .unwrap_or_else(|| vec!["all".to_string()]),
    };
    let scenarios = expand_scenarios(&scenario_tokens).map_err(|e| (EXIT_CONFIG_ERROR, e))?;
    let seeds = match &args.seeds {
        Some(value) => parse_seed_list(value).map_err(|e| (EXIT_CONFIG_ERROR, e))?,
        None => eff.file.seeds.clone().unwrap_or_else(|| vec![1]),
    };

    let spec = GridSpec {
        scenarios,
        seeds,
        days: eff.days,
        agents: eff.agents,
        turns: eff.turns,
        auctions: eff.auctions,
        p0: eff.p0,
        tail_crossover: eff.tail_crossover,
        output_dir: eff.out,
        jobs: args.jobs.or(eff.file.jobs),
    };
    let outcome = run_grid(&spec).map_err(|e| {
        let code = match e {
            GridError::Invalid(_) | GridError::Setup(_) => EXIT_CONFIG_ERROR,
        };
        (code, e.to_string())
    })?;

    print!("{}", outcome.report);
    println!(
        "\n{} runs succeeded, {} CSV files under {}",
        outcome.rows.len(),
        outcome.csv_files,
        spec.output_dir.display()
    );
    if !outcome.failures.is_empty() {
        return Err((
            EXIT_RUN_FAILURE,
            format!("{} of {} runs failed (see report)", outcome.failures.len(),
                outcome.rows.len() + outcome.failures.len()),
        ));
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<(), (u8, String)> {
    let samples = read_pending_csv(&args.pending).map_err(|e| {
        (
            EXIT_CONFIG_ERROR,
            format!("cannot read {}: {e}", args.pending.display()),
        )
    })?;
    if let Some(c) = args.tail_crossover {
        if !(c.is_finite() && c >= 1.0) {
            return Err((
                EXIT_CONFIG_ERROR,
                format!("tail crossover must be a finite value >= 1, got {c}"),
            ));
        }
    }
    let rounds = args.turns as u64 + if args.auctions { 2 } else { 0 };
    let ticks_per_day = rounds * args.agents as u64;
    let params = FitParams::new(ticks_per_day).with_tail_crossover(args.tail_crossover);
    let fits = fit_run(&samples, &params);

    println!(
        "{}: {} samples, day length {} ticks",
        args.pending.display(),
        samples.len(),
        ticks_per_day
    );
    print_fits(&fits);

    if fits.all().iter().all(Option::is_none) {
        return Err((
            EXIT_RUN_FAILURE,
            "no distribution had enough data to fit".to_string(),
        ));
    }
    if let Some(out) = &args.out {
        write_fits_csv(out, &fits).map_err(|e| (EXIT_RUN_FAILURE, e.to_string()))?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    // Exit quietly when stdout closes early (`cdasim scenarios | head`)
    // instead of panicking on the broken pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Grid(args) => cmd_grid(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Scenarios => {
            for scenario in Scenario::all() {
                println!("{}", scenario.label());
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
