//! `pbc` — simulate life-cycle cost and price performance-based contracts.
//!
//! Subcommands: `fit`, `price`, `sweep`, `oracle`, `simulate`, `generate`.
//! Human-readable summaries go to stdout; machine output is written only via
//! `--out`. Exit codes: 0 success, 1 runtime or tolerance failure, 2 usage
//! or validation error.

// `!(x > 0.0)` is used on purpose where NaN must be rejected along with
// out-of-range values; `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pbc::data::{
    estimate_failure_rate, export_results, generate_synthetic_fleet, parse_cost_csv,
    write_cost_csv, ExportFormat, ResultTable,
};
use pbc::dist::{empirical_from_records, fit_weibull_log, JumpDistribution};
use pbc::oracle::{constant_series_premium, gaussian_series_premium, SeriesControl};
use pbc::pricing::{price_contract, PricingResult, StrikeMode};
use pbc::process::{sample_path_points, ProcessParams, RateSpec};
use pbc::rng::derive_seed;

#[derive(Parser)]
#[command(name = "pbc", version, about = "Life-cycle cost simulation and risk pricing for performance-based contracts")]
struct Cli {
    /// Worker threads for path simulation (0 = auto; the PBC_THREADS
    /// environment variable sets the default)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a Weibull law to the logarithm of ingested costs
    Fit(FitArgs),
    /// Price one contract: premium, expected cost, strike, total price
    Price(PriceArgs),
    /// Price across a grid of failure rates
    Sweep(SweepArgs),
    /// Compare the Monte Carlo premium against the series oracle
    Oracle(OracleArgs),
    /// Emit one sampled cost path for plotting
    Simulate(SimulateArgs),
    /// Generate a synthetic fleet cost CSV
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistKind {
    Gaussian,
    Constant,
    WeibullLog,
    Empirical,
}

#[derive(Args, Clone)]
struct DistArgs {
    /// Jump-height law
    #[arg(long, value_enum, default_value_t = DistKind::Gaussian)]
    dist: DistKind,
    /// Gaussian mean (EUR)
    #[arg(long, default_value_t = 10.0)]
    mu: f64,
    /// Gaussian standard deviation (EUR)
    #[arg(long, default_value_t = 3.0)]
    sd: f64,
    /// Constant jump height (EUR)
    #[arg(long, default_value_t = 1.0)]
    value: f64,
    /// Weibull shape on the log-cost scale
    #[arg(long, default_value_t = 2.0)]
    shape: f64,
    /// Weibull scale on the log-cost scale
    #[arg(long, default_value_t = 2.2)]
    scale: f64,
    /// Cost CSV backing the empirical law
    #[arg(long)]
    empirical_csv: Option<PathBuf>,
}

impl DistArgs {
    fn build(&self) -> Result<JumpDistribution, CliError> {
        match self.dist {
            DistKind::Gaussian => JumpDistribution::gaussian(self.mu, self.sd).map_err(usage),
            DistKind::Constant => JumpDistribution::constant(self.value).map_err(usage),
            DistKind::WeibullLog => {
                JumpDistribution::weibull_log(self.shape, self.scale).map_err(usage)
            }
            DistKind::Empirical => {
                let path = self.empirical_csv.as_ref().ok_or_else(|| {
                    CliError::Usage("--dist empirical requires --empirical-csv".into())
                })?;
                let file = File::open(path)
                    .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
                let records = parse_cost_csv(file).map_err(usage)?;
                empirical_from_records(&records).map_err(usage)
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrikeModeArg {
    ExpectedTotal,
    SingleJumpMean,
}

impl From<StrikeModeArg> for StrikeMode {
    fn from(v: StrikeModeArg) -> Self {
        match v {
            StrikeModeArg::ExpectedTotal => StrikeMode::ExpectedTotal,
            StrikeModeArg::SingleJumpMean => StrikeMode::SingleJumpMean,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ExportFormat {
    fn from(v: FormatArg) -> Self {
        match v {
            FormatArg::Csv => ExportFormat::Csv,
            FormatArg::Json => ExportFormat::Json,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Input cost CSV (header: unit_id,event_time_days,cost_eur)
    #[arg(long)]
    input: PathBuf,
    /// Units in the observed fleet (enables a failure-rate estimate)
    #[arg(long)]
    units: Option<u64>,
    /// Observation window in days
    #[arg(long, default_value_t = 730.0)]
    window_days: f64,
    /// Write the fit as JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PriceArgs {
    /// Failure rate λ (jumps per unit time)
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Contract horizon T
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// Monte Carlo paths
    #[arg(long, default_value_t = 100_000)]
    paths: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = StrikeModeArg::ExpectedTotal)]
    strike_mode: StrikeModeArg,
    /// Drift γ (defaults to 0 as in the pure jump setting)
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Diffusion scale σ
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Discount the premium by e^{-γT}
    #[arg(long, default_value_t = false)]
    discount: bool,
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// λ grid as start:end:step (inclusive)
    #[arg(long)]
    lambda_grid: String,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 100_000)]
    paths: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = StrikeModeArg::ExpectedTotal)]
    strike_mode: StrikeModeArg,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = false)]
    discount: bool,
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1_000_000)]
    paths: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Declared relative tolerance; the run fails when the gap exceeds
    /// max(3·SE, tolerance·oracle)
    #[arg(long, default_value_t = 0.005)]
    tolerance: f64,
    #[command(flatten)]
    dist: DistArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Diffusion grid steps for the plotted path
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Failure rate per unit-year
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    #[arg(long, default_value_t = 100)]
    units: u64,
    #[arg(long, default_value_t = 730.0)]
    window_days: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    dist: DistArgs,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Price(args) => cmd_price(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Generate(args) => cmd_generate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads(threads: usize) -> Result<(), String> {
    let threads = if threads == 0 {
        match std::env::var("PBC_THREADS") {
            Ok(v) => v
                .parse::<usize>()
                .map_err(|_| format!("PBC_THREADS must be a non-negative integer, got `{v}`"))?,
            Err(_) => 0,
        }
    } else {
        threads
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn open_out(path: &PathBuf) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let file = File::open(&args.input)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", args.input.display())))?;
    let records = parse_cost_csv(file).map_err(usage)?;
    let costs: Vec<f64> = records.iter().map(|r| r.cost_eur).collect();
    let fit = fit_weibull_log(&costs).map_err(usage)?;
    println!("weibull fit of ln(cost), {} records", fit.n_samples);
    println!("  shape k        {:.6}", fit.shape);
    println!("  scale          {:.6}", fit.scale);
    println!("  log-likelihood {:.4}", fit.log_likelihood);
    println!("  ks statistic   {:.6}", fit.ks_statistic);
    if let Some(units) = args.units {
        let summary = estimate_failure_rate(&records, units, args.window_days).map_err(usage)?;
        println!("  events         {}", summary.n_events);
        println!("  lambda-hat     {:.6} per unit-year", summary.lambda_hat);
        println!("  mean cost      {:.2} EUR", summary.mean_cost);
    }
    if let Some(out) = &args.out {
        let writer = open_out(out)?;
        serde_json::to_writer_pretty(writer, &fit).map_err(runtime)?;
        println!("fit written to {}", out.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_price(
    lambda: f64,
    horizon: f64,
    gamma: f64,
    sigma: f64,
    dist: &JumpDistribution,
    mode: StrikeMode,
    paths: u64,
    seed: u64,
    discount: bool,
) -> Result<PricingResult, CliError> {
    let params =
        ProcessParams::new(gamma, sigma, RateSpec::Constant(lambda), horizon).map_err(usage)?;
    price_contract(&params, dist, mode, paths, seed, discount).map_err(|e| match e {
        pbc::pricing::PricingError::TooFewPaths(_) | pbc::pricing::PricingError::Dist(_) => usage(e),
        other => runtime(other),
    })
}

fn print_result(r: &PricingResult) {
    println!("premium C       {:.6} EUR", r.premium_c);
    println!("expected cost   {:.6} EUR", r.expected_cost);
    println!("strike K        {:.6} EUR", r.strike_k);
    println!("total price P   {:.6} EUR", r.total_price_p);
    println!("std error       {:.6} EUR", r.std_error);
    println!("paths           {}", r.n_paths);
    println!("seed            {}", r.master_seed);
    println!("discounted      {}", r.discount_applied);
}

fn result_table(rows: &[(f64, PricingResult)]) -> ResultTable {
    ResultTable::new(
        ["lambda", "premium_c", "expected_cost", "total_price_p", "std_error"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows.iter()
            .map(|(l, r)| vec![*l, r.premium_c, r.expected_cost, r.total_price_p, r.std_error])
            .collect(),
    )
    .expect("fixed-width rows")
}

fn cmd_price(args: PriceArgs) -> Result<(), CliError> {
    let dist = args.dist.build()?;
    let r = run_price(
        args.lambda,
        args.horizon,
        args.gamma,
        args.sigma,
        &dist,
        args.strike_mode.into(),
        args.paths,
        args.seed,
        args.discount,
    )?;
    print_result(&r);
    if let Some(out) = &args.out {
        let table = result_table(&[(args.lambda, r)]);
        export_results(&table, args.format.into(), open_out(out)?).map_err(runtime)?;
    }
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!("--lambda-grid expects start:end:step, got `{spec}`")));
    }
    let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
    let nums = nums.map_err(|_| CliError::Usage(format!("bad number in grid `{spec}`")))?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || end < start || start < 0.0 {
        return Err(CliError::Usage(format!(
            "grid needs 0 <= start <= end and step > 0, got `{spec}`"
        )));
    }
    let mut grid = Vec::new();
    let n = ((end - start) / step).round() as usize;
    for i in 0..=n {
        let v = start + i as f64 * step;
        if v <= end + 1e-9 * step {
            grid.push(v);
        }
    }
    Ok(grid)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let grid = parse_grid(&args.lambda_grid)?;
    let dist = args.dist.build()?;
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &lambda) in grid.iter().enumerate() {
        let seed = derive_seed(args.seed, i as u64);
        let r = run_price(
            lambda,
            args.horizon,
            args.gamma,
            args.sigma,
            &dist,
            args.strike_mode.into(),
            args.paths,
            seed,
            args.discount,
        )?;
        rows.push((lambda, r));
    }
    println!(
        "{:>8}  {:>14}  {:>14}  {:>14}  {:>12}",
        "lambda", "premium C", "E[X]", "total P", "std err"
    );
    for (l, r) in &rows {
        println!(
            "{l:>8.3}  {:>14.6}  {:>14.6}  {:>14.6}  {:>12.6}",
            r.premium_c, r.expected_cost, r.total_price_p, r.std_error
        );
    }
    if let Some(out) = &args.out {
        export_results(&result_table(&rows), args.format.into(), open_out(out)?).map_err(runtime)?;
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let dist = args.dist.build()?;
    let mean_jump = dist.mean().map_err(usage)?;
    let strike = args.lambda * args.horizon * mean_jump;
    let ctrl = SeriesControl::default();
    let series = match &dist {
        JumpDistribution::Gaussian { mu, sd } => {
            gaussian_series_premium(*mu, *sd, args.lambda, args.horizon, strike, &ctrl)
                .map_err(runtime)?
        }
        JumpDistribution::Constant { value } => {
            constant_series_premium(*value, args.lambda, args.horizon, strike, &ctrl)
                .map_err(runtime)?
        }
        _ => {
            return Err(CliError::Usage(
                "the series oracle supports only gaussian and constant jump laws".into(),
            ))
        }
    };
    let r = run_price(
        args.lambda,
        args.horizon,
        0.0,
        0.0,
        &dist,
        StrikeMode::ExpectedTotal,
        args.paths,
        args.seed,
        false,
    )?;
    let gap = (r.premium_c - series).abs();
    let se_multiple = if r.std_error > 0.0 { gap / r.std_error } else { 0.0 };
    let bound = (3.0 * r.std_error).max(args.tolerance * series.abs());
    println!("mc premium      {:.8} EUR  (se {:.8}, {} paths)", r.premium_c, r.std_error, r.n_paths);
    println!("series oracle   {:.8} EUR", series);
    println!("absolute gap    {:.8} EUR  ({se_multiple:.2}x SE)", gap);
    if series.abs() > 0.0 {
        println!("relative gap    {:.6}%", 100.0 * gap / series.abs());
    }
    if gap > bound {
        return Err(CliError::Runtime(format!(
            "oracle disagreement: gap {gap:e} exceeds max(3·SE, {}·|oracle|) = {bound:e}",
            args.tolerance
        )));
    }
    println!("agreement within max(3*SE, {}·|oracle|)", args.tolerance);
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let dist = args.dist.build()?;
    let params = ProcessParams::new(
        args.gamma,
        args.sigma,
        RateSpec::Constant(args.lambda),
        args.horizon,
    )
    .map_err(usage)?;
    let mut rng = pbc::rng::path_stream(args.seed, 0);
    let points = sample_path_points(&params, &dist, args.steps, &mut rng);
    let jumps = points.windows(2).filter(|w| w[0].0 == w[1].0).count();
    println!("path over [0, {}]: {} points, {} jumps, terminal X_T = {:.6}", args.horizon, points.len(), jumps, points.last().map(|p| p.1).unwrap_or(0.0));
    if let Some(out) = &args.out {
        let table = ResultTable::new(
            vec!["t".into(), "x_t".into()],
            points.iter().map(|&(t, x)| vec![t, x]).collect(),
        )
        .expect("two columns");
        export_results(&table, args.format.into(), open_out(out)?).map_err(runtime)?;
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let dist = args.dist.build()?;
    let records =
        generate_synthetic_fleet(args.lambda, &dist, args.units, args.window_days, args.seed);
    println!(
        "generated {} events across {} units over {} days (seed {})",
        records.len(),
        args.units,
        args.window_days,
        args.seed
    );
    write_cost_csv(&records, open_out(&args.out)?).map_err(runtime)?;
    println!("written to {}", args.out.display());
    Ok(())
}
