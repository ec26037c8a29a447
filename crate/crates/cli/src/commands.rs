use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use fractal_ls_core::backtest::{
    run_walk_forward, BacktestReport, SelectedSpread, REPORT_SCHEMA_VERSION,
};
use fractal_ls_core::fbm::{estimate_hurst, HurstEstimate, Series};
use fractal_ls_core::selection::{build_generating_matrix, select_spreads};
use fractal_ls_core::spreads::{common_dates, compute_returns, PriceSeries};
use fractal_ls_core::synth::generate_universe;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::ingest::{ingest_prices, write_wide_csv};

#[derive(Debug, Parser)]
#[command(
    name = "fractal-ls",
    version,
    about = "Fractal Kelly long-short portfolios from pair spreads"
)]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the Hurst exponent of one series.
    Hurst(HurstArgs),
    /// Rank and select spreads over a date range.
    Select(SelectArgs),
    /// Walk-forward backtest.
    Backtest(BacktestArgs),
    /// Write a synthetic price universe.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct HurstArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Symbol in a price file (long or wide layout).
    #[arg(long, conflicts_with = "column", required_unless_present = "column")]
    pub symbol: Option<String>,
    /// Column of any CSV with a header row.
    #[arg(long)]
    pub column: Option<String>,
    /// Treat the values as increments and estimate on their running sum.
    #[arg(long)]
    pub increments: bool,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[arg(long)]
    pub start: Option<NaiveDate>,
    #[arg(long)]
    pub end: Option<NaiveDate>,
    #[arg(long)]
    pub horizon_days: Option<u32>,
    #[arg(long)]
    pub hurst_cap: Option<f64>,
    #[arg(long)]
    pub max_spreads: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[arg(long)]
    pub benchmark: Option<String>,
    #[arg(long)]
    pub train_days: Option<usize>,
    #[arg(long)]
    pub test_days: Option<usize>,
    #[arg(long)]
    pub leverage: Option<f64>,
    #[arg(long)]
    pub capital: Option<f64>,
    #[arg(long)]
    pub commission_per_share: Option<f64>,
    #[arg(long)]
    pub overnight_rate: Option<f64>,
    #[arg(long)]
    pub hurst_cap: Option<f64>,
    #[arg(long)]
    pub max_spreads: Option<usize>,
    /// Restart every window from the initial capital.
    #[arg(long)]
    pub no_reinvest: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub equity_csv: Option<PathBuf>,
    /// Run on a synthetic universe generated from this seed when no price
    /// file is given.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Suppress the summary table.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Hurst(a) => cmd_hurst(&a, &mut io::stdout().lock()),
        Command::Select(a) => cmd_select(&a, &mut io::stdout().lock()),
        Command::Backtest(a) => cmd_backtest(&a, &mut io::stdout().lock()),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("serializing output: {e}")))?;
    match path {
        Some(p) => {
            let mut f = create(p)?;
            writeln!(f, "{text}")
                .and_then(|_| f.flush())
                .map_err(|e| CliError::io(p, e))
        }
        None => writeln!(stdout, "{text}").map_err(|e| CliError::io("<stdout>", e)),
    }
}

#[derive(Debug, Serialize)]
struct HurstOutput {
    n: usize,
    #[serde(flatten)]
    estimate: HurstEstimate,
}

fn read_column(path: &Path, column: &str) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let parse = |line: u64, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let idx = rdr
        .headers()
        .map_err(|e| parse(1, e.to_string()))?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| CliError::Validation(format!("{}: no column {column}", path.display())))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let cell = rec.get(idx).unwrap_or("");
        if cell.is_empty() {
            continue;
        }
        out.push(
            cell.parse()
                .map_err(|_| parse(line, format!("bad number {cell:?}")))?,
        );
    }
    Ok(out)
}

pub fn cmd_hurst(args: &HurstArgs, stdout: &mut dyn Write) -> Result<()> {
    let values = match (&args.symbol, &args.column) {
        (Some(sym), _) => ingest_prices(&args.input)?
            .into_iter()
            .find(|s| s.symbol() == sym)
            .ok_or_else(|| {
                CliError::Validation(format!("symbol {sym} not in {}", args.input.display()))
            })?
            .prices()
            .to_vec(),
        (None, Some(col)) => read_column(&args.input, col)?,
        (None, None) => return Err(CliError::Config("give --symbol or --column".into())),
    };
    let series = if args.increments {
        Series::cumulative(&values)?
    } else {
        Series::new(values)?
    };
    let estimate = estimate_hurst(&series)?;
    write_json(
        &HurstOutput {
            n: series.len(),
            estimate,
        },
        None,
        stdout,
    )
}

#[derive(Debug, Serialize)]
pub struct SelectionOutput {
    pub schema_version: u32,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub days: usize,
    pub horizon_days: u32,
    pub hurst_cap: f64,
    pub candidates: usize,
    pub selected: Vec<SelectedSpread>,
}

fn restrict_range(
    series: &[PriceSeries],
    start: Option<NaiveDate>,
    end: Option<NaiveDate>,
) -> Result<Vec<PriceSeries>> {
    let dates: Vec<NaiveDate> = common_dates(series)
        .into_iter()
        .filter(|d| start.is_none_or(|s| *d >= s) && end.is_none_or(|e| *d <= e))
        .collect();
    if dates.len() < 2 {
        return Err(CliError::Validation(format!(
            "{} common dates in the requested range",
            dates.len()
        )));
    }
    Ok(series
        .iter()
        .map(|s| s.restrict_to(&dates))
        .collect::<std::result::Result<_, _>>()?)
}

pub fn cmd_select(args: &SelectArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg = RunConfig::load_or_default(args.config.as_deref())?;
    let sel = &mut cfg.selection;
    if let Some(v) = args.horizon_days {
        sel.horizon_days = v;
    }
    if let Some(v) = args.hurst_cap {
        sel.hurst_cap = v;
    }
    if args.max_spreads.is_some() {
        sel.max_spreads = args.max_spreads;
    }
    if let (Some(s), Some(e)) = (args.start, args.end) {
        if s > e {
            return Err(CliError::Config(format!("start {s} is after end {e}")));
        }
    }
    cfg.selection.validate()?;
    let path =
        args.prices.clone().or(cfg.prices.clone()).ok_or_else(|| {
            CliError::Config("no price file: pass --prices or set `prices`".into())
        })?;

    let series = restrict_range(&ingest_prices(&path)?, args.start, args.end)?;
    let universe = series
        .iter()
        .map(|s| compute_returns(s, 0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let candidates = build_generating_matrix(&universe, &cfg.selection)?;
    let chosen = select_spreads(&candidates, &cfg.selection);
    let dates = series[0].dates();
    let out = SelectionOutput {
        schema_version: REPORT_SCHEMA_VERSION,
        start: dates[0],
        end: dates[dates.len() - 1],
        days: dates.len(),
        horizon_days: cfg.selection.horizon_days,
        hurst_cap: cfg.selection.hurst_cap,
        candidates: candidates.len(),
        selected: chosen.iter().map(SelectedSpread::from).collect(),
    };
    write_json(&out, args.output.as_deref(), stdout)
}

/// Merge the settings file with command-line overrides.
pub fn backtest_config(args: &BacktestArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load_or_default(args.config.as_deref())?;
    let bt = &mut cfg.backtest;
    macro_rules! set {
        ($($arg:ident => $field:ident),*) => {
            $(if let Some(v) = args.$arg.clone() { bt.$field = v; })*
        };
    }
    set!(
        benchmark => benchmark_symbol,
        train_days => train_days,
        test_days => test_days,
        leverage => leverage,
        capital => initial_capital,
        commission_per_share => commission_per_share,
        overnight_rate => overnight_rate_annual,
        hurst_cap => hurst_cap
    );
    if args.max_spreads.is_some() {
        bt.max_spreads = args.max_spreads;
    }
    if args.no_reinvest {
        bt.reinvest = false;
    }
    if args.prices.is_some() {
        cfg.prices = args.prices.clone();
    }
    if args.output.is_some() {
        cfg.output = args.output.clone();
    }
    if args.equity_csv.is_some() {
        cfg.equity_csv = args.equity_csv.clone();
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Universe and benchmark for a run: the price file when given, otherwise a
/// synthetic universe whose market series carries the benchmark symbol.
pub fn load_backtest_data(cfg: &RunConfig) -> Result<(Vec<PriceSeries>, PriceSeries)> {
    let bench_sym = &cfg.backtest.benchmark_symbol;
    match (&cfg.prices, cfg.seed) {
        (Some(path), _) => {
            let mut series = ingest_prices(path)?;
            let pos = series
                .iter()
                .position(|s| s.symbol() == bench_sym)
                .ok_or_else(|| {
                    CliError::Validation(format!(
                        "benchmark symbol {bench_sym} not found in {}",
                        path.display()
                    ))
                })?;
            let bench = series.remove(pos);
            Ok((series, bench))
        }
        (None, Some(seed)) => {
            let synth = fractal_ls_core::synth::SynthConfig {
                seed,
                benchmark_symbol: bench_sym.clone(),
                ..cfg.synth.clone()
            };
            let u = generate_universe(&synth)?;
            Ok((u.assets, u.benchmark))
        }
        (None, None) => Err(CliError::Config(
            "no price data: pass --prices, set `prices`, or give --seed for a synthetic universe"
                .into(),
        )),
    }
}

pub fn write_equity_csv<W: Write>(report: &BacktestReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| CliError::Validation(format!("writing equity CSV: {e}"));
    w.write_record(["date", "equity", "benchmark"])
        .map_err(err)?;
    for p in &report.equity_curve {
        w.write_record([
            p.date.to_string(),
            p.equity.to_string(),
            p.benchmark.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io("<equity csv>", e))
}

fn pct(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.3}"))
}

pub fn summary_table(r: &BacktestReport) -> String {
    let b = &r.benchmark;
    let rows = [
        (
            "cumulative return",
            pct(r.cumulative_return),
            pct(b.cumulative_return),
        ),
        (
            "annual return (single)",
            pct(r.annual_return_single),
            pct(b.annual_return_single),
        ),
        (
            "annual return (reinvested)",
            pct(r.annual_return_reinvested),
            String::new(),
        ),
        (
            "annual volatility",
            pct(r.annual_volatility),
            pct(b.annual_volatility),
        ),
        (
            "normalized volatility",
            opt(r.normalized_volatility),
            opt(b.normalized_volatility),
        ),
        ("sharpe", opt(r.sharpe), opt(b.sharpe)),
        ("max drawdown", pct(r.max_drawdown), pct(b.max_drawdown)),
        (
            "benchmark correlation",
            format!("{:.3}", r.benchmark_correlation),
            String::new(),
        ),
        (
            "market neutrality",
            format!("{:.3}", r.market_neutrality),
            String::new(),
        ),
        (
            "daily correlation",
            format!("{:.3}", r.daily_benchmark_correlation),
            String::new(),
        ),
        (
            "avg max weight",
            format!("{:.3}", r.avg_max_weight),
            String::new(),
        ),
        (
            "assets held",
            format!("{}-{}", r.asset_count_range.0, r.asset_count_range.1),
            String::new(),
        ),
    ];
    let mut s = format!(
        "{} windows, benchmark {}\n{:<28}{:>12}{:>12}\n",
        r.windows.len(),
        r.config.benchmark_symbol,
        "",
        "strategy",
        "benchmark"
    );
    for (name, a, b) in rows {
        s.push_str(&format!("{name:<28}{a:>12}{b:>12}\n"));
    }
    s
}

pub fn cmd_backtest(args: &BacktestArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = backtest_config(args)?;
    let (universe, bench) = load_backtest_data(&cfg)?;
    let report = run_walk_forward(&universe, &bench, &cfg.backtest)?;
    if let Some(p) = &cfg.output {
        write_json(&report, Some(p), stdout)?;
    }
    if let Some(p) = &cfg.equity_csv {
        write_equity_csv(&report, create(p)?)?;
    }
    if !args.quiet {
        write!(stdout, "{}", summary_table(&report)).map_err(|e| CliError::io("<stdout>", e))?;
    }
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let cfg = RunConfig::load_or_default(args.config.as_deref())?;
    let mut synth = cfg.synth;
    if let Some(s) = args.seed.or(cfg.seed) {
        synth.seed = s;
    }
    if let Some(d) = args.days {
        synth.n_days = d;
    }
    synth.validate()?;
    let u = generate_universe(&synth)?;
    let mut all = u.assets;
    all.push(u.benchmark);
    write_wide_csv(&all, create(&args.output)?)
}
