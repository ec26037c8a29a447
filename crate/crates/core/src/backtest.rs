//! Walk-forward out-of-sample evaluation.
//!
//! History is cut into consecutive test windows of `test_days`, each preceded
//! by `train_days` of training data. Weights come from the training slice
//! only; positions are opened at the close of the last training day, held
//! with fixed share counts through the test window and closed at its final
//! close, which is also the next window's entry.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::fbm::MIN_HURST_LEN;
use crate::optimizer::{optimize, PortfolioWeights};
use crate::selection::{build_generating_matrix, select_spreads, CandidateSpread, SelectionConfig};
use crate::spreads::{common_dates, compute_returns, HedgeEstimator, PriceSeries, SpreadSeries};
use crate::stats::{mean, pearson, sample_std};

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestConfig {
    pub train_days: usize,
    pub test_days: usize,
    pub leverage: f64,
    pub initial_capital: f64,
    /// Per share, charged on each side of a trade.
    pub commission_per_share: f64,
    /// Annual rate on short market value plus borrowing above equity.
    pub overnight_rate_annual: f64,
    pub benchmark_symbol: String,
    pub hurst_cap: f64,
    pub reinvest: bool,
    pub max_spreads: Option<usize>,
    pub hedge_estimator: HedgeEstimator,
    /// Optional annual expense ratio per symbol, accrued on long market value.
    pub expense_ratios: BTreeMap<String, f64>,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            train_days: 126,
            test_days: 126,
            leverage: 2.0,
            initial_capital: 100_000.0,
            commission_per_share: 0.005,
            overnight_rate_annual: 0.01,
            benchmark_symbol: "SPY".into(),
            hurst_cap: 0.5,
            reinvest: true,
            max_spreads: None,
            hedge_estimator: HedgeEstimator::OlsIncrements,
            expense_ratios: BTreeMap::new(),
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_days < MIN_HURST_LEN {
            return Err(param(format!(
                "train_days must be at least {MIN_HURST_LEN} (Hurst estimator minimum), got {}",
                self.train_days
            )));
        }
        if self.test_days < 1 {
            return Err(param("test_days must be positive"));
        }
        let positive = [
            ("leverage", self.leverage),
            ("initial_capital", self.initial_capital),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(param(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("commission_per_share", self.commission_per_share),
            ("overnight_rate_annual", self.overnight_rate_annual),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(param(format!("{name} must be non-negative, got {v}")));
            }
        }
        if let Some((s, v)) = self
            .expense_ratios
            .iter()
            .find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
        {
            return Err(param(format!(
                "expense ratio for {s} must be non-negative, got {v}"
            )));
        }
        if self.benchmark_symbol.trim().is_empty() {
            return Err(param("benchmark symbol is empty"));
        }
        self.selection().validate()
    }

    /// Selection settings implied by this backtest; the horizon is one test
    /// window.
    pub fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            horizon_days: u32::try_from(self.test_days).unwrap_or(u32::MAX),
            hurst_cap: self.hurst_cap,
            max_spreads: self.max_spreads,
            hedge_estimator: self.hedge_estimator,
        }
    }

    pub fn periods_per_year(&self) -> f64 {
        TRADING_DAYS_PER_YEAR / self.test_days as f64
    }
}

/// An accepted spread as recorded in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedSpread {
    pub long_symbol: String,
    pub short_symbol: String,
    pub chi: f64,
    pub hurst: f64,
    pub hurst_err: f64,
    pub kelly_weight: f64,
    pub mean_delta: f64,
    pub theta: f64,
}

impl From<&CandidateSpread> for SelectedSpread {
    fn from(c: &CandidateSpread) -> Self {
        Self {
            long_symbol: c.spread.long_symbol().into(),
            short_symbol: c.spread.short_symbol().into(),
            chi: c.spread.chi(),
            hurst: c.hurst.h,
            hurst_err: c.hurst.h_err,
            kelly_weight: c.kelly_weight,
            mean_delta: c.spread.mean_delta(),
            theta: c.spread.theta(),
        }
    }
}

/// Output of the training stage of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPlan {
    pub spreads: Vec<SelectedSpread>,
    pub weights: PortfolioWeights,
    /// Why the window holds no positions, when it does not.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub window_index: usize,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_end: NaiveDate,
    pub spreads: Vec<SelectedSpread>,
    pub weights: PortfolioWeights,
    pub shares: BTreeMap<String, i64>,
    /// Entry day followed by every test day.
    pub dates: Vec<NaiveDate>,
    pub daily_equity: Vec<f64>,
    pub window_return: f64,
    /// Return of the same window started from the initial capital.
    pub single_return: f64,
    pub benchmark_return: f64,
    pub costs_paid: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkMetrics {
    pub cumulative_return: f64,
    pub annual_return_single: f64,
    pub annual_volatility: f64,
    pub sharpe: Option<f64>,
    pub normalized_volatility: Option<f64>,
    pub max_drawdown: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquityPoint {
    pub date: NaiveDate,
    pub equity: f64,
    pub benchmark: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub schema_version: u32,
    pub config: BacktestConfig,
    pub windows: Vec<WindowResult>,
    pub cumulative_return: f64,
    pub single_returns: Vec<f64>,
    pub annual_return_reinvested: f64,
    pub annual_return_single: f64,
    pub annual_volatility: f64,
    /// Zero risk-free rate.
    pub sharpe: Option<f64>,
    /// Standard deviation over mean of the single window returns.
    pub normalized_volatility: Option<f64>,
    pub max_drawdown: f64,
    pub benchmark_correlation: f64,
    pub market_neutrality: f64,
    /// Correlation of daily portfolio and benchmark returns over the tested
    /// span; zero when undefined.
    pub daily_benchmark_correlation: f64,
    pub avg_max_weight: f64,
    pub asset_count_range: (usize, usize),
    pub benchmark: BenchmarkMetrics,
    /// Concatenated daily equity and benchmark value, scaled to the initial
    /// capital.
    #[serde(skip)]
    pub equity_curve: Vec<EquityPoint>,
}

/// `trunc(exposure · capital / price)` shares per symbol.
pub fn position_sizing(
    weights: &PortfolioWeights,
    prices_at_entry: &BTreeMap<String, f64>,
    capital: f64,
) -> Result<BTreeMap<String, i64>> {
    let mut out = BTreeMap::new();
    if !(capital > 0.0) {
        return Ok(out);
    }
    for (sym, exposure) in &weights.asset_legs {
        let price = prices_at_entry
            .get(sym)
            .copied()
            .ok_or_else(|| Error::Alignment(format!("no entry price for {sym}")))?;
        if !(price > 0.0) {
            return Err(Error::Validation(format!(
                "non-positive entry price for {sym}"
            )));
        }
        let shares = (exposure * capital / price).trunc() as i64;
        if shares != 0 {
            out.insert(sym.clone(), shares);
        }
    }
    Ok(out)
}

/// Daily equity and costs of a fixed set of share counts.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPath {
    /// `equity[0]` is the starting capital.
    pub equity: Vec<f64>,
    /// `costs[t - 1]` is charged on step `t`.
    pub costs: Vec<f64>,
}

/// Mark positions to market over `prices` (entry close first, one row per
/// symbol) and charge costs.
///
/// Step `t` earns `Σ shares · (p(t) - p(t-1))` and pays financing at
/// `overnight_rate_annual / 252` on `max(0, gross - equity) + short value`
/// and expense accruals on long value, all at the previous close. The entry
/// commission is paid on the first step and the exit commission on the last.
pub fn mark_to_market(
    positions: &BTreeMap<String, i64>,
    prices: &BTreeMap<String, Vec<f64>>,
    starting_equity: f64,
    cfg: &BacktestConfig,
) -> Result<WindowPath> {
    let legs: Vec<(&String, f64, &Vec<f64>)> = positions
        .iter()
        .map(|(sym, sh)| {
            prices
                .get(sym)
                .map(|p| (sym, *sh as f64, p))
                .ok_or_else(|| Error::Alignment(format!("no prices for held symbol {sym}")))
        })
        .collect::<Result<_>>()?;
    let steps = prices
        .values()
        .map(|p| p.len())
        .max()
        .unwrap_or(1)
        .saturating_sub(1);
    if let Some((sym, _, p)) = legs.iter().find(|(_, _, p)| p.len() != steps + 1) {
        return Err(Error::Alignment(format!(
            "{sym} has {} prices, expected {}",
            p.len(),
            steps + 1
        )));
    }

    let commission: f64 =
        legs.iter().map(|(_, sh, _)| sh.abs()).sum::<f64>() * cfg.commission_per_share;
    let daily_rate = cfg.overnight_rate_annual / TRADING_DAYS_PER_YEAR;

    let mut equity = Vec::with_capacity(steps + 1);
    let mut costs = Vec::with_capacity(steps);
    equity.push(starting_equity);
    for t in 1..=steps {
        let prev = equity[t - 1];
        let (mut gross, mut short, mut expense, mut pnl) = (0.0, 0.0, 0.0, 0.0);
        for (sym, sh, p) in &legs {
            let value = sh * p[t - 1];
            gross += value.abs();
            if value < 0.0 {
                short -= value;
            } else if let Some(er) = cfg.expense_ratios.get(*sym) {
                expense += value * er / TRADING_DAYS_PER_YEAR;
            }
            pnl += sh * (p[t] - p[t - 1]);
        }
        let mut cost = daily_rate * ((gross - prev).max(0.0) + short) + expense;
        if t == 1 {
            cost += commission;
        }
        if t == steps {
            cost += commission;
        }
        costs.push(cost);
        equity.push(prev + pnl - cost);
    }
    Ok(WindowPath { equity, costs })
}

/// Per-step costs of holding `positions` over `prices`.
pub fn accrue_costs(
    positions: &BTreeMap<String, i64>,
    prices: &BTreeMap<String, Vec<f64>>,
    starting_equity: f64,
    cfg: &BacktestConfig,
) -> Result<Vec<f64>> {
    Ok(mark_to_market(positions, prices, starting_equity, cfg)?.costs)
}

/// Selection and optimization on one training slice.
///
/// Returns are normalized to the first training day. An empty selection or
/// a failed solve yields a flat plan with a note rather than an error.
pub fn plan_window(train: &[PriceSeries], cfg: &BacktestConfig) -> Result<WindowPlan> {
    let sel = cfg.selection();
    let flat = |note: String| WindowPlan {
        spreads: Vec::new(),
        weights: PortfolioWeights {
            spread_weights: Vec::new(),
            leverage: cfg.leverage,
            scale_k: 0.0,
            asset_legs: BTreeMap::new(),
        },
        note: Some(note),
    };
    if train.len() < 2 {
        return Ok(flat("fewer than two assets".into()));
    }
    let universe = train
        .iter()
        .map(|p| compute_returns(p, 0))
        .collect::<Result<Vec<_>>>()?;
    let candidates = build_generating_matrix(&universe, &sel)?;
    let chosen = select_spreads(&candidates, &sel);
    if chosen.is_empty() {
        return Ok(flat(format!(
            "no spread passed selection ({} candidates)",
            candidates.len()
        )));
    }
    let spreads: Vec<SpreadSeries> = chosen.iter().map(|c| c.spread.clone()).collect();
    let hursts: Vec<f64> = chosen.iter().map(|c| c.hurst.h).collect();
    let weights = match optimize(&spreads, &hursts, sel.horizon_days, cfg.leverage) {
        Ok(w) => w,
        Err(e @ (Error::Singular { .. } | Error::EmptyPortfolio(_))) => {
            warn!("flat window: {e}");
            return Ok(flat(e.to_string()));
        }
        Err(e) => return Err(e),
    };
    let spreads = chosen.iter().map(SelectedSpread::from).collect();
    Ok(WindowPlan {
        spreads,
        weights,
        note: None,
    })
}

/// Peak-to-trough decline as a fraction of the running peak.
pub fn max_drawdown(equity: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for &e in equity {
        peak = peak.max(e);
        if peak > 0.0 {
            worst = worst.max((peak - e) / peak);
        }
    }
    worst.clamp(0.0, 1.0)
}

/// Number of complete train + test windows in `days` of history.
pub fn window_count(days: usize, cfg: &BacktestConfig) -> usize {
    days.saturating_sub(cfg.train_days) / cfg.test_days
}

pub fn run_walk_forward(
    prices: &[PriceSeries],
    benchmark: &PriceSeries,
    cfg: &BacktestConfig,
) -> Result<BacktestReport> {
    cfg.validate()?;
    let universe: Vec<&PriceSeries> = prices
        .iter()
        .filter(|p| p.symbol() != benchmark.symbol())
        .collect();
    let mut all: Vec<PriceSeries> = universe.iter().map(|p| (*p).clone()).collect();
    all.push(benchmark.clone());
    let dates = common_dates(&all);
    let needed = cfg.train_days + cfg.test_days;
    if dates.len() < needed {
        return Err(param(format!(
            "{} common trading days, need at least train + test = {needed}",
            dates.len()
        )));
    }
    let aligned: Vec<PriceSeries> = universe
        .iter()
        .map(|p| p.restrict_to(&dates))
        .collect::<Result<_>>()?;
    let bench = benchmark.restrict_to(&dates)?;

    let n_windows = window_count(dates.len(), cfg);
    info!(
        "{} symbols, {} days, {n_windows} windows",
        aligned.len(),
        dates.len()
    );

    let plans = (0..n_windows)
        .map(|w| {
            let start = w * cfg.test_days;
            let train = aligned
                .iter()
                .map(|p| p.slice(start..start + cfg.train_days))
                .collect::<Result<Vec<_>>>()?;
            plan_window(&train, cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut windows = Vec::with_capacity(n_windows);
    let mut capital = cfg.initial_capital;
    for (w, plan) in plans.into_iter().enumerate() {
        let start = w * cfg.test_days;
        let entry = start + cfg.train_days - 1;
        let exit = entry + cfg.test_days;
        let window_prices: BTreeMap<String, Vec<f64>> = aligned
            .iter()
            .filter(|p| plan.weights.asset_legs.contains_key(p.symbol()))
            .map(|p| (p.symbol().to_string(), p.prices()[entry..=exit].to_vec()))
            .collect();
        let entry_prices: BTreeMap<String, f64> = window_prices
            .iter()
            .map(|(s, p)| (s.clone(), p[0]))
            .collect();

        let run = |cap: f64| -> Result<(BTreeMap<String, i64>, WindowPath)> {
            let shares = position_sizing(&plan.weights, &entry_prices, cap)?;
            let mut path = mark_to_market(&shares, &window_prices, cap, cfg)?;
            if path.costs.is_empty() {
                path.equity.resize(cfg.test_days + 1, cap);
                path.costs.resize(cfg.test_days, 0.0);
            }
            Ok((shares, path))
        };
        let (shares, path) = run(capital)?;
        let window_return = path.equity[cfg.test_days] / path.equity[0] - 1.0;
        let single_return = if cfg.reinvest && capital != cfg.initial_capital {
            let (_, p) = run(cfg.initial_capital)?;
            p.equity[cfg.test_days] / p.equity[0] - 1.0
        } else {
            window_return
        };
        let bp = bench.prices();
        windows.push(WindowResult {
            window_index: w,
            train_start: dates[start],
            train_end: dates[entry],
            test_end: dates[exit],
            spreads: plan.spreads,
            weights: plan.weights,
            shares,
            dates: dates[entry..=exit].to_vec(),
            costs_paid: path.costs.iter().sum(),
            daily_equity: path.equity,
            window_return,
            single_return,
            benchmark_return: bp[exit] / bp[entry] - 1.0,
            note: plan.note,
        });
        capital = if cfg.reinvest {
            windows[w].daily_equity[cfg.test_days]
        } else {
            cfg.initial_capital
        };
    }

    let mut report = compute_metrics(windows, cfg)?;
    // benchmark curve over the tested span
    let first_entry = cfg.train_days - 1;
    let base = bench.prices()[first_entry];
    let mut k = first_entry;
    for pt in report.equity_curve.iter_mut() {
        while dates[k] != pt.date {
            k += 1;
        }
        pt.benchmark = cfg.initial_capital * bench.prices()[k] / base;
    }
    let bench_curve: Vec<f64> = report.equity_curve.iter().map(|p| p.benchmark).collect();
    report.benchmark.max_drawdown = max_drawdown(&bench_curve);
    let daily = |v: &[f64]| -> Vec<f64> { v.windows(2).map(|w| w[1] / w[0] - 1.0).collect() };
    let equity: Vec<f64> = report.equity_curve.iter().map(|p| p.equity).collect();
    report.daily_benchmark_correlation =
        pearson(&daily(&equity), &daily(&bench_curve)).unwrap_or(0.0);
    Ok(report)
}

fn concatenated_curve(windows: &[WindowResult], cfg: &BacktestConfig) -> Vec<EquityPoint> {
    let mut curve = Vec::new();
    let mut offset = 0.0;
    for (i, w) in windows.iter().enumerate() {
        let skip = usize::from(i > 0);
        // without reinvestment each window restarts from the initial capital;
        // shift it so the curve carries accumulated profit
        let shift = if cfg.reinvest { 0.0 } else { offset };
        for (d, e) in w.dates.iter().zip(&w.daily_equity).skip(skip) {
            curve.push(EquityPoint {
                date: *d,
                equity: e + shift,
                benchmark: 0.0,
            });
        }
        offset += w.daily_equity.last().copied().unwrap_or(0.0) - w.daily_equity[0];
    }
    curve
}

fn annualize(
    single: &[f64],
    cumulative: f64,
    ppy: f64,
) -> (f64, f64, f64, Option<f64>, Option<f64>) {
    let n = single.len() as f64;
    let annual_reinvested = if n > 0.0 && 1.0 + cumulative > 0.0 {
        (1.0 + cumulative).powf(ppy / n) - 1.0
    } else {
        -1.0
    };
    let m = mean(single);
    let sd = sample_std(single);
    let annual_single = ppy * m;
    let annual_vol = ppy.sqrt() * sd;
    let sharpe = (annual_vol > 0.0).then(|| annual_single / annual_vol);
    let normalized = (m != 0.0 && single.len() >= 2).then(|| sd / m);
    (
        annual_reinvested,
        annual_single,
        annual_vol,
        sharpe,
        normalized,
    )
}

/// Aggregate window results into report metrics.
///
/// Annualization uses `252 / test_days` periods per year: returns scale by
/// that factor and volatilities by its square root. The benchmark correlation
/// is taken between single window returns and benchmark window returns, and
/// is reported as zero when either side has no variance.
pub fn compute_metrics(windows: Vec<WindowResult>, cfg: &BacktestConfig) -> Result<BacktestReport> {
    if windows.is_empty() {
        return Err(param("metrics need at least one window"));
    }
    let ppy = cfg.periods_per_year();
    let single: Vec<f64> = windows.iter().map(|w| w.single_return).collect();
    let bench: Vec<f64> = windows.iter().map(|w| w.benchmark_return).collect();

    let cumulative_return = if cfg.reinvest {
        windows
            .iter()
            .map(|w| 1.0 + w.window_return)
            .product::<f64>()
            - 1.0
    } else {
        single.iter().sum()
    };
    let (
        annual_return_reinvested,
        annual_return_single,
        annual_volatility,
        sharpe,
        normalized_volatility,
    ) = annualize(&single, cumulative_return, ppy);

    let benchmark_correlation = pearson(&single, &bench).unwrap_or(0.0);
    let equity_curve = concatenated_curve(&windows, cfg);
    let equity: Vec<f64> = equity_curve.iter().map(|p| p.equity).collect();

    let held: Vec<&WindowResult> = windows.iter().filter(|w| !w.shares.is_empty()).collect();
    let avg_max_weight = if held.is_empty() {
        0.0
    } else {
        held.iter()
            .map(|w| {
                w.weights
                    .asset_legs
                    .values()
                    .fold(0.0, |a: f64, v| a.max(v.abs()))
            })
            .sum::<f64>()
            / held.len() as f64
    };
    let counts = windows.iter().map(|w| w.shares.len());
    let asset_count_range = (counts.clone().min().unwrap_or(0), counts.max().unwrap_or(0));

    let bench_cum = bench.iter().map(|r| 1.0 + r).product::<f64>() - 1.0;
    let (_, b_ann, b_vol, b_sharpe, b_norm) = annualize(&bench, bench_cum, ppy);

    Ok(BacktestReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        cumulative_return,
        single_returns: single,
        annual_return_reinvested,
        annual_return_single,
        annual_volatility,
        sharpe,
        normalized_volatility,
        max_drawdown: max_drawdown(&equity),
        benchmark_correlation,
        market_neutrality: 1.0 - benchmark_correlation.abs(),
        daily_benchmark_correlation: 0.0,
        avg_max_weight,
        asset_count_range,
        benchmark: BenchmarkMetrics {
            cumulative_return: bench_cum,
            annual_return_single: b_ann,
            annual_volatility: b_vol,
            sharpe: b_sharpe,
            normalized_volatility: b_norm,
            max_drawdown: 0.0,
        },
        windows,
        equity_curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn legs(pairs: &[(&str, f64)]) -> PortfolioWeights {
        PortfolioWeights {
            spread_weights: vec![],
            leverage: 2.0,
            scale_k: 1.0,
            asset_legs: pairs.iter().map(|(s, v)| (s.to_string(), *v)).collect(),
        }
    }

    fn price_map(pairs: &[(&str, Vec<f64>)]) -> BTreeMap<String, Vec<f64>> {
        pairs
            .iter()
            .map(|(s, p)| (s.to_string(), p.clone()))
            .collect()
    }

    #[test]
    fn sizing_examples() {
        let w = legs(&[("A", 0.5), ("B", -0.5), ("C", 0.0)]);
        let px: BTreeMap<String, f64> = [("A", 250.0), ("B", 333.0), ("C", 10.0)]
            .iter()
            .map(|(s, p)| (s.to_string(), *p))
            .collect();
        let sh = position_sizing(&w, &px, 100_000.0).unwrap();
        assert_eq!(sh["A"], 200);
        assert_eq!(sh["B"], -150);
        assert!(!sh.contains_key("C"));
    }

    #[test]
    fn commission_on_both_sides() {
        let pos: BTreeMap<String, i64> = [("A".to_string(), 200)].into();
        let cfg = BacktestConfig {
            overnight_rate_annual: 0.0,
            ..Default::default()
        };
        let costs = accrue_costs(
            &pos,
            &price_map(&[("A", vec![50.0, 51.0, 52.0])]),
            1e5,
            &cfg,
        )
        .unwrap();
        assert!((costs.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert_eq!(costs, vec![1.0, 1.0]);

        let none = accrue_costs(
            &BTreeMap::new(),
            &price_map(&[("A", vec![50.0, 51.0])]),
            1e5,
            &cfg,
        )
        .unwrap();
        assert!(none.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn financing_matches_closed_form() {
        // long 100k + short 100k on 100k equity, flat prices, one year. With
        // a = r/252 the recurrence E' = E - a(G - E + S) solves to
        // cost = (G + S - E0)((1 + a)^252 - 1) = 2009.99333654207... (mpmath)
        let pos: BTreeMap<String, i64> = [("L".to_string(), 1000), ("S".to_string(), -1000)].into();
        let prices = price_map(&[("L", vec![100.0; 253]), ("S", vec![100.0; 253])]);
        let cfg = BacktestConfig {
            commission_per_share: 0.0,
            ..Default::default()
        };
        let path = mark_to_market(&pos, &prices, 100_000.0, &cfg).unwrap();
        let total: f64 = path.costs.iter().sum();
        assert!((total - 2_009.993_336_542_072_8).abs() < 1e-6, "{total}");
        assert!((path.equity[252] - (100_000.0 - total)).abs() < 1e-6);
    }

    #[test]
    fn accounting_identity_per_step() {
        let pos: BTreeMap<String, i64> = [("A".to_string(), 37), ("B".to_string(), -52)].into();
        let pa = vec![10.0, 10.5, 9.8, 11.2, 11.0];
        let pb = vec![20.0, 19.0, 21.5, 20.2, 22.0];
        let prices = price_map(&[("A", pa.clone()), ("B", pb.clone())]);
        let cfg = BacktestConfig::default();
        let path = mark_to_market(&pos, &prices, 5_000.0, &cfg).unwrap();
        for t in 1..pa.len() {
            let pnl = 37.0 * (pa[t] - pa[t - 1]) - 52.0 * (pb[t] - pb[t - 1]);
            let expect = path.equity[t - 1] + pnl - path.costs[t - 1];
            assert!((path.equity[t] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn expense_ratio_accrues_on_longs() {
        let pos: BTreeMap<String, i64> = [("A".to_string(), 100), ("B".to_string(), -100)].into();
        let prices = price_map(&[("A", vec![10.0; 3]), ("B", vec![10.0; 3])]);
        let cfg = BacktestConfig {
            commission_per_share: 0.0,
            overnight_rate_annual: 0.0,
            expense_ratios: [("A".to_string(), 0.252), ("B".to_string(), 0.252)].into(),
            ..Default::default()
        };
        let costs = accrue_costs(&pos, &prices, 1e4, &cfg).unwrap();
        assert!((costs[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn drawdown_examples() {
        assert_eq!(max_drawdown(&[1.0, 2.0, 3.0, 4.0]), 0.0);
        assert_eq!(max_drawdown(&[100.0, 120.0, 90.0, 130.0]), 0.25);
        assert_eq!(max_drawdown(&[]), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(BacktestConfig::default().validate().is_ok());
        let bad = [
            BacktestConfig {
                train_days: 10,
                ..Default::default()
            },
            BacktestConfig {
                test_days: 0,
                ..Default::default()
            },
            BacktestConfig {
                leverage: 0.0,
                ..Default::default()
            },
            BacktestConfig {
                initial_capital: -1.0,
                ..Default::default()
            },
            BacktestConfig {
                commission_per_share: -0.1,
                ..Default::default()
            },
            BacktestConfig {
                hurst_cap: 0.7,
                ..Default::default()
            },
            BacktestConfig {
                benchmark_symbol: " ".into(),
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(
                matches!(cfg.validate(), Err(Error::Parameter(_))),
                "{cfg:?}"
            );
        }
    }

    #[test]
    fn window_counts() {
        let cfg = BacktestConfig::default();
        assert_eq!(window_count(1260, &cfg), 9);
        assert_eq!(window_count(1386, &cfg), 10);
        assert_eq!(window_count(200, &cfg), 0);
    }

    fn window(single: f64, bench: f64, equity: Vec<f64>) -> WindowResult {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        WindowResult {
            window_index: 0,
            train_start: d0,
            train_end: d0,
            test_end: d0,
            spreads: vec![],
            weights: legs(&[]),
            shares: BTreeMap::new(),
            dates: (0..equity.len())
                .map(|i| d0 + chrono::Days::new(i as u64))
                .collect(),
            window_return: equity[equity.len() - 1] / equity[0] - 1.0,
            daily_equity: equity,
            single_return: single,
            benchmark_return: bench,
            costs_paid: 0.0,
            note: None,
        }
    }

    #[test]
    fn metric_definitions() {
        let cfg = BacktestConfig::default();
        let ws = vec![
            window(0.10, 0.10, vec![100.0, 110.0]),
            window(0.00, 0.00, vec![110.0, 110.0]),
            window(0.05, 0.05, vec![110.0, 115.5]),
        ];
        let r = compute_metrics(ws, &cfg).unwrap();
        assert!((r.benchmark_correlation - 1.0).abs() < 1e-12);
        assert!(r.market_neutrality.abs() < 1e-12);
        assert_eq!(r.market_neutrality + r.benchmark_correlation.abs(), 1.0);
        assert!((r.annual_return_single - 2.0 * 0.05).abs() < 1e-15);
        let sd = sample_std(&[0.10, 0.0, 0.05]);
        assert!((r.annual_volatility - 2f64.sqrt() * sd).abs() < 1e-15);
        assert!((r.normalized_volatility.unwrap() - sd / 0.05).abs() < 1e-12);
        assert!((r.cumulative_return - (1.1 * 1.0 * 1.05 - 1.0)).abs() < 1e-12);
        assert_eq!(r.max_drawdown, 0.0);
    }

    #[test]
    fn lo_rescaling_of_half_year_volatility() {
        // two-point sample with sample stdev 0.05
        let a = 0.05 / 2f64.sqrt();
        let ws = vec![
            window(0.1 - a, 0.0, vec![1.0, 1.0]),
            window(0.1 + a, 0.1, vec![1.0, 1.0]),
        ];
        let r = compute_metrics(ws, &BacktestConfig::default()).unwrap();
        assert!((r.annual_volatility - 0.070_710_678_118_654_75).abs() < 1e-12);
    }

    #[test]
    fn zero_mean_has_no_normalized_volatility() {
        let ws = vec![
            window(0.1, 0.0, vec![1.0, 1.0]),
            window(-0.1, 0.1, vec![1.0, 1.0]),
        ];
        let r = compute_metrics(ws, &BacktestConfig::default()).unwrap();
        assert_eq!(r.normalized_volatility, None);
        assert!(compute_metrics(vec![], &BacktestConfig::default()).is_err());
    }
}
