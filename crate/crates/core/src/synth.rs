//! Synthetic price universes with a common market factor and planted
//! mean-reverting pairs.
//!
//! Pair `k` shares a market exposure `β` and a random-walk factor `F_k`;
//! the first leg adds a drift `a` and the increments of an AR(1)
//! displacement `X_k`:
//!
//! ```text
//! r_A = β r_m + dF + a + dX
//! r_B = (β r_m + dF) / χ + ε
//! ```
//!
//! so `r_A − χ r_B` is the drift plus the increments of a stationary process,
//! free of the market and of `F`. The displacement sits on one leg only, which
//! keeps the increment regression of `r_A` on `r_B` centred on `χ`. Noise assets load on the market with
//! independent idiosyncratic shocks. Prices compound the daily returns.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::spreads::PriceSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_days: usize,
    pub n_pairs: usize,
    pub n_noise: usize,
    pub seed: u64,
    pub start_date: NaiveDate,
    pub market_drift: f64,
    pub market_vol: f64,
    /// Volatility of each pair's shared factor.
    pub pair_factor_vol: f64,
    /// AR(1) coefficient of the displacement.
    pub ou_phi: f64,
    pub ou_vol: f64,
    pub pair_drift: f64,
    /// Residual on the second leg.
    pub leg_noise_vol: f64,
    pub noise_asset_vol: f64,
    pub benchmark_symbol: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_days: 1386,
            n_pairs: 3,
            n_noise: 4,
            seed: 7,
            start_date: NaiveDate::from_ymd_opt(2015, 1, 2).expect("valid date"),
            market_drift: 0.0003,
            market_vol: 0.01,
            pair_factor_vol: 0.006,
            ou_phi: 0.3,
            ou_vol: 0.008,
            pair_drift: 0.0008,
            leg_noise_vol: 0.001,
            noise_asset_vol: 0.005,
            benchmark_symbol: "MKT".into(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_days < 2 {
            return Err(param("n_days must be at least 2"));
        }
        if !(self.ou_phi.abs() < 1.0) {
            return Err(param(format!(
                "ou_phi must lie in (-1, 1), got {}",
                self.ou_phi
            )));
        }
        let vols = [
            ("market_vol", self.market_vol),
            ("pair_factor_vol", self.pair_factor_vol),
            ("ou_vol", self.ou_vol),
            ("leg_noise_vol", self.leg_noise_vol),
            ("noise_asset_vol", self.noise_asset_vol),
        ];
        for (name, v) in vols {
            if !(0.0..0.2).contains(&v) {
                return Err(param(format!("{name} must lie in [0, 0.2), got {v}")));
            }
        }
        if !(self.market_drift.abs() < 0.05 && self.pair_drift.abs() < 0.05) {
            return Err(param("drifts must be below 5% per day"));
        }
        if self.n_pairs * 2 + self.n_noise == 0 {
            return Err(param("universe is empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticUniverse {
    pub assets: Vec<PriceSeries>,
    pub benchmark: PriceSeries,
    /// Daily market factor returns, aligned with `dates()[1..]`.
    pub market_returns: Vec<f64>,
    /// `(A, B)` symbols of each planted pair.
    pub planted: Vec<(String, String)>,
}

impl SyntheticUniverse {
    pub fn dates(&self) -> &[NaiveDate] {
        self.benchmark.dates()
    }

    /// Whether a spread between `x` and `y` is one of the planted pairs, in
    /// either orientation.
    pub fn is_planted(&self, x: &str, y: &str) -> bool {
        self.planted
            .iter()
            .any(|(a, b)| (a == x && b == y) || (a == y && b == x))
    }
}

/// `n` consecutive weekdays starting at `start` (rolled forward off a weekend).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

fn compound(p0: f64, returns: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(returns.len() + 1);
    p.push(p0);
    for r in returns {
        let last = p[p.len() - 1];
        p.push(last * (1.0 + r));
    }
    p
}

pub fn generate_universe(cfg: &SynthConfig) -> Result<SyntheticUniverse> {
    cfg.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let steps = cfg.n_days - 1;
    let dates = business_days(cfg.start_date, cfg.n_days);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let draw = |rng: &mut ChaCha20Rng, n: usize, sd: f64| -> Vec<f64> {
        (0..n).map(|_| sd * unit.sample(rng)).collect()
    };

    let market: Vec<f64> = draw(&mut rng, steps, cfg.market_vol)
        .into_iter()
        .map(|e| cfg.market_drift + e)
        .collect();

    let mut assets = Vec::new();
    let mut planted = Vec::new();
    for k in 0..cfg.n_pairs {
        let beta = rng.random_range(0.6..1.4);
        let chi = rng.random_range(0.7..1.4);
        let dfac = draw(&mut rng, steps, cfg.pair_factor_vol);
        let eta = draw(&mut rng, steps + 1, cfg.ou_vol);
        let eps = draw(&mut rng, steps, cfg.leg_noise_vol);
        let stationary = cfg.ou_vol / (1.0 - cfg.ou_phi * cfg.ou_phi).sqrt();
        let mut x = vec![stationary * eta[0] / cfg.ou_vol.max(f64::MIN_POSITIVE)];
        for e in &eta[1..] {
            let last = x[x.len() - 1];
            x.push(cfg.ou_phi * last + e);
        }
        let (mut ra, mut rb) = (Vec::with_capacity(steps), Vec::with_capacity(steps));
        for t in 0..steps {
            let common = beta * market[t] + dfac[t];
            let dx = x[t + 1] - x[t];
            ra.push(common + cfg.pair_drift + dx);
            rb.push(common / chi + eps[t]);
        }
        let (sa, sb) = (format!("P{}A", k + 1), format!("P{}B", k + 1));
        let pa = rng.random_range(40.0..160.0);
        let pb = rng.random_range(40.0..160.0);
        assets.push(PriceSeries::new(&sa, dates.clone(), compound(pa, &ra))?);
        assets.push(PriceSeries::new(&sb, dates.clone(), compound(pb, &rb))?);
        planted.push((sa, sb));
    }
    for k in 0..cfg.n_noise {
        let beta = rng.random_range(0.5..1.5);
        let idio = draw(&mut rng, steps, cfg.noise_asset_vol);
        let r: Vec<f64> = (0..steps).map(|t| beta * market[t] + idio[t]).collect();
        let p0 = rng.random_range(40.0..160.0);
        assets.push(PriceSeries::new(
            format!("N{}", k + 1),
            dates.clone(),
            compound(p0, &r),
        )?);
    }
    let benchmark = PriceSeries::new(&cfg.benchmark_symbol, dates, compound(100.0, &market))?;
    Ok(SyntheticUniverse {
        assets,
        benchmark,
        market_returns: market,
        planted,
    })
}
