//! Fractal Kelly ranking of pair spreads and greedy selection of a disjoint,
//! mean-reverting subset.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::fbm::{estimate_hurst, HurstEstimate, Series};
use crate::spreads::{
    build_spread, flip_spread, hedge_ratio_with, HedgeEstimator, ReturnSeries, SpreadSeries,
    MIN_PAIR_DAYS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    /// Investment horizon `N` in trading days.
    pub horizon_days: u32,
    /// Critical Hurst level: a spread passes when `H + ΔH < hurst_cap`.
    pub hurst_cap: f64,
    /// Optional cap on the number of accepted spreads.
    pub max_spreads: Option<usize>,
    pub hedge_estimator: HedgeEstimator,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            horizon_days: 126,
            hurst_cap: 0.5,
            max_spreads: None,
            hedge_estimator: HedgeEstimator::OlsIncrements,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon_days < 1 {
            return Err(param("horizon_days must be at least 1"));
        }
        if !(self.hurst_cap > 0.0 && self.hurst_cap <= 0.5) {
            return Err(param(format!(
                "hurst_cap must lie in (0, 0.5], got {}",
                self.hurst_cap
            )));
        }
        if self.max_spreads == Some(0) {
            return Err(param("max_spreads must be positive when given"));
        }
        Ok(())
    }
}

/// One element of the generating matrix, oriented so its mean is positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSpread {
    pub spread: SpreadSeries,
    /// Estimated on the cumulative spread path.
    pub hurst: HurstEstimate,
    pub kelly_weight: f64,
}

impl CandidateSpread {
    pub fn new(spread: SpreadSeries, hurst: HurstEstimate, horizon_days: u32) -> Result<Self> {
        let kelly_weight =
            fractal_kelly_weight(spread.mean_delta(), spread.theta(), hurst.h, horizon_days)?;
        Ok(Self {
            spread,
            hurst,
            kelly_weight,
        })
    }

    /// Hurst stability test plus a positive growth rate.
    pub fn passes(&self, hurst_cap: f64) -> bool {
        passes_criterion(&self.hurst, self.kelly_weight, hurst_cap)
    }
}

/// `H + ΔH < cap`, `ΔH < H`, an unclamped fit and a positive weight.
pub fn passes_criterion(hurst: &HurstEstimate, kelly_weight: f64, hurst_cap: f64) -> bool {
    !hurst.degraded
        && hurst.h + hurst.h_err < hurst_cap
        && hurst.h_err < hurst.h
        && kelly_weight > 0.0
}

/// Growth-optimal weight of a spread over an `n_days` horizon under the
/// fractal volatility law `θ_N = θ · N^H`:
/// `μ · N / (θ² · N^{2H}) = (μ / θ²) · N^{1-2H}`.
pub fn fractal_kelly_weight(mean_delta: f64, theta: f64, h: f64, n_days: u32) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::DegenerateVolatility(format!(
            "spread volatility must be positive, got {theta}"
        )));
    }
    if !(h > 0.0 && h < 1.0) {
        return Err(param(format!("Hurst exponent must lie in (0, 1), got {h}")));
    }
    if n_days < 1 {
        return Err(param("horizon must be at least one day"));
    }
    let n = f64::from(n_days);
    Ok(mean_delta * n / (theta * theta * n.powf(2.0 * h)))
}

fn align_pair(ri: &ReturnSeries, rj: &ReturnSeries) -> Option<(ReturnSeries, ReturnSeries)> {
    if ri.dates == rj.dates {
        return None;
    }
    let keep: BTreeSet<_> = ri
        .dates
        .iter()
        .filter(|d| rj.dates.binary_search(d).is_ok())
        .collect();
    let restrict = |r: &ReturnSeries| {
        let (dates, returns) = r
            .dates
            .iter()
            .zip(&r.returns)
            .filter(|(d, _)| keep.contains(d))
            .map(|(d, x)| (*d, *x))
            .unzip();
        ReturnSeries {
            symbol: r.symbol.clone(),
            entry_price: r.entry_price,
            dates,
            returns,
        }
    };
    Some((restrict(ri), restrict(rj)))
}

fn candidate_for(
    ri: &ReturnSeries,
    rj: &ReturnSeries,
    cfg: &SelectionConfig,
) -> Result<Option<CandidateSpread>> {
    let aligned = align_pair(ri, rj);
    let (ri, rj) = match &aligned {
        Some((a, b)) => (a, b),
        None => (ri, rj),
    };
    if ri.len() < MIN_PAIR_DAYS {
        return Ok(None);
    }
    let Some(chi) = hedge_ratio_with(ri, rj, cfg.hedge_estimator)? else {
        return Ok(None);
    };
    let mut spread = build_spread(ri, rj, chi)?;
    if spread.mean_delta() < 0.0 {
        spread = flip_spread(&spread);
    }
    if spread.theta() <= 0.0 {
        return Ok(None);
    }
    let hurst = estimate_hurst(&Series::cumulative(spread.deltas())?)?;
    CandidateSpread::new(spread, hurst, cfg.horizon_days).map(Some)
}

/// Every admissible pair `i < j` of the universe as an oriented candidate.
///
/// Pairs whose hedge ratio is rejected or degenerate, whose aligned history is
/// too short, or whose Hurst fit fails are left out.
pub fn build_generating_matrix(
    universe: &[ReturnSeries],
    cfg: &SelectionConfig,
) -> Result<Vec<CandidateSpread>> {
    cfg.validate()?;
    if universe.len() < 2 {
        return Err(param(format!(
            "generating matrix needs at least 2 assets, got {}",
            universe.len()
        )));
    }
    let mut out = Vec::new();
    for i in 0..universe.len() {
        for j in i + 1..universe.len() {
            let (ri, rj) = (&universe[i], &universe[j]);
            match candidate_for(ri, rj, cfg) {
                Ok(Some(c)) => out.push(c),
                Ok(None) => debug!("pair {}/{} rejected", ri.symbol, rj.symbol),
                Err(
                    e @ (Error::DegeneratePair { .. }
                    | Error::DegenerateSeries(_)
                    | Error::DegenerateVolatility(_)
                    | Error::InsufficientData(_)),
                ) => debug!("pair {}/{} skipped: {e}", ri.symbol, rj.symbol),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Descending weight; ties broken by `(long_symbol, short_symbol)`.
pub fn ranking_order(a: &CandidateSpread, b: &CandidateSpread) -> Ordering {
    b.kelly_weight
        .total_cmp(&a.kelly_weight)
        .then_with(|| a.spread.long_symbol().cmp(b.spread.long_symbol()))
        .then_with(|| a.spread.short_symbol().cmp(b.spread.short_symbol()))
}

/// Greedy selection over the generating matrix.
///
/// The highest-weight remaining candidate is tested against the Hurst
/// criterion. Acceptance removes every candidate sharing one of its assets;
/// rejection removes only that candidate. Accepted spreads are returned in
/// acceptance order.
pub fn select_spreads(
    candidates: &[CandidateSpread],
    cfg: &SelectionConfig,
) -> Vec<CandidateSpread> {
    let mut ranked: Vec<&CandidateSpread> = candidates.iter().collect();
    ranked.sort_by(|a, b| ranking_order(a, b));

    let mut used: BTreeSet<&str> = BTreeSet::new();
    let mut accepted = Vec::new();
    for c in ranked {
        if cfg.max_spreads.is_some_and(|m| accepted.len() >= m) {
            break;
        }
        let (long, short) = (c.spread.long_symbol(), c.spread.short_symbol());
        if used.contains(long) || used.contains(short) {
            continue;
        }
        if c.passes(cfg.hurst_cap) {
            used.insert(long);
            used.insert(short);
            accepted.push(c.clone());
        } else {
            debug!(
                "rejected {long}/{short}: H={:.3} ΔH={:.3} w={:.3}",
                c.hurst.h, c.hurst.h_err, c.kelly_weight
            );
        }
    }
    accepted
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Days, NaiveDate};
    use proptest::prelude::*;

    fn hurst(h: f64, h_err: f64) -> HurstEstimate {
        HurstEstimate {
            h,
            h_err,
            n_scales: 5,
            raw_h: h,
            degraded: false,
        }
    }

    fn ret(symbol: &str, returns: Vec<f64>) -> ReturnSeries {
        let d0 = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
        ReturnSeries {
            symbol: symbol.into(),
            entry_price: 1.0,
            dates: (0..returns.len())
                .map(|i| d0 + Days::new(i as u64))
                .collect(),
            returns,
        }
    }

    fn candidate(long: &str, short: &str, weight: f64, h: f64, h_err: f64) -> CandidateSpread {
        let spread = build_spread(
            &ret(long, vec![0.02, 0.0]),
            &ret(short, vec![0.01, 0.0]),
            1.0,
        )
        .unwrap();
        CandidateSpread {
            spread,
            hurst: hurst(h, h_err),
            kelly_weight: weight,
        }
    }

    #[test]
    fn kelly_examples() {
        assert!((fractal_kelly_weight(0.001, 0.01, 0.5, 1).unwrap() - 10.0).abs() < 1e-12);
        assert!((fractal_kelly_weight(0.001, 0.01, 0.5, 126).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(fractal_kelly_weight(0.0, 0.01, 0.3, 50).unwrap(), 0.0);
        // 10 * 100^0.2 evaluated with mpmath at 30 digits
        let w = fractal_kelly_weight(0.001, 0.01, 0.4, 100).unwrap();
        assert!((w - 25.118_864_315_095_8).abs() < 1e-11, "{w}");
        assert!(matches!(
            fractal_kelly_weight(0.001, 0.0, 0.4, 100),
            Err(Error::DegenerateVolatility(_))
        ));
    }

    #[test]
    fn half_hurst_matches_grid_search_of_growth_rate() {
        let (mu, theta) = (0.001, 0.01);
        let (mut best_w, mut best_g) = (0.0, f64::NEG_INFINITY);
        for k in 0..=5000 {
            let w = k as f64 * 0.01;
            let g = w * mu - w * w * theta * theta / 2.0;
            if g > best_g {
                best_g = g;
                best_w = w;
            }
        }
        let w = fractal_kelly_weight(mu, theta, 0.5, 7).unwrap();
        assert!((w - best_w).abs() <= 0.01);
    }

    #[test]
    fn criterion_arithmetic() {
        let cfg = SelectionConfig::default();
        let accepted = select_spreads(&[candidate("A", "B", 1.0, 0.3, 0.1)], &cfg);
        assert_eq!(accepted.len(), 1);
        assert!(select_spreads(&[candidate("A", "B", 1.0, 0.45, 0.1)], &cfg).is_empty());
        assert!(select_spreads(&[candidate("A", "B", 1.0, 0.1, 0.2)], &cfg).is_empty());
        let mut degraded = candidate("A", "B", 1.0, 0.01, 0.001);
        degraded.hurst.degraded = true;
        assert!(select_spreads(&[degraded], &cfg).is_empty());
    }

    #[test]
    fn acceptance_excludes_shared_assets() {
        let cands = vec![
            candidate("A", "B", 9.0, 0.2, 0.05),
            candidate("A", "C", 8.0, 0.2, 0.05),
            candidate("C", "D", 7.0, 0.2, 0.05),
            candidate("B", "D", 6.0, 0.2, 0.05),
        ];
        let out = select_spreads(&cands, &SelectionConfig::default());
        let names: Vec<_> = out
            .iter()
            .map(|c| (c.spread.long_symbol(), c.spread.short_symbol()))
            .collect();
        assert_eq!(names, vec![("A", "B"), ("C", "D")]);
    }

    #[test]
    fn rejection_drops_only_the_failing_candidate() {
        let cands = vec![
            candidate("A", "B", 9.0, 0.45, 0.1),
            candidate("A", "C", 8.0, 0.2, 0.05),
        ];
        let out = select_spreads(&cands, &SelectionConfig::default());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].spread.short_symbol(), "C");
    }

    #[test]
    fn ties_break_lexicographically_and_cap_applies() {
        let cands = vec![
            candidate("C", "D", 5.0, 0.2, 0.05),
            candidate("A", "B", 5.0, 0.2, 0.05),
        ];
        let cfg = SelectionConfig {
            max_spreads: Some(1),
            ..Default::default()
        };
        let out = select_spreads(&cands, &cfg);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].spread.long_symbol(), "A");
    }

    #[test]
    fn config_validation() {
        assert!(SelectionConfig::default().validate().is_ok());
        for cap in [0.0, 0.6, f64::NAN] {
            let cfg = SelectionConfig {
                hurst_cap: cap,
                ..Default::default()
            };
            assert!(cfg.validate().is_err());
        }
        let cfg = SelectionConfig {
            horizon_days: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    fn synthetic_universe(k: usize, n: usize, seed: u64) -> Vec<ReturnSeries> {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, 0.01).unwrap();
        let m: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        (0..k)
            .map(|i| {
                let beta = 0.5 + 0.2 * i as f64;
                let drift = if i % 2 == 0 { 0.0004 } else { -0.0004 };
                let r = m
                    .iter()
                    .map(|x| drift + beta * x + 0.3 * d.sample(&mut rng))
                    .collect();
                ret(&format!("S{i:02}"), r)
            })
            .collect()
    }

    #[test]
    fn generating_matrix_size_and_orientation() {
        let cfg = SelectionConfig::default();
        let two = build_generating_matrix(&synthetic_universe(2, 200, 1), &cfg).unwrap();
        assert!(two.len() <= 1);
        let many = build_generating_matrix(&synthetic_universe(25, 200, 2), &cfg).unwrap();
        assert!(many.len() <= 300);
        assert!(many.len() > 200, "only {} candidates", many.len());
        for c in &many {
            assert!(c.spread.mean_delta() >= 0.0);
            let expect =
                fractal_kelly_weight(c.spread.mean_delta(), c.spread.theta(), c.hurst.h, 126)
                    .unwrap();
            assert_eq!(c.kelly_weight, expect);
        }
        assert!(build_generating_matrix(&synthetic_universe(1, 200, 3), &cfg).is_err());
    }

    #[test]
    fn negative_mean_pair_is_flipped() {
        let n = 200;
        let u = synthetic_universe(2, n, 4);
        // S00 drifts up, S01 drifts down: make S01 the first leg
        let swapped = vec![u[1].clone(), u[0].clone()];
        let cands = build_generating_matrix(&swapped, &SelectionConfig::default()).unwrap();
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].spread.long_symbol(), "S00");
        assert!(cands[0].spread.mean_delta() > 0.0);
    }

    proptest! {
        #[test]
        fn kelly_decreases_in_hurst(mu in 1e-5f64..1e-2, theta in 1e-3f64..0.1, h1 in 0.01f64..0.98, dh in 0.001f64..0.5, n in 2u32..500) {
            let h2 = (h1 + dh).min(0.99);
            prop_assume!(h2 > h1);
            let a = fractal_kelly_weight(mu, theta, h1, n).unwrap();
            let b = fractal_kelly_weight(mu, theta, h2, n).unwrap();
            prop_assert!(b < a);
        }
    }
}
