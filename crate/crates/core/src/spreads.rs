//! Entry-normalized returns, hedge ratios and market-neutral pair spreads.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::stats::{mean, population_std};

/// Fewest aligned return observations a pair needs.
pub const MIN_PAIR_DAYS: usize = 32;
/// Increment variance below which the short leg cannot anchor a regression.
pub const CHI_VARIANCE_EPS: f64 = 1e-12;

/// Adjusted daily closes of one symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    symbol: String,
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(symbol: impl Into<String>, dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        let symbol = symbol.into();
        if dates.len() != prices.len() {
            return Err(Error::Validation(format!(
                "{symbol}: {} dates but {} prices",
                dates.len(),
                prices.len()
            )));
        }
        if prices.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{symbol}: need at least 2 prices, got {}",
                prices.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Validation(format!(
                "{symbol}: dates not strictly increasing at {}",
                w[1]
            )));
        }
        if let Some((d, p)) = dates
            .iter()
            .zip(&prices)
            .find(|(_, p)| !(**p > 0.0 && p.is_finite()))
        {
            return Err(Error::Validation(format!(
                "{symbol}: non-positive price {p} on {d}"
            )));
        }
        Ok(Self {
            symbol,
            dates,
            prices,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Sub-series over `range` (indices into this series).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.start >= range.end {
            return Err(param(format!(
                "{}: slice {range:?} outside 0..{}",
                self.symbol,
                self.len()
            )));
        }
        Self::new(
            self.symbol.clone(),
            self.dates[range.clone()].to_vec(),
            self.prices[range].to_vec(),
        )
    }

    /// Restrict to the given dates, which must all be present.
    pub fn restrict_to(&self, dates: &[NaiveDate]) -> Result<Self> {
        let mut prices = Vec::with_capacity(dates.len());
        let mut k = 0;
        for d in dates {
            while k < self.dates.len() && self.dates[k] < *d {
                k += 1;
            }
            if k == self.dates.len() || self.dates[k] != *d {
                return Err(Error::Alignment(format!(
                    "{} has no price on {d}",
                    self.symbol
                )));
            }
            prices.push(self.prices[k]);
        }
        Self::new(self.symbol.clone(), dates.to_vec(), prices)
    }
}

/// Trading dates shared by every series.
pub fn common_dates(series: &[PriceSeries]) -> Vec<NaiveDate> {
    let Some(first) = series.first() else {
        return Vec::new();
    };
    let mut common: BTreeSet<NaiveDate> = first.dates.iter().copied().collect();
    for s in &series[1..] {
        let other: BTreeSet<NaiveDate> = s.dates.iter().copied().collect();
        common = common.intersection(&other).copied().collect();
    }
    common.into_iter().collect()
}

/// Daily price changes normalized by the price at the holding-period entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub symbol: String,
    pub entry_price: f64,
    /// Date of each return, i.e. the later day of the price pair.
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// `r(t) = (p(t) - p(t-1)) / p[entry_index]`.
pub fn compute_returns(p: &PriceSeries, entry_index: usize) -> Result<ReturnSeries> {
    if p.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{}: need at least 2 prices",
            p.symbol
        )));
    }
    if entry_index >= p.len() {
        return Err(param(format!(
            "{}: entry index {entry_index} outside 0..{}",
            p.symbol,
            p.len()
        )));
    }
    returns_with_entry_price(p, p.prices[entry_index])
}

/// Returns normalized by an externally supplied entry price.
pub fn returns_with_entry_price(p: &PriceSeries, entry_price: f64) -> Result<ReturnSeries> {
    if !(entry_price > 0.0 && entry_price.is_finite()) {
        return Err(param(format!(
            "entry price must be positive, got {entry_price}"
        )));
    }
    if p.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{}: need at least 2 prices",
            p.symbol
        )));
    }
    Ok(ReturnSeries {
        symbol: p.symbol.clone(),
        entry_price,
        dates: p.dates[1..].to_vec(),
        returns: p
            .prices
            .windows(2)
            .map(|w| (w[1] - w[0]) / entry_price)
            .collect(),
    })
}

/// How the hedge ratio is estimated from one-day return increments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HedgeEstimator {
    /// Least-squares slope of `δr_i` on `δr_j`.
    #[default]
    OlsIncrements,
    /// `⟨δr_i⟩ / ⟨δr_j⟩`, the literal ratio of mean increments. Unstable
    /// when the mean increment of the short leg is near zero.
    RatioOfMeans,
}

fn increments(xs: &[f64]) -> Vec<f64> {
    xs.windows(2).map(|w| w[1] - w[0]).collect()
}

fn check_aligned(ri: &ReturnSeries, rj: &ReturnSeries) -> Result<()> {
    if ri.dates != rj.dates || ri.returns.len() != rj.returns.len() {
        return Err(Error::Alignment(format!(
            "{} and {} cover different dates",
            ri.symbol, rj.symbol
        )));
    }
    Ok(())
}

/// Hedge ratio `χ_ij` with the default estimator.
///
/// `Ok(None)` is the reject-pair signal: the estimate is not positive and the
/// pair cannot form a long-short spread in this orientation or the other.
pub fn hedge_ratio(ri: &ReturnSeries, rj: &ReturnSeries) -> Result<Option<f64>> {
    hedge_ratio_with(ri, rj, HedgeEstimator::default())
}

pub fn hedge_ratio_with(
    ri: &ReturnSeries,
    rj: &ReturnSeries,
    estimator: HedgeEstimator,
) -> Result<Option<f64>> {
    check_aligned(ri, rj)?;
    if ri.len() < MIN_PAIR_DAYS {
        return Err(Error::InsufficientData(format!(
            "{}/{}: {} aligned returns, need {MIN_PAIR_DAYS}",
            ri.symbol,
            rj.symbol,
            ri.len()
        )));
    }
    let di = increments(&ri.returns);
    let dj = increments(&rj.returns);
    let degenerate = |reason: String| Error::DegeneratePair {
        long: ri.symbol.clone(),
        short: rj.symbol.clone(),
        reason,
    };

    let chi = match estimator {
        HedgeEstimator::OlsIncrements => {
            let (mi, mj) = (mean(&di), mean(&dj));
            let mut sjj = 0.0;
            let mut sij = 0.0;
            for (a, b) in di.iter().zip(&dj) {
                sjj += (b - mj) * (b - mj);
                sij += (a - mi) * (b - mj);
            }
            let var_j = sjj / dj.len() as f64;
            if var_j < CHI_VARIANCE_EPS {
                return Err(degenerate(format!(
                    "increment variance {var_j:.3e} of {} below {CHI_VARIANCE_EPS:e}",
                    rj.symbol
                )));
            }
            sij / sjj
        }
        HedgeEstimator::RatioOfMeans => {
            let mj = mean(&dj);
            if mj.abs() < CHI_VARIANCE_EPS {
                return Err(degenerate(format!("mean increment of {} is ~0", rj.symbol)));
            }
            mean(&di) / mj
        }
    };
    Ok((chi > 0.0 && chi.is_finite()).then_some(chi))
}

/// Return series of a long position in one asset hedged by `chi` units of
/// another: `Δ(t) = r_long(t) - chi · r_short(t)`.
#[derive(Debug, Clone, Serialize)]
pub struct SpreadSeries {
    long_symbol: String,
    short_symbol: String,
    chi: f64,
    dates: Vec<NaiveDate>,
    deltas: Vec<f64>,
    mean_delta: f64,
    theta: f64,
    // the spread this one was flipped from, so flipping back is exact
    #[serde(skip)]
    inverse: Option<Box<SpreadSeries>>,
}

impl PartialEq for SpreadSeries {
    fn eq(&self, other: &Self) -> bool {
        self.long_symbol == other.long_symbol
            && self.short_symbol == other.short_symbol
            && self.chi == other.chi
            && self.dates == other.dates
            && self.deltas == other.deltas
            && self.mean_delta == other.mean_delta
            && self.theta == other.theta
    }
}

impl SpreadSeries {
    fn from_parts(
        long_symbol: String,
        short_symbol: String,
        chi: f64,
        dates: Vec<NaiveDate>,
        deltas: Vec<f64>,
    ) -> Self {
        let mean_delta = mean(&deltas);
        let theta = population_std(&deltas);
        Self {
            long_symbol,
            short_symbol,
            chi,
            dates,
            deltas,
            mean_delta,
            theta,
            inverse: None,
        }
    }

    pub fn long_symbol(&self) -> &str {
        &self.long_symbol
    }

    pub fn short_symbol(&self) -> &str {
        &self.short_symbol
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    /// Mean daily spread return.
    pub fn mean_delta(&self) -> f64 {
        self.mean_delta
    }

    /// Population standard deviation of the daily spread returns.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn t_statistic(&self) -> f64 {
        if self.theta == 0.0 {
            return 0.0;
        }
        self.mean_delta / (self.theta / (self.deltas.len() as f64).sqrt())
    }

    pub fn involves(&self, symbol: &str) -> bool {
        self.long_symbol == symbol || self.short_symbol == symbol
    }

    fn stripped(&self) -> Self {
        Self {
            inverse: None,
            ..self.clone()
        }
    }
}

pub fn build_spread(ri: &ReturnSeries, rj: &ReturnSeries, chi: f64) -> Result<SpreadSeries> {
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(param(format!("hedge ratio must be positive, got {chi}")));
    }
    if ri.symbol == rj.symbol {
        return Err(param(format!(
            "spread legs must differ, got {} twice",
            ri.symbol
        )));
    }
    check_aligned(ri, rj)?;
    let deltas = ri
        .returns
        .iter()
        .zip(&rj.returns)
        .map(|(a, b)| a - chi * b)
        .collect();
    Ok(SpreadSeries::from_parts(
        ri.symbol.clone(),
        rj.symbol.clone(),
        chi,
        ri.dates.clone(),
        deltas,
    ))
}

/// Reverse the orientation: `Δ_ji = r_j - r_i / χ = -Δ_ij / χ`.
pub fn flip_spread(s: &SpreadSeries) -> SpreadSeries {
    if let Some(orig) = &s.inverse {
        let mut back = (**orig).clone();
        back.inverse = Some(Box::new(s.stripped()));
        return back;
    }
    let deltas = s.deltas.iter().map(|d| -d / s.chi).collect();
    let mut flipped = SpreadSeries::from_parts(
        s.short_symbol.clone(),
        s.long_symbol.clone(),
        1.0 / s.chi,
        s.dates.clone(),
        deltas,
    );
    flipped.inverse = Some(Box::new(s.stripped()));
    flipped
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Days;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn dates(n: usize) -> Vec<NaiveDate> {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        (0..n).map(|i| d0 + Days::new(i as u64)).collect()
    }

    fn rs(symbol: &str, returns: Vec<f64>) -> ReturnSeries {
        ReturnSeries {
            symbol: symbol.into(),
            entry_price: 100.0,
            dates: dates(returns.len()),
            returns,
        }
    }

    fn ps(symbol: &str, prices: Vec<f64>) -> PriceSeries {
        PriceSeries::new(symbol, dates(prices.len()), prices).unwrap()
    }

    fn noise(seed: u64, n: usize, sd: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sd).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn price_series_validation() {
        assert!(PriceSeries::new("A", dates(1), vec![1.0]).is_err());
        assert!(matches!(
            PriceSeries::new("A", dates(3), vec![1.0, 0.0, 2.0]),
            Err(Error::Validation(_))
        ));
        let mut d = dates(3);
        d.swap(1, 2);
        assert!(PriceSeries::new("A", d, vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn returns_examples() {
        let r = compute_returns(&ps("A", vec![100.0, 101.0, 100.0]), 0).unwrap();
        assert_eq!(r.entry_price, 100.0);
        assert!((r.returns[0] - 0.01).abs() < 1e-15);
        assert!((r.returns[1] + 0.01).abs() < 1e-15);

        let flat = compute_returns(&ps("A", vec![5.0; 6]), 2).unwrap();
        assert!(flat.returns.iter().all(|&x| x == 0.0));

        let r = returns_with_entry_price(&ps("A", vec![100.0, 110.0]), 200.0).unwrap();
        assert_eq!(r.returns, vec![0.05]);

        assert!(compute_returns(&ps("A", vec![1.0, 2.0]), 2).is_err());
    }

    #[test]
    fn hedge_ratio_exact_relations() {
        let base = noise(1, 64, 0.01);
        let a = rs("A", base.clone());
        assert!((hedge_ratio(&a, &rs("B", base.clone())).unwrap().unwrap() - 1.0).abs() < 1e-12);
        let doubled = rs("B", base.iter().map(|x| 2.0 * x).collect());
        assert!((hedge_ratio(&a, &doubled).unwrap().unwrap() - 0.5).abs() < 1e-12);
        let negated = rs("B", base.iter().map(|x| -x).collect());
        assert_eq!(hedge_ratio(&a, &negated).unwrap(), None);
    }

    #[test]
    fn hedge_ratio_error_paths() {
        let a = rs("A", noise(1, 64, 0.01));
        assert!(matches!(
            hedge_ratio(&a, &rs("B", vec![0.0; 64])),
            Err(Error::DegeneratePair { .. })
        ));
        assert!(matches!(
            hedge_ratio(&rs("A", noise(1, 20, 0.01)), &rs("B", noise(2, 20, 0.01))),
            Err(Error::InsufficientData(_))
        ));
        let mut shifted = rs("B", noise(2, 64, 0.01));
        shifted.dates[0] = NaiveDate::from_ymd_opt(1999, 1, 1).unwrap();
        assert!(matches!(
            hedge_ratio(&a, &shifted),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn hedge_ratio_recovers_beta_ratio() {
        let n = 2000;
        let m = noise(10, n, 0.01);
        let (ei, ej) = (noise(11, n, 0.001), noise(12, n, 0.001));
        let ri = rs("I", (0..n).map(|t| 1.2 * m[t] + ei[t]).collect());
        let rj = rs("J", (0..n).map(|t| 0.8 * m[t] + ej[t]).collect());
        let chi = hedge_ratio(&ri, &rj).unwrap().unwrap();
        assert!((chi - 1.5).abs() < 0.1, "chi {chi}");
        let ratio = hedge_ratio_with(&ri, &rj, HedgeEstimator::RatioOfMeans).unwrap();
        assert!(ratio.is_none() || ratio.unwrap().is_finite());
    }

    #[test]
    fn spread_examples() {
        let ri = rs("I", vec![0.02; 40]);
        let rj = rs("J", vec![0.01; 40]);
        let s = build_spread(&ri, &rj, 2.0).unwrap();
        assert!(s.deltas().iter().all(|&d| d == 0.0));
        let s = build_spread(&ri, &rj, 1.0).unwrap();
        assert!(s.deltas().iter().all(|&d| (d - 0.01).abs() < 1e-17));
        assert_eq!((s.long_symbol(), s.short_symbol()), ("I", "J"));
        assert!(s.theta() < 1e-15);
        assert!(build_spread(&ri, &ri, 1.0).is_err());
        assert!(build_spread(&ri, &rj, 0.0).is_err());
    }

    #[test]
    fn spread_cancels_market() {
        let n = 4000;
        let m = noise(20, n, 0.01);
        let (ei, ej) = (noise(21, n, 0.002), noise(22, n, 0.002));
        let ri = rs("I", (0..n).map(|t| 0.0003 + 1.2 * m[t] + ei[t]).collect());
        let rj = rs("J", (0..n).map(|t| 0.0001 + 0.8 * m[t] + ej[t]).collect());
        let s = build_spread(&ri, &rj, 1.5).unwrap();
        let rho = crate::stats::pearson(s.deltas(), &m).unwrap();
        assert!(rho.abs() < 3.0 / (n as f64).sqrt(), "rho {rho}");
    }

    #[test]
    fn flip_examples() {
        let s = build_spread(&rs("I", vec![0.04, 0.0]), &rs("J", vec![0.01, 0.005]), 2.0).unwrap();
        assert_eq!(s.deltas(), &[0.02, -0.01]);
        let f = flip_spread(&s);
        assert_eq!(f.chi(), 0.5);
        assert_eq!(f.deltas(), &[-0.01, 0.005]);
        assert_eq!((f.long_symbol(), f.short_symbol()), ("J", "I"));
        assert_eq!(flip_spread(&f), s);

        let neg =
            build_spread(&rs("I", vec![-0.02, -0.01]), &rs("J", vec![0.0, 0.0]), 3.0).unwrap();
        assert!(neg.mean_delta() < 0.0);
        assert!(flip_spread(&neg).mean_delta() > 0.0);
    }

    #[test]
    fn increment_market_exposure_vanishes() {
        let n = 300;
        let m = noise(30, n, 0.01);
        let ri = rs(
            "I",
            (0..n)
                .map(|t| 0.9 * m[t])
                .zip(noise(31, n, 0.003))
                .map(|(a, b)| a + b)
                .collect(),
        );
        let rj = rs(
            "J",
            (0..n)
                .map(|t| 1.1 * m[t])
                .zip(noise(32, n, 0.003))
                .map(|(a, b)| a + b)
                .collect(),
        );
        let chi = hedge_ratio(&ri, &rj).unwrap().unwrap();
        let s = build_spread(&ri, &rj, chi).unwrap();
        let dd = increments(s.deltas());
        let dj = increments(&rj.returns);
        let fit = crate::stats::linear_fit(&dj, &dd).unwrap();
        assert!(fit.slope.abs() < 1e-9, "residual slope {}", fit.slope);
    }

    proptest! {
        #[test]
        fn flip_is_exact_involution_and_keeps_t_stat(
            seed in 0u64..10_000,
            chi in 0.05f64..20.0,
        ) {
            let s = build_spread(&rs("I", noise(seed, 50, 0.01)), &rs("J", noise(seed + 1, 50, 0.01)), chi).unwrap();
            let f = flip_spread(&s);
            prop_assert_eq!(&flip_spread(&f), &s);
            prop_assert_eq!(&flip_spread(&flip_spread(&f)), &f);
            prop_assert!((f.t_statistic().abs() - s.t_statistic().abs()).abs() < 1e-9);
        }

        #[test]
        fn returns_are_scale_free(scale in 0.01f64..1000.0, seed in 0u64..1000) {
            let prices: Vec<f64> = noise(seed, 40, 1.0).iter().scan(100.0, |p, x| { *p += x; Some(*p) }).collect();
            let base = compute_returns(&ps("A", prices.clone()), 0).unwrap();
            let scaled = compute_returns(&ps("A", prices.iter().map(|p| p * scale).collect()), 0).unwrap();
            for (a, b) in base.returns.iter().zip(&scaled.returns) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-3));
            }
        }
    }
}
