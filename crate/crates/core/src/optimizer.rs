//! Horizon-rescaled covariance of spread returns and leveraged Kelly weights.

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::spreads::SpreadSeries;

/// Relative ridge added to a badly conditioned covariance, scaled by its mean
/// diagonal.
pub const RIDGE_LAMBDA: f64 = 1e-8;
/// Largest condition number accepted by [`solve_weights`].
pub const MAX_CONDITION: f64 = 1e12;

/// Spread covariance scaled to an investment horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledCovariance {
    pub matrix: DMatrix<f64>,
    pub horizon_days: u32,
    pub hursts: Vec<f64>,
    /// Spread names used in diagnostics.
    pub labels: Vec<String>,
}

impl RescaledCovariance {
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.hursts.len() {
            return Err(param(format!(
                "{} labels for {} spreads",
                labels.len(),
                self.hursts.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.hursts.len()
    }
}

/// Population covariance (divisor `n`) of daily spread returns.
pub fn covariance_matrix(spreads: &[SpreadSeries]) -> Result<DMatrix<f64>> {
    let Some(first) = spreads.first() else {
        return Err(param("covariance needs at least one spread"));
    };
    if let Some(s) = spreads.iter().find(|s| s.dates() != first.dates()) {
        return Err(Error::Alignment(format!(
            "spread {}/{} is not aligned with {}/{}",
            s.long_symbol(),
            s.short_symbol(),
            first.long_symbol(),
            first.short_symbol()
        )));
    }
    let m = spreads.len();
    let n = first.len() as f64;
    let centered: Vec<Vec<f64>> = spreads
        .iter()
        .map(|s| s.deltas().iter().map(|d| d - s.mean_delta()).collect())
        .collect();
    let mut c = DMatrix::zeros(m, m);
    for l in 0..m {
        for r in l..m {
            let v = centered[l]
                .iter()
                .zip(&centered[r])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n;
            c[(l, r)] = v;
            c[(r, l)] = v;
        }
    }
    Ok(c)
}

/// Scale element `(l, r)` by `n_days^((H_l + H_r) / 2 + 1)`.
///
/// With equal exponents this is `N^(H + 1)`. Mixed exponents can break
/// positive semidefiniteness; that case is logged, not rejected.
pub fn rescale_covariance(
    c: &DMatrix<f64>,
    hursts: &[f64],
    n_days: u32,
) -> Result<RescaledCovariance> {
    let m = hursts.len();
    if c.nrows() != m || c.ncols() != m {
        return Err(param(format!(
            "covariance is {}x{} but {m} Hurst exponents were given",
            c.nrows(),
            c.ncols()
        )));
    }
    if let Some(h) = hursts.iter().find(|h| !(**h > 0.0 && **h < 1.0)) {
        return Err(param(format!("Hurst exponent {h} outside (0, 1)")));
    }
    if n_days < 1 {
        return Err(param("horizon must be at least one day"));
    }
    let n = f64::from(n_days);
    let mut out = DMatrix::zeros(m, m);
    for l in 0..m {
        for r in l..m {
            let v = c[(l, r)] * n.powf((hursts[l] + hursts[r]) / 2.0 + 1.0);
            out[(l, r)] = v;
            out[(r, l)] = v;
        }
    }
    let mixed = hursts.windows(2).any(|w| w[0] != w[1]);
    if mixed && m > 1 {
        let eig = SymmetricEigen::new(out.clone()).eigenvalues;
        let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().copied().fold(0.0, |a: f64, b| a.max(b.abs()));
        if lo < -1e-12 * hi {
            warn!("rescaled covariance is indefinite (smallest eigenvalue {lo:.3e})");
        }
    }
    Ok(RescaledCovariance {
        matrix: out,
        horizon_days: n_days,
        hursts: hursts.to_vec(),
        labels: (0..m).map(|i| format!("spread {i}")).collect(),
    })
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let hi = eig.iter().fold(0.0, |a: f64, b| a.max(b.abs()));
    let lo = eig.iter().fold(f64::INFINITY, |a: f64, b| a.min(b.abs()));
    if lo == 0.0 || !lo.is_finite() {
        f64::INFINITY
    } else {
        hi / lo
    }
}

// the pair with the largest absolute correlation
fn most_collinear(m: &DMatrix<f64>) -> (usize, usize) {
    let n = m.nrows();
    let mut best = (0, n.saturating_sub(1).min(1), f64::NEG_INFINITY);
    for l in 0..n {
        for r in l + 1..n {
            let denom = (m[(l, l)] * m[(r, r)]).sqrt();
            let rho = if denom > 0.0 {
                (m[(l, r)] / denom).abs()
            } else {
                f64::INFINITY
            };
            if rho > best.2 {
                best = (l, r, rho);
            }
        }
    }
    (best.0, best.1)
}

/// `C_R^{-1} · Δ · n_days`.
///
/// A ridge of `RIDGE_LAMBDA · trace / M` is added when the condition number
/// of `C_R` exceeds [`MAX_CONDITION`]; if the regularized matrix still
/// exceeds it the solve fails, naming the most collinear pair.
pub fn solve_weights(
    cr: &RescaledCovariance,
    mean_deltas: &[f64],
    n_days: u32,
) -> Result<Vec<f64>> {
    let m = cr.dim();
    if mean_deltas.len() != m || cr.matrix.nrows() != m {
        return Err(param(format!(
            "{} mean returns for a {m}x{m} covariance",
            mean_deltas.len()
        )));
    }
    let mut a = cr.matrix.clone();
    let mut cond = condition_number(&a);
    if !(cond <= MAX_CONDITION) {
        let ridge = RIDGE_LAMBDA * a.trace() / m as f64;
        for i in 0..m {
            a[(i, i)] += ridge;
        }
        cond = condition_number(&a);
    }
    if !(cond <= MAX_CONDITION) {
        let (l, r) = most_collinear(&cr.matrix);
        return Err(Error::Singular {
            first: cr.labels[l].clone(),
            second: cr.labels[r].clone(),
            condition: cond,
        });
    }
    let rhs = DVector::from_iterator(m, mean_deltas.iter().map(|d| d * f64::from(n_days)));
    let x = a.lu().solve(&rhs).ok_or_else(|| Error::Singular {
        first: cr.labels[0].clone(),
        second: cr.labels[m.min(2) - 1].clone(),
        condition: cond,
    })?;
    Ok(x.iter().copied().collect())
}

/// Leveraged spread weights and their per-asset decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioWeights {
    pub spread_weights: Vec<f64>,
    pub leverage: f64,
    /// `k = leverage / Σ w` over the retained positive raw weights.
    pub scale_k: f64,
    /// Signed notional fraction per symbol; empty until legs are composed.
    pub asset_legs: BTreeMap<String, f64>,
}

impl PortfolioWeights {
    pub fn with_legs(mut self, spreads: &[SpreadSeries]) -> Result<Self> {
        self.asset_legs = compose_legs(&self, spreads)?;
        self.asset_legs.retain(|_, v| *v != 0.0);
        Ok(self)
    }

    /// Sum of absolute asset exposures.
    pub fn gross_exposure(&self) -> f64 {
        self.asset_legs.values().map(|v| v.abs()).sum()
    }
}

/// Clamp negative weights to zero and scale the rest to sum to `leverage`.
pub fn apply_leverage(raw: &[f64], leverage: f64) -> Result<PortfolioWeights> {
    if !(leverage > 0.0 && leverage.is_finite()) {
        return Err(param(format!("leverage must be positive, got {leverage}")));
    }
    let clamped: Vec<f64> = raw
        .iter()
        .map(|w| if *w > 0.0 { *w } else { 0.0 })
        .collect();
    let total: f64 = clamped.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::EmptyPortfolio(
            "no spread has a positive weight".into(),
        ));
    }
    let k = leverage / total;
    Ok(PortfolioWeights {
        spread_weights: clamped.iter().map(|w| w * k).collect(),
        leverage,
        scale_k: k,
        asset_legs: BTreeMap::new(),
    })
}

/// Split each spread weight `w` into `+w / (1 + χ)` on the long symbol and
/// `-w·χ / (1 + χ)` on the short symbol, summing over spreads.
pub fn compose_legs(
    weights: &PortfolioWeights,
    spreads: &[SpreadSeries],
) -> Result<BTreeMap<String, f64>> {
    if weights.spread_weights.len() != spreads.len() {
        return Err(param(format!(
            "{} weights for {} spreads",
            weights.spread_weights.len(),
            spreads.len()
        )));
    }
    let mut legs = BTreeMap::new();
    for (w, s) in weights.spread_weights.iter().zip(spreads) {
        let chi = s.chi();
        *legs.entry(s.long_symbol().to_string()).or_insert(0.0) += w / (1.0 + chi);
        *legs.entry(s.short_symbol().to_string()).or_insert(0.0) -= w * chi / (1.0 + chi);
    }
    Ok(legs)
}

/// Covariance, rescaling, solve, leverage and legs in one pass.
pub fn optimize(
    spreads: &[SpreadSeries],
    hursts: &[f64],
    n_days: u32,
    leverage: f64,
) -> Result<PortfolioWeights> {
    let c = covariance_matrix(spreads)?;
    let labels = spreads
        .iter()
        .map(|s| format!("{}/{}", s.long_symbol(), s.short_symbol()))
        .collect();
    let cr = rescale_covariance(&c, hursts, n_days)?.with_labels(labels)?;
    let means: Vec<f64> = spreads.iter().map(|s| s.mean_delta()).collect();
    let raw = solve_weights(&cr, &means, n_days)?;
    apply_leverage(&raw, leverage)?.with_legs(spreads)
}
