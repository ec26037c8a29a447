//! Plain-Rust back end of the browser demo.

use fractal_ls_core::fbm::{estimate_hurst, generate_fbm, minimal_cover, Series};
use fractal_ls_core::selection::fractal_kelly_weight;
use fractal_ls_core::stats::weighted_linear_fit;

pub const MAX_POINTS: usize = 1 << 16;

/// Fractional Brownian path with unit step volatility.
pub fn fbm_path(h: f64, n: usize, seed: u64) -> Result<Vec<f64>, String> {
    if n > MAX_POINTS {
        return Err(format!("at most {MAX_POINTS} points"));
    }
    generate_fbm(h, n, 1.0, seed)
        .map(|s| s.values().to_vec())
        .map_err(|e| e.to_string())
}

/// Hurst estimate together with the points and line of its log-log fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverFit {
    pub h: f64,
    pub h_err: f64,
    pub degraded: bool,
    pub log_windows: Vec<f64>,
    pub log_amplitudes: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

pub fn cover_fit(values: &[f64]) -> Result<CoverFit, String> {
    let est = estimate_hurst(&Series::new(values.to_vec()).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let cover = minimal_cover(values);
    let xs: Vec<f64> = cover.iter().map(|p| (p.window as f64).ln()).collect();
    let ys: Vec<f64> = cover.iter().map(|p| p.amplitude.ln()).collect();
    let ws: Vec<f64> = cover.iter().map(|p| (p.windows as f64).powi(2)).collect();
    let fit = weighted_linear_fit(&xs, &ys, &ws).ok_or("log-log fit failed")?;
    Ok(CoverFit {
        h: est.h,
        h_err: est.h_err,
        degraded: est.degraded,
        log_windows: xs,
        log_amplitudes: ys,
        slope: fit.slope,
        intercept: fit.intercept,
    })
}

/// Fractal Kelly weight for horizons `1..=max_days`.
pub fn kelly_curve(mean: f64, theta: f64, h: f64, max_days: u32) -> Result<Vec<f64>, String> {
    (1..=max_days)
        .map(|n| fractal_kelly_weight(mean, theta, h, n).map_err(|e| e.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_is_reproducible() {
        let a = fbm_path(0.4, 512, 9).unwrap();
        assert_eq!(a.len(), 512);
        assert_eq!(a[0], 0.0);
        assert_eq!(a, fbm_path(0.4, 512, 9).unwrap());
        assert!(fbm_path(1.2, 512, 9).is_err());
        assert!(fbm_path(0.5, MAX_POINTS + 1, 0).is_err());
    }

    #[test]
    fn fit_line_matches_estimate() {
        let path = fbm_path(0.7, 2048, 4).unwrap();
        let fit = cover_fit(&path).unwrap();
        assert!((fit.slope + 1.0 - fit.h).abs() < 1e-12);
        assert!((fit.h - 0.7).abs() < 0.1);
        assert_eq!(fit.log_windows.len(), fit.log_amplitudes.len());
        assert!(cover_fit(&path[..10]).is_err());
    }

    #[test]
    fn kelly_curve_shapes() {
        let flat = kelly_curve(0.001, 0.01, 0.5, 50).unwrap();
        assert!(flat.iter().all(|w| (w - 10.0).abs() < 1e-9));
        let rising = kelly_curve(0.001, 0.01, 0.3, 50).unwrap();
        assert!(rising.windows(2).all(|p| p[1] > p[0]));
        let falling = kelly_curve(0.001, 0.01, 0.7, 50).unwrap();
        assert!(falling.windows(2).all(|p| p[1] < p[0]));
        assert!(kelly_curve(0.001, 0.0, 0.5, 5).is_err());
    }
}
