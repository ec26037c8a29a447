use fractal_ls_core::backtest::{run_walk_forward, BacktestConfig};
use fractal_ls_core::fbm::{estimate_hurst, generate_fbm};
use fractal_ls_core::optimizer::optimize;
use fractal_ls_core::selection::{build_generating_matrix, select_spreads, SelectionConfig};
use fractal_ls_core::spreads::{compute_returns, ReturnSeries};
use fractal_ls_core::synth::{generate_universe, SynthConfig, SyntheticUniverse};
use proptest::prelude::*;

fn universe(seed: u64) -> SyntheticUniverse {
    generate_universe(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn first_block(u: &SyntheticUniverse, days: usize) -> Vec<ReturnSeries> {
    u.assets
        .iter()
        .map(|p| compute_returns(&p.slice(0..days).unwrap(), 0).unwrap())
        .collect()
}

#[test]
fn selection_on_one_block_finds_planted_pairs() {
    let u = universe(3);
    let cfg = SelectionConfig::default();
    let candidates = build_generating_matrix(&first_block(&u, 126), &cfg).unwrap();
    let n = u.assets.len();
    assert!(candidates.len() <= n * (n - 1) / 2);
    let picked = select_spreads(&candidates, &cfg);
    assert!(!picked.is_empty());
    let planted = picked
        .iter()
        .filter(|c| u.is_planted(c.spread.long_symbol(), c.spread.short_symbol()))
        .count();
    assert!(
        planted >= 2,
        "only {planted} planted pairs among {}",
        picked.len()
    );
}

#[test]
fn optimized_legs_carry_the_leverage() {
    let u = universe(5);
    let cfg = SelectionConfig::default();
    let candidates = build_generating_matrix(&first_block(&u, 126), &cfg).unwrap();
    let picked = select_spreads(&candidates, &cfg);
    let spreads: Vec<_> = picked.iter().map(|c| c.spread.clone()).collect();
    let hursts: Vec<f64> = picked.iter().map(|c| c.hurst.h).collect();
    let w = optimize(&spreads, &hursts, 126, 2.0).unwrap();
    assert!((w.spread_weights.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    if spreads.iter().all(|s| s.chi() > 0.0) {
        assert!((w.gross_exposure() - 2.0).abs() < 1e-12);
    }
}

#[test]
fn walk_forward_on_synthetic_universe() {
    let u = universe(11);
    let cfg = BacktestConfig {
        benchmark_symbol: u.benchmark.symbol().to_string(),
        ..BacktestConfig::default()
    };
    let report = run_walk_forward(&u.assets, &u.benchmark, &cfg).unwrap();
    assert_eq!(report.windows.len(), 10);
    assert_eq!(report.single_returns.len(), 10);
    assert!(report.max_drawdown >= 0.0 && report.max_drawdown < 1.0);
    for pair in report.windows.windows(2) {
        assert_eq!(pair[0].test_end, pair[1].train_end);
    }
    for w in &report.windows {
        assert_eq!(w.dates.len(), cfg.test_days + 1);
        assert!(w.daily_equity.iter().all(|e| *e > 0.0));
    }
    let again = run_walk_forward(&u.assets, &u.benchmark, &cfg).unwrap();
    assert_eq!(
        report.cumulative_return.to_bits(),
        again.cumulative_return.to_bits()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimate_stays_in_range(h in 0.1f64..0.9, seed in 0u64..10_000, n in 64usize..600) {
        let est = estimate_hurst(&generate_fbm(h, n, 1.0, seed).unwrap()).unwrap();
        prop_assert!(est.h > 0.0 && est.h < 1.0);
        prop_assert!(est.h_err.is_finite() && est.h_err >= 0.0);
    }
}
