//! Long-only optimizer weights and the baseline strategies traded through
//! the shared fill engine.
//!
//! ```text
//! cargo run --example baselines
//! ```

use marketgym::backtest::{compare, EquityCurve, MetricsReport};
use marketgym::baselines::{mean_variance_weights, min_variance_weights, run_strategy, Strategy, StrategyConfig};
use marketgym::cli::bundled_data_dir;
use marketgym::data::synthetic::FIXTURE_FILE;
use marketgym::data::{ingest_csv, CsvSchema};
use marketgym::env::CostModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frame = ingest_csv(bundled_data_dir().join(FIXTURE_FILE), &CsvSchema::default())?;
    let tickers: Vec<String> = (0..6).map(|i| format!("T{i:02}")).collect();
    let frame = frame.select_tickers(&tickers)?;

    let close = frame.close();
    let returns: Vec<Vec<f64>> = (frame.len() - 252..frame.len())
        .map(|t| close.row(t).iter().zip(close.row(t - 1)).map(|(p, q)| p / q - 1.0).collect())
        .collect();
    let fmt = |w: &[f64]| w.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    println!("min-variance weights:        {}", fmt(min_variance_weights(&returns)?.as_slice()));
    for lambda in [1.0, 10.0, 1e4] {
        println!("mean-variance, lambda {lambda:>6}: {}", fmt(mean_variance_weights(&returns, lambda)?.as_slice()));
    }

    let costs = CostModel { per_share_rate: 0.001, ..CostModel::zero() };
    let strategies = [
        StrategyConfig::new(Strategy::BuyAndHold),
        StrategyConfig::new(Strategy::EqualWeighted).with_rebalance(21),
        StrategyConfig::new(Strategy::Momentum { lookback: 60, top_k: None }).with_rebalance(21),
        StrategyConfig::new(Strategy::MinVariance { window: 120 }).with_rebalance(21),
        StrategyConfig::new(Strategy::MeanVariance { risk_aversion: 10.0, window: 120 }).with_rebalance(21),
    ];
    let mut reports = Vec::new();
    for s in &strategies {
        // Start every strategy at the same row so the columns are comparable.
        let rows = 120..frame.len();
        let trace = marketgym::baselines::run_strategy_window(&frame, rows, s, 100_000.0, &costs)?;
        let curve = EquityCurve::from_trace(&trace, frame.granularity().periods_per_year())?;
        reports.push(MetricsReport::from_curve(s.label(), &curve, None));
    }
    print!("{}", compare(&reports)?.render_text());

    // `run_strategy` starts as soon as the estimation window is filled.
    let trace = run_strategy(&frame, &strategies[0], 100_000.0, &costs)?;
    println!("buy and hold from the first bar: {} trace rows", trace.rows().len());
    Ok(())
}
