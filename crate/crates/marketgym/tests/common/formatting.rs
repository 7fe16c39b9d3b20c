//! Comparison tables rendered from published metric values, checked
//! against golden files.

use marketgym::backtest::{compare, MetricsReport, REPORT_SCHEMA_VERSION};

use super::{ensure, Outcome};

pub const GOLDEN_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden");

/// A report with injected values: (name, initial, final, return, std, Sharpe, drawdown).
pub fn fixture(name: &str, initial: f64, last: f64, ret: f64, std: f64, sharpe: f64, dd: f64) -> MetricsReport {
    MetricsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        name: name.to_string(),
        start: "2019-01-01T00:00:00Z".to_string(),
        end: "2020-09-23T00:00:00Z".to_string(),
        seed: None,
        periods: 437,
        periods_per_year: 252.0,
        initial_value: initial,
        final_value: last,
        annualized_return: ret,
        annualized_std: Some(std),
        sharpe: Some(sharpe),
        max_drawdown: dd,
    }
}

/// Single-stock results: six PPO-traded tickers and the market index.
pub fn single_stock_reports() -> Vec<MetricsReport> {
    let rows = [
        ("SPY", 127_044.0, 0.1489, 0.0963, 1.49, 0.2093),
        ("QQQ", 163_647.0, 0.3233, 0.2751, 1.16, 0.2826),
        ("GOOGL", 174_825.0, 0.3740, 0.3341, 1.12, 0.2776),
        ("AMZN", 192_031.0, 0.4494, 0.2962, 1.40, 0.2113),
        ("AAPL", 173_063.0, 0.3688, 0.2584, 1.35, 0.2247),
        ("MSFT", 172_797.0, 0.3649, 0.3341, 1.10, 0.2811),
        ("S&P 500", 133_402.0, 0.1781, 0.2700, 0.74, 0.3392),
    ];
    rows.iter().map(|(n, v, r, s, sh, dd)| fixture(n, 100_000.0, *v, *r, *s, *sh, *dd)).collect()
}

/// Multi-stock results: TD3, DDPG, min-variance and the DJIA.
pub fn multi_stock_reports() -> Vec<MetricsReport> {
    let rows = [
        ("TD3", 1_403_337.0, 0.2140, 0.1460, 1.38, 0.1152),
        ("DDPG", 1_396_607.0, 0.2034, 0.1589, 1.28, 0.1372),
        ("Min-Var.", 1_171_120.0, 0.0838, 0.2621, 0.44, 0.3434),
        ("DJIA", 1_185_260.0, 0.1061, 0.2863, 0.48, 0.3701),
    ];
    rows.iter().map(|(n, v, r, s, sh, dd)| fixture(n, 1_000_000.0, *v, *r, *s, *sh, *dd)).collect()
}

fn golden(name: &str) -> Result<String, String> {
    std::fs::read_to_string(format!("{GOLDEN_DIR}/{name}")).map_err(|e| format!("golden {name}: {e}"))
}

pub fn check_table(stem: &str, reports: &[MetricsReport]) -> Result<(), String> {
    let table = compare(reports).map_err(|e| e.to_string())?;
    let text = table.render_text();
    ensure(text == golden(&format!("{stem}.txt"))?, || format!("{stem}.txt mismatch:\n{text}"))?;
    let csv = table.render_csv().map_err(|e| e.to_string())?;
    ensure(csv == golden(&format!("{stem}.csv"))?, || format!("{stem}.csv mismatch:\n{csv}"))
}

pub fn criterion() -> Outcome {
    check_table("single_stock", &single_stock_reports())?;
    check_table("multi_stock", &multi_stock_reports())?;
    let text = compare(&multi_stock_reports()).map_err(|e| e.to_string())?.render_text();
    let spy = compare(&single_stock_reports()[..1]).map_err(|e| e.to_string())?.render_text();
    for needle in ["127,044", "14.89%"] {
        ensure(spy.contains(needle), || format!("single-column table lacks {needle}"))?;
    }
    ensure(text.contains("1.38") && text.contains("1,403,337"), || "multi-stock table lacks TD3 values".into())?;
    Ok("single-stock and multi-stock tables match golden text and CSV".into())
}
