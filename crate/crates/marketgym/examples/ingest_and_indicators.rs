//! Ingests the bundled CSV, restricts it to three tickers and attaches MACD
//! and RSI.
//!
//! ```text
//! cargo run --example ingest_and_indicators
//! ```

use marketgym::cli::bundled_data_dir;
use marketgym::data::synthetic::FIXTURE_FILE;
use marketgym::data::{compute_macd, compute_rsi, ingest_csv, CsvSchema, MacdParams, MACD, RSI};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frame = ingest_csv(bundled_data_dir().join(FIXTURE_FILE), &CsvSchema::default())?;
    println!("{} tickers x {} bars, {:?}", frame.n_assets(), frame.len(), frame.granularity());

    let tickers: Vec<String> = ["T00", "T01", "T02"].map(String::from).to_vec();
    let frame = frame.select_tickers(&tickers)?;
    let frame = compute_macd(frame, MacdParams::default())?;
    let frame = compute_rsi(frame, 14)?;

    let (macd, rsi) = (frame.indicator(MACD).unwrap(), frame.indicator(RSI).unwrap());
    println!("{:<12} {:>6} {:>10} {:>9} {:>7}", "date", "ticker", "close", "macd", "rsi");
    for row in (frame.len() - 3)..frame.len() {
        for (col, ticker) in frame.tickers().iter().enumerate() {
            println!(
                "{:<12} {:>6} {:>10.2} {:>9.3} {:>7.2}",
                frame.timestamps()[row].date_naive(),
                ticker,
                frame.close().get(row, col),
                macd.get(row, col),
                rsi.get(row, col)
            );
        }
    }
    Ok(())
}
