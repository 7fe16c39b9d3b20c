//! Aggregates hourly bars to daily ones, then cuts the daily frame into a
//! fixed split and into walk-forward windows.
//!
//! ```text
//! cargo run --example resample_and_split
//! ```

use chrono::{Duration, TimeZone, Utc};
use marketgym::data::{resample, rolling_windows, split, Granularity, MarketFrame, Panel, SplitSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Sixty days of seven hourly bars for two tickers.
    let t0 = Utc.with_ymd_and_hms(2021, 3, 1, 9, 0, 0).unwrap();
    let mut stamps = Vec::new();
    let mut closes = Vec::new();
    for day in 0..60 {
        for hour in 0..7 {
            stamps.push(t0 + Duration::days(day) + Duration::hours(hour));
            let x = (day * 7 + hour) as f64;
            closes.extend([100.0 + (x / 9.0).sin() * 5.0, 50.0 + x * 0.05]);
        }
    }
    let rows = stamps.len();
    let hourly = MarketFrame::from_closes(
        vec!["AAA".into(), "BBB".into()],
        stamps,
        Granularity::Hourly,
        Panel::from_vec(rows, 2, closes),
    )?;
    let daily = resample(&hourly, Granularity::Daily)?;
    println!("{} hourly bars -> {} daily bars", hourly.len(), daily.len());
    println!("first daily bar of AAA: {:?}", daily.bar(0, 0));

    let spec = SplitSpec::from_rows(&daily, 0, 40, 50, 60)?;
    let (train, validation, test) = split(&daily, &spec)?;
    println!("fixed split: {} / {} / {} bars", train.len(), validation.len(), test.len());

    for (i, w) in rolling_windows(&daily, 30, 10, 10, 5)?.iter().enumerate() {
        println!(
            "window {i}: train from {}, test {} .. {}",
            w.train().start.date_naive(),
            w.test().start.date_naive(),
            w.test().end.date_naive()
        );
    }
    Ok(())
}
