use chrono::{DateTime, DurationRound, TimeDelta, Utc};

use super::{DataError, Granularity, MarketFrame, OhlcvPanels, Panel, Result};

fn bucket_start(ts: &DateTime<Utc>, target: Granularity) -> DateTime<Utc> {
    let unit = match target {
        Granularity::Minute => TimeDelta::minutes(1),
        Granularity::Hourly => TimeDelta::hours(1),
        Granularity::Daily => TimeDelta::days(1),
    };
    ts.duration_trunc(unit).expect("timestamp within chrono range")
}

/// Aggregates bars into coarser buckets: first open, max high, min low, last
/// close, summed volume. Buckets are stamped with their UTC start. Indicators
/// are dropped and must be recomputed on the result.
pub fn resample(frame: &MarketFrame, target: Granularity) -> Result<MarketFrame> {
    let source = frame.granularity();
    if target < source {
        return Err(DataError::CannotUpsample { from: source, to: target });
    }
    let n = frame.n_assets();
    let mut stamps: Vec<DateTime<Utc>> = Vec::new();
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for (row, ts) in frame.timestamps().iter().enumerate() {
        let key = bucket_start(ts, target);
        if stamps.last() == Some(&key) {
            groups.last_mut().expect("group exists").1 = row + 1;
        } else {
            stamps.push(key);
            groups.push((row, row + 1));
        }
    }
    let t = stamps.len();
    let mut open = Panel::zeros(t, n);
    let mut high = Panel::zeros(t, n);
    let mut low = Panel::zeros(t, n);
    let mut close = Panel::zeros(t, n);
    let mut volume = Panel::zeros(t, n);
    for (bucket, &(start, end)) in groups.iter().enumerate() {
        for col in 0..n {
            let mut hi = f64::NEG_INFINITY;
            let mut lo = f64::INFINITY;
            let mut vol = 0.0;
            for row in start..end {
                hi = hi.max(frame.high().get(row, col));
                lo = lo.min(frame.low().get(row, col));
                vol += frame.volume().get(row, col);
            }
            open.set(bucket, col, frame.open().get(start, col));
            close.set(bucket, col, frame.close().get(end - 1, col));
            high.set(bucket, col, hi);
            low.set(bucket, col, lo);
            volume.set(bucket, col, vol);
        }
    }
    MarketFrame::new(
        frame.tickers().to_vec(),
        stamps,
        target,
        OhlcvPanels { open, high, low, close, volume },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    fn minute_frame(prices: &[f64]) -> MarketFrame {
        let start = Utc.with_ymd_and_hms(2021, 6, 1, 13, 30, 0).unwrap();
        let stamps = (0..prices.len()).map(|i| start + Duration::minutes(i as i64)).collect();
        let close = Panel::from_vec(prices.len(), 1, prices.to_vec());
        let mut frame = MarketFrame::from_closes(vec!["X".into()], stamps, Granularity::Minute, close).unwrap();
        frame.volume = Panel::from_vec(prices.len(), 1, vec![1.0; prices.len()]);
        frame
    }

    #[test]
    fn full_session_collapses_to_one_daily_bar() {
        let prices: Vec<f64> = (0..390).map(|i| 100.0 + ((i * 37) % 11) as f64).collect();
        let daily = resample(&minute_frame(&prices), Granularity::Daily).unwrap();
        assert_eq!(daily.len(), 1);
        assert_eq!(daily.high().get(0, 0), 110.0);
        assert_eq!(daily.low().get(0, 0), 100.0);
        assert_eq!(daily.open().get(0, 0), prices[0]);
        assert_eq!(daily.close().get(0, 0), prices[389]);
        assert_eq!(daily.volume().get(0, 0), 390.0);
    }

    #[test]
    fn constant_prices() {
        let daily = resample(&minute_frame(&[7.0; 60]), Granularity::Daily).unwrap();
        assert_eq!(daily.open().get(0, 0), daily.close().get(0, 0));
        assert_eq!(daily.volume().get(0, 0), 60.0);
    }

    #[test]
    fn upsampling_rejected() {
        let daily = resample(&minute_frame(&[7.0; 5]), Granularity::Daily).unwrap();
        assert!(matches!(
            resample(&daily, Granularity::Hourly),
            Err(DataError::CannotUpsample { .. })
        ));
    }
}
