use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{DataError, MarketFrame, Result};

/// Half-open instant range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRange {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl TimeRange {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, ts: &DateTime<Utc>) -> bool {
        self.start <= *ts && *ts < self.end
    }
}

/// Chronological train / validation / test ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSplit", into = "RawSplit")]
pub struct SplitSpec {
    train: TimeRange,
    validation: TimeRange,
    test: TimeRange,
}

#[derive(Serialize, Deserialize)]
struct RawSplit {
    train: TimeRange,
    validation: TimeRange,
    test: TimeRange,
}

impl TryFrom<RawSplit> for SplitSpec {
    type Error = DataError;
    fn try_from(raw: RawSplit) -> Result<Self> {
        SplitSpec::new(raw.train, raw.validation, raw.test)
    }
}

impl From<SplitSpec> for RawSplit {
    fn from(s: SplitSpec) -> Self {
        RawSplit { train: s.train, validation: s.validation, test: s.test }
    }
}

impl SplitSpec {
    /// Rejects empty, overlapping, or out-of-order ranges.
    pub fn new(train: TimeRange, validation: TimeRange, test: TimeRange) -> Result<Self> {
        for (name, r) in [("train", &train), ("validation", &validation), ("test", &test)] {
            if r.start >= r.end {
                return Err(DataError::InvalidSplit(format!("{name} range is empty")));
            }
        }
        if train.end > validation.start {
            return Err(DataError::InvalidSplit("train overlaps or follows validation".into()));
        }
        if validation.end > test.start {
            return Err(DataError::InvalidSplit("validation overlaps or follows test".into()));
        }
        Ok(Self { train, validation, test })
    }

    /// Split by row positions `[a, b)`, `[b, c)`, `[c, d)` of `frame`.
    pub fn from_rows(frame: &MarketFrame, a: usize, b: usize, c: usize, d: usize) -> Result<Self> {
        if !(a < b && b < c && c < d && d <= frame.len()) {
            return Err(DataError::InvalidSplit(format!(
                "row bounds {a} < {b} < {c} < {d} <= {} violated",
                frame.len()
            )));
        }
        Self::new(
            frame.range_for_rows(a, b),
            frame.range_for_rows(b, c),
            frame.range_for_rows(c, d),
        )
    }

    pub fn train(&self) -> TimeRange {
        self.train
    }

    pub fn validation(&self) -> TimeRange {
        self.validation
    }

    pub fn test(&self) -> TimeRange {
        self.test
    }
}

fn select(frame: &MarketFrame, range: TimeRange, which: &'static str) -> Result<MarketFrame> {
    let start = frame.lower_bound(range.start);
    let end = frame.lower_bound(range.end);
    if start >= end {
        return Err(DataError::EmptySplit(which));
    }
    frame.slice(start, end)
}

/// Cuts `frame` into train, validation and test frames.
pub fn split(frame: &MarketFrame, spec: &SplitSpec) -> Result<(MarketFrame, MarketFrame, MarketFrame)> {
    Ok((
        select(frame, spec.train, "train")?,
        select(frame, spec.validation, "validation")?,
        select(frame, spec.test, "test")?,
    ))
}

/// Walk-forward windows of contiguous train, validation and test segments,
/// advancing by `stride` rows. A trailing partial window is dropped.
pub fn rolling_windows(
    frame: &MarketFrame,
    train_len: usize,
    val_len: usize,
    test_len: usize,
    stride: usize,
) -> Result<Vec<SplitSpec>> {
    if stride == 0 || train_len == 0 || val_len == 0 || test_len == 0 {
        return Err(DataError::InvalidSplit("window lengths and stride must be positive".into()));
    }
    let total = train_len + val_len + test_len;
    if total > frame.len() {
        return Err(DataError::WindowTooLarge { required: total, available: frame.len() });
    }
    (0..=frame.len() - total)
        .step_by(stride)
        .map(|s| {
            SplitSpec::from_rows(
                frame,
                s,
                s + train_len,
                s + train_len + val_len,
                s + total,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Granularity, Panel};
    use chrono::{Duration, TimeZone};

    fn frame(t: usize) -> MarketFrame {
        let start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let stamps = (0..t).map(|i| start + Duration::days(i as i64)).collect();
        let close = Panel::from_vec(t, 1, (0..t).map(|i| 1.0 + i as f64).collect());
        MarketFrame::from_closes(vec!["A".into()], stamps, Granularity::Daily, close).unwrap()
    }

    #[test]
    fn row_split_counts() {
        let f = frame(100);
        let spec = SplitSpec::from_rows(&f, 0, 60, 80, 100).unwrap();
        let (a, b, c) = split(&f, &spec).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (60, 20, 20));
    }

    #[test]
    fn overlapping_ranges_rejected() {
        let f = frame(10);
        let r = |a, b| f.range_for_rows(a, b);
        assert!(SplitSpec::new(r(0, 5), r(4, 7), r(7, 10)).is_err());
        assert!(SplitSpec::new(r(5, 7), r(0, 5), r(7, 10)).is_err());
    }

    #[test]
    fn empty_split_reported() {
        let f = frame(10);
        let later = f.timestamps()[9] + Duration::days(5);
        let spec = SplitSpec::new(
            f.range_for_rows(0, 5),
            f.range_for_rows(5, 10),
            TimeRange::new(later, later + Duration::days(1)),
        )
        .unwrap();
        assert!(matches!(split(&f, &spec), Err(DataError::EmptySplit("test"))));
    }

    #[test]
    fn window_count() {
        assert_eq!(rolling_windows(&frame(10), 4, 2, 2, 2).unwrap().len(), 2);
        assert!(matches!(
            rolling_windows(&frame(7), 4, 2, 2, 1),
            Err(DataError::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn stride_equal_to_test_tiles_test_segments() {
        let f = frame(40);
        let windows = rolling_windows(&f, 10, 5, 5, 5).unwrap();
        for w in windows.windows(2) {
            assert_eq!(w[0].test().end, w[1].test().start);
        }
    }
}
