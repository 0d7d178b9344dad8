//! Calendar-month stamps for monthly financial series.
//!
//! Dates in this crate are year-month pairs: no day component, no time
//! zones. Daily observations are identified by the month they fall in.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// A calendar month, ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    /// 1-based month, 1..=12.
    pub month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Self {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        Self { year, month }
    }

    /// The month immediately following this one.
    pub fn next(self) -> Self {
        if self.month == 12 {
            Self { year: self.year + 1, month: 1 }
        } else {
            Self { year: self.year, month: self.month + 1 }
        }
    }

    /// Signed number of months from `earlier` to `self`.
    pub fn months_since(self, earlier: Self) -> i64 {
        (self.year as i64 - earlier.year as i64) * 12 + self.month as i64 - earlier.month as i64
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid date `{0}`: expected YYYY-MM or YYYY-MM-DD")]
pub struct DateParseError(pub String);

impl FromStr for YearMonth {
    type Err = DateParseError;

    /// Accepts `YYYY-MM` or `YYYY-MM-DD`; a day component is ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || DateParseError(s.to_string());
        let mut parts = s.trim().splitn(3, '-');
        let year: i32 = parts.next().ok_or_else(err)?.parse().map_err(|_| err())?;
        let month: u8 = parts.next().ok_or_else(err)?.parse().map_err(|_| err())?;
        if let Some(day) = parts.next() {
            let d: u8 = day.parse().map_err(|_| err())?;
            if !(1..=31).contains(&d) {
                return Err(err());
            }
        }
        if !(1..=12).contains(&month) {
            return Err(err());
        }
        Ok(YearMonth { year, month })
    }
}

/// Checks that a date sequence is strictly increasing with no skipped
/// months; returns the index of the first offending entry.
pub fn first_gap(dates: &[YearMonth]) -> Option<usize> {
    dates
        .windows(2)
        .position(|w| w[1] != w[0].next())
        .map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_forms() {
        let a: YearMonth = "1990-01".parse().unwrap();
        let b: YearMonth = "1990-01-31".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a, YearMonth::new(1990, 1));
    }

    #[test]
    fn rejects_bad_input() {
        assert!("1990-13".parse::<YearMonth>().is_err());
        assert!("1990".parse::<YearMonth>().is_err());
        assert!("199O-01".parse::<YearMonth>().is_err());
    }

    #[test]
    fn month_arithmetic() {
        let d = YearMonth::new(1999, 12);
        assert_eq!(d.next(), YearMonth::new(2000, 1));
        assert_eq!(YearMonth::new(2000, 3).months_since(d), 3);
    }

    #[test]
    fn gap_detection() {
        let ok = vec![
            YearMonth::new(2020, 11),
            YearMonth::new(2020, 12),
            YearMonth::new(2021, 1),
        ];
        assert_eq!(first_gap(&ok), None);
        let dup = vec![YearMonth::new(2020, 11), YearMonth::new(2020, 11)];
        assert_eq!(first_gap(&dup), Some(1));
        let skip = vec![YearMonth::new(2020, 11), YearMonth::new(2021, 1)];
        assert_eq!(first_gap(&skip), Some(1));
    }

    #[test]
    fn display_round_trips() {
        let d = YearMonth::new(1990, 7);
        assert_eq!(d.to_string(), "1990-07");
        assert_eq!(d.to_string().parse::<YearMonth>().unwrap(), d);
    }
}
