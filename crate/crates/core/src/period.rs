use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

/// Inclusive range of UTC calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Period {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Period {
    /// Returns `None` when `end` precedes `start`.
    pub fn new(start: NaiveDate, end: NaiveDate) -> Option<Self> {
        (start <= end).then_some(Self { start, end })
    }

    pub fn days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        self.start <= day && day <= self.end
    }

    /// Day offset of `day` from `start`; negative before the period.
    pub fn offset(&self, day: NaiveDate) -> i64 {
        (day - self.start).num_days()
    }

    pub fn day(&self, offset: usize) -> NaiveDate {
        self.start + Duration::days(offset as i64)
    }

    /// The same end date with `days` of extra history in front.
    pub fn with_lookback(&self, days: u32) -> Self {
        Self {
            start: self.start - Duration::days(days as i64),
            end: self.end,
        }
    }

    pub fn iter_days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.days()).map(move |i| self.day(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn day_arithmetic() {
        let p = Period::new(d("2021-01-01"), d("2021-12-31")).unwrap();
        assert_eq!(p.days(), 365);
        assert_eq!(p.day(90), d("2021-04-01"));
        assert_eq!(p.offset(d("2020-12-31")), -1);
        assert_eq!(p.with_lookback(89).start, d("2020-10-04"));
        assert!(Period::new(d("2021-01-02"), d("2021-01-01")).is_none());
    }
}
