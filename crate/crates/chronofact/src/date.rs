//! Calendar dates on the proleptic Gregorian calendar.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A single calendar day. Round-trips through ISO-8601 `YYYY-MM-DD` text and
/// orders by calendar order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CalendarDate(NaiveDate);

impl CalendarDate {
    pub fn new(year: i32, month: u32, day: u32) -> Result<Self> {
        NaiveDate::from_ymd_opt(year, month, day)
            .map(CalendarDate)
            .ok_or(Error::InvalidDate { year, month, day })
    }

    pub fn year(&self) -> i32 {
        self.0.year()
    }

    pub fn month(&self) -> u32 {
        self.0.month()
    }

    pub fn day(&self) -> u32 {
        self.0.day()
    }

    /// Weekday as 0 = Monday .. 6 = Sunday.
    pub fn weekday(&self) -> u32 {
        self.0.weekday().num_days_from_monday()
    }

    /// Signed day count `self - reference`; negative when `self` is earlier.
    pub fn delta_days(&self, reference: CalendarDate) -> i64 {
        (self.0 - reference.0).num_days()
    }

    /// The date `days` after this one (negative goes back).
    pub fn plus_days(&self, days: i64) -> CalendarDate {
        CalendarDate(self.0 + Duration::days(days))
    }

    pub fn succ(&self) -> CalendarDate {
        self.plus_days(1)
    }

    pub fn pred(&self) -> CalendarDate {
        self.plus_days(-1)
    }
}

impl fmt::Display for CalendarDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%d"))
    }
}

impl FromStr for CalendarDate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(CalendarDate)
            .map_err(|_| Error::UnparsableDate(s.to_string()))
    }
}

impl Serialize for CalendarDate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CalendarDate {
    fn deserialize<D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}
