//! Calendar arithmetic on fractional days since the epoch 2000-01-01T00:00Z.
//!
//! Timestamps are carried through the analysis as fractional days since a
//! fixed epoch; harmonic terms and the year-aware time difference need the
//! day of year and calendar year, which are derived here with proleptic
//! Gregorian rules.

#[allow(unused_imports)]
use crate::float::FloatExt as _;

/// Days from 1970-01-01 to 2000-01-01.
const EPOCH_UNIX_DAYS: i64 = 10957;

/// Civil date from a day count relative to 1970-01-01 (Gregorian).
fn civil_from_days(z: i64) -> (i32, u32, u32) {
    let z = z + 719468;
    let era = if z >= 0 { z } else { z - 146096 } / 146097;
    let doe = (z - era * 146097) as u64;
    let yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    let y = yoe as i64 + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    ((y + if m <= 2 { 1 } else { 0 }) as i32, m, d)
}

/// Day count relative to 1970-01-01 for a civil date.
fn days_from_civil(y: i32, m: u32, d: u32) -> i64 {
    let y = y as i64 - if m <= 2 { 1 } else { 0 };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = (y - era * 400) as u64;
    let mp = if m > 2 { m - 3 } else { m + 9 } as u64;
    let doy = (153 * mp + 2) / 5 + d as u64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146097 + doe as i64 - 719468
}

pub fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

/// Length of a calendar year in days (365 or 366).
pub fn days_in_year(year: i32) -> f64 {
    if is_leap_year(year) {
        366.0
    } else {
        365.0
    }
}

/// Calendar year and fractional day of year (0.0 = Jan 1 00:00) for a
/// timestamp in fractional days since 2000-01-01T00:00Z.
pub fn year_and_yearday(epoch_days: f64) -> (i32, f64) {
    let whole = epoch_days.floor();
    let frac = epoch_days - whole;
    let unix_days = whole as i64 + EPOCH_UNIX_DAYS;
    let (year, _, _) = civil_from_days(unix_days);
    let year_start = days_from_civil(year, 1, 1);
    (year, (unix_days - year_start) as f64 + frac)
}

/// Fractional day of year only; see [`year_and_yearday`].
pub fn yearday(epoch_days: f64) -> f64 {
    year_and_yearday(epoch_days).1
}

/// Month (1–12) of a timestamp in fractional days since the epoch.
pub fn month(epoch_days: f64) -> u32 {
    let whole = epoch_days.floor() as i64 + EPOCH_UNIX_DAYS;
    civil_from_days(whole).1
}

/// Fractional days since 2000-01-01T00:00Z for a civil date and time of day.
pub fn epoch_days_from_civil(year: i32, month: u32, day: u32, day_frac: f64) -> f64 {
    (days_from_civil(year, month, day) - EPOCH_UNIX_DAYS) as f64 + day_frac
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_is_jan_1_2000() {
        let (y, yd) = year_and_yearday(0.0);
        assert_eq!(y, 2000);
        assert_eq!(yd, 0.0);
        assert_eq!(month(0.0), 1);
    }

    #[test]
    fn leap_years() {
        assert!(is_leap_year(2000));
        assert!(is_leap_year(2016));
        assert!(!is_leap_year(1900));
        assert!(!is_leap_year(2017));
        assert_eq!(days_in_year(2016), 366.0);
        assert_eq!(days_in_year(2015), 365.0);
    }

    #[test]
    fn roundtrip_and_yearday() {
        // 2017-08-15 12:00 UTC
        let t = epoch_days_from_civil(2017, 8, 15, 0.5);
        let (y, yd) = year_and_yearday(t);
        assert_eq!(y, 2017);
        // Jan(31)+Feb(28)+Mar(31)+Apr(30)+May(31)+Jun(30)+Jul(31) = 212 days before Aug 1.
        assert_eq!(yd, 212.0 + 14.0 + 0.5);
        assert_eq!(month(t), 8);
    }

    #[test]
    fn new_year_boundary() {
        let dec31 = epoch_days_from_civil(2016, 12, 31, 0.75);
        let jan1 = epoch_days_from_civil(2017, 1, 1, 0.25);
        assert_eq!(jan1 - dec31, 0.5);
        assert_eq!(year_and_yearday(dec31).0, 2016);
        assert_eq!(year_and_yearday(jan1).0, 2017);
        assert_eq!(year_and_yearday(jan1).1, 0.25);
    }
}
