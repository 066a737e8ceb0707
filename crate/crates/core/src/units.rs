//! Day/hour conversion. Everything crossing the I/O boundary is in days;
//! the reactor integrates in hours.

pub const HOURS_PER_DAY: f64 = 24.0;

#[inline]
pub fn days_to_hours(days: f64) -> f64 {
    days * HOURS_PER_DAY
}

#[inline]
pub fn hours_to_days(hours: f64) -> f64 {
    hours / HOURS_PER_DAY
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_period_in_hours() {
        assert!((days_to_hours(0.001) - 0.024).abs() < 1e-15);
        assert_eq!(hours_to_days(days_to_hours(3.5)), 3.5);
    }
}
