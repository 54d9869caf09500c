use std::io::Write;

use chrono::Duration;
use serde::Serialize;

use crate::fixed::Fixed;
use crate::model::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpreadPoint {
    pub t: Timestamp,
    /// `p_yes(a) − p_yes(b)`.
    pub diff: Fixed,
    pub roll_min: Fixed,
    pub roll_max: Fixed,
    /// Smallest `|diff|` over the trailing persistence window, signed, or zero
    /// when the sign flipped or the window is not yet covered.
    pub persistent: Fixed,
}

/// Rolling min/max of the YES price difference between two equivalent
/// markets over a trailing `window`, with a persistence filter over `persist`.
/// Input is the joined `(t, p_a, p_b)` sequence, ascending.
pub fn rolling_spread(joined: &[(Timestamp, Fixed, Fixed)], window: Duration, persist: Duration) -> Vec<SpreadPoint> {
    let diffs: Vec<(Timestamp, Fixed)> = joined.iter().map(|(t, a, b)| (*t, *a - *b)).collect();
    let first = diffs.first().map(|d| d.0);
    diffs
        .iter()
        .enumerate()
        .map(|(i, &(t, diff))| {
            let trailing = |span: Duration| diffs[..=i].iter().rev().take_while(move |(s, _)| t - *s < span).map(|d| d.1);
            let roll_min = trailing(window).min().expect("contains self");
            let roll_max = trailing(window).max().expect("contains self");
            // Step function: the value at the window's left edge is the last
            // sample at or before it.
            let edge = t - persist;
            let covered = first.is_some_and(|f| f <= edge);
            let mut held: Vec<Fixed> = trailing(persist).collect();
            if let Some(prior) = diffs[..=i].iter().rev().find(|(s, _)| *s <= edge) {
                held.push(prior.1);
            }
            let same_sign = held.iter().all(|d| d.is_positive()) || held.iter().all(|d| d.is_negative());
            let persistent = if covered && same_sign {
                let smallest = held.iter().map(|d| d.abs()).min().unwrap_or(Fixed::ZERO);
                if diff.is_negative() { -smallest } else { smallest }
            } else {
                Fixed::ZERO
            };
            SpreadPoint {
                t,
                diff,
                roll_min,
                roll_max,
                persistent,
            }
        })
        .collect()
}

pub fn write_rolling_spread<W: Write>(writer: W, points: &[SpreadPoint]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "diff", "roll_min", "roll_max", "persistent"])?;
    for p in points {
        w.write_record([
            p.t.to_rfc3339(),
            p.diff.to_string(),
            p.roll_min.to_string(),
            p.roll_max.to_string(),
            p.persistent.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::DateTime;

    fn fx(s: &str) -> Fixed {
        s.parse().unwrap()
    }

    #[test]
    fn rolling_and_persistence() {
        let t0 = DateTime::from_timestamp(1_700_000_000, 0).unwrap();
        let at = |m: i64, a: &str, b: &str| (t0 + Duration::minutes(m), fx(a), fx(b));
        let joined = [
            at(0, "0.5", "0.5"),
            at(10, "0.55", "0.5"),
            at(20, "0.6", "0.5"),
            at(45, "0.58", "0.5"),
            at(50, "0.5", "0.52"),
            at(240, "0.5", "0.5"),
        ];
        let out = rolling_spread(&joined, Duration::hours(3), Duration::minutes(30));
        assert_eq!(out[3].roll_max, fx("0.1"));
        assert_eq!(out[3].roll_min, fx("0"));
        // Positive since minute 10, window edge at minute 15 falls on that step.
        assert_eq!(out[3].persistent, fx("0.05"));
        assert_eq!(out[2].persistent, Fixed::ZERO);
        assert_eq!(out[4].persistent, Fixed::ZERO);
        // Minute 0 and 10 fell out of the 3-hour window.
        assert_eq!(out[5].roll_min, fx("0"));
        assert_eq!(out[5].roll_max, fx("0"));
        let mut buf = Vec::new();
        write_rolling_spread(&mut buf, &out).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,diff,roll_min,roll_max,persistent\n"));
    }
}
