use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::model::ActivityLabel;
use crate::{Error, Result};

/// One accelerometer reading in m/s².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawRecord {
    pub user: u32,
    pub activity: ActivityLabel,
    pub timestamp_ms: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl RawRecord {
    pub fn values(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Formats the record in the raw line grammar, scaling the timestamp
    /// back by `ticks_per_ms`.
    pub fn to_line(&self, ticks_per_ms: u64) -> String {
        format!(
            "{},{},{},{},{},{};",
            self.user,
            self.activity.name(),
            self.timestamp_ms * ticks_per_ms,
            self.x,
            self.y,
            self.z
        )
    }
}

/// Records recovered from a raw file plus bookkeeping about rejected lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedRecords {
    pub records: Vec<RawRecord>,
    /// Non-blank lines that did not parse.
    pub skipped: usize,
    /// Valid lines dropped by the user filter.
    pub filtered: usize,
}

/// Parses `user,activity,timestamp,x,y,z` with an optional trailing `;`.
/// Raw timestamps are divided by `ticks_per_ms` to obtain milliseconds.
pub fn parse_raw_line(line: &str, ticks_per_ms: u64) -> Option<RawRecord> {
    let line = line.trim();
    let line = line.strip_suffix(';').unwrap_or(line).trim_end();
    let mut fields = line.split(',').map(str::trim);
    let user = fields.next()?.parse().ok()?;
    let activity = ActivityLabel::from_str(fields.next()?).ok()?;
    let ticks: u64 = fields.next()?.parse().ok()?;
    let mut xyz = [0.0f64; 3];
    for v in &mut xyz {
        *v = fields.next()?.parse().ok()?;
        if !v.is_finite() {
            return None;
        }
    }
    if fields.next().is_some() || ticks_per_ms == 0 {
        return None;
    }
    Some(RawRecord {
        user,
        activity,
        timestamp_ms: ticks / ticks_per_ms,
        x: xyz[0],
        y: xyz[1],
        z: xyz[2],
    })
}

/// Parses a whole raw file. Malformed lines are counted and skipped; an
/// input with no valid records is a format error. When `users` is given,
/// only those participants are kept.
pub fn parse_raw_str(
    text: &str,
    ticks_per_ms: u64,
    users: Option<&[u32]>,
) -> Result<ParsedRecords> {
    if ticks_per_ms == 0 {
        return Err(Error::Parameter("ticks_per_ms must be positive".into()));
    }
    let mut out = ParsedRecords::default();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match parse_raw_line(line, ticks_per_ms) {
            Some(r) if users.map_or(true, |u| u.contains(&r.user)) => out.records.push(r),
            Some(_) => out.filtered += 1,
            None => out.skipped += 1,
        }
    }
    if out.records.is_empty() {
        return Err(Error::Format(format!(
            "no valid records ({} malformed lines, {} filtered)",
            out.skipped, out.filtered
        )));
    }
    if out.skipped > 0 {
        log::warn!("skipped {} malformed raw lines", out.skipped);
    }
    Ok(out)
}
