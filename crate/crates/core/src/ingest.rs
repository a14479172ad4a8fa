//! Tick-data ingestion: CSV parsing with per-row validation and last-tick
//! resampling onto the uniform session grid.

use std::io::Read;

use crate::error::{Error, Result};
use crate::path::PricePath;

/// One trade: seconds from session open and a positive raw price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord {
    pub timestamp: f64,
    pub price: f64,
}

/// Session clock and resampling grid. Defaults to the 09:30-16:00 equity
/// session sampled once per second (n = 23400 increments).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionSpec {
    /// Session open as seconds since midnight (clock timestamps only).
    pub open_clock: f64,
    /// Session length in seconds.
    pub session_seconds: f64,
    /// Grid step in seconds.
    pub grid_step: f64,
}

impl Default for SessionSpec {
    fn default() -> Self {
        SessionSpec {
            open_clock: 9.0 * 3600.0 + 30.0 * 60.0,
            session_seconds: 23400.0,
            grid_step: 1.0,
        }
    }
}

impl SessionSpec {
    pub fn expected_n(&self) -> usize {
        (self.session_seconds / self.grid_step).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.session_seconds > 0.0 && self.grid_step > 0.0) {
            return Err(Error::invalid("session must close after it opens"));
        }
        Ok(())
    }
}

/// Parsed rows plus the rejected ones with their line numbers and reasons.
#[derive(Debug, Clone)]
pub struct TickParseReport {
    pub records: Vec<TickRecord>,
    pub rejected: Vec<(usize, String)>,
}

fn parse_timestamp(raw: &str, spec: &SessionSpec) -> std::result::Result<f64, String> {
    let raw = raw.trim();
    if raw.contains(':') {
        // HH:MM:SS or HH:MM:SS.fff, converted to seconds from open
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("bad clock time '{raw}'"));
        }
        let h: f64 = parts[0].parse().map_err(|_| format!("bad hour in '{raw}'"))?;
        let m: f64 = parts[1]
            .parse()
            .map_err(|_| format!("bad minute in '{raw}'"))?;
        let s: f64 = parts[2]
            .parse()
            .map_err(|_| format!("bad second in '{raw}'"))?;
        Ok(h * 3600.0 + m * 60.0 + s - spec.open_clock)
    } else {
        raw.parse::<f64>().map_err(|_| format!("bad timestamp '{raw}'"))
    }
}

/// Parse `timestamp,price` CSV. Malformed or nonpositive-price rows are
/// collected into the report; timestamps running backwards abort with the
/// first offending line.
pub fn load_ticks<R: Read>(reader: R, spec: &SessionSpec) -> Result<TickParseReport> {
    spec.validate()?;
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| Error::Parse(format!("unreadable header: {e}")))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let (ts_col, px_col) = match (find("timestamp"), find("price")) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::Parse(
                "header must name 'timestamp' and 'price' columns".into(),
            ))
        }
    };

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for (idx, row) in csv_reader.records().enumerate() {
        let line = idx + 2; // header is line 1
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                rejected.push((line, format!("unreadable row: {e}")));
                continue;
            }
        };
        let ts_raw = row.get(ts_col).unwrap_or("");
        let px_raw = row.get(px_col).unwrap_or("");
        let ts = match parse_timestamp(ts_raw, spec) {
            Ok(t) => t,
            Err(msg) => {
                rejected.push((line, msg));
                continue;
            }
        };
        let px: f64 = match px_raw.trim().parse() {
            Ok(p) => p,
            Err(_) => {
                rejected.push((line, format!("bad price '{px_raw}'")));
                continue;
            }
        };
        if !(px > 0.0) {
            rejected.push((line, format!("nonpositive price {px}")));
            continue;
        }
        if let Some(last) = records.last() {
            let last: &TickRecord = last;
            if ts < last.timestamp {
                return Err(Error::Parse(format!(
                    "timestamps out of order at line {line}"
                )));
            }
        }
        records.push(TickRecord {
            timestamp: ts,
            price: px,
        });
    }
    if records.is_empty() {
        return Err(Error::Parse("no valid ticks in input".into()));
    }
    Ok(TickParseReport { records, rejected })
}

/// Previous-tick resampling: for each grid point, the log of the last trade
/// price at or before it; the leading gap repeats the first available
/// price. Ties in the input resolve to the last row in file order.
pub fn resample_last_tick(ticks: &[TickRecord], spec: &SessionSpec) -> Result<PricePath> {
    spec.validate()?;
    if ticks.is_empty() {
        return Err(Error::invalid("cannot resample an empty session"));
    }
    let n = spec.expected_n();
    let mut timestamps = Vec::with_capacity(n + 1);
    let mut log_prices = Vec::with_capacity(n + 1);
    let mut cursor = 0usize;
    let mut last_price = ticks[0].price;
    for k in 0..=n {
        let t = k as f64 * spec.grid_step;
        while cursor < ticks.len() && ticks[cursor].timestamp <= t + 1e-9 {
            last_price = ticks[cursor].price;
            cursor += 1;
        }
        timestamps.push(t);
        log_prices.push(last_price.ln());
    }
    PricePath::new(timestamps, log_prices, spec.session_seconds)
}
