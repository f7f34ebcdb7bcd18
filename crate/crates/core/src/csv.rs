//! CSV ingestion and emission for sampled signals.
//!
//! Contract: header row `t,u` or `t,u,H`, one sample per line, decimal
//! point `.`, time column uniform within 1e-9 s. Column names may carry a
//! bracketed unit annotation, e.g. `u [V]`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signals::TimeSeries;

/// Maximum allowed deviation of a timestamp from the uniform grid, in seconds.
pub const TIME_JITTER_TOLERANCE: f64 = 1e-9;

fn parse_header_column(raw: &str) -> (String, Option<String>) {
    let trimmed = raw.trim();
    if let Some(open) = trimmed.find('[') {
        if let Some(close) = trimmed.rfind(']') {
            if close > open {
                let name = trimmed[..open].trim().to_string();
                let unit = trimmed[open + 1..close].trim().to_string();
                return (name, Some(unit));
            }
        }
    }
    (trimmed.to_string(), None)
}

fn parse_value(token: &str, line_no: usize) -> Result<f64> {
    let v: f64 = token
        .trim()
        .parse()
        .map_err(|_| Error::data(format!("line {line_no}: cannot parse '{}' as a number", token.trim())))?;
    if !v.is_finite() {
        return Err(Error::data(format!("line {line_no}: non-finite sample {v}")));
    }
    Ok(v)
}

/// Loads `t,u` or `t,u,H` from `path`, returning the input series and the
/// optional displacement series on the validated uniform grid.
pub fn read_csv(path: impl AsRef<Path>) -> Result<(TimeSeries, Option<TimeSeries>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    read_csv_str(&text)
}

/// Same as [`read_csv`] but parses from an in-memory string.
pub fn read_csv_str(text: &str) -> Result<(TimeSeries, Option<TimeSeries>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());

    let (_, header) = lines.next().ok_or_else(|| Error::data("empty file"))?;
    let columns: Vec<(String, Option<String>)> = header.split(',').map(parse_header_column).collect();
    let names: Vec<&str> = columns.iter().map(|(n, _)| n.as_str()).collect();
    let has_h = match names.as_slice() {
        ["t", "u"] => false,
        ["t", "u", "H"] => true,
        _ => {
            return Err(Error::data(format!(
                "header must be 't,u' or 't,u,H', got '{}'",
                header.trim()
            )))
        }
    };
    let width = columns.len();

    let mut t = Vec::new();
    let mut u = Vec::new();
    let mut h = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(Error::data(format!(
                "line {line_no}: expected {width} columns, found {}",
                fields.len()
            )));
        }
        t.push(parse_value(fields[0], line_no)?);
        u.push(parse_value(fields[1], line_no)?);
        if has_h {
            h.push(parse_value(fields[2], line_no)?);
        }
    }

    if t.len() < 2 {
        return Err(Error::data("need at least two samples to establish the time step"));
    }
    let t0 = t[0];
    let dt = t[1] - t0;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::data(format!("non-increasing time column (dt = {dt})")));
    }
    for (k, &tk) in t.iter().enumerate() {
        let expected = t0 + k as f64 * dt;
        if (tk - expected).abs() > TIME_JITTER_TOLERANCE {
            return Err(Error::data(format!(
                "time column is not uniform at row {k}: {tk} deviates from {expected} by more than {TIME_JITTER_TOLERANCE} s"
            )));
        }
    }

    let mut u_series = TimeSeries::new(t0, dt, u)?;
    if let Some(unit) = &columns[1].1 {
        u_series = u_series.with_unit(unit.clone());
    }
    let h_series = if has_h {
        let mut s = TimeSeries::new(t0, dt, h)?;
        if let Some(unit) = &columns[2].1 {
            s = s.with_unit(unit.clone());
        }
        Some(s)
    } else {
        None
    };
    Ok((u_series, h_series))
}

/// Writes `t,u` or `t,u,H`. Values are printed with the shortest
/// round-trippable representation, so a save/load cycle is bit-exact.
pub fn write_csv(path: impl AsRef<Path>, u: &TimeSeries, h: Option<&TimeSeries>) -> Result<()> {
    let text = format_csv(u, h)?;
    fs::write(path.as_ref(), text)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.as_ref().display())))
}

/// Same as [`write_csv`] but returns the document as a string.
pub fn format_csv(u: &TimeSeries, h: Option<&TimeSeries>) -> Result<String> {
    if let Some(h) = h {
        if h.len() != u.len() {
            return Err(Error::invalid("u and H must have the same length"));
        }
    }
    let label = |name: &str, unit: Option<&str>| match unit {
        Some(unit) => format!("{name} [{unit}]"),
        None => name.to_string(),
    };
    let mut out = String::new();
    out.push_str(&label("t", Some("s")));
    out.push(',');
    out.push_str(&label("u", u.unit()));
    if let Some(h) = h {
        out.push(',');
        out.push_str(&label("H", h.unit()));
    }
    out.push('\n');
    for k in 0..u.len() {
        out.push_str(&format!("{}", u.time(k)));
        out.push_str(&format!(",{}", u.values()[k]));
        if let Some(h) = h {
            out.push_str(&format!(",{}", h.values()[k]));
        }
        out.push('\n');
    }
    Ok(out)
}
