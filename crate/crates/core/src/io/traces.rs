use std::collections::BTreeMap;

use crate::io::fmt_time;
use crate::time::Time;
use crate::trace::{InputTraces, SignalTrace};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceParseError {
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("signal `{0}` has no row at time 0")]
    MissingInitial(String),
    #[error("{0}")]
    Csv(String),
}

fn row_error(line: usize, message: impl Into<String>) -> TraceParseError {
    TraceParseError::Row {
        line,
        message: message.into(),
    }
}

/// Parses `signal,time,value` rows (header optional, `#` comments allowed).
///
/// Every signal needs a row at time 0 and strictly increasing times. Rows
/// that repeat the current value are dropped. Traces extend indefinitely.
pub fn parse_traces<T: Time>(text: &str) -> Result<InputTraces<T>, TraceParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: BTreeMap<String, Vec<(f64, Value, usize)>> = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| TraceParseError::Csv(e.to_string()))?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() != 3 {
            return Err(row_error(line, format!("expected 3 fields, found {}", rec.len())));
        }
        if i == 0 && &rec[0] == "signal" && &rec[1] == "time" && &rec[2] == "value" {
            continue;
        }
        let time: f64 = rec[1]
            .parse()
            .map_err(|_| row_error(line, format!("invalid time `{}`", &rec[1])))?;
        if !time.is_finite() || time < 0.0 {
            return Err(row_error(line, format!("time must be finite and non-negative (got {})", &rec[1])));
        }
        let value: Value = rec[2]
            .parse()
            .map_err(|_| row_error(line, format!("unknown value `{}` (expected 0, 1 or X)", &rec[2])))?;
        let list = rows.entry(rec[0].to_string()).or_default();
        if let Some(&(prev, _, _)) = list.last() {
            if time <= prev {
                let what = if time == prev { "duplicate" } else { "unsorted" };
                return Err(row_error(line, format!("{what} time {} for `{}`", &rec[1], &rec[0])));
            }
        } else if time != 0.0 {
            return Err(TraceParseError::MissingInitial(rec[0].to_string()));
        }
        list.push((time, value, line));
    }
    let mut traces = InputTraces::new();
    for (signal, list) in rows {
        let initial = list[0].1;
        let steps = list[1..].iter().map(|&(t, v, _)| (T::lit(t), v));
        traces.insert(signal, SignalTrace::from_steps(initial, steps, T::infinity()));
    }
    Ok(traces)
}

/// Writes traces in the format read by [`parse_traces`].
pub fn serialize_traces<T: Time>(traces: &InputTraces<T>) -> String {
    let mut out = String::from("signal,time,value\n");
    for (name, tr) in traces.iter() {
        out += &format!("{name},0,{}\n", tr.initial());
        for (t, v) in tr.transitions() {
            out += &format!("{name},{},{v}\n", fmt_time(*t));
        }
    }
    out
}
