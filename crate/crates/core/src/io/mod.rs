//! Text formats: the netlist language, input-trace CSV, report JSON and SVG
//! waveforms.

mod json;
mod netlist;
mod svg;
mod traces;

pub use json::{read_report, write_execution, write_report, ReportError};
pub use netlist::{parse_circuit, serialize_circuit, Netlist, NetlistError, Pos, Span};
pub use svg::render_waveform;
pub use traces::{parse_traces, serialize_traces, TraceParseError};

use crate::time::Time;

/// Shortest decimal that round-trips `t` after rounding to 12 significant digits.
pub fn fmt_time<T: Time>(t: T) -> String {
    let x = t.as_f64();
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded}")
}
