use std::fmt::Write;

use crate::analysis::SensitivityWindow;
use crate::io::fmt_time;
use crate::sim::Execution;
use crate::time::Time;
use crate::value::Value;

const LABEL_W: f64 = 120.0;
const PLOT_W: f64 = 880.0;
const LANE_H: f64 = 34.0;
const SWING: f64 = 11.0;
const TOP: f64 = 10.0;
const AXIS_H: f64 = 34.0;

const X_FILL: &str = "#e04a3f";
const WINDOW_FILL: &str = "#3d7fd9";

fn nice_step(span: f64) -> f64 {
    let raw = span / 10.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

fn level(v: Value) -> f64 {
    match v {
        Value::Zero => SWING,
        Value::X => 0.0,
        Value::One => -SWING,
    }
}

/// SVG with one lane per signal in id order. X intervals are drawn at
/// mid-level and shaded red; `windows` are shaded blue; monitored signal
/// names are bold.
pub fn render_waveform<T: Time>(
    execution: &Execution<T>,
    windows: Option<&[SensitivityWindow<T>]>,
    monitored: &[String],
) -> String {
    let horizon = execution.horizon().as_f64();
    let scale = if horizon > 0.0 { PLOT_W / horizon } else { 0.0 };
    let x = |t: f64| LABEL_W + t.clamp(0.0, horizon) * scale;
    let lanes = execution.names().len();
    let width = LABEL_W + PLOT_W + 20.0;
    let height = TOP + lanes as f64 * LANE_H + AXIS_H;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="monospace" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, (name, trace)) in execution.names().iter().zip(execution.traces()).enumerate() {
        let mid = TOP + i as f64 * LANE_H + LANE_H / 2.0;
        let weight = if monitored.contains(name) { "bold" } else { "normal" };
        let _ = writeln!(out, r#"<g class="lane" data-signal="{name}">"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-weight="{weight}">{name}</text>"#,
            LABEL_W - 8.0,
            mid + 4.0
        );
        for w in windows.into_iter().flatten().filter(|w| &w.signal == name) {
            let (a, b) = (x(w.start.as_f64()), x(w.end.as_f64()));
            let _ = writeln!(
                out,
                r#"<rect class="window" x="{a:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{WINDOW_FILL}" fill-opacity="0.35"/>"#,
                mid - SWING - 3.0,
                b - a,
                2.0 * SWING + 6.0
            );
        }
        for (a, b) in trace.segments_with(Value::X) {
            let (a, b) = (x(a.as_f64()), x(b.as_f64()));
            let _ = writeln!(
                out,
                r#"<rect class="x" x="{a:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{X_FILL}" fill-opacity="0.4"/>"#,
                mid - SWING,
                b - a,
                2.0 * SWING
            );
        }
        let mut points = Vec::new();
        let mut v = trace.initial();
        points.push((x(0.0), mid + level(v)));
        for &(t, nv) in trace.transitions() {
            let tx = x(t.as_f64());
            points.push((tx, mid + level(v)));
            points.push((tx, mid + level(nv)));
            v = nv;
        }
        points.push((x(horizon), mid + level(v)));
        let pts: Vec<String> = points.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(out, "</g>");
    }
    let axis_y = TOP + lanes as f64 * LANE_H + 4.0;
    let _ = writeln!(
        out,
        r#"<line class="axis" x1="{:.2}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="black"/>"#,
        x(0.0),
        x(horizon)
    );
    if horizon > 0.0 {
        let step = nice_step(horizon);
        let mut k = 0u64;
        loop {
            let t = k as f64 * step;
            if t > horizon * (1.0 + 1e-9) {
                break;
            }
            let tx = x(t);
            let _ = writeln!(
                out,
                r#"<line x1="{tx:.2}" y1="{axis_y:.2}" x2="{tx:.2}" y2="{:.2}" stroke="black"/><text x="{tx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                axis_y + 5.0,
                axis_y + 18.0,
                fmt_time(t)
            );
            k += 1;
        }
    }
    out.push_str("</svg>\n");
    out
}
