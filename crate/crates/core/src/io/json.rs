use std::collections::BTreeMap;

use serde_json::{json, Map, Value as Json};

use crate::analysis::{FaultKind, SensitivityReport, SensitivityWindow};
use crate::sim::{Cause, Execution};
use crate::time::Time;

/// Serializes `report` as pretty JSON with sorted keys.
pub fn write_report<T: Time>(report: &SensitivityReport<T>) -> String {
    let windows: Vec<Json> = report
        .windows
        .iter()
        .map(|w| json!({"signal": w.signal, "start": w.start.as_f64(), "end": w.end.as_f64()}))
        .collect();
    let per_signal: Map<String, Json> = report.p_per_signal.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let doc = json!({
        "config": {
            "T": report.horizon.as_f64(),
            "epsilon": report.epsilon.as_f64(),
            "gamma": report.gamma.as_f64(),
            "delta": report.delta.as_f64(),
            "monitored": report.monitored,
            "injected": report.injected,
            "fault_kind": report.fault_kind.as_str(),
        },
        "p_fail": report.p_fail,
        "p_per_signal": per_signal,
        "windows": windows,
        "simulations": report.simulations,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("missing or malformed field `{0}`")]
    Field(&'static str),
}

fn num(v: &Json, field: &'static str) -> Result<f64, ReportError> {
    v.get(field).and_then(Json::as_f64).ok_or(ReportError::Field(field))
}

fn names(v: &Json, field: &'static str) -> Result<Vec<String>, ReportError> {
    v.get(field)
        .and_then(Json::as_array)
        .ok_or(ReportError::Field(field))?
        .iter()
        .map(|s| s.as_str().map(str::to_string).ok_or(ReportError::Field(field)))
        .collect()
}

/// Reads a report written by [`write_report`]. Postfix violations are not
/// part of the format and come back empty.
pub fn read_report(text: &str) -> Result<SensitivityReport<f64>, ReportError> {
    let doc: Json = serde_json::from_str(text).map_err(|e| ReportError::Json(e.to_string()))?;
    let config = doc.get("config").ok_or(ReportError::Field("config"))?;
    let fault_kind: FaultKind = config
        .get("fault_kind")
        .and_then(Json::as_str)
        .and_then(|s| s.parse().ok())
        .ok_or(ReportError::Field("fault_kind"))?;
    let mut windows = Vec::new();
    for w in doc.get("windows").and_then(Json::as_array).ok_or(ReportError::Field("windows"))? {
        windows.push(SensitivityWindow {
            signal: w.get("signal").and_then(Json::as_str).ok_or(ReportError::Field("signal"))?.to_string(),
            start: num(w, "start")?,
            end: num(w, "end")?,
        });
    }
    let p_per_signal: BTreeMap<String, f64> = doc
        .get("p_per_signal")
        .and_then(Json::as_object)
        .ok_or(ReportError::Field("p_per_signal"))?
        .iter()
        .map(|(k, v)| v.as_f64().map(|x| (k.clone(), x)).ok_or(ReportError::Field("p_per_signal")))
        .collect::<Result<_, _>>()?;
    Ok(SensitivityReport {
        horizon: num(config, "T")?,
        epsilon: num(config, "epsilon")?,
        gamma: num(config, "gamma")?,
        delta: num(config, "delta")?,
        fault_kind,
        monitored: names(config, "monitored")?,
        injected: names(config, "injected")?,
        windows,
        p_per_signal,
        p_fail: num(&doc, "p_fail")?,
        simulations: doc
            .get("simulations")
            .and_then(Json::as_u64)
            .ok_or(ReportError::Field("simulations"))? as usize,
        violations: Vec::new(),
    })
}

fn cause_json(c: Cause) -> Json {
    match c {
        Cause::Input => json!({"kind": "input"}),
        Cause::Rule(r) => json!({"kind": "rule", "rule": r.0}),
        Cause::GenerateX(r) => json!({"kind": "generate_x", "rule": r.0}),
        Cause::PropagateX => json!({"kind": "propagate_x"}),
        Cause::External => json!({"kind": "external"}),
    }
}

/// Traces and change log of `execution` as pretty JSON with sorted keys.
/// Rule numbers index the circuit's canonical rule order.
pub fn write_execution<T: Time>(execution: &Execution<T>) -> String {
    let signals: Map<String, Json> = execution
        .names()
        .iter()
        .zip(execution.traces())
        .map(|(name, tr)| {
            let transitions: Vec<Json> = tr
                .transitions()
                .iter()
                .map(|(t, v)| json!([t.as_f64(), v.to_string()]))
                .collect();
            (
                name.clone(),
                json!({"initial": tr.initial().to_string(), "transitions": transitions}),
            )
        })
        .collect();
    let log: Vec<Json> = execution
        .log()
        .iter()
        .map(|e| {
            json!({
                "time": e.time.as_f64(),
                "signal": execution.signal_name(e.signal),
                "value": e.value.to_string(),
                "cause": cause_json(e.cause),
            })
        })
        .collect();
    let doc = json!({"T": execution.horizon().as_f64(), "signals": signals, "log": log});
    let mut text = serde_json::to_string_pretty(&doc).expect("execution serializes");
    text.push('\n');
    text
}
