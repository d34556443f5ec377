use std::collections::BTreeMap;

use crate::analysis::{AnalysisConfig, FaultKind};
use crate::circuit::Circuit;
use crate::guard::SignalId;
use crate::time::Time;

/// Fault times `[start, end)` at `signal` that cause a monitored X.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityWindow<T> {
    pub signal: String,
    pub start: T,
    pub end: T,
}

impl<T: Time> SensitivityWindow<T> {
    pub fn len(&self) -> T {
        self.end - self.start
    }
}

/// A region whose endpoint probes came out susceptible then masked.
#[derive(Debug, Clone, PartialEq)]
pub struct PostfixViolation<T> {
    pub signal: String,
    pub region_start: T,
    pub region_end: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport<T> {
    pub horizon: T,
    pub epsilon: T,
    pub gamma: T,
    /// Bisection resolution, or the grid step of a naive scan.
    pub delta: T,
    pub fault_kind: FaultKind,
    pub monitored: Vec<String>,
    pub injected: Vec<String>,
    /// Sorted by signal name, then start.
    pub windows: Vec<SensitivityWindow<T>>,
    pub p_per_signal: BTreeMap<String, f64>,
    pub p_fail: f64,
    pub simulations: usize,
    pub violations: Vec<PostfixViolation<T>>,
}

impl<T: Time> SensitivityReport<T> {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        circuit: &Circuit<T>,
        config: &AnalysisConfig<T>,
        monitored: &[SignalId],
        injected: &[SignalId],
        windows: BTreeMap<SignalId, Vec<(T, T)>>,
        simulations: usize,
        violations: Vec<PostfixViolation<T>>,
        delta: T,
    ) -> Self {
        let horizon = config.sim.horizon;
        let name = |s: &SignalId| circuit.signal_name(*s).to_string();
        let mut monitored: Vec<String> = monitored.iter().map(name).collect();
        monitored.sort();
        monitored.dedup();
        let mut injected_names: Vec<String> = injected.iter().map(name).collect();
        injected_names.sort();
        let mut flat = Vec::new();
        let mut p_per_signal = BTreeMap::new();
        for s in injected {
            let list = windows.get(s).map(Vec::as_slice).unwrap_or(&[]);
            let total = list.iter().map(|(a, b)| (b.min(horizon) - *a).as_f64().max(0.0)).fold(0.0, |x, y| x + y);
            p_per_signal.insert(name(s), total / horizon.as_f64());
            flat.extend(list.iter().filter(|(a, b)| a < b).map(|&(start, end)| SensitivityWindow {
                signal: name(s),
                start,
                end: end.min(horizon),
            }));
        }
        flat.sort_by(|a, b| a.signal.cmp(&b.signal).then(a.start.cmp_time(&b.start)));
        let p_fail = if injected.is_empty() {
            0.0
        } else {
            p_per_signal.values().fold(0.0, |x, y| x + y) / injected.len() as f64
        };
        SensitivityReport {
            horizon,
            epsilon: config.sim.epsilon,
            gamma: config.gamma,
            delta,
            fault_kind: config.kind,
            monitored,
            injected: injected_names,
            windows: flat,
            p_per_signal,
            p_fail,
            simulations,
            violations,
        }
    }

    pub fn windows_of<'a>(&'a self, signal: &'a str) -> impl Iterator<Item = &'a SensitivityWindow<T>> + 'a {
        self.windows.iter().filter(move |w| w.signal == signal)
    }

    /// Total window length over all injected signals.
    pub fn total_window(&self) -> f64 {
        self.windows.iter().map(|w| w.len().as_f64()).fold(0.0, |x, y| x + y)
    }

    /// Whether a fault at `signal` starting at `t` lies in a reported window.
    pub fn covers(&self, signal: &str, t: T) -> bool {
        self.windows_of(signal).any(|w| w.start <= t && t < w.end)
    }
}
