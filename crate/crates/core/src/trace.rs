//! Piecewise-constant signal traces.

use std::collections::BTreeMap;

use crate::time::Time;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("time {time} outside trace domain [0, {horizon}]")]
    OutOfDomain { time: f64, horizon: f64 },
    #[error("transition times must be strictly increasing (at {0})")]
    Unsorted(f64),
    #[error("transition at {0} does not change the value")]
    NoChange(f64),
    #[error("transition at negative time {0}")]
    Negative(f64),
}

/// Value-over-time of one signal on `[0, horizon]`.
///
/// Segments are left-closed and right-open: at a transition time the signal
/// already holds the new value.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace<T> {
    initial: Value,
    transitions: Vec<(T, Value)>,
    horizon: T,
}

impl<T: Time> SignalTrace<T> {
    pub fn constant(value: Value, horizon: T) -> Self {
        SignalTrace {
            initial: value,
            transitions: Vec::new(),
            horizon,
        }
    }

    /// Builds a trace, checking ordering and that every transition changes the value.
    pub fn new(initial: Value, transitions: Vec<(T, Value)>, horizon: T) -> Result<Self, TraceError> {
        let mut prev_value = initial;
        let mut prev_time: Option<T> = None;
        for &(t, v) in &transitions {
            if t < T::zero() {
                return Err(TraceError::Negative(t.as_f64()));
            }
            if prev_time.is_some_and(|p| t <= p) {
                return Err(TraceError::Unsorted(t.as_f64()));
            }
            if v == prev_value {
                return Err(TraceError::NoChange(t.as_f64()));
            }
            prev_value = v;
            prev_time = Some(t);
        }
        Ok(SignalTrace {
            initial,
            transitions,
            horizon,
        })
    }

    /// Builds a trace from raw samples, dropping redundant ones.
    pub fn from_steps(initial: Value, steps: impl IntoIterator<Item = (T, Value)>, horizon: T) -> Self {
        let mut transitions: Vec<(T, Value)> = Vec::new();
        for (t, v) in steps {
            match transitions.last_mut() {
                Some(last) if last.0 == t => last.1 = v,
                _ => {
                    if transitions.last().map_or(initial, |l| l.1) == v {
                        continue;
                    }
                    transitions.push((t, v));
                }
            }
            let n = transitions.len();
            let prior = if n >= 2 { transitions[n - 2].1 } else { initial };
            if transitions[n - 1].1 == prior {
                transitions.pop();
            }
        }
        SignalTrace {
            initial,
            transitions,
            horizon,
        }
    }

    pub fn initial(&self) -> Value {
        self.initial
    }

    pub fn transitions(&self) -> &[(T, Value)] {
        &self.transitions
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn value_at(&self, t: T) -> Result<Value, TraceError> {
        if t < T::zero() || t > self.horizon || t.is_nan() {
            return Err(TraceError::OutOfDomain {
                time: t.as_f64(),
                horizon: self.horizon.as_f64(),
            });
        }
        Ok(self.value_at_unchecked(t))
    }

    pub(crate) fn value_at_unchecked(&self, t: T) -> Value {
        let idx = self.transitions.partition_point(|(tt, _)| *tt <= t);
        if idx == 0 {
            self.initial
        } else {
            self.transitions[idx - 1].1
        }
    }

    /// Value on the open interval just before `t` (left limit).
    pub fn value_before(&self, t: T) -> Value {
        let idx = self.transitions.partition_point(|(tt, _)| *tt < t);
        if idx == 0 {
            self.initial
        } else {
            self.transitions[idx - 1].1
        }
    }

    /// Restricts the trace to `[0, horizon]`.
    pub fn truncate(&self, horizon: T) -> Self {
        SignalTrace {
            initial: self.initial,
            transitions: self.transitions.iter().copied().filter(|(t, _)| *t <= horizon).collect(),
            horizon,
        }
    }

    /// Maximal intervals `[start, end)` on which the trace holds `value`.
    pub fn segments_with(&self, value: Value) -> Vec<(T, T)> {
        let mut out = Vec::new();
        let mut start = if self.initial == value { Some(T::zero()) } else { None };
        for &(t, v) in &self.transitions {
            match (start, v == value) {
                (Some(s), false) => {
                    out.push((s, t));
                    start = None;
                }
                (None, true) => start = Some(t),
                _ => {}
            }
        }
        if let Some(s) = start {
            if s < self.horizon {
                out.push((s, self.horizon));
            }
        }
        out
    }
}

/// Input traces, one per input signal of a circuit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputTraces<T> {
    traces: BTreeMap<String, SignalTrace<T>>,
}

impl<T: Time> InputTraces<T> {
    pub fn new() -> Self {
        InputTraces { traces: BTreeMap::new() }
    }

    pub fn insert(&mut self, signal: impl Into<String>, trace: SignalTrace<T>) -> &mut Self {
        self.traces.insert(signal.into(), trace);
        self
    }

    pub fn with(mut self, signal: impl Into<String>, trace: SignalTrace<T>) -> Self {
        self.insert(signal, trace);
        self
    }

    pub fn get(&self, signal: &str) -> Option<&SignalTrace<T>> {
        self.traces.get(signal)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SignalTrace<T>)> {
        self.traces.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }
}
