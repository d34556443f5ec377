//! Deterministic execution of circuits against input traces and external events.

mod engine;

pub use engine::{Flow, Observer, PendingAction, Run, SimState, Simulator};

use crate::circuit::{Circuit, RuleId, Violation};
use crate::guard::SignalId;
use crate::time::Time;
use crate::trace::{InputTraces, SignalTrace};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("circuit is invalid ({} violation(s))", .0.len())]
    InvalidCircuit(Vec<Violation>),
    #[error("horizon must be positive and finite (got {0})")]
    Horizon(f64),
    #[error("epsilon {epsilon} must be positive and below the minimum rule delay {d_min:?}")]
    Epsilon { epsilon: f64, d_min: Option<f64> },
    #[error("no trace for input signal `{0}`")]
    MissingInput(String),
    #[error("trace given for `{0}`, which is not an input signal")]
    UnknownInput(String),
    #[error("external events are not sorted by time (at {0})")]
    UnsortedExternals(f64),
    #[error("two external events target `{signal}` at time {time}")]
    DuplicateExternal { signal: String, time: f64 },
    #[error("external event at negative time {0}")]
    NegativeExternal(f64),
}

/// Horizon and X-propagation delay of an execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    pub horizon: T,
    pub epsilon: T,
}

impl<T: Time> SimConfig<T> {
    pub fn new(horizon: T, epsilon: T) -> Result<Self, SimError> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(SimError::Horizon(horizon.as_f64()));
        }
        if !(epsilon > T::zero()) {
            return Err(SimError::Epsilon { epsilon: epsilon.as_f64(), d_min: None });
        }
        Ok(SimConfig { horizon, epsilon })
    }

    pub fn with_horizon(self, horizon: T) -> Self {
        SimConfig { horizon, ..self }
    }
}

/// A signal transition forced from outside the circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalEvent<T> {
    pub at: T,
    pub signal: SignalId,
    pub value: Value,
}

/// Why a signal changed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cause {
    Input,
    Rule(RuleId),
    /// Pending action of this rule canceled because its guard became unstable.
    GenerateX(RuleId),
    PropagateX,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry<T> {
    pub time: T,
    pub signal: SignalId,
    pub value: Value,
    pub cause: Cause,
}

/// Traces of every signal on `[0, horizon]` plus the ordered change log.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution<T> {
    names: Vec<String>,
    traces: Vec<SignalTrace<T>>,
    log: Vec<LogEntry<T>>,
    horizon: T,
}

impl<T: Time> Execution<T> {
    /// Execution in which nothing happens: every signal keeps its initial value.
    pub fn quiescent(circuit: &Circuit<T>, inputs: &InputTraces<T>, horizon: T) -> Self {
        let traces = circuit
            .signals()
            .map(|s| {
                let v = if circuit.kind(s).is_driven() {
                    circuit.initial(s)
                } else {
                    inputs.get(circuit.signal_name(s)).map_or(Value::X, |t| t.initial())
                };
                SignalTrace::constant(v, horizon)
            })
            .collect();
        Execution {
            names: circuit.signals().map(|s| circuit.signal_name(s).to_string()).collect(),
            traces,
            log: Vec::new(),
            horizon,
        }
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn signal_name(&self, s: SignalId) -> &str {
        &self.names[s.index()]
    }

    pub fn traces(&self) -> &[SignalTrace<T>] {
        &self.traces
    }

    pub fn trace(&self, s: SignalId) -> &SignalTrace<T> {
        &self.traces[s.index()]
    }

    pub fn trace_named(&self, name: &str) -> Option<&SignalTrace<T>> {
        self.names.iter().position(|n| n == name).map(|i| &self.traces[i])
    }

    pub fn log(&self) -> &[LogEntry<T>] {
        &self.log
    }

    /// Total number of value transitions over all traces.
    pub fn count_events(&self) -> usize {
        self.traces.iter().map(|t| t.transitions().len()).sum()
    }

    /// Sorted, deduplicated times at which any signal switches value, below the horizon.
    pub fn switching_times(&self) -> Vec<T> {
        let mut times: Vec<T> = self
            .traces
            .iter()
            .flat_map(|tr| tr.transitions().iter().map(|(t, _)| *t))
            .filter(|t| *t < self.horizon)
            .collect();
        times.sort_by(|a, b| a.cmp_time(b));
        times.dedup();
        times
    }

    /// Whether `s` is assigned X at any time, including zero-width X.
    pub fn ever_x(&self, s: SignalId) -> bool {
        self.traces[s.index()].initial() == Value::X
            || self.log.iter().any(|e| e.signal == s && e.value == Value::X)
    }
}

#[derive(Debug, Default)]
struct Recorder<T> {
    steps: Vec<Vec<(T, Value)>>,
    log: Vec<LogEntry<T>>,
}

impl<T: Time> Observer<T> for Recorder<T> {
    fn on_change(&mut self, time: T, signal: SignalId, value: Value, cause: Cause) {
        self.steps[signal.index()].push((time, value));
        self.log.push(LogEntry { time, signal, value, cause });
    }
}

/// Checks ordering of external events and returns those within the horizon,
/// sorted by (time, signal).
pub(crate) fn prepare_externals<T: Time>(
    circuit: &Circuit<T>,
    externals: &[ExternalEvent<T>],
    horizon: T,
) -> Result<Vec<ExternalEvent<T>>, SimError> {
    for w in externals.windows(2) {
        if w[1].at < w[0].at {
            return Err(SimError::UnsortedExternals(w[1].at.as_f64()));
        }
    }
    let mut kept: Vec<ExternalEvent<T>> = Vec::with_capacity(externals.len());
    for ev in externals {
        if ev.at < T::zero() {
            return Err(SimError::NegativeExternal(ev.at.as_f64()));
        }
        if ev.at > horizon {
            log::warn!(
                "ignoring external event on `{}` at {} beyond horizon {}",
                circuit.signal_name(ev.signal),
                ev.at,
                horizon
            );
            continue;
        }
        kept.push(*ev);
    }
    kept.sort_by(|a, b| a.at.cmp_time(&b.at).then(a.signal.cmp(&b.signal)));
    for w in kept.windows(2) {
        if w[0].at == w[1].at && w[0].signal == w[1].signal {
            return Err(SimError::DuplicateExternal {
                signal: circuit.signal_name(w[0].signal).to_string(),
                time: w[0].at.as_f64(),
            });
        }
    }
    Ok(kept)
}

/// Executes `circuit` on `inputs` until `config.horizon`, overlaying `externals`.
pub fn execute<T: Time>(
    circuit: &Circuit<T>,
    inputs: &InputTraces<T>,
    config: &SimConfig<T>,
    externals: &[ExternalEvent<T>],
) -> Result<Execution<T>, SimError> {
    let sim = Simulator::new(circuit, inputs, config.epsilon)?;
    execute_with(&sim, config.horizon, externals)
}

/// Like [`execute`], reusing an already validated simulator.
pub fn execute_with<T: Time>(
    sim: &Simulator<'_, T>,
    horizon: T,
    externals: &[ExternalEvent<T>],
) -> Result<Execution<T>, SimError> {
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(SimError::Horizon(horizon.as_f64()));
    }
    let circuit = sim.circuit();
    let externals = prepare_externals(circuit, externals, horizon)?;
    let state = sim.initial_state();
    let initial = state.values().to_vec();
    let recorder = Recorder {
        steps: vec![Vec::new(); circuit.num_signals()],
        log: Vec::new(),
    };
    let mut run = sim.run(state, &externals, recorder);
    run.run_until(horizon);
    let (_, recorder) = run.into_parts();
    let traces = recorder
        .steps
        .into_iter()
        .zip(initial)
        .map(|(steps, init)| SignalTrace::from_steps(init, steps, horizon))
        .collect();
    Ok(Execution {
        names: circuit.signals().map(|s| circuit.signal_name(s).to_string()).collect(),
        traces,
        log: recorder.log,
        horizon,
    })
}
