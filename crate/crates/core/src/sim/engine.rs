use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::circuit::{Circuit, RuleId};
use crate::guard::SignalId;
use crate::sim::{Cause, ExternalEvent, SimError};
use crate::time::Time;
use crate::trace::InputTraces;
use crate::value::Value;

/// Totally ordered wrapper for queue keys; times are never NaN here.
#[derive(Debug, Clone, Copy, PartialEq)]
struct At<T>(T);

impl<T: Time> Eq for At<T> {}

impl<T: Time> PartialOrd for At<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Time> Ord for At<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp_time(&other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    Bool,
    X,
}

/// External-pulse status of a signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pulse {
    None,
    /// Holds an X written by an external event.
    Open,
    /// As `Open`, but a rule action or input transition has targeted the
    /// signal since.
    Touched,
}

/// Rule action waiting for its due time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingAction<T> {
    pub due: T,
    pub rule: RuleId,
}

/// Complete simulator state between two visited time points.
///
/// Two runs of the same circuit and inputs that reach equal states at the
/// same time have identical futures (absent further external events).
#[derive(Debug, Clone)]
pub struct SimState<T> {
    time: Option<T>,
    values: Vec<Value>,
    pending: Vec<Option<PendingAction<T>>>,
    pending_x: Vec<Option<T>>,
    pulse: Vec<Pulse>,
    queue: BTreeSet<(At<T>, SignalId, Slot)>,
    input_cursor: usize,
}

impl<T: Time> PartialEq for SimState<T> {
    fn eq(&self, other: &Self) -> bool {
        // the queue is a function of the compared fields
        self.values == other.values
            && self.pending == other.pending
            && self.pending_x == other.pending_x
            && self.pulse == other.pulse
            && self.input_cursor == other.input_cursor
    }
}

impl<T: Time> SimState<T> {
    /// Time of the last processed visit, `None` before the first.
    pub fn time(&self) -> Option<T> {
        self.time
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn value(&self, s: SignalId) -> Value {
        self.values[s.index()]
    }

    pub fn pending(&self, s: SignalId) -> Option<PendingAction<T>> {
        self.pending[s.index()]
    }

    pub fn pending_x(&self, s: SignalId) -> Option<T> {
        self.pending_x[s.index()]
    }

    pub fn num_pending(&self) -> usize {
        self.queue.len()
    }
}

/// Flow control returned by observers after each visited time point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Receives every value change and the state after each visited time point.
pub trait Observer<T: Time> {
    fn on_change(&mut self, _time: T, _signal: SignalId, _value: Value, _cause: Cause) {}

    fn on_visit(&mut self, _time: T, _state: &SimState<T>) -> Flow {
        Flow::Continue
    }
}

impl<T: Time> Observer<T> for () {}

#[derive(Debug, Clone, Default)]
struct Scratch {
    epoch: u32,
    rule_epoch: u32,
    signal_mark: Vec<u32>,
    rule_mark: Vec<u32>,
    changed: Vec<SignalId>,
    /// Every change since the last cancellation batch began.
    fresh: Vec<SignalId>,
    dirty: Vec<RuleId>,
    candidates: Vec<RuleId>,
    cancels: Vec<(SignalId, RuleId)>,
    /// Targets whose pending X lands now.
    early: Vec<SignalId>,
}

impl Scratch {
    fn new(signals: usize, rules: usize) -> Self {
        Scratch {
            epoch: 0,
            signal_mark: vec![0; signals],
            rule_mark: vec![0; rules],
            ..Default::default()
        }
    }

    fn begin(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.signal_mark.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
        self.changed.clear();
        self.fresh.clear();
        self.dirty.clear();
    }

    /// Starts a new round of rule marks within the current visit.
    fn next_pass(&mut self) {
        self.rule_epoch = self.rule_epoch.wrapping_add(1);
        if self.rule_epoch == 0 {
            self.rule_mark.iter_mut().for_each(|m| *m = 0);
            self.rule_epoch = 1;
        }
    }

}

/// Discrete-event executor for one circuit and one set of input traces.
///
/// Each visited time point is processed as one batch: input transitions,
/// cancellation of unstable actions (generate-X), application of due actions,
/// external events, then scheduling (including propagate-X). Signals are
/// handled in id order, which is sorted-name order.
#[derive(Debug, Clone)]
pub struct Simulator<'c, T> {
    circuit: &'c Circuit<T>,
    epsilon: T,
    input_initial: Vec<(SignalId, Value)>,
    input_events: Vec<(T, SignalId, Value)>,
    full_scan: bool,
}

impl<'c, T: Time> Simulator<'c, T> {
    pub fn new(circuit: &'c Circuit<T>, inputs: &InputTraces<T>, epsilon: T) -> Result<Self, SimError> {
        circuit.validate().map_err(SimError::InvalidCircuit)?;
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(SimError::Epsilon { epsilon: epsilon.as_f64(), d_min: None });
        }
        if let Some(d_min) = circuit.d_min() {
            if !(epsilon < d_min) {
                return Err(SimError::Epsilon {
                    epsilon: epsilon.as_f64(),
                    d_min: Some(d_min.as_f64()),
                });
            }
        }
        for (name, _) in inputs.iter() {
            match circuit.signal(name) {
                Some(id) if !circuit.kind(id).is_driven() => {}
                _ => return Err(SimError::UnknownInput(name.to_string())),
            }
        }
        let mut input_initial = Vec::new();
        let mut input_events = Vec::new();
        for s in circuit.signals().filter(|s| !circuit.kind(*s).is_driven()) {
            let name = circuit.signal_name(s);
            let trace = inputs.get(name).ok_or_else(|| SimError::MissingInput(name.to_string()))?;
            input_initial.push((s, trace.initial()));
            input_events.extend(trace.transitions().iter().map(|&(t, v)| (t, s, v)));
        }
        input_events.sort_by(|a, b| a.0.cmp_time(&b.0).then(a.1.cmp(&b.1)));
        Ok(Simulator {
            circuit,
            epsilon,
            input_initial,
            input_events,
            full_scan: false,
        })
    }

    /// Re-examine every rule at every visit instead of only those whose
    /// support changed. Observable behavior is identical; used as a cross-check.
    pub fn full_scan(mut self, on: bool) -> Self {
        self.full_scan = on;
        self
    }

    pub fn circuit(&self) -> &'c Circuit<T> {
        self.circuit
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn initial_state(&self) -> SimState<T> {
        let n = self.circuit.num_signals();
        let mut values = self.circuit.initial_values().to_vec();
        for &(s, v) in &self.input_initial {
            values[s.index()] = v;
        }
        SimState {
            time: None,
            values,
            pending: vec![None; n],
            pending_x: vec![None; n],
            pulse: vec![Pulse::None; n],
            queue: BTreeSet::new(),
            input_cursor: 0,
        }
    }

    /// Starts a run from `state`; `externals` must be sorted by (time, signal)
    /// and lie strictly after the state's time.
    pub fn run<'r, O: Observer<T>>(
        &'r self,
        state: SimState<T>,
        externals: &'r [ExternalEvent<T>],
        observer: O,
    ) -> Run<'r, 'c, T, O> {
        let n = self.circuit.num_signals();
        Run {
            sim: self,
            scratch: Scratch::new(n, self.circuit.rules().len()),
            state,
            externals,
            ext_cursor: 0,
            observer,
        }
    }
}

/// An in-progress execution.
pub struct Run<'r, 'c, T, O> {
    sim: &'r Simulator<'c, T>,
    state: SimState<T>,
    externals: &'r [ExternalEvent<T>],
    ext_cursor: usize,
    scratch: Scratch,
    observer: O,
}

impl<'r, 'c, T: Time, O: Observer<T>> Run<'r, 'c, T, O> {
    pub fn state(&self) -> &SimState<T> {
        &self.state
    }

    pub fn observer(&self) -> &O {
        &self.observer
    }

    pub fn into_parts(self) -> (SimState<T>, O) {
        (self.state, self.observer)
    }

    /// Whether every external event has been applied.
    pub fn externals_done(&self) -> bool {
        self.ext_cursor >= self.externals.len()
    }

    pub fn next_time(&self) -> Option<T> {
        if self.state.time.is_none() {
            return Some(T::zero());
        }
        let mut next = self.state.queue.first().map(|(at, _, _)| at.0);
        if let Some(ev) = self.sim.input_events.get(self.state.input_cursor) {
            next = crate::time::min_time(next, Some(ev.0));
        }
        if let Some(ev) = self.externals.get(self.ext_cursor) {
            next = crate::time::min_time(next, Some(ev.at));
        }
        next
    }

    /// Processes visits up to and including `horizon`. Returns `true` if the
    /// observer stopped the run early.
    pub fn run_until(&mut self, horizon: T) -> bool {
        while let Some(t) = self.next_time() {
            if t > horizon {
                break;
            }
            if self.visit(t) == Flow::Stop {
                return true;
            }
        }
        false
    }

    fn touch(&mut self, s: SignalId) {
        let p = &mut self.state.pulse[s.index()];
        if *p == Pulse::Open {
            *p = Pulse::Touched;
        }
    }

    fn set(&mut self, t: T, s: SignalId, v: Value, cause: Cause) {
        let cur = &mut self.state.values[s.index()];
        if *cur == v {
            return;
        }
        *cur = v;
        self.scratch.fresh.push(s);
        let mark = &mut self.scratch.signal_mark[s.index()];
        if *mark != self.scratch.epoch {
            *mark = self.scratch.epoch;
            self.scratch.changed.push(s);
        }
        self.observer.on_change(t, s, v, cause);
    }

    fn visit(&mut self, t: T) -> Flow {
        let circuit = self.sim.circuit;
        let first = self.state.time.is_none();
        self.state.time = Some(t);
        self.scratch.begin();

        // Input traces already hold their new values at t.
        while let Some(&(at, s, v)) = self.sim.input_events.get(self.state.input_cursor) {
            if at != t {
                break;
            }
            self.state.input_cursor += 1;
            self.touch(s);
            self.set(t, s, v, Cause::Input);
        }

        // Guards falsified by the inputs: cancel the pending action and set its
        // target to X.
        let mut candidates = std::mem::take(&mut self.scratch.candidates);
        candidates.clear();
        if self.sim.full_scan {
            candidates.extend(self.state.pending.iter().flatten().map(|p| p.rule));
        } else {
            for i in 0..self.scratch.changed.len() {
                let s = self.scratch.changed[i];
                candidates.extend(circuit.readers(s).iter().copied());
            }
            candidates.sort_unstable();
            candidates.dedup();
        }
        let mut cancels = std::mem::take(&mut self.scratch.cancels);
        cancels.clear();
        for &r in &candidates {
            let rule = circuit.rule(r);
            let s = rule.target;
            if self.state.pending[s.index()].map(|p| p.rule) != Some(r) {
                continue;
            }
            if rule.guard.eval(&self.state.values) != Value::One && self.state.values[s.index()] != Value::from(rule.value) {
                cancels.push((s, r));
            }
        }
        for &(s, r) in &cancels {
            let p = self.state.pending[s.index()].take().expect("pending");
            self.state.queue.remove(&(At(p.due), s, Slot::Bool));
            self.touch(s);
            self.set(t, s, Value::X, Cause::GenerateX(r));
        }
        self.scratch.candidates = candidates;
        self.scratch.cancels = cancels;

        // Apply due actions; Boolean before X for the same signal.
        while let Some(&(at, s, slot)) = self.state.queue.first() {
            if at.0 != t {
                break;
            }
            self.state.queue.pop_first();
            match slot {
                Slot::Bool => {
                    let p = self.state.pending[s.index()].take().expect("queued action");
                    let v = Value::from(circuit.rule(p.rule).value);
                    self.touch(s);
                    self.set(t, s, v, Cause::Rule(p.rule));
                }
                Slot::X => {
                    self.state.pending_x[s.index()] = None;
                    self.touch(s);
                    self.set(t, s, Value::X, Cause::PropagateX);
                }
            }
        }

        // External events land after the rule actions.
        while let Some(ev) = self.externals.get(self.ext_cursor) {
            if ev.at != t {
                break;
            }
            self.ext_cursor += 1;
            let (s, v) = (ev.signal, ev.value);
            let pulse = std::mem::replace(&mut self.state.pulse[s.index()], Pulse::None);
            if v == Value::X {
                self.state.pulse[s.index()] = Pulse::Open;
            } else if pulse == Pulse::Touched {
                // The signal was driven during the pulse; writing the
                // pre-pulse value back could contradict the fault-free run.
                continue;
            }
            self.set(t, s, v, Cause::External);
        }

        // Schedule. Guards falsified by this time point's actions cancel
        // their pending action at once; the resulting X is evaluated in the
        // same pass, repeated until nothing more is canceled.
        let mut dirty = std::mem::take(&mut self.scratch.dirty);
        let mut cancels = std::mem::take(&mut self.scratch.cancels);
        let mut pass = 0;
        loop {
            dirty.clear();
            if (first && pass == 0) || self.sim.full_scan {
                dirty.extend((0..circuit.rules().len() as u32).map(RuleId));
            } else {
                self.scratch.next_pass();
                let changed = if pass == 0 { &self.scratch.changed } else { &self.scratch.fresh };
                for &s in changed {
                    for &r in circuit.readers(s).iter().chain(circuit.drivers(s)) {
                        let m = &mut self.scratch.rule_mark[r.index()];
                        if *m != self.scratch.rule_epoch {
                            *m = self.scratch.rule_epoch;
                            dirty.push(r);
                        }
                    }
                }
                dirty.sort_unstable();
            }
            pass += 1;
            cancels.clear();
            let mut early = std::mem::take(&mut self.scratch.early);
            early.clear();
            for &r in &dirty {
                let rule = circuit.rule(r);
                let s = rule.target;
                let b = Value::from(rule.value);
                let g = rule.guard.eval(&self.state.values);
                let cur = self.state.values[s.index()];
                let pending = self.state.pending[s.index()];
                if g != Value::One && cur != b && pending.map(|p| p.rule) == Some(r) {
                    cancels.push((s, r));
                    continue;
                }
                match g {
                    Value::One => {
                        if cur != b && pending.map(|p| p.rule) != Some(r) {
                            if let Some(old) = pending {
                                self.state.queue.remove(&(At(old.due), s, Slot::Bool));
                            }
                            let due = t + rule.delay;
                            self.state.pending[s.index()] = Some(PendingAction { due, rule: r });
                            self.state.queue.insert((At(due), s, Slot::Bool));
                        }
                    }
                    Value::X => {
                        // An X left by an external pulse may be restored before
                        // `due`, so it does not suppress propagation.
                        let held = cur == Value::X && self.state.pulse[s.index()] != Pulse::Open;
                        if cur != b && !held && self.state.pending_x[s.index()].is_none() {
                            let due = t + self.sim.epsilon;
                            self.state.pending_x[s.index()] = Some(due);
                            self.state.queue.insert((At(due), s, Slot::X));
                        }
                    }
                    // As for a canceled Boolean action, the X is not worth
                    // waiting for once the guard is solidly false.
                    Value::Zero => {
                        if cur != b && self.state.pending_x[s.index()].is_some() {
                            early.push(s);
                        }
                    }
                }
            }
            if cancels.is_empty() && early.is_empty() {
                self.scratch.early = early;
                break;
            }
            self.scratch.fresh.clear();
            for &s in &early {
                if let Some(due) = self.state.pending_x[s.index()].take() {
                    self.state.queue.remove(&(At(due), s, Slot::X));
                    self.touch(s);
                    self.set(t, s, Value::X, Cause::PropagateX);
                }
            }
            self.scratch.early = early;
            for &(s, r) in &cancels {
                if self.state.pending[s.index()].map(|p| p.rule) != Some(r) {
                    continue;
                }
                let p = self.state.pending[s.index()].take().expect("pending");
                self.state.queue.remove(&(At(p.due), s, Slot::Bool));
                self.touch(s);
                self.set(t, s, Value::X, Cause::GenerateX(r));
            }
            if self.scratch.fresh.is_empty() {
                break;
            }
        }
        self.scratch.dirty = dirty;
        self.scratch.cancels = cancels;

        self.observer.on_visit(t, &self.state)
    }
}
