use std::sync::atomic::{AtomicUsize, Ordering};

use crate::analysis::{make_transient, AnalysisError, FaultKind, Glitch};
use crate::circuit::Circuit;
use crate::guard::SignalId;
use crate::sim::{Cause, Execution, Flow, Observer, SimState, Simulator};
use crate::time::Time;
use crate::trace::InputTraces;
use crate::value::Value;

/// Fault-free reference run with a state snapshot after every visited time.
struct Baseline<T> {
    execution: Execution<T>,
    snapshots: Vec<(T, SimState<T>)>,
}

struct Snapshotter<T> {
    snapshots: Vec<(T, SimState<T>)>,
}

impl<T: Time> Observer<T> for Snapshotter<T> {
    fn on_visit(&mut self, time: T, state: &SimState<T>) -> Flow {
        self.snapshots.push((time, state.clone()));
        Flow::Continue
    }
}

struct ProbeObserver<'a, T> {
    monitored: &'a [bool],
    snapshots: &'a [(T, SimState<T>)],
    quiet_after: T,
    hit: bool,
}

impl<T: Time> Observer<T> for ProbeObserver<'_, T> {
    fn on_change(&mut self, _time: T, signal: SignalId, value: Value, _cause: Cause) {
        if value == Value::X && self.monitored[signal.index()] {
            self.hit = true;
        }
    }

    fn on_visit(&mut self, time: T, state: &SimState<T>) -> Flow {
        if self.hit {
            return Flow::Stop;
        }
        if time >= self.quiet_after {
            // The base state is constant between its visits.
            let idx = self.snapshots.partition_point(|(t, _)| *t <= time);
            if idx > 0 && self.snapshots[idx - 1].1 == *state {
                return Flow::Stop;
            }
        }
        Flow::Continue
    }
}

/// Decides susceptibility of single glitches quickly.
///
/// Every probe resumes from the fault-free state just before the glitch and
/// stops as soon as a monitored signal turns X, or as soon as the faulty
/// state has merged back into the fault-free one after the glitch (from then
/// on both executions are identical).
pub struct Prober<'c, T> {
    sim: Simulator<'c, T>,
    base: Baseline<T>,
    monitored: Vec<bool>,
    horizon: T,
    base_hits_monitored: bool,
    runs: AtomicUsize,
}

impl<'c, T: Time> Prober<'c, T> {
    pub fn new(
        circuit: &'c Circuit<T>,
        inputs: &InputTraces<T>,
        monitored: &[SignalId],
        epsilon: T,
        horizon: T,
    ) -> Result<Self, AnalysisError> {
        if monitored.is_empty() {
            return Err(AnalysisError::NoMonitored);
        }
        let sim = Simulator::new(circuit, inputs, epsilon)?;
        let execution = crate::sim::execute_with(&sim, horizon, &[])?;
        let mut run = sim.run(sim.initial_state(), &[], Snapshotter { snapshots: Vec::new() });
        run.run_until(horizon);
        let (_, obs) = run.into_parts();
        let mut mask = vec![false; circuit.num_signals()];
        for m in monitored {
            mask[m.index()] = true;
        }
        let base_hits_monitored = monitored.iter().any(|m| execution.ever_x(*m));
        Ok(Prober {
            sim,
            base: Baseline {
                execution,
                snapshots: obs.snapshots,
            },
            monitored: mask,
            horizon,
            base_hits_monitored,
            runs: AtomicUsize::new(0),
        })
    }

    pub fn circuit(&self) -> &'c Circuit<T> {
        self.sim.circuit()
    }

    /// Fault-free execution up to the probe horizon.
    pub fn baseline(&self) -> &Execution<T> {
        &self.base.execution
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn epsilon(&self) -> T {
        self.sim.epsilon()
    }

    /// Number of probe simulations run so far.
    pub fn runs(&self) -> usize {
        self.runs.load(Ordering::Relaxed)
    }

    /// Whether a glitch of `width` at `signal` starting at `at` drives some
    /// monitored signal to X before the horizon.
    pub fn probe(&self, signal: SignalId, at: T, width: T, kind: FaultKind) -> bool {
        self.runs.fetch_add(1, Ordering::Relaxed);
        if self.base_hits_monitored {
            return true;
        }
        let glitch = Glitch { signal, start: at, width, kind };
        let events = match make_transient(&glitch, &self.base.execution) {
            Ok(ev) => ev,
            // a flip is undefined on X; fall back to the worst case
            Err(_) => make_transient(&Glitch { kind: FaultKind::XPulse, ..glitch }, &self.base.execution)
                .expect("x-pulse is always defined"),
        };
        let externals: Vec<_> = events.into_iter().filter(|e| e.at <= self.horizon).collect();
        let quiet_after = externals.last().map_or(at, |e| e.at);
        let snaps = &self.base.snapshots;
        let idx = snaps.partition_point(|(t, _)| *t < at);
        let state = if idx == 0 {
            self.sim.initial_state()
        } else {
            snaps[idx - 1].1.clone()
        };
        let observer = ProbeObserver {
            monitored: &self.monitored,
            snapshots: snaps,
            quiet_after,
            hit: false,
        };
        let mut run = self.sim.run(state, &externals, observer);
        run.run_until(self.horizon);
        run.observer().hit
    }
}
