//! Transient-fault injection and sensitivity-window analysis.
//!
//! The fault-free execution is cut into value regions at every switching
//! time. Within a region, susceptibility to an X-pulse at a given signal is
//! (in the limit of small pulses and X delays) a postfix of the region, so
//! one bisection per (signal, region) pair locates the window boundary.

mod probe;
mod report;

pub use probe::Prober;
pub use report::{PostfixViolation, SensitivityReport, SensitivityWindow};

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::circuit::Circuit;
use crate::guard::SignalId;
use crate::sim::{execute, ExternalEvent, Execution, SimConfig, SimError};
use crate::time::Time;
use crate::trace::InputTraces;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("monitored set is empty")]
    NoMonitored,
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("flip pulse on `{signal}` at {time}: signal is X before the fault")]
    FlipOnX { signal: String, time: f64 },
    #[error("{name} must be positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("glitch at {0} lies outside the execution")]
    GlitchOutOfRange(f64),
    #[error("no weight given for injected signal `{0}`")]
    MissingWeight(String),
    #[error("weights must be non-negative and not all zero")]
    ZeroWeight,
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FaultKind {
    /// The signal is X for the pulse duration.
    #[default]
    XPulse,
    /// The signal takes the complement of its fault-free value.
    Flip,
}

impl FaultKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FaultKind::XPulse => "xpulse",
            FaultKind::Flip => "flip",
        }
    }
}

impl std::str::FromStr for FaultKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xpulse" | "x" => Ok(FaultKind::XPulse),
            "flip" => Ok(FaultKind::Flip),
            other => Err(format!("unknown fault kind `{other}` (expected xpulse or flip)")),
        }
    }
}

/// A transient fault: a pulse of `width` at `signal` starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Glitch<T> {
    pub signal: SignalId,
    pub start: T,
    pub width: T,
    pub kind: FaultKind,
}

/// The two external events realizing `glitch` on top of `base`.
///
/// The pulse ends by restoring the value the signal holds in the fault-free
/// execution at the pulse start (after any transition at that instant).
pub fn make_transient<T: Time>(glitch: &Glitch<T>, base: &Execution<T>) -> Result<[ExternalEvent<T>; 2], AnalysisError> {
    if glitch.start < T::zero() || glitch.start > base.horizon() || glitch.start.is_nan() {
        return Err(AnalysisError::GlitchOutOfRange(glitch.start.as_f64()));
    }
    if !(glitch.width > T::zero()) {
        return Err(AnalysisError::NonPositive {
            name: "width",
            value: glitch.width.as_f64(),
        });
    }
    let s = glitch.signal;
    let prior = base.trace(s).value_at(glitch.start).expect("checked range");
    let during = match glitch.kind {
        FaultKind::XPulse => Value::X,
        FaultKind::Flip => {
            if prior == Value::X {
                return Err(AnalysisError::FlipOnX {
                    signal: base.signal_name(s).to_string(),
                    time: glitch.start.as_f64(),
                });
            }
            !prior
        }
    };
    Ok([
        ExternalEvent { at: glitch.start, signal: s, value: during },
        ExternalEvent { at: glitch.start + glitch.width, signal: s, value: prior },
    ])
}

/// Looks up signal ids by name.
pub fn resolve<T: Time>(circuit: &Circuit<T>, names: &[impl AsRef<str>]) -> Result<Vec<SignalId>, AnalysisError> {
    names
        .iter()
        .map(|n| circuit.signal(n.as_ref()).ok_or_else(|| AnalysisError::UnknownSignal(n.as_ref().to_string())))
        .collect()
}

/// Whether the glitched execution drives some monitored signal to X within
/// the configured horizon. Runs one full simulation.
pub fn is_susceptible<T: Time>(
    circuit: &Circuit<T>,
    inputs: &InputTraces<T>,
    monitored: &[SignalId],
    glitch: &Glitch<T>,
    config: &SimConfig<T>,
) -> Result<bool, AnalysisError> {
    if monitored.is_empty() {
        return Err(AnalysisError::NoMonitored);
    }
    let base = execute(circuit, inputs, config, &[])?;
    let events = make_transient(glitch, &base)?;
    let faulty = execute(circuit, inputs, config, &events)?;
    Ok(monitored.iter().any(|m| faulty.ever_x(*m)))
}

/// Interval `[start, end)` between consecutive switching times of the
/// fault-free execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueRegion<T> {
    pub index: usize,
    pub start: T,
    pub end: T,
}

impl<T: Time> ValueRegion<T> {
    pub fn len(&self) -> T {
        self.end - self.start
    }

    pub fn contains(&self, t: T) -> bool {
        self.start <= t && t < self.end
    }
}

/// Regions of `execution` over `[0, horizon)`; time 0 always starts a region.
pub fn value_regions<T: Time>(execution: &Execution<T>) -> Vec<ValueRegion<T>> {
    regions_until(execution, execution.horizon())
}

pub fn regions_until<T: Time>(execution: &Execution<T>, horizon: T) -> Vec<ValueRegion<T>> {
    let mut bounds = vec![T::zero()];
    bounds.extend(execution.switching_times().into_iter().filter(|t| *t > T::zero() && *t < horizon));
    bounds.push(horizon);
    bounds
        .windows(2)
        .enumerate()
        .map(|(index, w)| ValueRegion { index, start: w[0], end: w[1] })
        .collect()
}

/// How regions whose endpoint probes contradict the postfix shape are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    /// One bisection per region; contradictions are bisected in reverse and reported.
    #[default]
    Bisect,
    /// Grid-scan contradicting regions at the bisection resolution.
    Exhaustive,
}

/// Parameters shared by [`analyze`] and [`analyze_naive`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig<T> {
    pub sim: SimConfig<T>,
    /// Transient-fault pulse width.
    pub gamma: T,
    /// Bisection resolution.
    pub delta: T,
    pub kind: FaultKind,
    pub mode: SearchMode,
    /// Simulate past the horizon long enough for late faults to reach the
    /// monitored signals.
    pub settle: bool,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

impl<T: Time> AnalysisConfig<T> {
    /// Defaults: epsilon = gamma = 0.1, delta = 0.01, X-pulses.
    pub fn new(horizon: T) -> Self {
        AnalysisConfig {
            sim: SimConfig {
                horizon,
                epsilon: T::lit(0.1),
            },
            gamma: T::lit(0.1),
            delta: T::lit(0.01),
            kind: FaultKind::XPulse,
            mode: SearchMode::Bisect,
            settle: true,
            jobs: 1,
        }
    }

    pub fn epsilon(mut self, epsilon: T) -> Self {
        self.sim.epsilon = epsilon;
        self
    }

    pub fn gamma(mut self, gamma: T) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn delta(mut self, delta: T) -> Self {
        self.delta = delta;
        self
    }

    pub fn kind(mut self, kind: FaultKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn mode(mut self, mode: SearchMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn settle(mut self, settle: bool) -> Self {
        self.settle = settle;
        self
    }

    pub fn jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs;
        self
    }

    /// Simulation horizon of each probe: the analysis horizon plus, when
    /// settling, `|C| * max(epsilon, d_max)`.
    pub fn probe_horizon(&self, circuit: &Circuit<T>) -> T {
        let h = self.sim.horizon;
        if !self.settle {
            return h;
        }
        let d_max = circuit.d_max().unwrap_or(T::zero()).max(self.sim.epsilon);
        h + T::from_usize(circuit.size()).unwrap() * d_max + self.gamma
    }

    fn check(&self) -> Result<(), AnalysisError> {
        SimConfig::new(self.sim.horizon, self.sim.epsilon)?;
        for (name, v) in [("gamma", self.gamma), ("delta", self.delta)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(AnalysisError::NonPositive { name, value: v.as_f64() });
            }
        }
        Ok(())
    }
}

/// Outcome of the search within one region for one signal.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionOutcome<T> {
    /// Start of the susceptible postfix; `region.end` when none.
    pub boundary: T,
    pub windows: Vec<(T, T)>,
    pub probes: usize,
    pub violation: bool,
}

/// Locates the boundary between the non-susceptible prefix and the
/// susceptible postfix of `region` for faults at `signal`.
///
/// Probes are pulses of width `gamma` starting in `[start, end - gamma]`;
/// the sliver after the last probe inherits its classification. A region
/// whose start is susceptible but whose last probe is not is reported as a
/// violation and, in [`SearchMode::Bisect`], counted as fully susceptible.
pub fn bisect_region<T: Time>(
    prober: &Prober<'_, T>,
    signal: SignalId,
    region: &ValueRegion<T>,
    gamma: T,
    delta: T,
    kind: FaultKind,
    mode: SearchMode,
) -> RegionOutcome<T> {
    let probe = |t: T| prober.probe(signal, t, gamma, kind);
    let (start, end) = (region.start, region.end);
    // The last probe leaves room for its X to cross the circuit before the
    // region ends; otherwise it would see the next region's values.
    let settle = T::from_usize(prober.circuit().size()).unwrap() * prober.epsilon();
    let last = if end - gamma - settle > start { end - gamma - settle } else { end - gamma };
    if last <= start {
        let hit = probe(start);
        return RegionOutcome {
            boundary: if hit { start } else { end },
            windows: if hit { vec![(start, end)] } else { Vec::new() },
            probes: 1,
            violation: false,
        };
    }
    let first_hit = probe(start);
    let last_hit = probe(last);
    let mut probes = 2;
    let two = T::lit(2.0);
    let split = |mut clean: T, mut hit: T, probes: &mut usize| {
        while hit - clean > delta {
            let mid = clean + (hit - clean) / two;
            *probes += 1;
            if probe(mid) {
                hit = mid;
            } else {
                clean = mid;
            }
        }
        hit
    };
    let mut out = match (first_hit, last_hit) {
        (true, true) => RegionOutcome {
            boundary: start,
            windows: vec![(start, end)],
            probes,
            violation: false,
        },
        (false, false) => RegionOutcome {
            boundary: end,
            windows: Vec::new(),
            probes,
            violation: false,
        },
        (false, true) => {
            let b = split(start, last, &mut probes);
            RegionOutcome {
                boundary: b,
                windows: vec![(b, end)],
                probes,
                violation: false,
            }
        }
        // Contradicts the postfix shape. The susceptible start decides the
        // region, as it would with vanishing pulse width and X delay.
        (true, false) => RegionOutcome {
            boundary: start,
            windows: vec![(start, end)],
            probes,
            violation: true,
        },
    };
    if mode == SearchMode::Exhaustive && out.violation {
        let points = grid_from(start, end, delta);
        let mut windows = Vec::new();
        for (i, &t) in points.iter().enumerate() {
            if probe(t) {
                push_window(&mut windows, t, points.get(i + 1).copied().unwrap_or(end));
            }
        }
        out.probes += points.len();
        out.windows = windows;
    }
    out
}

fn push_window<T: Time>(windows: &mut Vec<(T, T)>, from: T, to: T) {
    if let Some(last) = windows.last_mut() {
        if last.1 >= from {
            last.1 = last.1.max(to);
            return;
        }
    }
    windows.push((from, to));
}

fn with_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R, AnalysisError> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| AnalysisError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

fn injection_ids<T: Time>(
    circuit: &Circuit<T>,
    monitored: &[SignalId],
    injection: Option<&[SignalId]>,
) -> Vec<SignalId> {
    match injection {
        Some(ids) => {
            let set: BTreeSet<SignalId> = ids.iter().copied().collect();
            set.into_iter().collect()
        }
        None => circuit.signals().filter(|s| !monitored.contains(s)).collect(),
    }
}

/// Sensitivity windows and failure probability by per-region bisection.
///
/// `injection` defaults to every signal that is not monitored.
pub fn analyze<T: Time>(
    circuit: &Circuit<T>,
    inputs: &InputTraces<T>,
    monitored: &[SignalId],
    config: &AnalysisConfig<T>,
    injection: Option<&[SignalId]>,
) -> Result<SensitivityReport<T>, AnalysisError> {
    config.check()?;
    let prober = Prober::new(circuit, inputs, monitored, config.sim.epsilon, config.probe_horizon(circuit))?;
    analyze_with(&prober, monitored, config, injection)
}

/// [`analyze`] on an existing prober (whose horizon must cover the analysis).
pub fn analyze_with<T: Time>(
    prober: &Prober<'_, T>,
    monitored: &[SignalId],
    config: &AnalysisConfig<T>,
    injection: Option<&[SignalId]>,
) -> Result<SensitivityReport<T>, AnalysisError> {
    config.check()?;
    let circuit = prober.circuit();
    let injected = injection_ids(circuit, monitored, injection);
    let regions = regions_until(prober.baseline(), config.sim.horizon);
    let tasks: Vec<(SignalId, usize)> = injected
        .iter()
        .flat_map(|s| (0..regions.len()).map(move |r| (*s, r)))
        .collect();
    let start_runs = prober.runs();
    let outcomes: Vec<RegionOutcome<T>> = with_pool(config.jobs, || {
        tasks
            .par_iter()
            .map(|&(s, r)| bisect_region(prober, s, &regions[r], config.gamma, config.delta, config.kind, config.mode))
            .collect()
    })?;
    let mut windows: BTreeMap<SignalId, Vec<(T, T)>> = BTreeMap::new();
    let mut violations = Vec::new();
    for (&(s, r), out) in tasks.iter().zip(&outcomes) {
        let list = windows.entry(s).or_default();
        for &(a, b) in &out.windows {
            push_window(list, a, b);
        }
        if out.violation {
            violations.push(PostfixViolation {
                signal: circuit.signal_name(s).to_string(),
                region_start: regions[r].start,
                region_end: regions[r].end,
            });
        }
    }
    let simulations = prober.runs() - start_runs;
    Ok(SensitivityReport::assemble(
        circuit,
        config,
        monitored,
        &injected,
        windows,
        simulations,
        violations,
        config.delta,
    ))
}

/// Grid-scan oracle: one probe every `step` time units per injected signal.
pub fn analyze_naive<T: Time>(
    circuit: &Circuit<T>,
    inputs: &InputTraces<T>,
    monitored: &[SignalId],
    config: &AnalysisConfig<T>,
    step: T,
    injection: Option<&[SignalId]>,
) -> Result<SensitivityReport<T>, AnalysisError> {
    config.check()?;
    let prober = Prober::new(circuit, inputs, monitored, config.sim.epsilon, config.probe_horizon(circuit))?;
    analyze_naive_with(&prober, monitored, config, step, injection)
}

/// Grid points `k * step` covering `[0, horizon)`.
pub fn grid<T: Time>(horizon: T, step: T) -> Vec<T> {
    grid_from(T::zero(), horizon, step)
}

fn grid_from<T: Time>(from: T, to: T, step: T) -> Vec<T> {
    let n = ((to - from) / step).ceil().to_usize().unwrap_or(0);
    (0..n).map(|k| from + T::from_usize(k).unwrap() * step).filter(|t| *t < to).collect()
}

pub fn analyze_naive_with<T: Time>(
    prober: &Prober<'_, T>,
    monitored: &[SignalId],
    config: &AnalysisConfig<T>,
    step: T,
    injection: Option<&[SignalId]>,
) -> Result<SensitivityReport<T>, AnalysisError> {
    config.check()?;
    if !(step > T::zero()) {
        return Err(AnalysisError::NonPositive { name: "step", value: step.as_f64() });
    }
    let circuit = prober.circuit();
    let injected = injection_ids(circuit, monitored, injection);
    let points = grid(config.sim.horizon, step);
    let horizon = config.sim.horizon;
    let start_runs = prober.runs();
    let rows: Vec<Vec<bool>> = with_pool(config.jobs, || {
        injected
            .par_iter()
            .map(|&s| points.par_iter().map(|&t| prober.probe(s, t, config.gamma, config.kind)).collect())
            .collect()
    })?;
    let mut windows = BTreeMap::new();
    for (s, hits) in injected.iter().zip(&rows) {
        let mut list = Vec::new();
        for (i, &t) in points.iter().enumerate() {
            if hits[i] {
                let to = points.get(i + 1).copied().unwrap_or(horizon).min(horizon);
                push_window(&mut list, t, to);
            }
        }
        windows.insert(*s, list);
    }
    let simulations = prober.runs() - start_runs;
    Ok(SensitivityReport::assemble(
        circuit,
        config,
        monitored,
        &injected,
        windows,
        simulations,
        Vec::new(),
        step,
    ))
}

/// Weighted failure probability `sum(w_s * p_s) / sum(w_s)` over the injected signals.
pub fn p_fail_weighted<T: Time>(report: &SensitivityReport<T>, weights: &BTreeMap<String, f64>) -> Result<f64, AnalysisError> {
    let mut num = 0.0;
    let mut den = 0.0;
    for s in &report.injected {
        let w = *weights.get(s).ok_or_else(|| AnalysisError::MissingWeight(s.clone()))?;
        if w < 0.0 || !w.is_finite() {
            return Err(AnalysisError::ZeroWeight);
        }
        num += w * report.p_per_signal.get(s).copied().unwrap_or(0.0);
        den += w;
    }
    if den <= 0.0 {
        return Err(AnalysisError::ZeroWeight);
    }
    Ok(num / den)
}

/// (signal, region index) pairs that attain X in `execution`.
fn x_reach<T: Time>(execution: &Execution<T>, regions: &[ValueRegion<T>]) -> BTreeSet<(SignalId, usize)> {
    let mut out = BTreeSet::new();
    for e in execution.log() {
        if e.value != Value::X {
            continue;
        }
        let idx = regions.partition_point(|r| r.end <= e.time);
        if idx < regions.len() {
            out.insert((e.signal, idx));
        }
    }
    out
}

/// Checks, for evenly spaced fault times in `[start, end - |C| eps - gamma]`
/// of `region`, that an earlier fault never reaches a (signal, region) pair
/// with X that a later fault misses. Returns `true` on an empty interval.
pub fn check_region_equivalence<T: Time>(
    circuit: &Circuit<T>,
    inputs: &InputTraces<T>,
    region: &ValueRegion<T>,
    signal: SignalId,
    gamma: T,
    config: &SimConfig<T>,
    samples: usize,
) -> Result<bool, AnalysisError> {
    let size = T::from_usize(circuit.size()).unwrap();
    let latest = region.end - size * config.epsilon - gamma;
    if latest < region.start || samples == 0 {
        log::info!("region [{}, {}) too short for equivalence sampling", region.start, region.end);
        return Ok(true);
    }
    let base = execute(circuit, inputs, config, &[])?;
    let regions = value_regions(&base);
    let times: Vec<T> = if samples == 1 {
        vec![region.start]
    } else {
        let span = latest - region.start;
        (0..samples)
            .map(|i| region.start + span * T::from_usize(i).unwrap() / T::from_usize(samples - 1).unwrap())
            .collect()
    };
    let mut reach = Vec::with_capacity(times.len());
    for &t in &times {
        let glitch = Glitch { signal, start: t, width: gamma, kind: FaultKind::XPulse };
        let events = make_transient(&glitch, &base)?;
        reach.push(x_reach(&execute(circuit, inputs, config, &events)?, &regions));
    }
    Ok(reach.windows(2).all(|w| w[0].is_subset(&w[1])) && reach.first().is_none_or(|f| reach.iter().all(|r| f.is_subset(r))))
}

#[cfg(test)]
mod tests;
