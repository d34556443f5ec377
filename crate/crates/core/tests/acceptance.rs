//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.
//!
//! Run with `cargo test -p faultscope --test acceptance -- --nocapture` to
//! see the report.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use faultscope::analysis::{
    analyze, analyze_naive_with, analyze_with, grid, is_susceptible, make_transient, resolve,
    SensitivityWindow,
};
use faultscope::gen::{linear_pipeline, multibit_linear_pipeline, ring_pipeline, MultiBitSpec, PipelineSpec, RingSpec};
use faultscope::io::{parse_circuit, read_report, render_waveform, serialize_circuit, write_report};
use faultscope::sim::execute;
use faultscope::sweep::{run_sweep, write_sweep_csv, SweepRow, SweepSpec};
use faultscope::{
    AnalysisConfig, Cause, Circuit, Execution, FaultKind, Glitch, Guard, InputTraces, Prober, Rule,
    SearchMode, SignalTrace, SimConfig, Value,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that currently fail; see the README. The suite still evaluates
/// and prints them, and complains if one of them starts passing.
const KNOWN_GAPS: &[u32] = &[4, 9];

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn presets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

fn preset(name: &str) -> SweepSpec {
    let text = std::fs::read_to_string(presets().join(name)).unwrap();
    SweepSpec::from_toml(&text).unwrap()
}

fn golden_linear3() -> faultscope::io::Netlist<f64> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/linear3.net");
    parse_circuit(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Executions observed by criteria 1 to 5, re-checked by criterion 6.
#[derive(Default)]
struct Seen {
    executions: Vec<(Execution, f64)>,
}

impl Seen {
    fn add(&mut self, e: &Execution, d_min: f64) {
        self.executions.push((e.clone(), d_min));
    }
}

fn inverter() -> Circuit {
    let mut b = Circuit::builder("inv");
    b.input("i").output("o", Value::One);
    b.rule(Rule::new(Guard::signal("i"), "o", false, 1.0));
    b.rule(Rule::new(!Guard::signal("i"), "o", true, 1.0));
    b.build().unwrap()
}

fn inverter_goldens(seen: &mut Seen) -> (bool, String) {
    let c = inverter();
    let cases = [
        ("a", vec![(1.0, Value::One)], vec![(2.0, Value::Zero)]),
        ("b", vec![(1.0, Value::One), (1.5, Value::Zero)], vec![(1.5, Value::X), (2.5, Value::One)]),
        ("c", vec![(1.0, Value::X), (1.5, Value::Zero)], vec![(1.1, Value::X), (2.5, Value::One)]),
    ];
    let mut bad = Vec::new();
    for (name, input, expect) in cases {
        let inputs = InputTraces::new().with("i", SignalTrace::new(Value::Zero, input, 4.0).unwrap());
        let e = execute(&c, &inputs, &SimConfig::new(4.0, 0.1).unwrap(), &[]).unwrap();
        seen.add(&e, 1.0);
        let got = e.trace_named("o").unwrap().transitions().to_vec();
        if got != expect {
            bad.push(format!("{name}: {got:?}"));
        }
    }
    (bad.is_empty(), if bad.is_empty() { "traces a, b, c exact".into() } else { bad.join("; ") })
}

fn landmarks(seen: &mut Seen) -> (bool, String) {
    let g = golden_linear3();
    let mon = resolve(&g.circuit, &g.monitored).unwrap();
    let c2 = g.circuit.signal("c2").unwrap();
    let cfg = SimConfig::new(32.0, 0.1).unwrap();
    let inputs = InputTraces::new();
    let base = execute(&g.circuit, &inputs, &cfg, &[]).unwrap();
    seen.add(&base, g.circuit.d_min().unwrap());
    let at = |t: f64| Glitch { signal: c2, start: t, width: 0.1, kind: FaultKind::XPulse };
    for t in [10.0, 22.0] {
        let ev = make_transient(&at(t), &base).unwrap();
        seen.add(&execute(&g.circuit, &inputs, &cfg, &ev).unwrap(), g.circuit.d_min().unwrap());
    }
    let s10 = is_susceptible(&g.circuit, &inputs, &mon, &at(10.0), &cfg).unwrap();
    let s22 = is_susceptible(&g.circuit, &inputs, &mon, &at(22.0), &cfg).unwrap();
    (s10 && !s22, format!("c2@10 susceptible={s10}, c2@22 susceptible={s22}"))
}

fn p_fail_regression() -> (bool, String) {
    let g = golden_linear3();
    let mon = resolve(&g.circuit, &g.monitored).unwrap();
    let r = analyze(&g.circuit, &InputTraces::new(), &mon, &AnalysisConfig::new(32.0), None).unwrap();
    let generated = linear_pipeline(&PipelineSpec::new(3, 1.0, 5.0, 4.0, 4.0)).unwrap();
    let frozen = generated.circuit == g.circuit;
    let pass = (r.p_fail - 0.54375).abs() <= 0.01 && (r.p_fail - 0.54375).abs() <= 1e-6 && frozen;
    (pass, format!("p_fail = {} (target 0.54375, pin 1e-6); generator matches frozen netlist: {frozen}", r.p_fail))
}

/// Fast and naive analysis classify every grid point the same way, except
/// within `delta + gamma` of a boundary of a fast window.
fn oracle_equivalence() -> (bool, String) {
    let (delta, gamma) = (0.05, 0.1);
    let tol = delta + gamma + 1e-9;
    let cases = common::active_cases(60);
    let mut bad_cases = Vec::new();
    let mut bad_points = 0;
    let mut points = 0;
    for c in &cases {
        let cfg = AnalysisConfig::new(c.horizon).delta(delta).gamma(gamma).mode(SearchMode::Exhaustive);
        let prober = Prober::new(&c.circuit, &c.inputs, &c.monitored, 0.1, cfg.probe_horizon(&c.circuit)).unwrap();
        let fast = analyze_with(&prober, &c.monitored, &cfg, None).unwrap();
        let naive = analyze_naive_with(&prober, &c.monitored, &cfg, delta, None).unwrap();
        let mut bad = 0;
        for s in &fast.injected {
            let bounds: Vec<f64> = fast.windows_of(s).flat_map(|w| [w.start, w.end]).collect();
            for t in grid(c.horizon, delta) {
                points += 1;
                if fast.covers(s, t) != naive.covers(s, t) && !bounds.iter().any(|b| (b - t).abs() <= tol) {
                    bad += 1;
                }
            }
        }
        if bad > 0 {
            bad_cases.push(c.seed);
            bad_points += bad;
        }
    }
    let detail = format!(
        "{} circuits, {points} grid points; {bad_points} points in {} circuits disagree beyond delta+gamma (seeds {:?})",
        cases.len(),
        bad_cases.len(),
        bad_cases
    );
    (bad_cases.is_empty(), detail)
}

fn leq(a: Value, b: Value) -> bool {
    a == Value::X || a == b
}

fn monotonicity(seen: &mut Seen) -> (bool, String) {
    let mut violations = 0;
    let mut triples = 0;
    for c in common::active_cases(220) {
        let cfg = SimConfig::new(c.horizon, 0.1).unwrap();
        let base = execute(&c.circuit, &c.inputs, &cfg, &[]).unwrap();
        let d_min = c.circuit.d_min().unwrap();
        seen.add(&base, d_min);
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed ^ 0xacce);
        let signals: Vec<_> = c.circuit.signals().collect();
        let glitch = Glitch {
            signal: signals[rng.gen_range(0..signals.len())],
            start: rng.gen_range(0..(c.horizon * 20.0) as u32) as f64 / 20.0,
            width: 0.1,
            kind: FaultKind::XPulse,
        };
        let events = make_transient(&glitch, &base).unwrap();
        let faulty = execute(&c.circuit, &c.inputs, &cfg, &events).unwrap();
        seen.add(&faulty, d_min);
        triples += 1;
        let mut ts: Vec<f64> = vec![0.0];
        for e in [&base, &faulty] {
            ts.extend(e.traces().iter().flat_map(|t| t.transitions().iter().map(|(t, _)| *t)));
        }
        for t in ts {
            for s in c.circuit.signals() {
                if !leq(faulty.trace(s).value_at(t).unwrap(), base.trace(s).value_at(t).unwrap()) {
                    violations += 1;
                }
            }
        }
    }
    (triples >= 200 && violations == 0, format!("{triples} triples, {violations} violations"))
}

fn well_defined(seen: &Seen) -> (bool, String) {
    let mut bad = 0;
    let mut events = 0;
    for (e, d_min) in &seen.executions {
        events += e.count_events();
        for s in 0..e.names().len() {
            let fired: Vec<f64> = e
                .log()
                .iter()
                .filter(|l| l.signal.index() == s && l.value.is_bool() && matches!(l.cause, Cause::Rule(_)))
                .map(|l| l.time)
                .collect();
            bad += fired.windows(2).filter(|w| w[1] - w[0] < d_min - 1e-9).count();
        }
    }
    (
        bad == 0,
        format!("{} executions terminated with {events} events in total; {bad} firings closer than d_min", seen.executions.len()),
    )
}

fn efficiency() -> (bool, String) {
    let g = golden_linear3();
    let mon = resolve(&g.circuit, &g.monitored).unwrap();
    let cfg = AnalysisConfig::new(500.0).delta(0.01);
    let prober = Prober::new(&g.circuit, &InputTraces::new(), &mon, 0.1, cfg.probe_horizon(&g.circuit)).unwrap();
    let fast = analyze_with(&prober, &mon, &cfg, None).unwrap();
    let naive = analyze_naive_with(&prober, &mon, &cfg, 0.01, None).unwrap();
    let ratio = naive.simulations as f64 / fast.simulations as f64;
    (
        ratio >= 10.0,
        format!("{} vs {} simulations ({ratio:.1}x)", fast.simulations, naive.simulations),
    )
}

fn find(rows: &[SweepRow], point: &[f64]) -> f64 {
    rows.iter().find(|r| r.point == point).unwrap().p_fail
}

fn sweep_shape() -> (bool, String) {
    let spec = preset("source_sink.toml");
    let rows = run_sweep(&spec, 0).unwrap();
    let max = rows.iter().max_by(|a, b| a.p_fail.total_cmp(&b.p_fail)).unwrap();
    let corner = max.point[0] == 1.0 && (0.55..=0.85).contains(&max.p_fail);
    let token: Vec<f64> = rows.iter().filter(|r| r.point[1] == 1.0 && r.point[0] > 1.0).map(|r| r.p_fail).collect();
    let token_ok = token.iter().all(|p| (0.35..=0.65).contains(p));
    let (slow, fast) = (find(&rows, &[25.0, 25.0]), find(&rows, &[1.0, 1.0]));
    (
        corner && token_ok && slow < fast,
        format!(
            "max {:.4} at source={} sink={}; token-limited {:?}; (25,25) {slow:.4} < (1,1) {fast:.4}",
            max.p_fail,
            max.point[0],
            max.point[1],
            token.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn multibit_trend() -> (bool, String) {
    let rows = run_sweep(&preset("multibit.toml"), 0).unwrap();
    let (p1, p4, p8) = (find(&rows, &[1.0]), find(&rows, &[4.0]), find(&rows, &[8.0]));
    let bands = (p4 - 0.22).abs() <= 0.05 && (p8 - 0.10).abs() <= 0.05;
    let order = p8 < p4 && p4 < p1;
    (
        bands && order,
        format!("1-bit {p1:.4}, 4-bit {p4:.4} (0.22±0.05), 8-bit {p8:.4} (0.10±0.05); ordering holds: {order}"),
    )
}

fn unimodal(xs: &[f64]) -> bool {
    let peak = xs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap();
    xs[..=peak].windows(2).all(|w| w[0] <= w[1]) && xs[peak..].windows(2).all(|w| w[0] >= w[1])
}

fn ring_behavior() -> (bool, String) {
    let rows = run_sweep(&preset("ring_tokens.toml"), 0).unwrap();
    let throughput: Vec<f64> = rows.iter().map(|r| r.throughput.unwrap()).collect();
    let canopy = unimodal(&throughput);
    let (full, mid) = (rows.last().unwrap(), &rows[rows.len() / 2]);
    let bubble = full.p_fail > mid.p_fail;
    let edge = run_sweep(&preset("ring_stages.toml"), 0).unwrap();
    let edge_ok = edge.iter().all(|r| (r.p_fail - 0.45).abs() <= 0.05);
    (
        canopy && bubble && edge_ok,
        format!(
            "throughput {throughput:?} unimodal: {canopy}; {} tokens {:.4} > {} tokens {:.4}; 1-token rings {:?}",
            full.point[0],
            full.p_fail,
            mid.point[0],
            mid.p_fail,
            edge.iter().map(|r| format!("{}:{:.4}", r.point[0], r.p_fail)).collect::<Vec<_>>()
        ),
    )
}

fn format_stability() -> (bool, String) {
    let mut problems = Vec::new();
    let mut netlists = vec![golden_linear3().circuit];
    for stages in 1..=4 {
        netlists.push(linear_pipeline(&PipelineSpec::new(stages, 1.0, 5.0, 4.0, 4.0)).unwrap().circuit);
    }
    for (stages, tokens) in [(3, 1), (6, 2), (20, 9)] {
        netlists.push(ring_pipeline(&RingSpec::new(stages, tokens, 1.0, 5.0)).unwrap().circuit);
    }
    for bits in [1, 2, 4, 8] {
        let spec = MultiBitSpec::new(bits, PipelineSpec::new(3, 1.0, 5.0, 4.0, 4.0));
        netlists.push(multibit_linear_pipeline(&spec).unwrap().circuit);
    }
    for c in &netlists {
        let mon = vec![c.signal_name(c.signals().last().unwrap()).to_string()];
        let text = serialize_circuit(c, &mon);
        let back = parse_circuit::<f64>(&text).unwrap();
        if &back.circuit != c || serialize_circuit(&back.circuit, &back.monitored) != text {
            problems.push(format!("netlist {} does not round-trip", c.name()));
        }
    }

    let g = golden_linear3();
    let mon = resolve(&g.circuit, &g.monitored).unwrap();
    let inputs = InputTraces::new();
    let base = execute(&g.circuit, &inputs, &SimConfig::new(32.0, 0.1).unwrap(), &[]).unwrap();
    let mut outputs = Vec::new();
    for jobs in [1, 3] {
        let r = analyze(&g.circuit, &inputs, &mon, &AnalysisConfig::new(32.0).jobs(jobs), None).unwrap();
        let json = write_report(&r);
        let back = read_report(&json).unwrap();
        let total: f64 = back.windows.iter().map(SensitivityWindow::len).sum();
        let recomputed = total / back.horizon / back.injected.len() as f64;
        if (recomputed - back.p_fail).abs() > 1e-12 || write_report(&back) != json {
            problems.push(format!("report JSON with {jobs} jobs is not self-consistent"));
        }
        let svg = render_waveform(&base, Some(&r.windows), &g.monitored);
        let sweep = preset("linear3.toml");
        let csv = write_sweep_csv(&sweep, &run_sweep(&sweep, jobs).unwrap());
        outputs.push((json, svg, csv));
    }
    if outputs[0] != outputs[1] {
        problems.push("outputs differ between 1 and 3 jobs".into());
    }
    let detail = if problems.is_empty() {
        format!("{} netlists round-trip; JSON, SVG and CSV byte-identical across jobs", netlists.len())
    } else {
        problems.join("; ")
    };
    (problems.is_empty(), detail)
}

#[test]
fn acceptance() {
    let mut seen = Seen::default();
    let mut outcomes = Vec::new();
    let mut run = |id: u32, title: &'static str, f: &mut dyn FnMut() -> (bool, String)| {
        let start = Instant::now();
        let (pass, detail) = f();
        outcomes.push(Outcome { id, title, pass, detail, elapsed: start.elapsed() });
    };
    run(1, "inverter traces", &mut || inverter_goldens(&mut seen));
    run(2, "susceptibility landmarks", &mut || landmarks(&mut seen));
    run(3, "P(fail) regression", &mut p_fail_regression);
    run(4, "oracle equivalence", &mut oracle_equivalence);
    run(5, "monotonicity of X", &mut || monotonicity(&mut seen));
    run(6, "well-definedness", &mut || well_defined(&seen));
    run(7, "efficiency", &mut efficiency);
    run(8, "source x sink sweep shape", &mut sweep_shape);
    run(9, "multi-bit trend", &mut multibit_trend);
    run(10, "ring behavior", &mut ring_behavior);
    run(11, "format stability", &mut format_stability);

    let mut unexpected = Vec::new();
    for o in &outcomes {
        let known = KNOWN_GAPS.contains(&o.id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known gap)",
            (false, false) => "FAIL",
        };
        println!("[{tag}] {:>2}. {} ({:.2}s): {}", o.id, o.title, o.elapsed.as_secs_f64(), o.detail);
        if o.pass == known {
            unexpected.push(o.id);
        }
    }
    assert!(unexpected.is_empty(), "criteria {unexpected:?} differ from the expected outcome; update KNOWN_GAPS");
}
