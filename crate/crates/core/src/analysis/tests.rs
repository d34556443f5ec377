use super::*;
use crate::gen::{linear_pipeline, Generated, PipelineSpec};
use crate::sim::execute;
use crate::trace::SignalTrace;
use crate::value::Value::*;

fn pipe3() -> Generated<f64> {
    linear_pipeline(&PipelineSpec::new(3, 1.0, 5.0, 4.0, 4.0)).unwrap()
}

fn inverter() -> Circuit<f64> {
    let mut b = Circuit::builder("inv");
    b.input("i").output("o", One);
    b.rules(crate::gen::gates::inverter("i", "o", 1.0).unwrap());
    b.build().unwrap()
}

fn input_a() -> InputTraces<f64> {
    InputTraces::new().with("i", SignalTrace::new(Zero, vec![(1.0, One)], 4.0).unwrap())
}

#[test]
fn transient_events() {
    let g = pipe3();
    let base = execute(&g.circuit, &InputTraces::new(), &SimConfig::new(32.0, 0.1).unwrap(), &[]).unwrap();
    let c2 = g.circuit.signal("c2").unwrap();
    let x = Glitch { signal: c2, start: 10.0, width: 0.1, kind: FaultKind::XPulse };
    let ev = make_transient(&x, &base).unwrap();
    assert_eq!((ev[0].at, ev[0].value), (10.0, X));
    assert_eq!((ev[1].at, ev[1].value), (10.1, base.trace(c2).value_at(10.0).unwrap()));
    let flip = make_transient(&Glitch { kind: FaultKind::Flip, ..x }, &base).unwrap();
    let v = base.trace(c2).value_at(10.0).unwrap();
    assert_eq!((flip[0].value, flip[1].value), (!v, v));
    assert!(make_transient(&Glitch { width: 0.0, ..x }, &base).is_err());
    assert!(make_transient(&Glitch { start: 40.0, ..x }, &base).is_err());
}

#[test]
fn flip_on_x_is_rejected() {
    let mut b = Circuit::builder("x");
    b.local("a", X).output("m", Zero);
    let c = b.build().unwrap();
    let base = execute(&c, &InputTraces::new(), &SimConfig::new(5.0, 0.1).unwrap(), &[]).unwrap();
    let a = c.signal("a").unwrap();
    let g = Glitch { signal: a, start: 1.0, width: 0.1, kind: FaultKind::Flip };
    assert!(matches!(make_transient(&g, &base), Err(AnalysisError::FlipOnX { .. })));
    // an X-pulse on X restores X: no-op
    let ev = make_transient(&Glitch { kind: FaultKind::XPulse, ..g }, &base).unwrap();
    assert_eq!(ev[1].value, X);
}

#[test]
fn landmarks() {
    let g = pipe3();
    let mon = resolve(&g.circuit, &g.monitored).unwrap();
    let c2 = g.circuit.signal("c2").unwrap();
    let cfg = SimConfig::new(32.0, 0.1).unwrap();
    let at = |t: f64| Glitch { signal: c2, start: t, width: 0.1, kind: FaultKind::XPulse };
    let inputs = InputTraces::new();
    assert!(is_susceptible(&g.circuit, &inputs, &mon, &at(10.0), &cfg).unwrap());
    assert!(!is_susceptible(&g.circuit, &inputs, &mon, &at(22.0), &cfg).unwrap());
    let c1 = g.circuit.signal("c1").unwrap();
    assert!(is_susceptible(&g.circuit, &inputs, &mon, &Glitch { signal: c1, ..at(22.0) }, &cfg).unwrap());
    assert_eq!(
        is_susceptible(&g.circuit, &inputs, &[], &at(1.0), &cfg).unwrap_err(),
        AnalysisError::NoMonitored
    );
}

#[test]
fn regions() {
    let c = inverter();
    let e = execute(&c, &input_a(), &SimConfig::new(4.0, 0.1).unwrap(), &[]).unwrap();
    let r: Vec<(f64, f64)> = value_regions(&e).iter().map(|r| (r.start, r.end)).collect();
    assert_eq!(r, vec![(0.0, 1.0), (1.0, 2.0), (2.0, 4.0)]);
    let mut b = Circuit::builder("q");
    b.output("a", Zero);
    let q = b.build().unwrap();
    let e = execute(&q, &InputTraces::new(), &SimConfig::new(7.0, 0.1).unwrap(), &[]).unwrap();
    assert_eq!(value_regions(&e), vec![ValueRegion { index: 0, start: 0.0, end: 7.0 }]);
}

#[test]
fn pipeline_regions_match_golden_switching_times() {
    let g = pipe3();
    let e = execute(&g.circuit, &InputTraces::new(), &SimConfig::new(32.0, 0.1).unwrap(), &[]).unwrap();
    let starts: Vec<f64> = value_regions(&e).iter().map(|r| r.start).collect();
    assert_eq!(
        starts,
        vec![0.0, 4.0, 9.0, 13.0, 14.0, 15.0, 19.0, 20.0, 23.0, 24.0, 25.0, 26.0, 30.0, 31.0]
    );
}

#[test]
fn uniform_regions_take_two_probes() {
    let c = inverter();
    let inputs = input_a();
    let o = c.signal("o").unwrap();
    let i = c.signal("i").unwrap();
    let prober = Prober::new(&c, &inputs, &[o], 0.1, 6.0).unwrap();
    let base = prober.baseline().clone();
    let regions = regions_until(&base, 4.0);
    // faults on the monitored output are always susceptible
    let out = bisect_region(&prober, o, &regions[2], 0.1, 0.01, FaultKind::XPulse, SearchMode::Bisect);
    assert_eq!((out.boundary, out.probes), (2.0, 2));
    let out = bisect_region(&prober, i, &regions[2], 0.1, 0.01, FaultKind::XPulse, SearchMode::Bisect);
    assert_eq!(out.probes, 2);
    assert_eq!(out.boundary, 2.0);
    // a region shorter than gamma: one probe
    let short = ValueRegion { index: 9, start: 3.0, end: 3.05 };
    assert_eq!(
        bisect_region(&prober, i, &short, 0.1, 0.01, FaultKind::XPulse, SearchMode::Bisect).probes,
        1
    );
}

#[test]
fn mixed_region_boundary_within_delta() {
    // o = MCE(a, b) with b rising at 5: a fault on `a` before the
    // up-action is scheduled is masked only while a=1 stays stable...
    let mut b = Circuit::builder("m");
    b.input("a").input("b").output("o", Zero).output("p", Zero);
    b.rules(crate::gen::gates::mce("a", "b", "o", 2.0).unwrap());
    b.rules(crate::gen::gates::inverter("a", "p", 3.0).unwrap());
    let c = b.build().unwrap();
    let inputs = InputTraces::new()
        .with("a", SignalTrace::new(One, vec![], 20.0).unwrap())
        .with("b", SignalTrace::new(Zero, vec![(5.0, One)], 20.0).unwrap());
    let mon = resolve(&c, &["o"]).unwrap();
    let cfg = AnalysisConfig::new(20.0).delta(0.01);
    let inj = resolve(&c, &["b"]).unwrap();
    let fast = analyze(&c, &inputs, &mon, &cfg, Some(&inj)).unwrap();
    let naive = analyze_naive(&c, &inputs, &mon, &cfg, 0.01, Some(&inj)).unwrap();
    assert_eq!(fast.windows.len(), naive.windows.len());
    for (f, n) in fast.windows.iter().zip(&naive.windows) {
        let (f, n): (&SensitivityWindow<f64>, &SensitivityWindow<f64>) = (f, n);
        assert!((f.start - n.start).abs() <= 0.01 + 1e-9, "{f:?} vs {n:?}");
        assert!((f.end - n.end).abs() <= 0.01 + 1e-9, "{f:?} vs {n:?}");
    }
}

#[test]
fn pipeline_p_fail() {
    let g = pipe3();
    let mon = resolve(&g.circuit, &g.monitored).unwrap();
    let r = analyze(&g.circuit, &InputTraces::new(), &mon, &AnalysisConfig::new(32.0), None).unwrap();
    assert!((r.p_fail - 0.54375).abs() < 1e-9, "{}", r.p_fail);
    assert_eq!(r.injected, ["c2", "en1", "en2", "en3", "src"]);
    assert!((r.total_window() - 87.0).abs() < 1e-9);
    assert!(r.covers("c2", 10.0));
    assert!(!r.covers("c2", 22.0));
    // the same from a thread pool
    let par = analyze(&g.circuit, &InputTraces::new(), &mon, &AnalysisConfig::new(32.0).jobs(3), None).unwrap();
    assert_eq!(par, r);
}

#[test]
fn monitored_signals_score_one() {
    let g = pipe3();
    let mon = resolve(&g.circuit, &g.monitored).unwrap();
    let all: Vec<SignalId> = g.circuit.signals().collect();
    let r = analyze(&g.circuit, &InputTraces::new(), &mon, &AnalysisConfig::new(32.0), Some(&all)).unwrap();
    assert_eq!(r.p_per_signal["c1"], 1.0);
    assert_eq!(r.p_per_signal["c3"], 1.0);
}

#[test]
fn naive_counts_and_agreement() {
    let g = pipe3();
    let mon = resolve(&g.circuit, &g.monitored).unwrap();
    let cfg = AnalysisConfig::new(32.0);
    let naive = analyze_naive(&g.circuit, &InputTraces::new(), &mon, &cfg, 0.25, None).unwrap();
    assert_eq!(naive.simulations, 5 * 128);
    let fast = analyze(&g.circuit, &InputTraces::new(), &mon, &cfg, None).unwrap();
    let base = execute(&g.circuit, &InputTraces::new(), &cfg.sim, &[]).unwrap();
    let regions = value_regions(&base).len() as f64;
    assert!((naive.p_fail - fast.p_fail).abs() <= 0.25 * regions / 32.0);
    assert!(analyze_naive(&g.circuit, &InputTraces::new(), &mon, &cfg, 0.0, None).is_err());
}

#[test]
fn weighted_p_fail() {
    let g = pipe3();
    let mon = resolve(&g.circuit, &g.monitored).unwrap();
    let r = analyze(&g.circuit, &InputTraces::new(), &mon, &AnalysisConfig::new(32.0), None).unwrap();
    let uniform: BTreeMap<String, f64> = r.injected.iter().map(|s| (s.clone(), 2.0)).collect();
    assert!((p_fail_weighted(&r, &uniform).unwrap() - r.p_fail).abs() < 1e-12);
    let mut only_c2 = uniform.clone();
    for (k, v) in only_c2.iter_mut() {
        *v = if k == "c2" { 1.0 } else { 0.0 };
    }
    assert_eq!(p_fail_weighted(&r, &only_c2).unwrap(), r.p_per_signal["c2"]);
    let mut missing = uniform.clone();
    missing.remove("src");
    assert_eq!(p_fail_weighted(&r, &missing), Err(AnalysisError::MissingWeight("src".into())));
    let zero: BTreeMap<String, f64> = r.injected.iter().map(|s| (s.clone(), 0.0)).collect();
    assert_eq!(p_fail_weighted(&r, &zero), Err(AnalysisError::ZeroWeight));
}

#[test]
fn region_equivalence_on_pipeline() {
    // Equivalence holds everywhere except the regions where an early
    // fault on c2/c3 still reaches state that a later one misses.
    let g = pipe3();
    let cfg = SimConfig::new(32.0, 0.1).unwrap();
    let base = execute(&g.circuit, &InputTraces::new(), &cfg, &[]).unwrap();
    let mut broken = Vec::new();
    for s in g.circuit.signals() {
        for r in &value_regions(&base) {
            if !check_region_equivalence(&g.circuit, &InputTraces::new(), r, s, 0.1, &cfg, 4).unwrap() {
                broken.push((g.circuit.signal_name(s).to_string(), r.start));
            }
        }
    }
    let expect = [("c2", 0.0), ("c2", 19.0), ("c2", 30.0), ("c3", 19.0), ("c3", 30.0)];
    assert_eq!(broken, expect.map(|(s, t)| (s.to_string(), t)));
    let mon = resolve(&g.circuit, &g.monitored).unwrap();
    let r = analyze(&g.circuit, &InputTraces::new(), &mon, &AnalysisConfig::new(32.0), None).unwrap();
    // the last probe of each region is placed where its X has settled, so
    // the broken regions above never show up as shape violations
    assert!(r.violations.is_empty(), "{:?}", r.violations);
}

#[test]
fn prober_matches_full_simulation() {
    let g = pipe3();
    let mon = resolve(&g.circuit, &g.monitored).unwrap();
    let cfg = SimConfig::new(32.0, 0.1).unwrap();
    let inputs = InputTraces::new();
    let prober = Prober::new(&g.circuit, &inputs, &mon, 0.1, 32.0).unwrap();
    for s in g.circuit.signals() {
        for k in 0..64 {
            let t = k as f64 * 0.5;
            let glitch = Glitch { signal: s, start: t, width: 0.1, kind: FaultKind::XPulse };
            assert_eq!(
                prober.probe(s, t, 0.1, FaultKind::XPulse),
                is_susceptible(&g.circuit, &inputs, &mon, &glitch, &cfg).unwrap(),
                "{} at {t}",
                g.circuit.signal_name(s)
            );
        }
    }
}

#[test]
fn config_errors() {
    let g = pipe3();
    let mon = resolve(&g.circuit, &g.monitored).unwrap();
    let bad = AnalysisConfig::new(32.0).gamma(0.0);
    assert!(matches!(
        analyze(&g.circuit, &InputTraces::new(), &mon, &bad, None),
        Err(AnalysisError::NonPositive { name: "gamma", .. })
    ));
    assert!(matches!(
        analyze(&g.circuit, &InputTraces::new(), &[], &AnalysisConfig::new(32.0), None),
        Err(AnalysisError::NoMonitored)
    ));
    assert!(matches!(resolve(&g.circuit, &["nope"]), Err(AnalysisError::UnknownSignal(_))));
}

