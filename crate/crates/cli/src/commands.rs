use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use faultscope::analysis::{
    analyze, analyze_naive, make_transient, p_fail_weighted, resolve, AnalysisConfig, FaultKind, Glitch, SearchMode,
};
use faultscope::io::{
    parse_circuit, parse_traces, render_waveform, serialize_circuit, write_execution, write_report, Netlist,
};
use faultscope::sim::{execute, Execution, SimConfig};
use faultscope::sweep::{run_sweep, write_sweep_csv, Axis, GeneratorKind, SweepError, SweepSpec};
use faultscope::trace::InputTraces;
use faultscope::SignalId;

use crate::{AnalyzeArgs, CircuitArgs, Command, GenerateArgs, InjectArgs, SimulateArgs, SweepArgs};

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type Result<T> = std::result::Result<T, Failure>;

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

fn semantic(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

fn runtime(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 3, error: error.into() }
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate { circuit } => validate(&circuit),
        Command::Simulate(a) => simulate(a),
        Command::Inject(a) => inject(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Generate(a) => generate(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(runtime)
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(runtime),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_circuit(path: &Path) -> Result<Netlist<f64>> {
    let text = read(path)?;
    parse_circuit(&text).map_err(|e| {
        let code = if e.is_semantic() { 2 } else { 1 };
        Failure {
            code,
            error: anyhow!("{}: {e}", path.display()),
        }
    })
}

struct Loaded {
    netlist: Netlist<f64>,
    inputs: InputTraces<f64>,
}

fn load(common: &CircuitArgs) -> Result<Loaded> {
    if !(common.until >= 0.0) || !common.until.is_finite() {
        return Err(usage(anyhow!("--until must be a non-negative number")));
    }
    let netlist = load_circuit(&common.circuit)?;
    let inputs = match &common.traces {
        Some(p) => parse_traces(&read(p)?).map_err(|e| usage(anyhow!("{}: {e}", p.display())))?,
        None => InputTraces::new(),
    };
    Ok(Loaded { netlist, inputs })
}

fn monitored_ids(netlist: &Netlist<f64>, flag: &[String]) -> Result<Vec<SignalId>> {
    let names = if flag.is_empty() { &netlist.monitored } else { flag };
    if names.is_empty() {
        return Err(semantic(anyhow!("no monitored signals: pass --monitor or add a monitor line")));
    }
    resolve(&netlist.circuit, names).map_err(semantic)
}

fn validate(path: &Path) -> Result<()> {
    let n = load_circuit(path)?;
    println!(
        "valid: {} signals, {} rules",
        n.circuit.num_signals(),
        n.circuit.rules().len()
    );
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let l = load(&a.common)?;
    let c = &l.netlist.circuit;
    let exec = if a.common.until == 0.0 {
        Execution::quiescent(c, &l.inputs, 0.0)
    } else {
        let config = SimConfig::new(a.common.until, a.common.epsilon).map_err(usage)?;
        execute(c, &l.inputs, &config, &[]).map_err(semantic)?
    };
    for (name, tr) in exec.names().iter().zip(exec.traces()) {
        let steps: Vec<String> = tr.transitions().iter().map(|(t, v)| format!("{v}@{t}")).collect();
        println!("{name}: {} {}", tr.initial(), steps.join(" "));
    }
    println!("events: {}", exec.count_events());
    if let Some(p) = &a.out_svg {
        write_out(Some(p), &render_waveform(&exec, None, &l.netlist.monitored))?;
    }
    if let Some(p) = &a.out_json {
        write_out(Some(p), &write_execution(&exec))?;
    }
    Ok(())
}

fn parse_glitch_spec(s: &str) -> Result<(String, f64, f64)> {
    let bad = || usage(anyhow!("--at expects SIGNAL@TIME:WIDTH, got `{s}`"));
    let (signal, rest) = s.split_once('@').ok_or_else(bad)?;
    let (time, width) = rest.split_once(':').ok_or_else(bad)?;
    let time: f64 = time.trim().parse().map_err(|_| bad())?;
    let width: f64 = width.trim().parse().map_err(|_| bad())?;
    Ok((signal.trim().to_string(), time, width))
}

fn inject(a: InjectArgs) -> Result<()> {
    let l = load(&a.common)?;
    let c = &l.netlist.circuit;
    let monitored = monitored_ids(&l.netlist, &a.monitor)?;
    let (name, start, width) = parse_glitch_spec(&a.at)?;
    let signal = c.signal(&name).ok_or_else(|| semantic(anyhow!("unknown signal `{name}`")))?;
    let kind: FaultKind = a.kind.parse().map_err(|e: String| usage(anyhow!(e)))?;
    let config = SimConfig::new(a.common.until, a.common.epsilon).map_err(usage)?;
    let base = execute(c, &l.inputs, &config, &[]).map_err(semantic)?;
    let glitch = Glitch { signal, start, width, kind };
    let events = make_transient(&glitch, &base).map_err(semantic)?;
    let faulty = execute(c, &l.inputs, &config, &events).map_err(semantic)?;
    let hit = monitored.iter().any(|m| faulty.ever_x(*m));
    println!("{}", if hit { "SUSCEPTIBLE" } else { "MASKED" });
    if let Some(p) = &a.out_svg {
        let names: Vec<String> = monitored.iter().map(|m| c.signal_name(*m).to_string()).collect();
        write_out(Some(p), &render_waveform(&faulty, None, &names))?;
    }
    Ok(())
}

fn parse_weights(text: &str, path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() || (i == 0 && line.replace(' ', "") == "signal,weight") {
            continue;
        }
        let bad = || usage(anyhow!("{}:{}: expected `signal,weight`", path.display(), i + 1));
        let (s, w) = line.split_once(',').ok_or_else(bad)?;
        let w: f64 = w.trim().parse().map_err(|_| bad())?;
        out.insert(s.trim().to_string(), w);
    }
    Ok(out)
}

fn analyze_cmd(a: AnalyzeArgs) -> Result<()> {
    let l = load(&a.common)?;
    let c = &l.netlist.circuit;
    let monitored = monitored_ids(&l.netlist, &a.monitor)?;
    let kind: FaultKind = a.kind.parse().map_err(|e: String| usage(anyhow!(e)))?;
    let config = AnalysisConfig::new(a.common.until)
        .epsilon(a.common.epsilon)
        .gamma(a.gamma)
        .delta(a.delta)
        .kind(kind)
        .mode(if a.exhaustive { SearchMode::Exhaustive } else { SearchMode::Bisect })
        .settle(!a.no_settle)
        .jobs(a.jobs);
    let injection: Option<Vec<SignalId>> = if !a.inject.is_empty() {
        Some(resolve(c, &a.inject).map_err(semantic)?)
    } else if a.include_monitored {
        Some(c.signals().collect())
    } else {
        None
    };
    let report = match a.naive_step {
        Some(h) => analyze_naive(c, &l.inputs, &monitored, &config, h, injection.as_deref()),
        None => analyze(c, &l.inputs, &monitored, &config, injection.as_deref()),
    }
    .map_err(semantic)?;
    println!("P(fail) = {}", report.p_fail);
    if let Some(p) = &a.weights {
        let weights = parse_weights(&read(p)?, p)?;
        let pw = p_fail_weighted(&report, &weights).map_err(semantic)?;
        println!("weighted P(fail) = {pw}");
    }
    println!("simulations: {}", report.simulations);
    if !report.violations.is_empty() && !a.exhaustive {
        log::warn!(
            "{} region(s) contradict the postfix shape and were counted whole; --exhaustive grid-scans them",
            report.violations.len()
        );
    }
    if let Some(p) = &a.out_json {
        write_out(Some(p), &write_report(&report))?;
    }
    if let Some(p) = &a.out_svg {
        let config = SimConfig::new(a.common.until, a.common.epsilon).map_err(usage)?;
        let base = execute(c, &l.inputs, &config, &[]).map_err(semantic)?;
        write_out(Some(p), &render_waveform(&base, Some(&report.windows), &report.monitored))?;
    }
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<()> {
    let kind: GeneratorKind = a.generator.parse().map_err(|e: String| usage(anyhow!(e)))?;
    let names: Vec<&str> = match kind {
        GeneratorKind::Linear => vec!["stages", "inv", "mce", "source", "sink"],
        GeneratorKind::Ring => vec!["stages", "tokens", "inv", "mce"],
        GeneratorKind::Multibit => vec!["bits", "stages", "inv", "mce", "source", "sink"],
    };
    if a.params.len() > names.len() {
        return Err(usage(anyhow!(
            "{} takes at most {} parameters ({})",
            a.generator,
            names.len(),
            names.join(" ")
        )));
    }
    let mut params: BTreeMap<String, f64> = names.iter().zip(&a.params).map(|(n, v)| (n.to_string(), *v)).collect();
    if let Some(o) = a.offset {
        if kind != GeneratorKind::Ring {
            return Err(usage(anyhow!("--offset applies to ring only")));
        }
        params.insert("offset".into(), o as f64);
    }
    if let Some(s) = &a.source_init {
        if kind != GeneratorKind::Linear {
            return Err(usage(anyhow!("--source-init applies to linear only")));
        }
        params.insert("source_init".into(), s.parse().expect("validated by clap"));
    }
    for (n, v) in &params {
        let integral = ["stages", "tokens", "bits", "offset"].contains(&n.as_str());
        if integral && (v.fract() != 0.0 || *v < 0.0) {
            return Err(usage(anyhow!("{n} must be a non-negative integer (got {v})")));
        }
    }
    let g = kind.build(&params).map_err(semantic)?;
    write_out(a.out.as_ref(), &serialize_circuit(&g.circuit, &g.monitored))
}

fn parse_axis(s: &str) -> Result<Axis> {
    let bad = || usage(anyhow!("--sweep expects NAME=FROM:TO:STEP or NAME=V1,V2,..., got `{s}`"));
    let (name, spec) = s.split_once('=').ok_or_else(bad)?;
    let nums = |part: &str, sep: char| -> Result<Vec<f64>> {
        part.split(sep).map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect()
    };
    let axis = if spec.contains(':') {
        let v = nums(spec, ':')?;
        if v.len() != 3 {
            return Err(bad());
        }
        Axis::range(name.trim(), v[0], v[1], v[2])
    } else {
        Axis::values(name.trim(), nums(spec, ',')?)
    };
    axis.map_err(usage)
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => SweepSpec::from_toml(&read(p)?).map_err(|e| usage(anyhow!("{}: {e}", p.display())))?,
        None => {
            let g = a
                .generator
                .as_deref()
                .ok_or_else(|| usage(anyhow!("pass --spec or --generator")))?;
            let t = a.until.ok_or_else(|| usage(anyhow!("--until is required without --spec")))?;
            SweepSpec::new(g.parse().map_err(|e: String| usage(anyhow!(e)))?, t)
        }
    };
    if a.spec.is_some() && a.generator.is_some() {
        return Err(usage(anyhow!("--generator conflicts with --spec")));
    }
    for p in &a.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| usage(anyhow!("--param expects NAME=VALUE, got `{p}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| usage(anyhow!("--param {k}: not a number")))?;
        spec.params.insert(k.trim().to_string(), v);
    }
    for s in &a.sweeps {
        let axis = parse_axis(s)?;
        spec.axes.retain(|x| x.name != axis.name);
        spec.axes.push(axis);
    }
    if let Some(t) = a.until {
        spec.horizon = t;
    }
    spec.epsilon = a.epsilon.unwrap_or(spec.epsilon);
    spec.gamma = a.gamma.unwrap_or(spec.gamma);
    spec.delta = a.delta.unwrap_or(spec.delta);
    let rows = run_sweep(&spec, a.jobs).map_err(|e| match e {
        SweepError::Spec(_) => usage(e),
        other => semantic(other),
    })?;
    let csv = write_sweep_csv(&spec, &rows);
    let out = a.out.clone().or_else(|| spec.out.clone().map(PathBuf::from));
    write_out(out.as_ref(), &csv)
}
