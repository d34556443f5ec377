//! Parameter sweeps over generated circuits.

use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use crate::analysis::{analyze, resolve, AnalysisConfig, AnalysisError, FaultKind};
use crate::gen::{
    linear_pipeline, measure_throughput, multibit_linear_pipeline, ring_pipeline, GenError, Generated, MultiBitSpec,
    PipelineSpec, RingSpec,
};
use crate::io::fmt_time;
use crate::sim::{execute, SimConfig};
use crate::trace::InputTraces;

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    Spec(String),
    #[error("at {point}: {source}")]
    Gen { point: String, source: GenError },
    #[error("at {point}: {source}")]
    Analysis { point: String, source: AnalysisError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Linear,
    Ring,
    Multibit,
}

impl FromStr for GeneratorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(GeneratorKind::Linear),
            "ring" => Ok(GeneratorKind::Ring),
            "multibit" => Ok(GeneratorKind::Multibit),
            other => Err(format!("unknown generator `{other}` (expected linear, ring or multibit)")),
        }
    }
}

impl GeneratorKind {
    /// Parameters understood by this generator, with defaults.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            GeneratorKind::Linear => &[
                ("stages", 3.0),
                ("inv", 1.0),
                ("mce", 5.0),
                ("source", 4.0),
                ("sink", 4.0),
                ("source_init", 0.0),
            ],
            GeneratorKind::Ring => &[("stages", 3.0), ("tokens", 1.0), ("inv", 1.0), ("mce", 5.0), ("offset", 0.0)],
            GeneratorKind::Multibit => &[
                ("bits", 1.0),
                ("stages", 3.0),
                ("inv", 1.0),
                ("mce", 5.0),
                ("source", 4.0),
                ("sink", 4.0),
            ],
        }
    }

    /// Builds the circuit for `params`, filling in defaults.
    pub fn build(self, params: &BTreeMap<String, f64>) -> Result<Generated<f64>, GenError> {
        let get = |k: &str| {
            params
                .get(k)
                .copied()
                .or_else(|| self.defaults().iter().find(|(n, _)| *n == k).map(|(_, v)| *v))
                .unwrap_or(0.0)
        };
        let count = |k: &str| get(k).max(0.0).round() as usize;
        let pipeline = PipelineSpec::new(count("stages"), get("inv"), get("mce"), get("source"), get("sink"));
        match self {
            GeneratorKind::Linear => linear_pipeline(&pipeline.with_source_init(get("source_init") != 0.0)),
            GeneratorKind::Ring => {
                let mut spec = RingSpec::new(count("stages"), count("tokens"), get("inv"), get("mce"));
                spec.offset = count("offset");
                ring_pipeline(&spec)
            }
            GeneratorKind::Multibit => multibit_linear_pipeline(&MultiBitSpec::new(count("bits"), pipeline)),
        }
    }
}

/// One swept parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    /// Values `from, from + step, ...` up to and including `to`.
    pub fn range(name: impl Into<String>, from: f64, to: f64, step: f64) -> Result<Self, SweepError> {
        let name = name.into();
        if !(step > 0.0) || !step.is_finite() || !from.is_finite() || !to.is_finite() {
            return Err(SweepError::Spec(format!("sweep `{name}`: step must be positive and bounds finite")));
        }
        if to < from {
            return Err(SweepError::Spec(format!("sweep `{name}`: empty range {from}..{to}")));
        }
        let n = ((to - from) / step + 1e-9).floor() as usize + 1;
        let values = (0..n).map(|k| from + k as f64 * step).collect();
        Ok(Axis { name, values })
    }

    pub fn values(name: impl Into<String>, values: Vec<f64>) -> Result<Self, SweepError> {
        let name = name.into();
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(SweepError::Spec(format!("sweep `{name}`: need at least one finite value")));
        }
        Ok(Axis { name, values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub generator: GeneratorKind,
    pub params: BTreeMap<String, f64>,
    /// At most two; the first varies slowest.
    pub axes: Vec<Axis>,
    pub horizon: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub kind: FaultKind,
    pub out: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    generator: GeneratorKind,
    #[serde(rename = "T")]
    horizon: f64,
    gamma: Option<f64>,
    delta: Option<f64>,
    epsilon: Option<f64>,
    fault_kind: Option<String>,
    out: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default)]
    sweep: BTreeMap<String, AxisFile>,
    /// Order of the swept parameters; defaults to name order.
    order: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisFile {
    from: Option<f64>,
    to: Option<f64>,
    step: Option<f64>,
    values: Option<Vec<f64>>,
}

impl SweepSpec {
    pub fn new(generator: GeneratorKind, horizon: f64) -> Self {
        SweepSpec {
            generator,
            params: BTreeMap::new(),
            axes: Vec::new(),
            horizon,
            gamma: 0.1,
            delta: 0.01,
            epsilon: 0.1,
            kind: FaultKind::XPulse,
            out: None,
        }
    }

    /// Parses a TOML spec file.
    pub fn from_toml(text: &str) -> Result<Self, SweepError> {
        let file: SpecFile = toml::from_str(text).map_err(|e| SweepError::Spec(e.to_string()))?;
        let mut spec = SweepSpec::new(file.generator, file.horizon);
        spec.gamma = file.gamma.unwrap_or(spec.gamma);
        spec.delta = file.delta.unwrap_or(spec.delta);
        spec.epsilon = file.epsilon.unwrap_or(spec.epsilon);
        if let Some(k) = file.fault_kind {
            spec.kind = k.parse().map_err(SweepError::Spec)?;
        }
        spec.out = file.out;
        spec.params = file.params;
        let order = file.order.unwrap_or_else(|| file.sweep.keys().cloned().collect());
        if order.len() != file.sweep.len() || order.iter().any(|n| !file.sweep.contains_key(n)) {
            return Err(SweepError::Spec("`order` must list every swept parameter once".into()));
        }
        for name in order {
            let a = &file.sweep[&name];
            let axis = match (a.values.clone(), a.from, a.to, a.step) {
                (Some(v), None, None, None) => Axis::values(name, v)?,
                (None, Some(f), Some(t), Some(s)) => Axis::range(name, f, t, s)?,
                _ => {
                    return Err(SweepError::Spec(format!(
                        "sweep `{name}`: give either `values` or all of `from`, `to`, `step`"
                    )))
                }
            };
            spec.axes.push(axis);
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.axes.len() > 2 {
            return Err(SweepError::Spec("at most two swept parameters".into()));
        }
        let known: Vec<&str> = self.generator.defaults().iter().map(|(n, _)| *n).collect();
        for name in self.params.keys().chain(self.axes.iter().map(|a| &a.name)) {
            if !known.contains(&name.as_str()) {
                return Err(SweepError::Spec(format!(
                    "unknown parameter `{name}` (expected one of {})",
                    known.join(", ")
                )));
            }
        }
        if self.axes.len() == 2 && self.axes[0].name == self.axes[1].name {
            return Err(SweepError::Spec(format!("parameter `{}` swept twice", self.axes[0].name)));
        }
        Ok(())
    }

    /// Grid points in row-major order, each a full parameter map.
    pub fn points(&self) -> Vec<BTreeMap<String, f64>> {
        let mut points = vec![self.params.clone()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.insert(axis.name.clone(), *v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn analysis_config(&self) -> AnalysisConfig<f64> {
        AnalysisConfig::new(self.horizon)
            .epsilon(self.epsilon)
            .gamma(self.gamma)
            .delta(self.delta)
            .kind(self.kind)
            .jobs(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Values of the swept parameters, in axis order.
    pub point: Vec<f64>,
    pub p_fail: f64,
    pub simulations: usize,
    /// Ring sweeps only: 4-phase tokens per inverter delay passing `c1`.
    pub throughput: Option<f64>,
}

fn point_label(spec: &SweepSpec, p: &BTreeMap<String, f64>) -> String {
    spec.axes
        .iter()
        .map(|a| format!("{}={}", a.name, fmt_time(p[&a.name])))
        .collect::<Vec<_>>()
        .join(", ")
}

fn run_point(spec: &SweepSpec, p: &BTreeMap<String, f64>) -> Result<SweepRow, SweepError> {
    let label = || point_label(spec, p);
    let g = spec
        .generator
        .build(p)
        .map_err(|source| SweepError::Gen { point: label(), source })?;
    let wrap = |source: AnalysisError| SweepError::Analysis { point: label(), source };
    let monitored = resolve(&g.circuit, &g.monitored).map_err(wrap)?;
    let inputs = InputTraces::new();
    let report = analyze(&g.circuit, &inputs, &monitored, &spec.analysis_config(), None).map_err(wrap)?;
    let throughput = if spec.generator == GeneratorKind::Ring {
        let config = SimConfig::new(spec.horizon, spec.epsilon).map_err(|e| wrap(e.into()))?;
        let base = execute(&g.circuit, &inputs, &config, &[]).map_err(|e| wrap(e.into()))?;
        let inv = p.get("inv").copied().unwrap_or(1.0);
        measure_throughput(&base, "c1", inv)
    } else {
        None
    };
    Ok(SweepRow {
        point: spec.axes.iter().map(|a| p[&a.name]).collect(),
        p_fail: report.p_fail,
        simulations: report.simulations,
        throughput,
    })
}

/// Runs one analysis per grid point on `jobs` threads (0: global pool).
/// Rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    let points = spec.points();
    let work = || points.par_iter().map(|p| run_point(spec, p)).collect::<Result<Vec<_>, _>>();
    if jobs == 0 {
        return work();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SweepError::Spec(format!("could not start worker pool: {e}")))?
        .install(work)
}

/// CSV with the swept parameters, `p_fail`, and for rings `throughput`.
pub fn write_sweep_csv(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = spec.axes.iter().map(|a| a.name.clone()).collect();
    header.push("p_fail".into());
    if spec.generator == GeneratorKind::Ring {
        header.push("throughput".into());
    }
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec: Vec<String> = r.point.iter().map(|v| fmt_time(*v)).collect();
        rec.push(format!("{:?}", r.p_fail));
        if spec.generator == GeneratorKind::Ring {
            rec.push(r.throughput.map_or(String::new(), |t| format!("{t:?}")));
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_inclusive() {
        let a = Axis::range("sink", 1.0, 25.0, 6.0).unwrap();
        assert_eq!(a.values, vec![1.0, 7.0, 13.0, 19.0, 25.0]);
        let b = Axis::range("x", 0.0, 0.3, 0.1).unwrap();
        assert_eq!(b.values.len(), 4);
        assert!(Axis::range("x", 2.0, 1.0, 1.0).is_err());
        assert!(Axis::range("x", 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn spec_file() {
        let text = r#"
generator = "linear"
T = 20
order = ["source", "sink"]

[params]
stages = 3

[sweep.source]
values = [1, 4]

[sweep.sink]
from = 1
to = 5
step = 4
"#;
        let spec = SweepSpec::from_toml(text).unwrap();
        assert_eq!(spec.axes[0].name, "source");
        assert_eq!(spec.axes[1].values, vec![1.0, 5.0]);
        let pts = spec.points();
        assert_eq!(pts.len(), 4);
        assert_eq!((pts[1]["source"], pts[1]["sink"]), (1.0, 5.0));
        let rows = run_sweep(&spec, 2).unwrap();
        assert_eq!(rows, run_sweep(&spec, 1).unwrap());
        let csv = write_sweep_csv(&spec, &rows);
        assert!(csv.starts_with("source,sink,p_fail\n1,1,"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn spec_errors() {
        assert!(SweepSpec::from_toml("generator = \"linear\"\nT = 5\n[params]\ntokens = 2\n").is_err());
        assert!(SweepSpec::from_toml("generator = \"cube\"\nT = 5\n").is_err());
        assert!(SweepSpec::from_toml("generator = \"ring\"\nT = 5\n[sweep.tokens]\nfrom = 1\n").is_err());
    }

    #[test]
    fn ring_rows_carry_throughput() {
        let mut spec = SweepSpec::new(GeneratorKind::Ring, 60.0);
        spec.params.insert("stages".into(), 7.0);
        spec.axes.push(Axis::values("tokens", vec![1.0, 2.0]).unwrap());
        let rows = run_sweep(&spec, 0).unwrap();
        assert!(rows.iter().all(|r| r.throughput.is_some_and(|t| t > 0.0)));
        assert!(write_sweep_csv(&spec, &rows).starts_with("tokens,p_fail,throughput\n"));
        spec.axes[0] = Axis::values("tokens", vec![4.0]).unwrap();
        assert!(matches!(run_sweep(&spec, 0), Err(SweepError::Gen { .. })));
    }
}
