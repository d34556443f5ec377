//! Generators for Muller pipelines, rings and dual-rail multi-bit pipelines.

pub mod gates;

use crate::circuit::{BuildError, Circuit, Rule};
use crate::guard::Guard;
use crate::sim::Execution;
use crate::time::Time;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("gate output `{0}` is also one of its inputs")]
    NameCollision(String),
    #[error("delay must be positive (got {0})")]
    NonPositiveDelay(f64),
    #[error("need at least one stage")]
    NoStages,
    #[error("need at least one bit")]
    NoBits,
    #[error("ring needs at least 3 stages (got {0})")]
    RingTooSmall(usize),
    #[error("ring needs at least one token")]
    NoTokens,
    #[error("no bubble: {stages} stages cannot hold {tokens} token(s); at most {max}")]
    NoBubble { stages: usize, tokens: usize, max: usize },
    #[error(transparent)]
    Build(#[from] BuildError),
}

/// A generated circuit with its default monitored signals.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated<T> {
    pub circuit: Circuit<T>,
    pub monitored: Vec<String>,
}

fn positive<T: Time>(d: T) -> Result<(), GenError> {
    if d > T::zero() && d.is_finite() {
        Ok(())
    } else {
        Err(GenError::NonPositiveDelay(d.as_f64()))
    }
}

/// Linear Muller pipeline with an inverter source and an inverter sink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineSpec<T> {
    pub stages: usize,
    pub inv_delay: T,
    pub mce_delay: T,
    pub source_delay: T,
    pub sink_delay: T,
    /// Initial source output. With the default 0 the source inverter fires
    /// first, at `source_delay`; with 1 the first stage fires at time 0.
    pub source_init: bool,
}

impl<T: Time> PipelineSpec<T> {
    pub fn new(stages: usize, inv_delay: T, mce_delay: T, source_delay: T, sink_delay: T) -> Self {
        PipelineSpec {
            stages,
            inv_delay,
            mce_delay,
            source_delay,
            sink_delay,
            source_init: false,
        }
    }

    pub fn with_source_init(self, source_init: bool) -> Self {
        PipelineSpec { source_init, ..self }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.stages == 0 {
            return Err(GenError::NoStages);
        }
        for d in [self.inv_delay, self.mce_delay, self.source_delay, self.sink_delay] {
            positive(d)?;
        }
        Ok(())
    }
}

/// Stage outputs `c1..cn`, enables `en1..enn` and the source output `src`.
///
/// `MCE_i(data_i, en_i) -> c_i` with `data_1 = src`, `data_i = c_{i-1}`;
/// `en_i = !c_{i+1}` and the sink `en_n = !c_n`; the source is `src = !c1`.
/// All stages start empty (`c_i = 0`) with every enable at 1; the source starts
/// at `spec.source_init`.
pub fn linear_pipeline<T: Time>(spec: &PipelineSpec<T>) -> Result<Generated<T>, GenError> {
    spec.validate()?;
    let n = spec.stages;
    let c = |i: usize| format!("c{i}");
    let en = |i: usize| format!("en{i}");
    let mut b = Circuit::builder(format!("linear{n}"));
    b.local("src", Value::from(spec.source_init));
    b.rules(gates::inverter(&c(1), "src", spec.source_delay)?);
    for i in 1..=n {
        b.output(c(i), Value::Zero);
        b.local(en(i), Value::One);
        let data = if i == 1 { "src".to_string() } else { c(i - 1) };
        b.rules(gates::mce(&data, &en(i), &c(i), spec.mce_delay)?);
        if i < n {
            b.rules(gates::inverter(&c(i + 1), &en(i), spec.inv_delay)?);
        } else {
            b.rules(gates::inverter(&c(n), &en(n), spec.sink_delay)?);
        }
    }
    Ok(Generated {
        circuit: b.build()?,
        monitored: if n == 1 { vec![c(1)] } else { vec![c(1), c(n)] },
    })
}

/// Muller ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSpec<T> {
    pub stages: usize,
    /// 4-phase tokens; each occupies two adjacent stages (data and spacer).
    pub tokens: usize,
    pub inv_delay: T,
    pub mce_delay: T,
    /// Rotates the whole occupancy pattern by this many stages.
    pub offset: usize,
}

impl<T: Time> RingSpec<T> {
    pub fn new(stages: usize, tokens: usize, inv_delay: T, mce_delay: T) -> Self {
        RingSpec {
            stages,
            tokens,
            inv_delay,
            mce_delay,
            offset: 0,
        }
    }

    pub fn max_tokens(stages: usize) -> usize {
        stages.saturating_sub(1) / 2
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.stages < 3 {
            return Err(GenError::RingTooSmall(self.stages));
        }
        if self.tokens == 0 {
            return Err(GenError::NoTokens);
        }
        if self.stages < 2 * self.tokens + 1 {
            return Err(GenError::NoBubble {
                stages: self.stages,
                tokens: self.tokens,
                max: Self::max_tokens(self.stages),
            });
        }
        positive(self.inv_delay)?;
        positive(self.mce_delay)
    }

    /// Initial stage outputs: a 1 at the first stage of each token, 0 elsewhere.
    ///
    /// Token starts are spread as evenly as the ring allows, so bubbles end up
    /// between tokens whether they are scarce or plentiful.
    pub fn occupancy(&self) -> Vec<bool> {
        let (n, k) = (self.stages, self.tokens);
        let mut occ = vec![false; n];
        for j in 0..k {
            occ[(j * n / k + self.offset) % n] = true;
        }
        occ
    }
}

/// Ring of `stages` MCEs: `MCE_i(c_{i-1}, en_i) -> c_i`, `en_i = !c_{i+1}`,
/// indices modulo the ring size. Monitored: `c1` and the last stage.
pub fn ring_pipeline<T: Time>(spec: &RingSpec<T>) -> Result<Generated<T>, GenError> {
    spec.validate()?;
    let n = spec.stages;
    let occ = spec.occupancy();
    let c = |i: usize| format!("c{}", (i + n - 1) % n + 1);
    let en = |i: usize| format!("en{i}");
    let mut b = Circuit::builder(format!("ring{n}x{}", spec.tokens));
    for i in 1..=n {
        let init = Value::from(occ[i - 1]);
        let next = occ[i % n];
        b.output(c(i), init);
        b.local(en(i), Value::from(!next));
        b.rules(gates::mce(&c(i - 1), &en(i), &c(i), spec.mce_delay)?);
        b.rules(gates::inverter(&c(i + 1), &en(i), spec.inv_delay)?);
    }
    Ok(Generated {
        circuit: b.build()?,
        monitored: vec![c(1), c(n)],
    })
}

/// Dual-rail linear pipeline with per-stage completion detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiBitSpec<T> {
    pub bits: usize,
    pub pipeline: PipelineSpec<T>,
}

impl<T: Time> MultiBitSpec<T> {
    pub fn new(bits: usize, pipeline: PipelineSpec<T>) -> Self {
        MultiBitSpec { bits, pipeline }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.bits == 0 {
            return Err(GenError::NoBits);
        }
        self.pipeline.validate()
    }
}

/// Balanced MCE tree over `leaves`, left half taking the extra leaf.
/// Returns the root signal.
fn cd_tree<T: Time>(
    b: &mut crate::circuit::CircuitBuilder<T>,
    leaves: &[String],
    root: &str,
    prefix: &str,
    delay: T,
) -> Result<String, GenError> {
    if leaves.len() == 1 {
        return Ok(leaves[0].clone());
    }
    let split = leaves.len().div_ceil(2);
    let left = cd_tree(b, &leaves[..split], &format!("{prefix}l"), &format!("{prefix}l"), delay)?;
    let right = cd_tree(b, &leaves[split..], &format!("{prefix}r"), &format!("{prefix}r"), delay)?;
    b.local(root, Value::Zero);
    b.rules(gates::mce(&left, &right, root, delay)?);
    Ok(root.to_string())
}

/// Stage `i`, bit `j`: rails `s{i}.t{j}`/`s{i}.f{j}` latched by MCEs with the
/// stage enable `en{i}`; `s{i}.o{j} = t | f`; the ORs meet in a balanced MCE
/// tree rooted at `s{i}.cd` (a lone OR for one bit). `en_i = !cd_{i+1}`, and
/// the sink inverts the last stage's CD with the sink delay.
///
/// The source drives `src.t{j}`/`src.f{j}` with the source delay while stage
/// 1 is empty, and resets them once it is full. Token `m` carries a one-hot
/// word rotated by `m` bits; `src.m{j}` records bit `j` of the last word and
/// `src.n{j}` holds it across the spacer phase for bit `j+1` to read.
///
/// Monitored: `s1.cd` (acknowledge to the source) and `s{n}.cd`.
pub fn multibit_linear_pipeline<T: Time>(spec: &MultiBitSpec<T>) -> Result<Generated<T>, GenError> {
    spec.validate()?;
    let p = &spec.pipeline;
    let (n, k) = (p.stages, spec.bits);
    let sig = |s: &str| Guard::<String>::signal(s);
    let mut b = Circuit::builder(format!("dualrail{n}x{k}"));

    let ack = "s1.cd".to_string();
    for j in 0..k {
        let prev = (j + k - 1) % k;
        let (t, f) = (format!("src.t{j}"), format!("src.f{j}"));
        let (m, nn) = (format!("src.m{j}"), format!("src.n{j}"));
        let last_one = j == k - 1;
        b.local(&t, Value::Zero).local(&f, Value::Zero);
        b.local(&m, Value::from(last_one)).local(&nn, Value::from(last_one));
        let sel = format!("src.n{prev}");
        b.rule(Rule::new(!sig(&ack) & sig(&sel), t.as_str(), true, p.source_delay));
        b.rule(Rule::new(sig(&ack), t.as_str(), false, p.source_delay));
        b.rule(Rule::new(!sig(&ack) & !sig(&sel), f.as_str(), true, p.source_delay));
        b.rule(Rule::new(sig(&ack), f.as_str(), false, p.source_delay));
        b.rule(Rule::new(sig(&t) & !sig(&f), m.as_str(), true, p.inv_delay));
        b.rule(Rule::new(sig(&f) & !sig(&t), m.as_str(), false, p.inv_delay));
        b.rule(Rule::new(sig(&ack) & sig(&m), nn.as_str(), true, p.inv_delay));
        b.rule(Rule::new(sig(&ack) & !sig(&m), nn.as_str(), false, p.inv_delay));
    }

    for i in 1..=n {
        let en = format!("en{i}");
        b.local(&en, Value::One);
        let mut ors = Vec::with_capacity(k);
        for j in 0..k {
            let (t, f) = (format!("s{i}.t{j}"), format!("s{i}.f{j}"));
            let (dt, df) = if i == 1 {
                (format!("src.t{j}"), format!("src.f{j}"))
            } else {
                (format!("s{}.t{j}", i - 1), format!("s{}.f{j}", i - 1))
            };
            b.output(&t, Value::Zero).output(&f, Value::Zero);
            b.rules(gates::mce(&dt, &en, &t, p.mce_delay)?);
            b.rules(gates::mce(&df, &en, &f, p.mce_delay)?);
            let o = if k == 1 { format!("s{i}.cd") } else { format!("s{i}.o{j}") };
            b.local(&o, Value::Zero);
            b.rules(gates::or2(&t, &f, &o, p.inv_delay)?);
            ors.push(o);
        }
        if k > 1 {
            let root = format!("s{i}.cd");
            cd_tree(&mut b, &ors, &root, &format!("s{i}.cd."), p.inv_delay)?;
        }
        let cd = format!("s{i}.cd");
        if i < n {
            b.rules(gates::inverter(&format!("s{}.cd", i + 1), &en, p.inv_delay)?);
        } else {
            b.rules(gates::inverter(&cd, &en, p.sink_delay)?);
        }
    }
    Ok(Generated {
        circuit: b.build()?,
        monitored: vec![ack, format!("s{n}.cd")],
    })
}

/// 4-phase tokens per `unit` of time passing `signal`: half its transition
/// count over the horizon measured in units.
pub fn measure_throughput<T: Time>(execution: &Execution<T>, signal: &str, unit: T) -> Option<f64> {
    let tr = execution.trace_named(signal)?;
    let units = execution.horizon().as_f64() / unit.as_f64();
    if units <= 0.0 {
        return Some(0.0);
    }
    Some(tr.transitions().len() as f64 / 2.0 / units)
}

#[cfg(test)]
mod tests;
