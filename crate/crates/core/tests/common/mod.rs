//! Seeded random circuits shared by the property and acceptance tests.
#![allow(dead_code)]

use faultscope::{Circuit, Guard, InputTraces, Rule, SignalId, SignalTrace, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All times are multiples of `1 / TICKS_PER_UNIT`.
pub const TICKS_PER_UNIT: f64 = 20.0;

pub struct Case {
    pub seed: u64,
    pub circuit: Circuit,
    pub inputs: InputTraces,
    pub monitored: Vec<SignalId>,
    pub monitored_names: Vec<String>,
    pub horizon: f64,
}

fn ticks(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> f64 {
    rng.gen_range(lo..=hi) as f64 / TICKS_PER_UNIT
}

fn random_guard(rng: &mut ChaCha8Rng, pool: &[String], depth: u32) -> Guard<String> {
    if depth == 0 || rng.gen_bool(0.4) {
        let g = Guard::signal(pool.choose(rng).unwrap().as_str());
        return if rng.gen_bool(0.5) { !g } else { g };
    }
    let kids = (0..rng.gen_range(2..=3)).map(|_| random_guard(rng, pool, depth - 1)).collect();
    if rng.gen_bool(0.5) {
        Guard::all(kids)
    } else {
        Guard::any(kids)
    }
}

/// A random valid circuit with at most six driven signals, delays in
/// `[0.5, 5]` and a horizon of at most 50, plus random input traces.
pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_in = rng.gen_range(1..=2);
    let n_drv = rng.gen_range(1..=6);
    let inputs: Vec<String> = (0..n_in).map(|i| format!("i{i}")).collect();
    let driven: Vec<String> = (0..n_drv).map(|i| format!("s{i}")).collect();
    let n_mon = rng.gen_range(1..=n_drv.min(2));
    let horizon = rng.gen_range(10..=50) as f64;

    let mut b = Circuit::builder(format!("rand{seed}"));
    for i in &inputs {
        b.input(i.as_str());
    }
    for (k, s) in driven.iter().enumerate() {
        let init = match rng.gen_range(0..10) {
            0 => Value::X,
            n => Value::from(n % 2 == 0),
        };
        if k < n_mon {
            b.output(s.as_str(), init);
        } else {
            b.local(s.as_str(), init);
        }
    }
    let all: Vec<String> = inputs.iter().chain(&driven).cloned().collect();
    for s in &driven {
        let others: Vec<String> = all.iter().filter(|x| *x != s).cloned().collect();
        let up_delay = ticks(&mut rng, 10, 100);
        let down_delay = if rng.gen_bool(0.5) { up_delay } else { ticks(&mut rng, 10, 100) };
        let (up, down) = match rng.gen_range(0..4) {
            // inverter
            0 => {
                let a = Guard::signal(others.choose(&mut rng).unwrap().as_str());
                (!a.clone(), a)
            }
            // C-element
            1 if others.len() >= 2 => {
                let pick: Vec<&String> = others.choose_multiple(&mut rng, 2).collect();
                let (a, c) = (Guard::signal(pick[0].as_str()), Guard::signal(pick[1].as_str()));
                (a.clone() & c.clone(), !a & !c)
            }
            // self-holding gate: set/reset on independent guards
            2 if others.len() >= 2 => {
                let pick: Vec<&String> = others.choose_multiple(&mut rng, 2).collect();
                let (a, c) = (Guard::signal(pick[0].as_str()), Guard::signal(pick[1].as_str()));
                (a.clone() & !c.clone(), !a & c)
            }
            _ => {
                let g = random_guard(&mut rng, &others, 2);
                (g.clone(), !g)
            }
        };
        b.rule(Rule::new(up, s.as_str(), true, up_delay));
        b.rule(Rule::new(down, s.as_str(), false, down_delay));
    }
    let circuit = b.build().expect("generated circuit builds");
    circuit.validate().expect("generated circuit is valid");

    let mut traces = InputTraces::new();
    for i in &inputs {
        let mut v = Value::from(rng.gen_bool(0.5));
        let initial = v;
        let n = rng.gen_range(0..=4);
        let mut times: Vec<u32> = (0..n).map(|_| rng.gen_range(1..(horizon * TICKS_PER_UNIT) as u32)).collect();
        times.sort();
        times.dedup();
        let mut steps = Vec::new();
        for t in times {
            v = if rng.gen_range(0..8) == 0 { Value::X } else if v == Value::X { Value::from(rng.gen_bool(0.5)) } else { !v };
            steps.push((t as f64 / TICKS_PER_UNIT, v));
        }
        traces.insert(i.as_str(), SignalTrace::from_steps(initial, steps, horizon));
    }
    let monitored_names: Vec<String> = driven[..n_mon].to_vec();
    let monitored = monitored_names.iter().map(|n| circuit.signal(n).unwrap()).collect();
    Case { seed, circuit, inputs: traces, monitored, monitored_names, horizon }
}

/// The first `n` random cases whose fault-free execution changes some signal.
pub fn active_cases(n: usize) -> Vec<Case> {
    (0u64..)
        .map(random_case)
        .filter(|c| {
            let cfg = faultscope::SimConfig::new(c.horizon, 0.1).unwrap();
            faultscope::sim::execute(&c.circuit, &c.inputs, &cfg, &[]).unwrap().count_events() > 0
        })
        .take(n)
        .collect()
}
