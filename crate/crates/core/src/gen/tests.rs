use super::*;
use crate::sim::{execute, SimConfig};
use crate::trace::InputTraces;

fn pipe3() -> Generated<f64> {
    linear_pipeline(&PipelineSpec::new(3, 1.0, 5.0, 4.0, 4.0)).unwrap()
}

fn run(g: &Generated<f64>, horizon: f64) -> Execution<f64> {
    execute(&g.circuit, &InputTraces::new(), &SimConfig::new(horizon, 0.1).unwrap(), &[]).unwrap()
}

#[test]
fn linear_pipeline_shape() {
    let g = pipe3();
    assert!(g.circuit.validate().is_ok());
    assert_eq!(g.circuit.driven_signals().count(), 7);
    assert_eq!(g.circuit.rules().len(), 14);
    assert_eq!(g.monitored, vec!["c1".to_string(), "c3".to_string()]);
}

#[test]
fn linear_pipeline_first_token() {
    let e = run(&pipe3(), 40.0);
    let c1 = e.trace_named("c1").unwrap().transitions();
    assert_eq!(c1[0], (9.0, Value::One));
    let eager = linear_pipeline(&PipelineSpec::new(3, 1.0, 5.0, 4.0, 4.0).with_source_init(true)).unwrap();
    assert_eq!(run(&eager, 40.0).trace_named("c1").unwrap().transitions()[0], (5.0, Value::One));
    assert!(e.trace_named("c3").unwrap().transitions().len() >= 2);
    assert!(e.log().iter().all(|l| l.value != Value::X));
}

#[test]
fn pipeline_errors() {
    assert_eq!(linear_pipeline(&PipelineSpec::new(0, 1.0, 1.0, 1.0, 1.0)).unwrap_err(), GenError::NoStages);
    assert_eq!(
        linear_pipeline(&PipelineSpec::new(2, 1.0, 0.0, 1.0, 1.0)).unwrap_err(),
        GenError::NonPositiveDelay(0.0)
    );
}

#[test]
fn ring_validation() {
    assert_eq!(
        ring_pipeline(&RingSpec::new(4, 2, 1.0, 1.0)).unwrap_err(),
        GenError::NoBubble { stages: 4, tokens: 2, max: 1 }
    );
    assert_eq!(ring_pipeline(&RingSpec::new(2, 1, 1.0, 1.0)).unwrap_err(), GenError::RingTooSmall(2));
    assert_eq!(ring_pipeline(&RingSpec::new(5, 0, 1.0, 1.0)).unwrap_err(), GenError::NoTokens);
    assert_eq!(RingSpec::<f64>::max_tokens(20), 9);
}

#[test]
fn ring_circulates() {
    for tokens in 1..=9 {
        let g = ring_pipeline(&RingSpec::new(20, tokens, 1.0, 1.0)).unwrap();
        assert!(g.circuit.validate().is_ok());
        let e = run(&g, 100.0);
        assert!(e.log().iter().all(|l| l.value != Value::X), "tokens {tokens}");
        let tp = measure_throughput(&e, "c1", 1.0).unwrap();
        assert!(tp > 0.0, "ring with {tokens} tokens deadlocked");
    }
}

#[test]
fn multibit_shape_and_liveness() {
    for bits in [1, 2, 3, 4, 8] {
        let g = multibit_linear_pipeline(&MultiBitSpec::new(bits, PipelineSpec::new(3, 1.0, 5.0, 4.0, 4.0))).unwrap();
        assert!(g.circuit.validate().is_ok(), "bits {bits}");
        let e = run(&g, 200.0);
        assert!(e.log().iter().all(|l| l.value != Value::X), "bits {bits}");
        assert!(e.trace_named("s3.cd").unwrap().transitions().len() >= 4, "bits {bits}");
    }
    assert_eq!(
        multibit_linear_pipeline(&MultiBitSpec::new(0, PipelineSpec::new(3, 1.0, 1.0, 1.0, 1.0))).unwrap_err(),
        GenError::NoBits
    );
}

#[test]
fn throughput_arithmetic() {
    let mut b = Circuit::builder("osc");
    b.local("a", Value::Zero);
    b.rule(Rule::new(Guard::signal("a"), "a", false, 10.0));
    b.rule(Rule::new(!Guard::signal("a"), "a", true, 10.0));
    let c = b.build().unwrap();
    let e = execute(&c, &InputTraces::new(), &SimConfig::new(100.0, 0.1).unwrap(), &[]).unwrap();
    assert_eq!(e.trace_named("a").unwrap().transitions().len(), 10);
    assert_eq!(measure_throughput(&e, "a", 1.0), Some(0.05));
    assert_eq!(measure_throughput(&e, "nope", 1.0), None);
}
