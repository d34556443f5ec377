//! Simulation and transient-fault sensitivity analysis of quasi
//! delay-insensitive circuits modeled as delayed production rule sets over
//! the ternary value domain `{0, X, 1}`.
//!
//! Everything is generic over the [`Time`] scalar; the aliases at the crate
//! root fix it to `f64`.

pub mod analysis;
pub mod circuit;
pub mod gen;
pub mod io;
pub mod guard;
pub mod sim;
pub mod sweep;
pub mod time;
pub mod trace;
pub mod value;

pub use circuit::{BuildError, CircuitBuilder, Rule, RuleId, SignalKind, Violation};
pub use analysis::{AnalysisError, FaultKind, Glitch, Prober, SearchMode};
pub use gen::{GenError, Generated};
pub use guard::{Guard, SignalId};
pub use sim::{Cause, ExternalEvent, LogEntry, SimError};
pub use time::Time;
pub use value::Value;

pub type Circuit = circuit::Circuit<f64>;
pub type SignalTrace = trace::SignalTrace<f64>;
pub type InputTraces = trace::InputTraces<f64>;
pub type SimConfig = sim::SimConfig<f64>;
pub type Execution = sim::Execution<f64>;
pub type AnalysisConfig = analysis::AnalysisConfig<f64>;
pub type SensitivityReport = analysis::SensitivityReport<f64>;
