//! Circuits as delayed production rule sets, and their validation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::guard::{Guard, SignalId};
use crate::time::Time;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SignalKind {
    Input,
    Local,
    Output,
}

impl SignalKind {
    pub fn is_driven(self) -> bool {
        self != SignalKind::Input
    }
}

/// Position of a rule in [`Circuit::rules`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleId(pub u32);

impl RuleId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// `guard -> target = value [delay]`
#[derive(Debug, Clone, PartialEq)]
pub struct Rule<T, S = SignalId> {
    pub guard: Guard<S>,
    pub target: S,
    pub value: bool,
    pub delay: T,
}

impl<T: Time, S> Rule<T, S> {
    pub fn new(guard: Guard<S>, target: impl Into<S>, value: bool, delay: T) -> Self {
        Rule {
            guard,
            target: target.into(),
            value,
            delay,
        }
    }
}

/// Structural problems detected while assembling a circuit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error("signal `{0}` declared more than once")]
    DuplicateSignal(String),
    #[error("invalid signal name `{0}`")]
    InvalidName(String),
    #[error("reference to undeclared signal `{0}`")]
    UnknownSignal(String),
    #[error("no initial value for driven signal `{0}`")]
    MissingInitial(String),
    #[error("initial value given for input signal `{0}`")]
    InitialOnInput(String),
    #[error("circuit declares no signals")]
    Empty,
}

/// Semantic rule-set violation; the circuit is well-formed but not executable.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TargetIsInput { rule: usize, signal: String },
    NonPositiveDelay { rule: usize, delay: f64 },
    DuplicateRule { signal: String, value: bool, rules: [usize; 2] },
    MutualExclusion { signal: String, rules: [usize; 2], witness: Vec<(String, bool)> },
    SupportTooLarge { signal: String, size: usize },
}

/// Largest guard-pair support enumerated by the mutual-exclusion check.
pub const MAX_EXCLUSION_SUPPORT: usize = 22;

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TargetIsInput { rule, signal } => {
                write!(f, "rule #{rule} drives input signal `{signal}`")
            }
            Violation::NonPositiveDelay { rule, delay } => {
                write!(f, "rule #{rule}: delay must be positive (got {delay})")
            }
            Violation::DuplicateRule { signal, value, rules } => write!(
                f,
                "rules #{} and #{} both set `{signal}` = {}",
                rules[0],
                rules[1],
                u8::from(*value)
            ),
            Violation::MutualExclusion { signal, rules, witness } => {
                write!(
                    f,
                    "guards of rules #{} and #{} driving `{signal}` are both true for ",
                    rules[0], rules[1]
                )?;
                for (i, (name, v)) in witness.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{name}={}", u8::from(*v))?;
                }
                Ok(())
            }
            Violation::SupportTooLarge { signal, size } => write!(
                f,
                "guards driving `{signal}` reference {size} signals; exclusion check limited to {MAX_EXCLUSION_SUPPORT}"
            ),
        }
    }
}

impl Violation {
    /// Indices (in [`Circuit::rules`] order) of the rules involved.
    pub fn rules(&self) -> Vec<usize> {
        match self {
            Violation::TargetIsInput { rule, .. } | Violation::NonPositiveDelay { rule, .. } => vec![*rule],
            Violation::DuplicateRule { rules, .. } | Violation::MutualExclusion { rules, .. } => rules.to_vec(),
            Violation::SupportTooLarge { .. } => Vec::new(),
        }
    }
}

pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// A circuit: disjoint input, local and output signals, initial values of the
/// driven signals, and production rules.
///
/// Signals are stored in sorted-name order and rules in canonical order
/// (target, then up-rule before down-rule, then declaration order).
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit<T> {
    name: String,
    names: Vec<String>,
    kinds: Vec<SignalKind>,
    initial: Vec<Value>,
    rules: Vec<Rule<T>>,
    index: HashMap<String, SignalId>,
    readers: Vec<Vec<RuleId>>,
    drivers: Vec<Vec<RuleId>>,
}

impl<T: Time> Circuit<T> {
    pub fn builder(name: impl Into<String>) -> CircuitBuilder<T> {
        CircuitBuilder::new(name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_signals(&self) -> usize {
        self.names.len()
    }

    pub fn signals(&self) -> impl Iterator<Item = SignalId> + '_ {
        (0..self.names.len() as u32).map(SignalId)
    }

    pub fn signal_name(&self, id: SignalId) -> &str {
        &self.names[id.index()]
    }

    pub fn signal(&self, name: &str) -> Option<SignalId> {
        self.index.get(name).copied()
    }

    pub fn kind(&self, id: SignalId) -> SignalKind {
        self.kinds[id.index()]
    }

    pub fn signals_of(&self, kind: SignalKind) -> impl Iterator<Item = SignalId> + '_ {
        self.signals().filter(move |s| self.kind(*s) == kind)
    }

    pub fn driven_signals(&self) -> impl Iterator<Item = SignalId> + '_ {
        self.signals().filter(move |s| self.kind(*s).is_driven())
    }

    /// Initial value; for inputs this is a placeholder, the input trace decides.
    pub fn initial(&self, id: SignalId) -> Value {
        self.initial[id.index()]
    }

    pub fn initial_values(&self) -> &[Value] {
        &self.initial
    }

    pub fn rules(&self) -> &[Rule<T>] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &Rule<T> {
        &self.rules[id.index()]
    }

    /// Rules whose guard references `id`.
    pub fn readers(&self, id: SignalId) -> &[RuleId] {
        &self.readers[id.index()]
    }

    /// Rules whose action targets `id`.
    pub fn drivers(&self, id: SignalId) -> &[RuleId] {
        &self.drivers[id.index()]
    }

    /// Number of driven (local and output) signals, `|C|`.
    pub fn size(&self) -> usize {
        self.kinds.iter().filter(|k| k.is_driven()).count()
    }

    /// Smallest rule delay, `None` for a rule-free circuit.
    pub fn d_min(&self) -> Option<T> {
        self.rules.iter().map(|r| r.delay).reduce(T::min)
    }

    pub fn d_max(&self) -> Option<T> {
        self.rules.iter().map(|r| r.delay).reduce(T::max)
    }

    /// Rule with the names substituted back in, for display and serialization.
    pub fn named_rule(&self, id: RuleId) -> Rule<T, String> {
        let r = self.rule(id);
        let mut name = |s: &SignalId| Ok::<_, ()>(self.signal_name(*s).to_string());
        Rule {
            guard: r.guard.try_map(&mut name).unwrap(),
            target: self.signal_name(r.target).to_string(),
            value: r.value,
            delay: r.delay,
        }
    }

    /// Checks every rule-set invariant; returns all violations found.
    ///
    /// Mutual exclusion of the up- and down-rule of a signal is decided by
    /// enumerating Boolean assignments to the signals the two guards reference.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut violations = Vec::new();
        for (i, r) in self.rules.iter().enumerate() {
            if !self.kind(r.target).is_driven() {
                violations.push(Violation::TargetIsInput {
                    rule: i,
                    signal: self.signal_name(r.target).to_string(),
                });
            }
            if !(r.delay > T::zero()) || !r.delay.is_finite() {
                violations.push(Violation::NonPositiveDelay {
                    rule: i,
                    delay: r.delay.as_f64(),
                });
            }
        }
        for s in self.signals() {
            let mut up: Option<usize> = None;
            let mut down: Option<usize> = None;
            for rid in self.drivers(s) {
                let slot = if self.rule(*rid).value { &mut up } else { &mut down };
                match slot {
                    Some(first) => violations.push(Violation::DuplicateRule {
                        signal: self.signal_name(s).to_string(),
                        value: self.rule(*rid).value,
                        rules: [*first, rid.index()],
                    }),
                    None => *slot = Some(rid.index()),
                }
            }
            if let (Some(u), Some(d)) = (up, down) {
                if let Some(v) = self.check_exclusion(s, u, d) {
                    violations.push(v);
                }
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    fn check_exclusion(&self, s: SignalId, up: usize, down: usize) -> Option<Violation> {
        let (gu, gd) = (&self.rules[up].guard, &self.rules[down].guard);
        let mut support = gu.support();
        support.extend(gd.support());
        let support: Vec<SignalId> = support.into_iter().collect();
        if support.len() > MAX_EXCLUSION_SUPPORT {
            return Some(Violation::SupportTooLarge {
                signal: self.signal_name(s).to_string(),
                size: support.len(),
            });
        }
        let mut values = vec![Value::Zero; self.num_signals()];
        for mask in 0u64..(1u64 << support.len()) {
            for (bit, sig) in support.iter().enumerate() {
                values[sig.index()] = Value::from(mask >> bit & 1 == 1);
            }
            if gu.eval(&values) == Value::One && gd.eval(&values) == Value::One {
                let witness = support
                    .iter()
                    .enumerate()
                    .map(|(bit, sig)| (self.signal_name(*sig).to_string(), mask >> bit & 1 == 1))
                    .collect();
                return Some(Violation::MutualExclusion {
                    signal: self.signal_name(s).to_string(),
                    rules: [up, down],
                    witness,
                });
            }
        }
        None
    }
}

/// Assembles a [`Circuit`] from named declarations.
#[derive(Debug, Clone)]
pub struct CircuitBuilder<T> {
    name: String,
    decls: Vec<(String, SignalKind)>,
    initial: BTreeMap<String, Value>,
    rules: Vec<Rule<T, String>>,
}

impl<T: Time> CircuitBuilder<T> {
    pub fn new(name: impl Into<String>) -> Self {
        CircuitBuilder {
            name: name.into(),
            decls: Vec::new(),
            initial: BTreeMap::new(),
            rules: Vec::new(),
        }
    }

    pub fn declare(&mut self, name: impl Into<String>, kind: SignalKind) -> &mut Self {
        self.decls.push((name.into(), kind));
        self
    }

    pub fn input(&mut self, name: impl Into<String>) -> &mut Self {
        self.declare(name, SignalKind::Input)
    }

    pub fn local(&mut self, name: impl Into<String>, init: Value) -> &mut Self {
        let name = name.into();
        self.initial.insert(name.clone(), init);
        self.declare(name, SignalKind::Local)
    }

    pub fn output(&mut self, name: impl Into<String>, init: Value) -> &mut Self {
        let name = name.into();
        self.initial.insert(name.clone(), init);
        self.declare(name, SignalKind::Output)
    }

    pub fn init(&mut self, name: impl Into<String>, value: Value) -> &mut Self {
        self.initial.insert(name.into(), value);
        self
    }

    pub fn rule(&mut self, rule: Rule<T, String>) -> &mut Self {
        self.rules.push(rule);
        self
    }

    pub fn rules(&mut self, rules: impl IntoIterator<Item = Rule<T, String>>) -> &mut Self {
        self.rules.extend(rules);
        self
    }

    pub fn build(&self) -> Result<Circuit<T>, BuildError> {
        if self.decls.is_empty() {
            return Err(BuildError::Empty);
        }
        let mut sorted: Vec<(String, SignalKind)> = self.decls.clone();
        sorted.sort();
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(BuildError::DuplicateSignal(w[0].0.clone()));
            }
        }
        let mut index = HashMap::new();
        for (i, (n, _)) in sorted.iter().enumerate() {
            if !is_valid_name(n) {
                return Err(BuildError::InvalidName(n.clone()));
            }
            index.insert(n.clone(), SignalId(i as u32));
        }
        let lookup = |n: &String| index.get(n).copied().ok_or_else(|| BuildError::UnknownSignal(n.clone()));

        let mut initial = vec![Value::Zero; sorted.len()];
        for (n, v) in &self.initial {
            let id = lookup(n)?;
            if sorted[id.index()].1 == SignalKind::Input {
                return Err(BuildError::InitialOnInput(n.clone()));
            }
            initial[id.index()] = *v;
        }
        for (n, kind) in &sorted {
            if kind.is_driven() && !self.initial.contains_key(n) {
                return Err(BuildError::MissingInitial(n.clone()));
            }
        }

        let mut rules = Vec::with_capacity(self.rules.len());
        for r in &self.rules {
            rules.push(Rule {
                guard: r.guard.try_map(&mut |n| lookup(n))?,
                target: lookup(&r.target)?,
                value: r.value,
                delay: r.delay,
            });
        }
        // stable: duplicates keep declaration order
        rules.sort_by_key(|r: &Rule<T>| (r.target, !r.value));

        let n = sorted.len();
        let mut readers = vec![Vec::new(); n];
        let mut drivers = vec![Vec::new(); n];
        for (i, r) in rules.iter().enumerate() {
            let rid = RuleId(i as u32);
            drivers[r.target.index()].push(rid);
            for s in r.guard.support() {
                readers[s.index()].push(rid);
            }
        }
        let (names, kinds) = sorted.into_iter().unzip();
        Ok(Circuit {
            name: self.name.clone(),
            names,
            kinds,
            initial,
            rules,
            index,
            readers,
            drivers,
        })
    }
}
