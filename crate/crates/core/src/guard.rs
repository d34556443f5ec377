//! Guard expressions of production rules.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{BitAnd, BitOr, Not};

use crate::value::Value;

/// Index of a signal within a [`Circuit`](crate::circuit::Circuit).
///
/// Ids are assigned in sorted-name order, so comparing ids is comparing names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignalId(pub u32);

impl SignalId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Expression tree over signal references of type `S`.
///
/// Parsed netlists use `Guard<String>`; circuits store `Guard<SignalId>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Guard<S = SignalId> {
    Signal(S),
    Not(Box<Guard<S>>),
    And(Vec<Guard<S>>),
    Or(Vec<Guard<S>>),
}

impl<S> Guard<S> {
    pub fn signal(s: impl Into<S>) -> Self {
        Guard::Signal(s.into())
    }

    /// Conjunction; a single operand is returned unchanged.
    pub fn all(mut children: Vec<Guard<S>>) -> Self {
        assert!(!children.is_empty(), "empty conjunction");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Guard::And(children)
        }
    }

    /// Disjunction; a single operand is returned unchanged.
    pub fn any(mut children: Vec<Guard<S>>) -> Self {
        assert!(!children.is_empty(), "empty disjunction");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Guard::Or(children)
        }
    }

    /// Kleene evaluation; `lookup` supplies the value of each referenced signal.
    pub fn eval_with(&self, lookup: &mut impl FnMut(&S) -> Value) -> Value {
        match self {
            Guard::Signal(s) => lookup(s),
            Guard::Not(inner) => !inner.eval_with(lookup),
            Guard::And(cs) => {
                let mut acc = Value::One;
                for c in cs {
                    acc = acc & c.eval_with(lookup);
                    if acc == Value::Zero {
                        break;
                    }
                }
                acc
            }
            Guard::Or(cs) => {
                let mut acc = Value::Zero;
                for c in cs {
                    acc = acc | c.eval_with(lookup);
                    if acc == Value::One {
                        break;
                    }
                }
                acc
            }
        }
    }

    pub fn try_map<U, E>(&self, f: &mut impl FnMut(&S) -> Result<U, E>) -> Result<Guard<U>, E> {
        Ok(match self {
            Guard::Signal(s) => Guard::Signal(f(s)?),
            Guard::Not(inner) => Guard::Not(Box::new(inner.try_map(f)?)),
            Guard::And(cs) => Guard::And(cs.iter().map(|c| c.try_map(f)).collect::<Result<_, _>>()?),
            Guard::Or(cs) => Guard::Or(cs.iter().map(|c| c.try_map(f)).collect::<Result<_, _>>()?),
        })
    }

    pub fn for_each_signal<'a>(&'a self, f: &mut impl FnMut(&'a S)) {
        match self {
            Guard::Signal(s) => f(s),
            Guard::Not(inner) => inner.for_each_signal(f),
            Guard::And(cs) | Guard::Or(cs) => cs.iter().for_each(|c| c.for_each_signal(f)),
        }
    }

    /// Set of referenced signals.
    pub fn support(&self) -> BTreeSet<S>
    where
        S: Ord + Clone,
    {
        let mut out = BTreeSet::new();
        self.for_each_signal(&mut |s| {
            out.insert(s.clone());
        });
        out
    }

    pub fn references(&self, target: &S) -> bool
    where
        S: PartialEq,
    {
        let mut hit = false;
        self.for_each_signal(&mut |s| hit |= s == target);
        hit
    }
}

impl Guard<SignalId> {
    pub fn eval(&self, values: &[Value]) -> Value {
        self.eval_with(&mut |s| values[s.index()])
    }
}

impl<S> Not for Guard<S> {
    type Output = Guard<S>;
    fn not(self) -> Guard<S> {
        Guard::Not(Box::new(self))
    }
}

impl<S> BitAnd for Guard<S> {
    type Output = Guard<S>;
    fn bitand(self, rhs: Guard<S>) -> Guard<S> {
        match self {
            Guard::And(mut cs) => {
                cs.push(rhs);
                Guard::And(cs)
            }
            lhs => Guard::And(vec![lhs, rhs]),
        }
    }
}

impl<S> BitOr for Guard<S> {
    type Output = Guard<S>;
    fn bitor(self, rhs: Guard<S>) -> Guard<S> {
        match self {
            Guard::Or(mut cs) => {
                cs.push(rhs);
                Guard::Or(cs)
            }
            lhs => Guard::Or(vec![lhs, rhs]),
        }
    }
}

impl Guard<String> {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        // 0 = top, 1 = inside or, 2 = inside and, 3 = operand of not
        match self {
            Guard::Signal(s) => f.write_str(s),
            Guard::Not(inner) => {
                f.write_str("!")?;
                inner.fmt_prec(f, 3)
            }
            Guard::And(cs) => {
                let paren = parent > 2;
                if paren {
                    f.write_str("(")?;
                }
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    // Nested conjunctions keep their grouping so trees round-trip.
                    c.fmt_prec(f, if matches!(c, Guard::And(_)) { 3 } else { 2 })?;
                }
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Guard::Or(cs) => {
                let paren = parent > 1;
                if paren {
                    f.write_str("(")?;
                }
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    c.fmt_prec(f, if matches!(c, Guard::Or(_)) { 2 } else { 1 })?;
                }
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Guard<String> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn g(s: &str) -> Guard<String> {
        Guard::signal(s)
    }

    fn eval(expr: &Guard<String>, env: &[(&str, Value)]) -> Value {
        let env: HashMap<_, _> = env.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        expr.eval_with(&mut |s| env[s])
    }

    #[test]
    fn kleene_guard_examples() {
        use Value::*;
        assert_eq!(eval(&(g("a") & g("b")), &[("a", One), ("b", X)]), X);
        assert_eq!(eval(&(g("a") | g("b")), &[("a", One), ("b", X)]), One);
        assert_eq!(eval(&!g("a"), &[("a", X)]), X);
        assert_eq!(eval(&(g("a") & !g("a")), &[("a", X)]), X);
    }

    #[test]
    fn display_parenthesizes_by_precedence() {
        let e = (g("a") | g("b")) & !(g("c") & g("d"));
        assert_eq!(e.to_string(), "(a | b) & !(c & d)");
        let nested = Guard::And(vec![Guard::And(vec![g("a"), g("b")]), g("c")]);
        assert_eq!(nested.to_string(), "(a & b) & c");
    }

    #[test]
    fn support_collects_unique_names() {
        let e = (g("b") & g("a")) | !g("b");
        let names: Vec<_> = e.support().into_iter().collect();
        assert_eq!(names, vec!["a".to_string(), "b".to_string()]);
    }
}
