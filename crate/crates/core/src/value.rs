//! Ternary signal values with Kleene semantics.

use std::fmt;
use std::ops::{BitAnd, BitOr, Not};
use std::str::FromStr;

/// A signal value: Boolean `Zero`/`One`, or `X` (potentially non-binary).
///
/// Operators follow strong Kleene logic, i.e. the min/max/complement
/// algebra over `{0, 1/2, 1}` with `X` at 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Value {
    #[default]
    Zero,
    X,
    One,
}

impl Value {
    pub const ALL: [Value; 3] = [Value::Zero, Value::X, Value::One];

    pub fn is_bool(self) -> bool {
        self != Value::X
    }

    pub fn to_bool(self) -> Option<bool> {
        match self {
            Value::Zero => Some(false),
            Value::One => Some(true),
            Value::X => None,
        }
    }

    /// Twice the algebraic level, so the encoding stays integral.
    fn level(self) -> u8 {
        match self {
            Value::Zero => 0,
            Value::X => 1,
            Value::One => 2,
        }
    }

    fn from_level(level: u8) -> Value {
        match level {
            0 => Value::Zero,
            1 => Value::X,
            _ => Value::One,
        }
    }

    /// Level as a real number in `[0, 1]`, used for waveform rendering.
    pub fn as_fraction(self) -> f64 {
        f64::from(self.level()) / 2.0
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        if b {
            Value::One
        } else {
            Value::Zero
        }
    }
}

impl Not for Value {
    type Output = Value;
    fn not(self) -> Value {
        Value::from_level(2 - self.level())
    }
}

impl BitAnd for Value {
    type Output = Value;
    fn bitand(self, rhs: Value) -> Value {
        Value::from_level(self.level().min(rhs.level()))
    }
}

impl BitOr for Value {
    type Output = Value;
    fn bitor(self, rhs: Value) -> Value {
        Value::from_level(self.level().max(rhs.level()))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Value::Zero => "0",
            Value::X => "X",
            Value::One => "1",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown value token `{0}` (expected 0, 1 or X)")]
pub struct ParseValueError(pub String);

impl FromStr for Value {
    type Err = ParseValueError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "0" => Ok(Value::Zero),
            "1" => Ok(Value::One),
            "X" | "x" => Ok(Value::X),
            other => Err(ParseValueError(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::Value::*;
    use super::*;

    #[test]
    fn kleene_examples() {
        assert_eq!(One & X, X);
        assert_eq!(One | X, One);
        assert_eq!(!X, X);
        assert_eq!(X & !X, X);
        assert_eq!(Zero & X, Zero);
        assert_eq!(Zero | X, X);
    }

    #[test]
    fn agrees_with_boolean_logic() {
        for a in [false, true] {
            for b in [false, true] {
                assert_eq!(Value::from(a) & Value::from(b), Value::from(a && b));
                assert_eq!(Value::from(a) | Value::from(b), Value::from(a || b));
            }
            assert_eq!(!Value::from(a), Value::from(!a));
        }
    }

    #[test]
    fn parse_tokens() {
        assert_eq!("X".parse::<Value>().unwrap(), X);
        assert_eq!("1".parse::<Value>().unwrap(), One);
        assert!("2".parse::<Value>().is_err());
    }
}
