//! Production-rule encodings of primitive gates.

use crate::circuit::Rule;
use crate::gen::GenError;
use crate::guard::Guard;
use crate::time::Time;

type NamedRule<T> = Rule<T, String>;

fn check<T: Time>(inputs: &[&str], out: &str, delay: T) -> Result<(), GenError> {
    if !(delay > T::zero()) {
        return Err(GenError::NonPositiveDelay(delay.as_f64()));
    }
    if let Some(clash) = inputs.iter().find(|i| **i == out) {
        return Err(GenError::NameCollision(clash.to_string()));
    }
    Ok(())
}

fn sig(s: &str) -> Guard<String> {
    Guard::signal(s)
}

/// `i -> o=0 [d]`, `!i -> o=1 [d]`
pub fn inverter<T: Time>(input: &str, out: &str, delay: T) -> Result<[NamedRule<T>; 2], GenError> {
    check(&[input], out, delay)?;
    Ok([
        Rule::new(sig(input), out, false, delay),
        Rule::new(!sig(input), out, true, delay),
    ])
}

/// Muller C-element: output follows matching inputs and holds otherwise.
pub fn mce<T: Time>(a: &str, b: &str, out: &str, delay: T) -> Result<[NamedRule<T>; 2], GenError> {
    check(&[a, b], out, delay)?;
    Ok([
        Rule::new(sig(a) & sig(b), out, true, delay),
        Rule::new(!sig(a) & !sig(b), out, false, delay),
    ])
}

pub fn or2<T: Time>(a: &str, b: &str, out: &str, delay: T) -> Result<[NamedRule<T>; 2], GenError> {
    check(&[a, b], out, delay)?;
    Ok([
        Rule::new(sig(a) | sig(b), out, true, delay),
        Rule::new(!sig(a) & !sig(b), out, false, delay),
    ])
}

pub fn and2<T: Time>(a: &str, b: &str, out: &str, delay: T) -> Result<[NamedRule<T>; 2], GenError> {
    check(&[a, b], out, delay)?;
    Ok([
        Rule::new(sig(a) & sig(b), out, true, delay),
        Rule::new(!sig(a) | !sig(b), out, false, delay),
    ])
}
