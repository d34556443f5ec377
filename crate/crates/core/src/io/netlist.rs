use std::collections::BTreeMap;
use std::fmt;

use crate::circuit::{BuildError, Circuit, CircuitBuilder, Rule, SignalKind, Violation};
use crate::guard::Guard;
use crate::io::fmt_time;
use crate::time::Time;
use crate::value::Value;

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetlistError {
    #[error("{pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{}: {source}", span.start)]
    Build { span: Span, source: BuildError },
    #[error("{}: monitored signal `{signal}` is an input", span.start)]
    MonitorInput { span: Span, signal: String },
    #[error("{}", fmt_violations(.0))]
    Invalid(Vec<(Violation, Vec<Span>)>),
}

impl NetlistError {
    /// Whether the text parsed but describes an unusable circuit.
    pub fn is_semantic(&self) -> bool {
        !matches!(self, NetlistError::Syntax { .. })
    }
}

fn fmt_violations(list: &[(Violation, Vec<Span>)]) -> String {
    list.iter()
        .map(|(v, spans)| match spans.first() {
            Some(s) => format!("{}: {v}", s.start),
            None => v.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// A parsed circuit with its `monitor` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist<T> {
    pub circuit: Circuit<T>,
    pub monitored: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Sym(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

fn lex(text: &str) -> Result<Vec<Token>, NetlistError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        let pos = |c: usize| Pos { line: li + 1, col: c + 1 };
        while i < chars.len() {
            let c = chars[i];
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            } else if c.is_ascii_digit() || c == '.' {
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    i += 1;
                    if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                        i += 1;
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                Tok::Number(chars[start..i].iter().collect())
            } else {
                let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
                let sym = if two == "->" {
                    "->"
                } else {
                    match c {
                        '!' => "!",
                        '&' => "&",
                        '|' => "|",
                        '(' => "(",
                        ')' => ")",
                        '=' => "=",
                        '[' => "[",
                        ']' => "]",
                        ',' => ",",
                        _ => {
                            return Err(NetlistError::Syntax {
                                pos: pos(i),
                                message: format!("unexpected character `{c}`"),
                            })
                        }
                    }
                };
                i += sym.len();
                Tok::Sym(sym)
            };
            out.push(Token {
                tok,
                span: Span { start: pos(start), end: pos(i) },
            });
        }
    }
    Ok(out)
}

const KEYWORDS: [&str; 7] = ["circuit", "inputs", "locals", "outputs", "init", "rule", "monitor"];

struct Parser {
    toks: Vec<Token>,
    at: usize,
    eof: Pos,
}

type PResult<T> = Result<T, NetlistError>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.tok)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map_or(self.eof, |t| t.span.start)
    }

    fn error<R>(&self, message: impl Into<String>) -> PResult<R> {
        Err(NetlistError::Syntax {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Ident(s)) | Some(Tok::Number(s)) => format!("`{s}`"),
            Some(Tok::Sym(s)) => format!("`{s}`"),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_keyword(kw) {
            self.at += 1;
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", self.describe()))
        }
    }

    fn sym(&mut self, s: &str) -> PResult<()> {
        if self.peek() == Some(&Tok::Sym(match s {
            "->" => "->",
            "=" => "=",
            "[" => "[",
            "]" => "]",
            ")" => ")",
            _ => unreachable!(),
        })) {
            self.at += 1;
            Ok(())
        } else {
            self.error(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.toks.get(self.at) {
            Some(Token { tok: Tok::Ident(s), span }) if !KEYWORDS.contains(&s.as_str()) => {
                self.at += 1;
                Ok((s.clone(), *span))
            }
            _ => self.error(format!("expected signal name, found {}", self.describe())),
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<(String, Span)>> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => out.push(self.ident()?),
                Some(Tok::Sym(",")) if !out.is_empty() => {
                    self.at += 1;
                    out.push(self.ident()?);
                }
                _ => return Ok(out),
            }
        }
    }

    fn value(&mut self, allow_x: bool) -> PResult<Value> {
        let v = match self.peek() {
            Some(Tok::Number(n)) if n == "0" => Value::Zero,
            Some(Tok::Number(n)) if n == "1" => Value::One,
            Some(Tok::Ident(n)) if allow_x && n == "X" => Value::X,
            _ => {
                let expected = if allow_x { "0, 1 or X" } else { "0 or 1" };
                return self.error(format!("expected {expected}, found {}", self.describe()));
            }
        };
        self.at += 1;
        Ok(v)
    }

    fn number<T: Time>(&mut self) -> PResult<T> {
        if let Some(Tok::Number(n)) = self.peek() {
            if let Ok(x) = n.parse::<f64>() {
                if x.is_finite() {
                    self.at += 1;
                    return Ok(T::lit(x));
                }
            }
        }
        self.error(format!("expected delay, found {}", self.describe()))
    }

    fn expr(&mut self, refs: &mut Vec<(String, Span)>) -> PResult<Guard<String>> {
        let mut terms = vec![self.and(refs)?];
        while self.peek() == Some(&Tok::Sym("|")) {
            self.at += 1;
            terms.push(self.and(refs)?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Guard::Or(terms) })
    }

    fn and(&mut self, refs: &mut Vec<(String, Span)>) -> PResult<Guard<String>> {
        let mut terms = vec![self.unary(refs)?];
        while self.peek() == Some(&Tok::Sym("&")) {
            self.at += 1;
            terms.push(self.unary(refs)?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Guard::And(terms) })
    }

    fn unary(&mut self, refs: &mut Vec<(String, Span)>) -> PResult<Guard<String>> {
        match self.peek() {
            Some(Tok::Sym("!")) => {
                self.at += 1;
                Ok(Guard::Not(Box::new(self.unary(refs)?)))
            }
            Some(Tok::Sym("(")) => {
                self.at += 1;
                let e = self.expr(refs)?;
                self.sym(")")?;
                Ok(e)
            }
            Some(Tok::Ident(_)) => {
                let (name, span) = self.ident()?;
                refs.push((name.clone(), span));
                Ok(Guard::Signal(name))
            }
            _ => self.error(format!("expected guard expression, found {}", self.describe())),
        }
    }
}

struct SourceRule<T> {
    rule: Rule<T, String>,
    span: Span,
    target_span: Span,
    refs: Vec<(String, Span)>,
}

/// Parses and validates a netlist.
pub fn parse_circuit<T: Time>(text: &str) -> Result<Netlist<T>, NetlistError> {
    let toks = lex(text)?;
    let eof = Pos {
        line: text.lines().count().max(1),
        col: text.lines().last().map_or(0, |l| l.chars().count()) + 1,
    };
    let mut p = Parser { toks, at: 0, eof };

    p.keyword("circuit")?;
    let (name, _) = p.ident()?;
    let mut decls: Vec<(String, Span, SignalKind)> = Vec::new();
    for (kw, kind, required) in [
        ("inputs", SignalKind::Input, false),
        ("locals", SignalKind::Local, false),
        ("outputs", SignalKind::Output, true),
    ] {
        if p.is_keyword(kw) || required {
            p.keyword(kw)?;
            decls.extend(p.ident_list()?.into_iter().map(|(n, s)| (n, s, kind)));
        }
    }
    let mut inits: Vec<(String, Span, Value)> = Vec::new();
    while p.is_keyword("init") {
        p.at += 1;
        let (n, s) = p.ident()?;
        p.sym("=")?;
        inits.push((n, s, p.value(true)?));
    }
    let mut rules: Vec<SourceRule<T>> = Vec::new();
    while p.is_keyword("rule") {
        let start = p.pos();
        p.at += 1;
        let mut refs = Vec::new();
        let guard = p.expr(&mut refs)?;
        p.sym("->")?;
        let (target, target_span) = p.ident()?;
        p.sym("=")?;
        let value = p.value(false)? == Value::One;
        p.sym("[")?;
        let delay = p.number::<T>()?;
        p.sym("]")?;
        let end = p.toks[p.at - 1].span.end;
        rules.push(SourceRule {
            rule: Rule::new(guard, target, value, delay),
            span: Span { start, end },
            target_span,
            refs,
        });
    }
    let mut monitored: Vec<(String, Span)> = Vec::new();
    if p.is_keyword("monitor") {
        p.at += 1;
        monitored = p.ident_list()?;
    }
    if p.peek().is_some() {
        return p.error(format!("unexpected {}", p.describe()));
    }

    // Semantic checks that need spans; the builder repeats them without.
    let mut kinds: BTreeMap<&str, SignalKind> = BTreeMap::new();
    for (n, span, kind) in &decls {
        if kinds.insert(n, *kind).is_some() {
            return Err(NetlistError::Build {
                span: *span,
                source: BuildError::DuplicateSignal(n.clone()),
            });
        }
    }
    let unknown = |n: &str, span: Span| -> PResult<SignalKind> {
        kinds.get(n).copied().ok_or_else(|| NetlistError::Build {
            span,
            source: BuildError::UnknownSignal(n.to_string()),
        })
    };
    let mut initialized: BTreeMap<&str, Span> = BTreeMap::new();
    for (n, span, _) in &inits {
        if unknown(n, *span)? == SignalKind::Input {
            return Err(NetlistError::Build {
                span: *span,
                source: BuildError::InitialOnInput(n.clone()),
            });
        }
        initialized.insert(n, *span);
    }
    for (n, span, kind) in &decls {
        if kind.is_driven() && !initialized.contains_key(n.as_str()) {
            return Err(NetlistError::Build {
                span: *span,
                source: BuildError::MissingInitial(n.clone()),
            });
        }
    }
    for r in &rules {
        unknown(&r.rule.target, r.target_span)?;
        for (n, span) in &r.refs {
            unknown(n, *span)?;
        }
    }
    for (n, span) in &monitored {
        if unknown(n, *span)? == SignalKind::Input {
            return Err(NetlistError::MonitorInput {
                span: *span,
                signal: n.clone(),
            });
        }
    }

    let mut b = CircuitBuilder::new(name);
    for (n, _, kind) in &decls {
        b.declare(n.clone(), *kind);
    }
    for (n, _, v) in &inits {
        b.init(n.clone(), *v);
    }
    b.rules(rules.iter().map(|r| r.rule.clone()));
    let circuit = b.build().map_err(|e| NetlistError::Build {
        span: Span::default(),
        source: e,
    })?;

    if let Err(violations) = circuit.validate() {
        // circuit rule order: stable sort by (target, up before down)
        let mut order: Vec<usize> = (0..rules.len()).collect();
        order.sort_by_key(|&i| (circuit.signal(&rules[i].rule.target), !rules[i].rule.value));
        let located = violations
            .into_iter()
            .map(|v| {
                let spans = match &v {
                    Violation::SupportTooLarge { signal, .. } => decls
                        .iter()
                        .filter(|(n, _, _)| n == signal)
                        .map(|(_, s, _)| *s)
                        .collect(),
                    _ => v.rules().iter().map(|&i| rules[order[i]].span).collect(),
                };
                (v, spans)
            })
            .collect();
        return Err(NetlistError::Invalid(located));
    }
    Ok(Netlist {
        circuit,
        monitored: monitored.into_iter().map(|(n, _)| n).collect(),
    })
}

/// Canonical text of `circuit`: signals and rules in id order, no comments.
pub fn serialize_circuit<T: Time>(circuit: &Circuit<T>, monitored: &[String]) -> String {
    let mut out = format!("circuit {}\n", circuit.name());
    let list = |kind: SignalKind| -> Vec<&str> { circuit.signals_of(kind).map(|s| circuit.signal_name(s)).collect() };
    for (kw, kind) in [("inputs", SignalKind::Input), ("locals", SignalKind::Local)] {
        let names = list(kind);
        if !names.is_empty() {
            out += &format!("{kw} {}\n", names.join(", "));
        }
    }
    let outputs = list(SignalKind::Output);
    if outputs.is_empty() {
        out += "outputs\n";
    } else {
        out += &format!("outputs {}\n", outputs.join(", "));
    }
    for s in circuit.driven_signals() {
        out += &format!("init {} = {}\n", circuit.signal_name(s), circuit.initial(s));
    }
    for i in 0..circuit.rules().len() {
        let r = circuit.named_rule(crate::circuit::RuleId(i as u32));
        out += &format!(
            "rule {} -> {} = {} [{}]\n",
            r.guard,
            r.target,
            u8::from(r.value),
            fmt_time(r.delay)
        );
    }
    if !monitored.is_empty() {
        out += &format!("monitor {}\n", monitored.join(", "));
    }
    out
}
