//! Lambda terms used as the semantic payload of generic rules.
//!
//! Concrete syntax: `\x. body` abstracts, `f(a)` or `f a` applies, `&` is
//! conjunction. An identifier is a variable when an enclosing binder names
//! it; otherwise identifiers starting with an uppercase letter are constants
//! and the rest are free variables.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub const DEFAULT_STEP_BUDGET: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LambdaTerm {
    Const(String),
    Var(String),
    Abs(String, Box<LambdaTerm>),
    App(Box<LambdaTerm>, Box<LambdaTerm>),
    Conj(Box<LambdaTerm>, Box<LambdaTerm>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LambdaError {
    #[error("beta reduction did not reach a normal form within {0} steps")]
    StepBudget(usize),
    #[error("term syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

impl LambdaTerm {
    pub fn constant(name: &str) -> Self {
        LambdaTerm::Const(name.to_string())
    }

    pub fn var(name: &str) -> Self {
        LambdaTerm::Var(name.to_string())
    }

    pub fn abs(var: &str, body: LambdaTerm) -> Self {
        LambdaTerm::Abs(var.to_string(), Box::new(body))
    }

    pub fn app(f: LambdaTerm, a: LambdaTerm) -> Self {
        LambdaTerm::App(Box::new(f), Box::new(a))
    }

    pub fn conj(a: LambdaTerm, b: LambdaTerm) -> Self {
        LambdaTerm::Conj(Box::new(a), Box::new(b))
    }

    pub fn parse(src: &str) -> Result<Self, LambdaError> {
        let mut p = TermParser { src, pos: 0, bound: Vec::new() };
        let t = p.term()?;
        p.skip_ws();
        if p.pos < src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(t)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        match self {
            LambdaTerm::Const(_) => {}
            LambdaTerm::Var(v) => {
                if !bound.contains(&v.as_str()) {
                    out.insert(v.clone());
                }
            }
            LambdaTerm::Abs(x, body) => {
                bound.push(x);
                body.collect_free(bound, out);
                bound.pop();
            }
            LambdaTerm::App(a, b) | LambdaTerm::Conj(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
        }
    }

    fn mentions(&self, name: &str) -> bool {
        match self {
            LambdaTerm::Const(_) => false,
            LambdaTerm::Var(v) => v == name,
            LambdaTerm::Abs(x, body) => x == name || body.mentions(name),
            LambdaTerm::App(a, b) | LambdaTerm::Conj(a, b) => a.mentions(name) || b.mentions(name),
        }
    }

    /// Capture-avoiding `self[var := value]`.
    pub fn substitute(&self, var: &str, value: &LambdaTerm) -> LambdaTerm {
        match self {
            LambdaTerm::Const(_) => self.clone(),
            LambdaTerm::Var(v) if v == var => value.clone(),
            LambdaTerm::Var(_) => self.clone(),
            LambdaTerm::Abs(x, _) if x == var => self.clone(),
            LambdaTerm::Abs(x, body) => {
                if value.free_vars().contains(x) {
                    let fresh = fresh_name(x, |c| c == var || value.mentions(c) || body.mentions(c));
                    let renamed = body.substitute(x, &LambdaTerm::var(&fresh));
                    LambdaTerm::abs(&fresh, renamed.substitute(var, value))
                } else {
                    LambdaTerm::abs(x, body.substitute(var, value))
                }
            }
            LambdaTerm::App(a, b) => LambdaTerm::app(a.substitute(var, value), b.substitute(var, value)),
            LambdaTerm::Conj(a, b) => LambdaTerm::conj(a.substitute(var, value), b.substitute(var, value)),
        }
    }

    // One leftmost-outermost beta step, or None when in normal form.
    fn step(&self) -> Option<LambdaTerm> {
        match self {
            LambdaTerm::App(f, a) => {
                if let LambdaTerm::Abs(x, body) = f.as_ref() {
                    return Some(body.substitute(x, a));
                }
                if let Some(f2) = f.step() {
                    return Some(LambdaTerm::App(Box::new(f2), a.clone()));
                }
                a.step().map(|a2| LambdaTerm::App(f.clone(), Box::new(a2)))
            }
            LambdaTerm::Abs(x, body) => body.step().map(|b| LambdaTerm::Abs(x.clone(), Box::new(b))),
            LambdaTerm::Conj(a, b) => {
                if let Some(a2) = a.step() {
                    return Some(LambdaTerm::Conj(Box::new(a2), b.clone()));
                }
                b.step().map(|b2| LambdaTerm::Conj(a.clone(), Box::new(b2)))
            }
            LambdaTerm::Const(_) | LambdaTerm::Var(_) => None,
        }
    }

    /// Normal-order reduction to beta-normal form.
    pub fn normalize(&self, budget: usize) -> Result<LambdaTerm, LambdaError> {
        let mut cur = self.clone();
        for _ in 0..budget {
            match cur.step() {
                Some(next) => cur = next,
                None => return Ok(cur),
            }
        }
        if cur.step().is_none() {
            Ok(cur)
        } else {
            Err(LambdaError::StepBudget(budget))
        }
    }

    pub fn is_normal(&self) -> bool {
        self.step().is_none()
    }

    pub fn alpha_eq(&self, other: &LambdaTerm) -> bool {
        alpha_eq_in(self, other, &mut Vec::new(), &mut Vec::new())
    }

    pub fn size(&self) -> usize {
        match self {
            LambdaTerm::Const(_) | LambdaTerm::Var(_) => 1,
            LambdaTerm::Abs(_, b) => 1 + b.size(),
            LambdaTerm::App(a, b) | LambdaTerm::Conj(a, b) => 1 + a.size() + b.size(),
        }
    }
}

/// Beta-normal form of `f(a)`.
pub fn apply_term(f: &LambdaTerm, a: &LambdaTerm) -> Result<LambdaTerm, LambdaError> {
    LambdaTerm::app(f.clone(), a.clone()).normalize(DEFAULT_STEP_BUDGET)
}

pub fn conj_terms(a: &LambdaTerm, b: &LambdaTerm) -> LambdaTerm {
    LambdaTerm::conj(a.clone(), b.clone())
}

pub fn alpha_eq(a: &LambdaTerm, b: &LambdaTerm) -> bool {
    a.alpha_eq(b)
}

fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> String {
    (1..).map(|n| format!("{base}{n}")).find(|c| !taken(c)).expect("unbounded candidate supply")
}

fn alpha_eq_in<'a>(a: &'a LambdaTerm, b: &'a LambdaTerm, ea: &mut Vec<&'a str>, eb: &mut Vec<&'a str>) -> bool {
    match (a, b) {
        (LambdaTerm::Const(x), LambdaTerm::Const(y)) => x == y,
        (LambdaTerm::Var(x), LambdaTerm::Var(y)) => {
            let ix = ea.iter().rposition(|v| v == x);
            let iy = eb.iter().rposition(|v| v == y);
            match (ix, iy) {
                (Some(i), Some(j)) => ea.len() - i == eb.len() - j,
                (None, None) => x == y,
                _ => false,
            }
        }
        (LambdaTerm::Abs(x, ba), LambdaTerm::Abs(y, bb)) => {
            ea.push(x);
            eb.push(y);
            let r = alpha_eq_in(ba, bb, ea, eb);
            ea.pop();
            eb.pop();
            r
        }
        (LambdaTerm::App(a1, a2), LambdaTerm::App(b1, b2)) | (LambdaTerm::Conj(a1, a2), LambdaTerm::Conj(b1, b2)) => {
            alpha_eq_in(a1, b1, ea, eb) && alpha_eq_in(a2, b2, ea, eb)
        }
        _ => false,
    }
}

impl fmt::Display for LambdaTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaTerm::Const(n) | LambdaTerm::Var(n) => f.write_str(n),
            LambdaTerm::Abs(x, body) => write!(f, "\\{x}. {body}"),
            LambdaTerm::App(fun, arg) => {
                match fun.as_ref() {
                    LambdaTerm::Abs(..) | LambdaTerm::Conj(..) => write!(f, "({fun})")?,
                    _ => write!(f, "{fun}")?,
                }
                write!(f, "({arg})")
            }
            LambdaTerm::Conj(a, b) => {
                if ends_in_abs(a) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                f.write_str(" & ")?;
                match b.as_ref() {
                    LambdaTerm::Conj(..) => write!(f, "({b})"),
                    _ => write!(f, "{b}"),
                }
            }
        }
    }
}

// An abstraction body extends as far right as possible.
fn ends_in_abs(t: &LambdaTerm) -> bool {
    match t {
        LambdaTerm::Abs(..) => true,
        LambdaTerm::Conj(_, b) => ends_in_abs(b),
        _ => false,
    }
}

struct TermParser<'s> {
    src: &'s str,
    pos: usize,
    bound: Vec<String>,
}

impl TermParser<'_> {
    fn error(&self, msg: &str) -> LambdaError {
        LambdaError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<(), LambdaError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return None,
        }
        let end =
            chars.find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_' || c == '\'')).map_or(rest.len(), |(i, _)| i);
        self.pos += end;
        Some(rest[..end].to_string())
    }

    fn term(&mut self) -> Result<LambdaTerm, LambdaError> {
        let mut t = self.lambda()?;
        while self.peek() == Some('&') {
            self.pos += 1;
            let rhs = self.lambda()?;
            t = LambdaTerm::conj(t, rhs);
        }
        Ok(t)
    }

    fn lambda(&mut self) -> Result<LambdaTerm, LambdaError> {
        if self.peek() != Some('\\') {
            return self.application();
        }
        self.pos += 1;
        let mut vars = Vec::new();
        while let Some(v) = self.ident() {
            vars.push(v);
        }
        if vars.is_empty() {
            return Err(self.error("expected a bound variable after `\\`"));
        }
        self.expect('.')?;
        let depth = self.bound.len();
        self.bound.extend(vars.iter().cloned());
        let body = self.term();
        self.bound.truncate(depth);
        let body = body?;
        Ok(vars.iter().rev().fold(body, |acc, v| LambdaTerm::abs(v, acc)))
    }

    fn application(&mut self) -> Result<LambdaTerm, LambdaError> {
        let mut head = match self.peek() {
            Some('(') => {
                let mut group = self.paren_list()?;
                if group.len() != 1 {
                    return Err(self.error("argument list without a function"));
                }
                group.pop().unwrap()
            }
            _ => self.atom()?,
        };
        loop {
            match self.peek() {
                Some('(') => {
                    for arg in self.paren_list()? {
                        head = LambdaTerm::app(head, arg);
                    }
                }
                Some('\\') => {
                    let arg = self.lambda()?;
                    return Ok(LambdaTerm::app(head, arg));
                }
                Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                    let arg = self.atom()?;
                    head = LambdaTerm::app(head, arg);
                }
                _ => return Ok(head),
            }
        }
    }

    fn paren_list(&mut self) -> Result<Vec<LambdaTerm>, LambdaError> {
        self.expect('(')?;
        let mut items = vec![self.term()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            items.push(self.term()?);
        }
        self.expect(')')?;
        Ok(items)
    }

    fn atom(&mut self) -> Result<LambdaTerm, LambdaError> {
        let name = self.ident().ok_or_else(|| self.error("expected a term"))?;
        if self.bound.contains(&name) || !name.starts_with(|c: char| c.is_ascii_uppercase()) {
            Ok(LambdaTerm::Var(name))
        } else {
            Ok(LambdaTerm::Const(name))
        }
    }
}
