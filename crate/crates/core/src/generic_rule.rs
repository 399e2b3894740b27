//! Generic rules: sets of partial rules indexed by cartesian types, where
//! dynamic binding picks the most specific partial rule whose signature
//! lies above the argument types.
//!
//! Rule bodies are expressions over a small set of primitives (the
//! categorial combination rules, a constant result type, or a lambda
//! template) closed under composition, disjunction and optionality. A body
//! maps its argument sequence to a nonempty result sequence or to nil.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::catgram::{self, Category};
use crate::lambda::{LambdaError, LambdaTerm, DEFAULT_STEP_BUDGET};
use crate::poset::{CartesianPoset, CartesianType, PosetError, TypeHierarchy, TypeId};
use crate::span::Span;

/// What a generic rule combines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InfoDomain {
    Types,
    Categories,
    Terms,
}

impl fmt::Display for InfoDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InfoDomain::Types => "types",
            InfoDomain::Categories => "categories",
            InfoDomain::Terms => "lambda terms",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Type(TypeId),
    Cat(Category),
    Term(LambdaTerm),
}

impl Value {
    pub fn domain(&self) -> InfoDomain {
        match self {
            Value::Type(_) => InfoDomain::Types,
            Value::Cat(_) => InfoDomain::Categories,
            Value::Term(_) => InfoDomain::Terms,
        }
    }

    pub fn render(&self, h: &TypeHierarchy) -> String {
        match self {
            Value::Type(t) => h.name(*t).to_string(),
            Value::Cat(c) => c.to_string(),
            Value::Term(t) => t.to_string(),
        }
    }
}

/// A payload together with the tokens it covers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Located {
    pub value: Value,
    pub span: Span,
}

impl Located {
    pub fn new(value: Value, span: Span) -> Self {
        Located { value, span }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    Fa,
    Ba,
    Ituple,
    Scan,
    Dtuple,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [Builtin::Fa, Builtin::Ba, Builtin::Ituple, Builtin::Scan, Builtin::Dtuple];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Fa => "fa",
            Builtin::Ba => "ba",
            Builtin::Ituple => "ituple",
            Builtin::Scan => "scan",
            Builtin::Dtuple => "dtuple",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleExpr {
    Builtin(Builtin),
    /// Ignores its arguments and yields a type.
    TypeResult(TypeId),
    /// A curried template applied to every argument in order.
    Term(LambdaTerm),
    /// `comp(r, p)`: `r` applied to the output of `p`.
    Comp(Box<RuleExpr>, Box<RuleExpr>),
    Disj(Box<RuleExpr>, Box<RuleExpr>),
    Opt(Box<RuleExpr>),
}

impl RuleExpr {
    pub fn comp(r: RuleExpr, p: RuleExpr) -> Self {
        RuleExpr::Comp(Box::new(r), Box::new(p))
    }

    pub fn disj(r: RuleExpr, p: RuleExpr) -> Self {
        RuleExpr::Disj(Box::new(r), Box::new(p))
    }

    pub fn opt(r: RuleExpr) -> Self {
        RuleExpr::Opt(Box::new(r))
    }

    /// The single domain this body works in.
    pub fn domain(&self) -> Result<InfoDomain, RuleError> {
        match self {
            RuleExpr::Builtin(_) => Ok(InfoDomain::Categories),
            RuleExpr::TypeResult(_) => Ok(InfoDomain::Types),
            RuleExpr::Term(_) => Ok(InfoDomain::Terms),
            RuleExpr::Opt(r) => r.domain(),
            RuleExpr::Comp(r, p) | RuleExpr::Disj(r, p) => {
                let (a, b) = (r.domain()?, p.domain()?);
                if a == b {
                    Ok(a)
                } else {
                    Err(RuleError::MixedDomains(a, b))
                }
            }
        }
    }

    /// Evaluates the body on a sequence of arguments; `Ok(None)` is nil.
    pub fn eval(&self, args: &[Located]) -> Result<Option<Vec<Located>>, RuleError> {
        match self {
            RuleExpr::Builtin(b) => eval_builtin(*b, args),
            RuleExpr::TypeResult(t) => Ok(hull(args).map(|span| vec![Located::new(Value::Type(*t), span)])),
            RuleExpr::Term(template) => {
                let Some(span) = hull(args) else { return Ok(None) };
                let mut acc = template.clone();
                for a in args {
                    let Value::Term(t) = &a.value else {
                        return Err(RuleError::PayloadMismatch {
                            expected: InfoDomain::Terms,
                            found: a.value.domain(),
                        });
                    };
                    acc = LambdaTerm::app(acc, t.clone());
                }
                let nf = acc.normalize(DEFAULT_STEP_BUDGET)?;
                Ok(Some(vec![Located::new(Value::Term(nf), span)]))
            }
            RuleExpr::Comp(r, p) => match p.eval(args)? {
                Some(mid) => r.eval(&mid),
                None => Ok(None),
            },
            RuleExpr::Disj(r, p) => match (r.eval(args)?, p.eval(args)?) {
                (Some(_), Some(_)) => Err(RuleError::AmbiguousDisjunction(self.to_string_with(None))),
                (Some(x), None) | (None, Some(x)) => Ok(Some(x)),
                (None, None) => Ok(None),
            },
            RuleExpr::Opt(r) => Ok(Some(r.eval(args)?.unwrap_or_else(|| args.to_vec()))),
        }
    }

    pub fn display<'a>(&'a self, h: &'a TypeHierarchy) -> impl fmt::Display + 'a {
        ExprDisplay { expr: self, h: Some(h) }
    }

    fn to_string_with(&self, h: Option<&TypeHierarchy>) -> String {
        ExprDisplay { expr: self, h }.to_string()
    }

    /// Parses `fa`, `ba`, `ituple`, `scan`, `dtuple`, `type(NAME)`,
    /// `term(LAMBDA)` and `comp(_, _)`, `disj(_, _)`, `opt(_)` over them.
    pub fn parse(src: &str, h: &TypeHierarchy) -> Result<Self, RuleError> {
        let mut p = ExprParser { src, pos: 0, h };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }
}

fn hull(args: &[Located]) -> Option<Span> {
    let first = args.first()?;
    Some(args.iter().fold(first.span, |acc, a| acc.hull(a.span)))
}

fn cat_args(args: &[Located]) -> Result<Vec<&Category>, RuleError> {
    args.iter()
        .map(|a| match &a.value {
            Value::Cat(c) => Ok(c),
            other => Err(RuleError::PayloadMismatch { expected: InfoDomain::Categories, found: other.domain() }),
        })
        .collect()
}

fn eval_builtin(b: Builtin, args: &[Located]) -> Result<Option<Vec<Located>>, RuleError> {
    let cats = cat_args(args)?;
    let single = |c: Option<Category>| c.map(|c| vec![Located::new(Value::Cat(c), hull(args).unwrap())]);
    Ok(match (b, cats.as_slice()) {
        (Builtin::Fa, [x, y]) => single(catgram::fa(x, y)),
        (Builtin::Ba, [y, x]) => single(catgram::ba(y, x)),
        (Builtin::Ituple, [x, y]) => single(catgram::ituple(x, args[0].span, y, args[1].span)),
        (Builtin::Scan, [xn, r]) => single(catgram::scan(xn, Some(args[0].span), r)),
        (Builtin::Dtuple, [c]) => catgram::dtuple_spanned(c, args[0].span)
            .map(|parts| parts.into_iter().map(|(c, s)| Located::new(Value::Cat(c), s)).collect()),
        _ => None,
    })
}

struct ExprDisplay<'a> {
    expr: &'a RuleExpr,
    h: Option<&'a TypeHierarchy>,
}

impl<'a> fmt::Display for ExprDisplay<'a> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |e: &'a RuleExpr| ExprDisplay { expr: e, h: self.h };
        match self.expr {
            RuleExpr::Builtin(b) => f.write_str(b.name()),
            RuleExpr::TypeResult(t) => match self.h {
                Some(h) => write!(f, "type({})", h.name(*t)),
                None => write!(f, "type(#{})", t.index()),
            },
            RuleExpr::Term(t) => write!(f, "term({t})"),
            RuleExpr::Comp(r, p) => write!(f, "comp({}, {})", sub(r), sub(p)),
            RuleExpr::Disj(r, p) => write!(f, "disj({}, {})", sub(r), sub(p)),
            RuleExpr::Opt(r) => write!(f, "opt({})", sub(r)),
        }
    }
}

struct ExprParser<'s, 'h> {
    src: &'s str,
    pos: usize,
    h: &'h TypeHierarchy,
}

impl ExprParser<'_, '_> {
    fn error(&self, msg: &str) -> RuleError {
        RuleError::ExprSyntax(format!("{msg} at byte {} of `{}`", self.pos, self.src))
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, c: char) -> Result<(), RuleError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    // Text up to the `)` matching an already consumed `(`.
    fn balanced(&mut self) -> Result<String, RuleError> {
        let start = self.pos;
        let mut depth = 1;
        for (i, c) in self.src[start..].char_indices() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        self.pos = start + i + 1;
                        return Ok(self.src[start..start + i].trim().to_string());
                    }
                }
                _ => {}
            }
        }
        Err(self.error("unbalanced parentheses"))
    }

    fn expr(&mut self) -> Result<RuleExpr, RuleError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let end = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(rest.len());
        let word = &rest[..end];
        if word.is_empty() {
            return Err(self.error("expected a rule expression"));
        }
        let word = word.to_string();
        self.pos += end;
        if let Some(b) = Builtin::ALL.into_iter().find(|b| b.name() == word) {
            return Ok(RuleExpr::Builtin(b));
        }
        self.eat('(')?;
        let e = match word.as_str() {
            "type" => {
                let name = self.balanced()?;
                RuleExpr::TypeResult(self.h.id(&name)?)
            }
            "term" => {
                let src = self.balanced()?;
                RuleExpr::Term(LambdaTerm::parse(&src)?)
            }
            "opt" => {
                let r = self.expr()?;
                self.eat(')')?;
                RuleExpr::opt(r)
            }
            "comp" | "disj" => {
                let r = self.expr()?;
                self.eat(',')?;
                let p = self.expr()?;
                self.eat(')')?;
                if word == "comp" {
                    RuleExpr::comp(r, p)
                } else {
                    RuleExpr::disj(r, p)
                }
            }
            other => return Err(RuleError::ExprSyntax(format!("unknown rule `{other}`"))),
        };
        Ok(e)
    }
}

/// Read-only view of the token sequence used by guards.
pub trait TokenContext {
    /// Whether the token at `position` is a conjunction. Out-of-range
    /// positions are not.
    fn is_conj(&self, position: usize) -> bool;
}

impl TokenContext for Vec<bool> {
    fn is_conj(&self, position: usize) -> bool {
        self.get(position).copied().unwrap_or(false)
    }
}

/// Context conditions licensing a partial rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Guard {
    /// A conjunction immediately precedes the left argument.
    ConjBefore,
    /// A conjunction immediately follows the right argument.
    ConjAfter,
}

impl Guard {
    pub fn name(self) -> &'static str {
        match self {
            Guard::ConjBefore => "conj-before",
            Guard::ConjAfter => "conj-after",
        }
    }

    pub fn from_name(name: &str) -> Option<Guard> {
        [Guard::ConjBefore, Guard::ConjAfter].into_iter().find(|g| g.name() == name)
    }

    pub fn admits(self, left: Span, right: Span, ctx: &dyn TokenContext) -> bool {
        match self {
            Guard::ConjBefore => left.start > 0 && ctx.is_conj(left.start - 1),
            Guard::ConjAfter => ctx.is_conj(right.end),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialRule {
    pub signature: CartesianType,
    pub body: RuleExpr,
    pub guard: Option<Guard>,
}

impl PartialRule {
    pub fn new(signature: CartesianType, body: RuleExpr) -> Self {
        PartialRule { signature, body, guard: None }
    }

    pub fn guarded(mut self, guard: Guard) -> Self {
        self.guard = Some(guard);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error("rule body syntax: {0}")]
    ExprSyntax(String),
    #[error("generic rule `{rule}` has two partial rules at {signature}")]
    DuplicateSignature { rule: String, signature: String },
    #[error("rule body mixes {0} and {1}")]
    MixedDomains(InfoDomain, InfoDomain),
    #[error("generic rule `{0}` has no partial rules")]
    Empty(String),
    #[error("generic rule `{rule}` is not well-formed: {}", .conflicts.join("; "))]
    IllFormed { rule: String, conflicts: Vec<String> },
    #[error("generic rule `{rule}` binds {args} to incomparable signatures {}", .candidates.join(", "))]
    BindingConflict { rule: String, args: String, candidates: Vec<String> },
    #[error("both branches of `{0}` apply")]
    AmbiguousDisjunction(String),
    #[error("rule expects {expected} but received {found}")]
    PayloadMismatch { expected: InfoDomain, found: InfoDomain },
}

/// The outcome of a successful binding and application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Applied {
    pub signature: CartesianType,
    pub outputs: Vec<Located>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenericRule {
    name: String,
    rules: Vec<PartialRule>,
    poset: CartesianPoset,
    domain: InfoDomain,
}

impl GenericRule {
    pub fn new(name: &str, hierarchy: Arc<TypeHierarchy>, rules: Vec<PartialRule>) -> Result<Self, RuleError> {
        let g = Self::new_unchecked(name, hierarchy, rules)?;
        if let Err(conflicts) = g.poset.check_well_formed() {
            let h = g.hierarchy();
            return Err(RuleError::IllFormed {
                rule: g.name.clone(),
                conflicts: conflicts.iter().map(|c| c.describe(h)).collect(),
            });
        }
        Ok(g)
    }

    /// Skips the well-formedness check; binding conflicts then surface at
    /// query time.
    pub fn new_unchecked(
        name: &str,
        hierarchy: Arc<TypeHierarchy>,
        rules: Vec<PartialRule>,
    ) -> Result<Self, RuleError> {
        let Some(first) = rules.first() else {
            return Err(RuleError::Empty(name.to_string()));
        };
        let domain = first.body.domain()?;
        for (i, r) in rules.iter().enumerate() {
            let d = r.body.domain()?;
            if d != domain {
                return Err(RuleError::MixedDomains(domain, d));
            }
            if rules[..i].iter().any(|q| q.signature == r.signature) {
                return Err(RuleError::DuplicateSignature {
                    rule: name.to_string(),
                    signature: r.signature.display(&hierarchy).to_string(),
                });
            }
        }
        let poset = CartesianPoset::new(hierarchy, rules.iter().map(|r| r.signature));
        Ok(GenericRule { name: name.to_string(), rules, poset, domain })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rules(&self) -> &[PartialRule] {
        &self.rules
    }

    pub fn poset(&self) -> &CartesianPoset {
        &self.poset
    }

    pub fn hierarchy(&self) -> &Arc<TypeHierarchy> {
        self.poset.hierarchy()
    }

    pub fn domain(&self) -> InfoDomain {
        self.domain
    }

    /// `SYN_{NP⊗VP}`-style label for one of this rule's signatures.
    pub fn label(&self, signature: CartesianType) -> String {
        format!("{}_{{{}}}", self.name, signature.display(self.hierarchy()))
    }

    /// The partial rule whose signature is the least upper bound of
    /// `x1⊗x2` among the signatures, or `None` when no signature is above it.
    pub fn dynamic_bind(&self, x1: TypeId, x2: TypeId) -> Result<Option<&PartialRule>, RuleError> {
        let arg = CartesianType::new(x1, x2);
        let leq = |a, b| self.poset.cartesian_leq(a, b);
        let is_minimal = |r: &PartialRule| {
            leq(arg, r.signature)
                && !self
                    .rules
                    .iter()
                    .any(|q| q.signature != r.signature && leq(arg, q.signature) && leq(q.signature, r.signature))
        };
        let mut minimal = self.rules.iter().filter(|r| is_minimal(r));
        let Some(first) = minimal.next() else { return Ok(None) };
        if minimal.next().is_none() {
            return Ok(Some(first));
        }
        let h = self.hierarchy();
        Err(RuleError::BindingConflict {
            rule: self.name.clone(),
            args: arg.display(h).to_string(),
            candidates: self
                .rules
                .iter()
                .filter(|r| is_minimal(r))
                .map(|r| r.signature.display(h).to_string())
                .collect(),
        })
    }

    pub fn bind_named(&self, x1: &str, x2: &str) -> Result<Option<&PartialRule>, RuleError> {
        let h = self.hierarchy();
        self.dynamic_bind(h.id(x1)?, h.id(x2)?)
    }

    /// Binds on `x1⊗x2`, checks the guard and evaluates the body on the
    /// two payloads. Nil when binding fails, the guard rejects or the body
    /// yields nil.
    pub fn apply(
        &self,
        x1: TypeId,
        x2: TypeId,
        left: &Located,
        right: &Located,
        ctx: &dyn TokenContext,
    ) -> Result<Option<Applied>, RuleError> {
        let Some(rule) = self.dynamic_bind(x1, x2)? else {
            return Ok(None);
        };
        if let Some(g) = rule.guard {
            if !g.admits(left.span, right.span, ctx) {
                return Ok(None);
            }
        }
        let outputs = rule.body.eval(&[left.clone(), right.clone()])?;
        Ok(outputs.map(|outputs| Applied { signature: rule.signature, outputs }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::HierarchyBuilder;

    fn verb_classes() -> Arc<TypeHierarchy> {
        let mut b = HierarchyBuilder::new();
        b.add_type("NP");
        for vp in ["VP_1", "VP_2", "VP_3", "VP_4", "VP_i"] {
            b.add_edge(vp, "VP");
        }
        b.add_edge("S_i", "S");
        Arc::new(b.build().unwrap())
    }

    fn syn() -> GenericRule {
        let h = verb_classes();
        let sig = |a, b| CartesianType::named(&h, a, b).unwrap();
        let ty = |n| RuleExpr::TypeResult(h.id(n).unwrap());
        GenericRule::new(
            "SYN",
            h.clone(),
            vec![PartialRule::new(sig("NP", "VP"), ty("S")), PartialRule::new(sig("NP", "VP_i"), ty("S_i"))],
        )
        .unwrap()
    }

    fn at(h: &TypeHierarchy, name: &str, pos: usize) -> Located {
        Located::new(Value::Type(h.id(name).unwrap()), Span::unit(pos))
    }

    #[test]
    fn binding_table() {
        let g = syn();
        let h = g.hierarchy().clone();
        let bound = |a, b| g.bind_named(a, b).unwrap().map(|r| r.signature.display(&h).to_string());
        assert_eq!(bound("NP", "VP").as_deref(), Some("NP⊗VP"));
        assert_eq!(bound("NP", "VP_2").as_deref(), Some("NP⊗VP"));
        assert_eq!(bound("VP_2", "NP"), None);
        assert_eq!(bound("NP", "VP_i").as_deref(), Some("NP⊗VP_i"));
    }

    #[test]
    fn apply_generic_examples() {
        let g = syn();
        let h = g.hierarchy().clone();
        let no_conj = &Vec::new();
        let id = |n| h.id(n).unwrap();
        let r = g.apply(id("NP"), id("VP_i"), &at(&h, "NP", 0), &at(&h, "VP_i", 1), no_conj).unwrap().unwrap();
        assert_eq!(r.outputs, vec![Located::new(Value::Type(id("S_i")), Span::new(0, 2))]);
        assert_eq!(g.apply(id("VP_2"), id("NP"), &at(&h, "VP_2", 0), &at(&h, "NP", 1), no_conj).unwrap(), None);
    }

    #[test]
    fn projection_body() {
        let h = Arc::new(TypeHierarchy::new(&["a"], &[], None).unwrap());
        let a = h.id("a").unwrap();
        let first = RuleExpr::Term(LambdaTerm::parse("\\x y. x").unwrap());
        let g = GenericRule::new("P", h.clone(), vec![PartialRule::new(CartesianType::new(a, a), first)]).unwrap();
        let phi = Located::new(Value::Term(LambdaTerm::parse("F").unwrap()), Span::unit(0));
        let psi = Located::new(Value::Term(LambdaTerm::parse("G").unwrap()), Span::unit(1));
        let r = g.apply(a, a, &phi, &psi, &Vec::new()).unwrap().unwrap();
        assert_eq!(r.outputs[0].value, phi.value);
    }

    fn cat(src: &str, pos: usize) -> Located {
        Located::new(Value::Cat(Category::parse(src).unwrap()), Span::unit(pos))
    }

    #[test]
    fn disjunction_of_applications() {
        let app = RuleExpr::disj(RuleExpr::Builtin(Builtin::Fa), RuleExpr::Builtin(Builtin::Ba));
        let out = app.eval(&[cat("(np\\s)/np", 0), cat("np", 1)]).unwrap().unwrap();
        assert_eq!(out[0].value, Value::Cat(Category::parse("np\\s").unwrap()));
        let out = app.eval(&[cat("np", 0), cat("np\\s", 1)]).unwrap().unwrap();
        assert_eq!(out[0].value, Value::Cat(Category::parse("s").unwrap()));
        assert_eq!(app.eval(&[cat("np", 0), cat("np", 1)]).unwrap(), None);
    }

    #[test]
    fn disjunction_with_two_successes_is_an_error() {
        let both = RuleExpr::disj(RuleExpr::Builtin(Builtin::Fa), RuleExpr::Builtin(Builtin::Ituple));
        let err = both.eval(&[cat("(np\\s)/np", 0), cat("np", 1)]).unwrap_err();
        assert!(matches!(err, RuleError::AmbiguousDisjunction(_)));
    }

    #[test]
    fn optionality_passes_rejected_input_through() {
        let args = [cat("<np>\\<np, pp>", 0)];
        let out = RuleExpr::opt(RuleExpr::Builtin(Builtin::Dtuple)).eval(&args).unwrap().unwrap();
        assert_eq!(out, args.to_vec());
    }

    #[test]
    fn composition_propagates_nil() {
        let e = RuleExpr::comp(RuleExpr::Builtin(Builtin::Dtuple), RuleExpr::Builtin(Builtin::Fa));
        assert_eq!(e.eval(&[cat("np", 0), cat("np", 1)]).unwrap(), None);
        // fa succeeds but dtuple rejects a non-coordination
        assert_eq!(e.eval(&[cat("(np\\s)/np", 0), cat("np", 1)]).unwrap(), None);
    }

    #[test]
    fn duplicate_signatures_are_rejected() {
        let h = verb_classes();
        let s = CartesianType::named(&h, "NP", "VP").unwrap();
        let body = RuleExpr::TypeResult(h.id("S").unwrap());
        let err =
            GenericRule::new("SYN", h.clone(), vec![PartialRule::new(s, body.clone()), PartialRule::new(s, body)])
                .unwrap_err();
        assert!(matches!(err, RuleError::DuplicateSignature { .. }));
    }

    #[test]
    fn mixed_domains_are_rejected() {
        let h = verb_classes();
        let body = RuleExpr::disj(RuleExpr::Builtin(Builtin::Fa), RuleExpr::TypeResult(h.id("S").unwrap()));
        assert!(matches!(body.domain(), Err(RuleError::MixedDomains(..))));
    }

    #[test]
    fn ill_formed_binding_conflict_is_detected_at_query_time() {
        let h = crate::poset::tests::crossed();
        let sig = |a, b| CartesianType::named(&h, a, b).unwrap();
        let body = RuleExpr::TypeResult(h.id("sign").unwrap());
        let rules: Vec<PartialRule> =
            [("sign", "sign"), ("pronoun", "sign"), ("possessive", "noun"), ("pronoun", "count-noun")]
                .iter()
                .map(|&(a, b)| PartialRule::new(sig(a, b), body.clone()))
                .collect();
        assert!(matches!(GenericRule::new("G", h.clone(), rules.clone()), Err(RuleError::IllFormed { .. })));
        let g = GenericRule::new_unchecked("G", h.clone(), rules).unwrap();
        match g.bind_named("her", "earrings") {
            Err(RuleError::BindingConflict { candidates, .. }) => {
                assert_eq!(candidates, vec!["possessive⊗noun".to_string(), "pronoun⊗count-noun".to_string()])
            }
            other => panic!("expected a conflict, got {other:?}"),
        }
    }

    #[test]
    fn guards() {
        let conj = vec![false, false, true, false];
        assert!(Guard::ConjBefore.admits(Span::unit(3), Span::unit(4), &conj));
        assert!(!Guard::ConjBefore.admits(Span::unit(0), Span::unit(1), &conj));
        assert!(Guard::ConjAfter.admits(Span::unit(0), Span::unit(1), &conj));
        assert!(!Guard::ConjAfter.admits(Span::unit(2), Span::unit(3), &conj));
    }

    #[test]
    fn expression_syntax_round_trips() {
        let h = verb_classes();
        for src in [
            "disj(fa, ba)",
            "comp(opt(dtuple), scan)",
            "type(S_i)",
            "term(\\x. \\y. x(y) & (\\P. P(Pete))(y))",
            "ituple",
        ] {
            let e = RuleExpr::parse(src, &h).unwrap();
            assert_eq!(e.display(&h).to_string(), src);
        }
        assert!(RuleExpr::parse("frobnicate(fa)", &h).is_err());
        assert!(RuleExpr::parse("type(XP)", &h).is_err());
        assert!(RuleExpr::parse("comp(fa ba)", &h).is_err());
    }
}
