//! Categorial types and their concrete syntax.
//!
//! Atoms are lowercase identifiers, single uppercase letters are variables,
//! `/` and `\` are left-associative (`a/b` seeks a `b` to its right,
//! `b\a` seeks a `b` to its left) and `<x, y, z>` is a tuple.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::span::Span;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Atom(String),
    Var(String),
    /// `result/argument`
    Forward(Box<Category>, Box<Category>),
    /// `argument\result`
    Backward(Box<Category>, Box<Category>),
    /// Flattened view of a left-nested tuple. The empty tuple only appears
    /// as the exhausted left side of a coordination category.
    Tuple(Vec<TupleElement>),
}

/// A tuple component with the token span it was built from, when known.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TupleElement {
    pub cat: Category,
    pub span: Option<Span>,
}

impl TupleElement {
    pub fn new(cat: Category, span: Option<Span>) -> Self {
        TupleElement { cat, span }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CategoryError {
    #[error("category syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("alias `{0}` is defined in terms of itself")]
    RecursiveAlias(String),
}

pub type Substitution = HashMap<String, Category>;

impl Category {
    pub fn atom(name: &str) -> Self {
        Category::Atom(name.to_string())
    }

    pub fn var(name: &str) -> Self {
        Category::Var(name.to_string())
    }

    pub fn forward(result: Category, argument: Category) -> Self {
        Category::Forward(Box::new(result), Box::new(argument))
    }

    pub fn backward(argument: Category, result: Category) -> Self {
        Category::Backward(Box::new(argument), Box::new(result))
    }

    /// A tuple without span information.
    pub fn tuple(elements: impl IntoIterator<Item = Category>) -> Self {
        Category::Tuple(elements.into_iter().map(|c| TupleElement::new(c, None)).collect())
    }

    /// `⟨x, y⟩`, extending `x` when it already is a tuple so that n-tuples
    /// stay left-nested pairs `⟨⟨x1 … xn-1⟩, xn⟩`.
    pub fn pair(x: TupleElement, y: TupleElement) -> Self {
        match x.cat {
            Category::Tuple(mut elements) if !elements.is_empty() => {
                elements.push(y);
                Category::Tuple(elements)
            }
            _ => Category::Tuple(vec![x, y]),
        }
    }

    pub fn parse(src: &str) -> Result<Self, CategoryError> {
        let mut p = CatParser { src, pos: 0 };
        let c = p.slashes()?;
        p.skip_ws();
        if p.pos < src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(c)
    }

    /// Tuple components in order; empty for non-tuples.
    pub fn elements(&self) -> &[TupleElement] {
        match self {
            Category::Tuple(e) => e,
            _ => &[],
        }
    }

    /// The left-nested reading `⟨⟨x1 … xn-1⟩, xn⟩` of a tuple with n >= 2.
    pub fn as_pair(&self) -> Option<(Category, &TupleElement)> {
        match self {
            Category::Tuple(e) if e.len() >= 2 => {
                let (last, init) = e.split_last().unwrap();
                let prefix = if init.len() == 1 { init[0].cat.clone() } else { Category::Tuple(init.to_vec()) };
                Some((prefix, last))
            }
            _ => None,
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Category::Atom(_) | Category::Var(_) => 1,
            Category::Forward(a, b) | Category::Backward(a, b) => 1 + a.size() + b.size(),
            Category::Tuple(e) => 1 + e.iter().map(|x| x.cat.size()).sum::<usize>(),
        }
    }

    pub fn has_vars(&self) -> bool {
        match self {
            Category::Var(_) => true,
            Category::Atom(_) => false,
            Category::Forward(a, b) | Category::Backward(a, b) => a.has_vars() || b.has_vars(),
            Category::Tuple(e) => e.iter().any(|x| x.cat.has_vars()),
        }
    }

    /// Structural equality ignoring recorded tuple spans.
    pub fn same_shape(&self, other: &Category) -> bool {
        match (self, other) {
            (Category::Atom(a), Category::Atom(b)) | (Category::Var(a), Category::Var(b)) => a == b,
            (Category::Forward(a1, a2), Category::Forward(b1, b2))
            | (Category::Backward(a1, a2), Category::Backward(b1, b2)) => a1.same_shape(b1) && a2.same_shape(b2),
            (Category::Tuple(a), Category::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.cat.same_shape(&y.cat))
            }
            _ => false,
        }
    }

    pub fn without_spans(&self) -> Category {
        self.map_children(&|c| c.without_spans(), true)
    }

    fn map_children(&self, f: &dyn Fn(&Category) -> Category, drop_spans: bool) -> Category {
        match self {
            Category::Atom(_) | Category::Var(_) => self.clone(),
            Category::Forward(a, b) => Category::forward(f(a), f(b)),
            Category::Backward(a, b) => Category::backward(f(a), f(b)),
            Category::Tuple(e) => Category::Tuple(
                e.iter().map(|x| TupleElement::new(f(&x.cat), if drop_spans { None } else { x.span })).collect(),
            ),
        }
    }

    /// Replaces every atom named in `aliases` by its definition.
    pub fn expand_aliases(&self, aliases: &[(String, Category)]) -> Result<Category, CategoryError> {
        self.expand_in(aliases, &mut Vec::new())
    }

    fn expand_in(&self, aliases: &[(String, Category)], active: &mut Vec<String>) -> Result<Category, CategoryError> {
        match self {
            Category::Atom(name) => match aliases.iter().find(|(n, _)| n == name) {
                Some((_, def)) => {
                    if active.contains(name) {
                        return Err(CategoryError::RecursiveAlias(name.clone()));
                    }
                    active.push(name.clone());
                    let r = def.expand_in(aliases, active);
                    active.pop();
                    r
                }
                None => Ok(self.clone()),
            },
            Category::Var(_) => Ok(self.clone()),
            Category::Forward(a, b) => {
                Ok(Category::forward(a.expand_in(aliases, active)?, b.expand_in(aliases, active)?))
            }
            Category::Backward(a, b) => {
                Ok(Category::backward(a.expand_in(aliases, active)?, b.expand_in(aliases, active)?))
            }
            Category::Tuple(e) => {
                Ok(Category::Tuple(
                    e.iter()
                        .map(|x| Ok(TupleElement::new(x.cat.expand_in(aliases, active)?, x.span)))
                        .collect::<Result<_, CategoryError>>()?,
                ))
            }
        }
    }

    pub fn rename_vars(&self, suffix: &str) -> Category {
        match self {
            Category::Var(v) => Category::Var(format!("{v}{suffix}")),
            _ => self.map_children(&|c| c.rename_vars(suffix), false),
        }
    }

    pub fn apply(&self, subst: &Substitution) -> Category {
        match self {
            Category::Var(v) => match subst.get(v) {
                Some(c) => c.apply(subst),
                None => self.clone(),
            },
            _ => self.map_children(&|c| c.apply(subst), false),
        }
    }

    fn occurs(&self, var: &str, subst: &Substitution) -> bool {
        match self {
            Category::Var(v) if v == var => true,
            Category::Var(v) => subst.get(v).is_some_and(|c| c.occurs(var, subst)),
            Category::Atom(_) => false,
            Category::Forward(a, b) | Category::Backward(a, b) => a.occurs(var, subst) || b.occurs(var, subst),
            Category::Tuple(e) => e.iter().any(|x| x.cat.occurs(var, subst)),
        }
    }
}

/// First-order unification in which only `Var` nodes bind. Tuple spans are
/// not compared.
pub fn unify(a: &Category, b: &Category, subst: &mut Substitution) -> bool {
    let a = resolve(a, subst);
    let b = resolve(b, subst);
    match (&a, &b) {
        (Category::Var(x), Category::Var(y)) if x == y => true,
        (Category::Var(x), other) | (other, Category::Var(x)) => {
            if other.occurs(x, subst) {
                return false;
            }
            subst.insert(x.clone(), other.clone());
            true
        }
        (Category::Atom(x), Category::Atom(y)) => x == y,
        (Category::Forward(a1, a2), Category::Forward(b1, b2))
        | (Category::Backward(a1, a2), Category::Backward(b1, b2)) => unify(a1, b1, subst) && unify(a2, b2, subst),
        (Category::Tuple(x), Category::Tuple(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| unify(&p.cat, &q.cat, subst))
        }
        _ => false,
    }
}

fn resolve(c: &Category, subst: &Substitution) -> Category {
    let mut cur = c.clone();
    while let Category::Var(v) = &cur {
        match subst.get(v) {
            Some(next) => cur = next.clone(),
            None => break,
        }
    }
    cur
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(c: &Category, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match c {
                Category::Forward(..) | Category::Backward(..) => write!(f, "({c})"),
                _ => write!(f, "{c}"),
            }
        }
        match self {
            Category::Atom(n) | Category::Var(n) => f.write_str(n),
            Category::Forward(res, arg) => {
                operand(res, f)?;
                f.write_str("/")?;
                operand(arg, f)
            }
            Category::Backward(arg, res) => {
                operand(arg, f)?;
                f.write_str("\\")?;
                operand(res, f)
            }
            Category::Tuple(e) => {
                f.write_str("<")?;
                for (i, x) in e.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", x.cat)?;
                }
                f.write_str(">")
            }
        }
    }
}

struct CatParser<'s> {
    src: &'s str,
    pos: usize,
}

impl CatParser<'_> {
    fn error(&self, msg: &str) -> CategoryError {
        CategoryError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn peek(&mut self) -> Option<char> {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        self.peek();
    }

    fn slashes(&mut self) -> Result<Category, CategoryError> {
        let mut left = self.primary()?;
        loop {
            match self.peek() {
                Some('/') => {
                    self.pos += 1;
                    let right = self.primary()?;
                    left = Category::forward(left, right);
                }
                Some('\\') => {
                    self.pos += 1;
                    let right = self.primary()?;
                    left = Category::backward(left, right);
                }
                _ => return Ok(left),
            }
        }
    }

    fn primary(&mut self) -> Result<Category, CategoryError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let c = self.slashes()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(c)
            }
            Some('<') => {
                self.pos += 1;
                let mut elements = Vec::new();
                if self.peek() == Some('>') {
                    self.pos += 1;
                    return Ok(Category::Tuple(elements));
                }
                loop {
                    elements.push(TupleElement::new(self.slashes()?, None));
                    match self.peek() {
                        Some(',') => self.pos += 1,
                        Some('>') => {
                            self.pos += 1;
                            return Ok(Category::Tuple(elements));
                        }
                        _ => return Err(self.error("expected `,` or `>`")),
                    }
                }
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let rest = &self.src[self.pos..];
                let end = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(rest.len());
                let name = &rest[..end];
                self.pos += end;
                if name.starts_with(|c: char| c.is_ascii_uppercase()) {
                    if name.len() == 1 {
                        Ok(Category::var(name))
                    } else {
                        Err(self.error("variables are single uppercase letters; atoms are lowercase"))
                    }
                } else {
                    Ok(Category::atom(name))
                }
            }
            _ => Err(self.error("expected a category")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(src: &str) -> Category {
        Category::parse(src).unwrap()
    }

    #[test]
    fn slashes_are_left_associative() {
        assert_eq!(c("a/b/c"), Category::forward(c("a/b"), c("c")));
        assert_eq!(c("np\\s/np"), c("(np\\s)/np"));
        assert_eq!(
            c("(np\\s)\\(np\\s)"),
            Category::backward(Category::backward(c("np"), c("s")), Category::backward(c("np"), c("s")))
        );
    }

    #[test]
    fn printer_mirrors_reader() {
        for src in
            ["(np\\s)/np", "(X\\X)/X", "<np, (np\\s)\\(np\\s)>\\<np, (np\\s)\\(np\\s)>", "<>\\<np>", "<<a, b>, c>", "s"]
        {
            assert_eq!(c(src).to_string(), src);
        }
        assert_eq!(c("np\\s/np").to_string(), "(np\\s)/np");
    }

    #[test]
    fn syntax_errors() {
        assert!(Category::parse("np/").is_err());
        assert!(Category::parse("(np").is_err());
        assert!(Category::parse("<np np>").is_err());
        assert!(Category::parse("NP").is_err());
    }

    #[test]
    fn pair_left_nests() {
        let e = |s: &str| TupleElement::new(c(s), None);
        let ab = Category::pair(e("a"), e("b"));
        let abc = Category::pair(TupleElement::new(ab.clone(), None), e("c"));
        assert_eq!(abc, c("<a, b, c>"));
        let (prefix, last) = abc.as_pair().unwrap();
        assert_eq!(prefix, ab);
        assert_eq!(last.cat, c("c"));
    }

    #[test]
    fn alias_expansion() {
        let aliases = vec![("vp".to_string(), c("np\\s")), ("vm".to_string(), c("vp\\vp"))];
        assert_eq!(c("vm").expand_aliases(&aliases).unwrap(), c("(np\\s)\\(np\\s)"));
        let looping = vec![("a".to_string(), c("a/b"))];
        assert_eq!(c("a").expand_aliases(&looping), Err(CategoryError::RecursiveAlias("a".into())));
    }

    #[test]
    fn unify_binds_variables_with_occurs_check() {
        let mut s = Substitution::new();
        assert!(unify(&c("X"), &c("<np, s>"), &mut s));
        assert_eq!(c("X\\X").apply(&s), c("<np, s>\\<np, s>"));
        let mut s = Substitution::new();
        assert!(!unify(&c("X"), &c("X/np"), &mut s));
        let mut s = Substitution::new();
        assert!(!unify(&c("np"), &c("s"), &mut s));
    }
}
