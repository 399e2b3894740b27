//! The binary combination rules over categories: forward and backward
//! application, tuple introduction, scanning of left-conjunct material and
//! tuple elimination.

use super::category::{unify, Category, Substitution, TupleElement};
use crate::span::Span;

// Operand variables are renamed apart from the functor's before unifying.
const APART: &str = "'";

/// `X/Y  Y → X`
pub fn fa(x: &Category, y: &Category) -> Option<Category> {
    let Category::Forward(result, argument) = x else {
        return None;
    };
    apply_slash(result, argument, y)
}

/// `Y  Y\X → X`
pub fn ba(y: &Category, x: &Category) -> Option<Category> {
    let Category::Backward(argument, result) = x else {
        return None;
    };
    apply_slash(result, argument, y)
}

fn apply_slash(result: &Category, argument: &Category, operand: &Category) -> Option<Category> {
    let operand = operand.rename_vars(APART);
    let mut subst = Substitution::new();
    if !unify(argument, &operand, &mut subst) {
        return None;
    }
    let out = result.apply(&subst);
    // derived categories never carry variables
    (!out.has_vars()).then_some(out)
}

/// `X  Y → ⟨X, Y⟩`, recording each component's span. Licensing by an
/// adjacent conjunction is the caller's concern.
pub fn ituple(x: &Category, x_span: Span, y: &Category, y_span: Span) -> Option<Category> {
    if x.has_vars() || y.has_vars() {
        return None;
    }
    Some(Category::pair(TupleElement::new(x.clone(), Some(x_span)), TupleElement::new(y.clone(), Some(y_span))))
}

/// `Xn  ⟨⟨X1 … Xn-1⟩, Xn⟩\R → ⟨X1 … Xn-1⟩\R`
///
/// The matched component of `R` is re-anchored to the span of the scanned
/// left constituent, so that after elimination each component sits where
/// its left-conjunct counterpart was.
pub fn scan(xn: &Category, xn_span: Option<Span>, r: &Category) -> Option<Category> {
    let Category::Backward(left, right) = r else {
        return None;
    };
    let (Category::Tuple(left), Category::Tuple(right)) = (left.as_ref(), right.as_ref()) else {
        return None;
    };
    let (last, init) = left.split_last()?;
    if !last.cat.same_shape(xn) {
        return None;
    }
    let mut right = right.clone();
    if let (Some(slot), Some(span)) = (right.get_mut(init.len()), xn_span) {
        slot.span = Some(span);
    }
    Some(Category::backward(Category::Tuple(init.to_vec()), Category::Tuple(right)))
}

/// `⟨⟩\⟨X1 … Xn⟩ → X1 … Xn`, only once the left side is exhausted.
pub fn dtuple(c: &Category) -> Option<Vec<TupleElement>> {
    let Category::Backward(left, right) = c else {
        return None;
    };
    match (left.as_ref(), right.as_ref()) {
        (Category::Tuple(l), Category::Tuple(r)) if l.is_empty() && !r.is_empty() => Some(r.clone()),
        _ => None,
    }
}

/// [`dtuple`] with spans that partition `span`: each component starts where
/// its recorded span starts (the first at `span.start`) and runs up to the
/// next component, the last one to `span.end`.
pub fn dtuple_spanned(c: &Category, span: Span) -> Option<Vec<(Category, Span)>> {
    let elements = dtuple(c)?;
    let mut starts = Vec::with_capacity(elements.len());
    for (i, e) in elements.iter().enumerate() {
        starts.push(if i == 0 { span.start } else { e.span?.start });
    }
    if starts.windows(2).any(|w| w[0] >= w[1]) || *starts.last()? >= span.end {
        return None;
    }
    Some(
        elements
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let end = starts.get(i + 1).copied().unwrap_or(span.end);
                (e.cat, Span::new(starts[i], end))
            })
            .collect(),
    )
}
