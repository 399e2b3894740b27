//! Categorial grammar with tuple categories for non-constituent
//! coordination.

mod category;
mod classify;
pub mod ncc;
mod rules;

pub use category::{unify, Category, CategoryError, Substitution, TupleElement};
pub use classify::{
    ClassifyError, HierarchyBinding, COMPLEMENT, CONJ, COORDINATION, NP, PHRASE, TOP, TUPLE, VERB, VM, WORD,
};
pub use rules::{ba, dtuple, dtuple_spanned, fa, ituple, scan};
