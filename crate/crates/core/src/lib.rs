//! Generic rules: grammar rules indexed by pairs of types, where the rule
//! applied to two constituents is the most specific one whose signature
//! lies above their types. Includes a shift-reduce parser driven by such
//! rules, a lambda-term semantic domain, and a categorial grammar that
//! handles non-constituent coordination with tuple categories.

pub mod catgram;
pub mod cli;
pub mod generic_rule;
pub mod grammar;
pub mod lambda;
pub mod parser;
pub mod poset;
pub mod span;
pub mod trace;

pub use generic_rule::{GenericRule, PartialRule, RuleExpr};
pub use grammar::Grammar;
pub use lambda::LambdaTerm;
pub use parser::{Goal, Parser};
pub use poset::{CartesianPoset, CartesianType, TypeHierarchy};
