//! The generic rule for non-constituent coordination and the hierarchy it
//! is stated over.

use std::sync::Arc;

use super::category::Category;
use super::classify::{HierarchyBinding, COMPLEMENT, CONJ, COORDINATION, NP, PHRASE, TOP, TUPLE, VERB, VM, WORD};
use crate::generic_rule::{Builtin, GenericRule, Guard, PartialRule, RuleExpr};
use crate::poset::{CartesianType, HierarchyBuilder, TypeHierarchy};

/// Abbreviations usable in lexical categories.
pub fn ncc_aliases() -> Vec<(String, Category)> {
    let vp = Category::parse("np\\s").unwrap();
    vec![("vp".to_string(), vp.clone()), (VM.to_string(), Category::backward(vp.clone(), vp))]
}

/// ```text
///              T
///        phrase      word
///     c<>   C      conj  verb
///        np vm tuple
/// ```
pub fn ncc_hierarchy() -> (TypeHierarchy, Vec<(String, Category)>) {
    let mut b = HierarchyBuilder::new();
    b.add_type(TOP);
    for (child, parent) in [
        (PHRASE, TOP),
        (WORD, TOP),
        (COORDINATION, PHRASE),
        (COMPLEMENT, PHRASE),
        (CONJ, WORD),
        (VERB, WORD),
        (NP, COMPLEMENT),
        (VM, COMPLEMENT),
        (TUPLE, COMPLEMENT),
    ] {
        b.add_edge(child, parent);
    }
    b.set_top(TOP);
    (b.build().expect("the coordination hierarchy is valid"), ncc_aliases())
}

/// The four partial rules: application by default, tuple formation for
/// complements after a conjunction and for a subject and verb before one,
/// and scanning with tuple elimination against a coordinated tuple.
pub fn ncc_rule(hierarchy: Arc<TypeHierarchy>) -> GenericRule {
    let sig = |a: &str, b: &str| CartesianType::named(&hierarchy, a, b).expect("coordination types are declared");
    let b = RuleExpr::Builtin;
    let rules = vec![
        PartialRule::new(sig(TOP, TOP), RuleExpr::disj(b(Builtin::Fa), b(Builtin::Ba))),
        PartialRule::new(sig(COMPLEMENT, COMPLEMENT), b(Builtin::Ituple)).guarded(Guard::ConjBefore),
        PartialRule::new(sig(NP, VERB), b(Builtin::Ituple)).guarded(Guard::ConjAfter),
        PartialRule::new(
            sig(COMPLEMENT, COORDINATION),
            RuleExpr::comp(RuleExpr::opt(b(Builtin::Dtuple)), b(Builtin::Scan)),
        ),
    ];
    GenericRule::new("SYN", hierarchy.clone(), rules).expect("the coordination rule is well-formed")
}

pub struct NccGrammar {
    pub rule: GenericRule,
    pub binding: HierarchyBinding,
    /// Categories for the words of "John met Jane yesterday and Chris today".
    pub lexicon: Vec<(String, Category)>,
}

pub fn build_ncc_grammar() -> NccGrammar {
    let (h, aliases) = ncc_hierarchy();
    let h = Arc::new(h);
    let binding = HierarchyBinding::new(h.clone(), &aliases).expect("phrase is declared");
    let lexicon = [
        ("John", "np"),
        ("met", "(np\\s)/np"),
        ("Jane", "np"),
        ("yesterday", "vp\\vp"),
        ("and", "(X\\X)/X"),
        ("Chris", "np"),
        ("today", "vp\\vp"),
    ]
    .into_iter()
    .map(|(w, c)| (w.to_string(), Category::parse(c).unwrap().expand_aliases(&aliases).unwrap()))
    .collect();
    NccGrammar { rule: ncc_rule(h), binding, lexicon }
}
