use std::sync::Arc;

use thiserror::Error;

use super::category::Category;
use crate::poset::{TypeHierarchy, TypeId};

pub const TOP: &str = "T";
pub const PHRASE: &str = "phrase";
pub const WORD: &str = "word";
pub const COMPLEMENT: &str = "C";
pub const COORDINATION: &str = "c<>";
pub const CONJ: &str = "conj";
pub const VERB: &str = "verb";
pub const NP: &str = "np";
pub const VM: &str = "vm";
pub const TUPLE: &str = "tuple";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("category grammars need a `{PHRASE}` type or a declared top type to classify unknown shapes")]
    NoFallback,
}

/// Maps categories onto the type hierarchy used for dynamic binding.
///
/// Types named `np`, `vm`, `tuple`, `conj`, `verb` and `c<>` are recognised
/// when the hierarchy declares them; every other shape falls back to
/// `phrase` (or the declared top).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyBinding {
    hierarchy: Arc<TypeHierarchy>,
    aliases: Vec<(TypeId, Category)>,
    tuple: Option<TypeId>,
    coordination: Option<TypeId>,
    conj: Option<TypeId>,
    verb: Option<TypeId>,
    fallback: TypeId,
}

impl HierarchyBinding {
    /// `aliases` pairs a name with its (expanded) category; aliases whose
    /// name is also a type classify their category under that type.
    pub fn new(hierarchy: Arc<TypeHierarchy>, aliases: &[(String, Category)]) -> Result<Self, ClassifyError> {
        let fallback = hierarchy.get(PHRASE).or(hierarchy.top()).ok_or(ClassifyError::NoFallback)?;
        let aliases = aliases.iter().filter_map(|(name, cat)| hierarchy.get(name).map(|t| (t, cat.clone()))).collect();
        Ok(HierarchyBinding {
            tuple: hierarchy.get(TUPLE),
            coordination: hierarchy.get(COORDINATION),
            conj: hierarchy.get(CONJ),
            verb: hierarchy.get(VERB),
            aliases,
            fallback,
            hierarchy,
        })
    }

    pub fn hierarchy(&self) -> &Arc<TypeHierarchy> {
        &self.hierarchy
    }

    pub fn conj_type(&self) -> Option<TypeId> {
        self.conj
    }

    /// `lexical` marks a category straight from the lexicon; only those can
    /// be conjunctions or verbs.
    pub fn classify(&self, c: &Category, lexical: bool) -> TypeId {
        if let (Some(conj), true) = (self.conj, is_coordinator(c)) {
            return conj;
        }
        match c {
            Category::Tuple(e) if !e.is_empty() => {
                if let Some(t) = self.tuple {
                    return t;
                }
            }
            Category::Backward(l, r)
                if matches!((l.as_ref(), r.as_ref()), (Category::Tuple(_), Category::Tuple(_))) =>
            {
                if let Some(t) = self.coordination {
                    return t;
                }
            }
            Category::Atom(name) => {
                if let Some(t) = self.hierarchy.get(name) {
                    return t;
                }
            }
            _ => {}
        }
        if let Some((t, _)) = self.aliases.iter().find(|(_, def)| def.same_shape(c)) {
            return *t;
        }
        if let (Some(verb), true) = (self.verb, lexical && is_verb(c)) {
            return verb;
        }
        self.fallback
    }

    pub fn classify_name(&self, c: &Category, lexical: bool) -> &str {
        self.hierarchy.name(self.classify(c, lexical))
    }
}

// (X\X)/X
fn is_coordinator(c: &Category) -> bool {
    let Category::Forward(result, arg) = c else {
        return false;
    };
    let (Category::Backward(a, b), Category::Var(x)) = (result.as_ref(), arg.as_ref()) else {
        return false;
    };
    matches!((a.as_ref(), b.as_ref()), (Category::Var(p), Category::Var(q)) if p == x && q == x)
}

// Seeks arguments to its right and ends in np\s.
fn is_verb(c: &Category) -> bool {
    let mut cur = c;
    let mut forward_args = 0;
    while let Category::Forward(result, _) = cur {
        forward_args += 1;
        cur = result;
    }
    forward_args > 0
        && matches!(cur, Category::Backward(a, b) if **a == Category::atom(NP) && **b == Category::atom("s"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catgram::ncc::ncc_hierarchy;

    fn c(src: &str) -> Category {
        Category::parse(src).unwrap()
    }

    fn binding() -> HierarchyBinding {
        let (h, aliases) = ncc_hierarchy();
        HierarchyBinding::new(Arc::new(h), &aliases).unwrap()
    }

    #[test]
    fn classification_examples() {
        let b = binding();
        let h = b.hierarchy().clone();
        let conj = c("(X\\X)/X");
        assert_eq!(b.classify_name(&conj, true), CONJ);
        let coord = crate::catgram::fa(&conj, &c("<np, (np\\s)\\(np\\s)>")).unwrap();
        assert_eq!(b.classify_name(&coord, false), COORDINATION);
        assert_eq!(b.classify_name(&c("np"), false), NP);
        assert!(h.leq(NP, COMPLEMENT).unwrap());
        assert_eq!(b.classify_name(&c("<np, (np\\s)\\(np\\s)>"), false), TUPLE);
        assert!(h.leq(TUPLE, COMPLEMENT).unwrap());
        assert_eq!(b.classify_name(&c("(np\\s)\\(np\\s)"), false), VM);
        assert_eq!(b.classify_name(&c("(np\\s)/np"), true), VERB);
        assert_eq!(b.classify_name(&c("((np\\s)/pp)/np"), true), VERB);
    }

    #[test]
    fn derived_and_unknown_shapes_fall_back_to_phrase() {
        let b = binding();
        assert_eq!(b.classify_name(&c("(np\\s)/np"), false), PHRASE);
        assert_eq!(b.classify_name(&c("np\\s"), true), PHRASE);
        assert_eq!(b.classify_name(&c("s"), false), PHRASE);
    }

    #[test]
    fn fallback_is_required() {
        let h = TypeHierarchy::new(&["a", "b"], &[], None).unwrap();
        assert_eq!(HierarchyBinding::new(Arc::new(h), &[]), Err(ClassifyError::NoFallback));
    }
}
