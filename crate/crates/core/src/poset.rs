//! Finite type hierarchies, cartesian posets over pairs of types, and the
//! well-formedness check that guarantees a unique most specific signature.
//!
//! A [`TypeHierarchy`] is declared as explicit `child < parent` edges. The
//! reflexive-transitive closure is computed once at construction, so `leq`
//! is a table lookup. Cycles and pairs with several maximal common subtypes
//! are rejected when the hierarchy is built.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Index of a type inside its [`TypeHierarchy`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(u32);

impl TypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PosetError {
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("subtype cycle: {}", .0.join(" < "))]
    Cycle(Vec<String>),
    #[error(
        "types `{a}` and `{b}` have more than one maximal common subtype: {}",
        .candidates.join(", ")
    )]
    NotBoundedComplete { a: String, b: String, candidates: Vec<String> },
    #[error("declared top `{top}` is not above `{other}`")]
    TopNotGreatest { top: String, other: String },
}

/// Collects type declarations before the closure is computed.
#[derive(Debug, Clone, Default)]
pub struct HierarchyBuilder {
    names: Vec<String>,
    index: HashMap<String, TypeId>,
    edges: Vec<(TypeId, TypeId)>,
    top: Option<TypeId>,
}

impl HierarchyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a type, returning its id. Declaring a name twice is a no-op.
    pub fn add_type(&mut self, name: &str) -> TypeId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = TypeId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    /// Declares `child < parent`, declaring both names if needed.
    pub fn add_edge(&mut self, child: &str, parent: &str) {
        let c = self.add_type(child);
        let p = self.add_type(parent);
        if !self.edges.contains(&(c, p)) {
            self.edges.push((c, p));
        }
    }

    pub fn set_top(&mut self, name: &str) {
        self.top = Some(self.add_type(name));
    }

    /// Every problem with the declared hierarchy, cycles first. Bounded
    /// completeness is only examined for acyclic hierarchies.
    pub fn diagnose(&self) -> Vec<PosetError> {
        let reach = closure(self.names.len(), &self.edges);
        let mut problems = self.cycles(&reach);
        if !problems.is_empty() {
            return problems;
        }
        problems.extend(self.top_problems(&reach));
        let n = self.names.len();
        for a in 0..n {
            for b in a + 1..n {
                let maximal = maximal_common_subtypes(&reach, a, b);
                if maximal.len() > 1 {
                    problems.push(PosetError::NotBoundedComplete {
                        a: self.names[a].clone(),
                        b: self.names[b].clone(),
                        candidates: maximal.iter().map(|&c| self.names[c].clone()).collect(),
                    });
                }
            }
        }
        problems
    }

    pub fn build(self) -> Result<TypeHierarchy, PosetError> {
        if let Some(first) = self.diagnose().into_iter().next() {
            return Err(first);
        }
        Ok(self.build_unchecked())
    }

    /// Builds without the bounded-completeness check. Cycles still make the
    /// closure meaningless, so callers must have ruled them out.
    pub(crate) fn build_unchecked(self) -> TypeHierarchy {
        let reach = closure(self.names.len(), &self.edges);
        TypeHierarchy { names: self.names, index: self.index, edges: self.edges, top: self.top, reach }
    }

    fn cycles(&self, reach: &[Vec<bool>]) -> Vec<PosetError> {
        let n = self.names.len();
        let mut reported = vec![false; n];
        let mut out = Vec::new();
        for a in 0..n {
            if reported[a] {
                continue;
            }
            let self_loop = self.edges.iter().any(|&(c, p)| c.index() == a && p.index() == a);
            let members: Vec<usize> = (0..n).filter(|&b| b != a && reach[a][b] && reach[b][a]).collect();
            if members.is_empty() && !self_loop {
                continue;
            }
            reported[a] = true;
            for &m in &members {
                reported[m] = true;
            }
            out.push(PosetError::Cycle(self.cycle_path(a)));
        }
        out
    }

    // Shortest walk a < ... < a along parent edges.
    fn cycle_path(&self, a: usize) -> Vec<String> {
        let n = self.names.len();
        let mut prev = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for &(c, p) in &self.edges {
            if c.index() == a && prev[p.index()] == usize::MAX {
                prev[p.index()] = a;
                queue.push_back(p.index());
            }
        }
        while let Some(x) = queue.pop_front() {
            if x == a {
                break;
            }
            for &(c, p) in &self.edges {
                if c.index() == x && prev[p.index()] == usize::MAX {
                    prev[p.index()] = x;
                    queue.push_back(p.index());
                }
            }
        }
        let mut path = vec![a];
        let mut cur = prev[a];
        while cur != a && cur != usize::MAX {
            path.push(cur);
            cur = prev[cur];
        }
        path.push(a);
        path.reverse();
        path.into_iter().map(|i| self.names[i].clone()).collect()
    }

    fn top_problems(&self, reach: &[Vec<bool>]) -> Vec<PosetError> {
        let Some(top) = self.top else {
            return Vec::new();
        };
        (0..self.names.len())
            .filter(|&x| !reach[x][top.index()])
            .map(|x| PosetError::TopNotGreatest { top: self.names[top.index()].clone(), other: self.names[x].clone() })
            .collect()
    }
}

// reach[a][b] holds iff a <= b.
fn closure(n: usize, edges: &[(TypeId, TypeId)]) -> Vec<Vec<bool>> {
    let mut parents = vec![Vec::new(); n];
    for &(c, p) in edges {
        parents[c.index()].push(p.index());
    }
    let mut reach = vec![vec![false; n]; n];
    for (a, row) in reach.iter_mut().enumerate() {
        let mut stack = vec![a];
        while let Some(x) = stack.pop() {
            if row[x] {
                continue;
            }
            row[x] = true;
            stack.extend(parents[x].iter().copied());
        }
    }
    reach
}

fn maximal_common_subtypes(reach: &[Vec<bool>], a: usize, b: usize) -> Vec<usize> {
    let common: Vec<usize> = (0..reach.len()).filter(|&c| reach[c][a] && reach[c][b]).collect();
    common.iter().copied().filter(|&c| !common.iter().any(|&d| d != c && reach[c][d])).collect()
}

/// A finite poset of named types.
#[derive(Debug, Clone)]
pub struct TypeHierarchy {
    names: Vec<String>,
    index: HashMap<String, TypeId>,
    edges: Vec<(TypeId, TypeId)>,
    top: Option<TypeId>,
    reach: Vec<Vec<bool>>,
}

impl PartialEq for TypeHierarchy {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.edges == other.edges && self.top == other.top
    }
}

impl Eq for TypeHierarchy {}

impl TypeHierarchy {
    /// Strict constructor: every name used in `edges` or as `top` must be
    /// listed in `types`.
    pub fn new(types: &[&str], edges: &[(&str, &str)], top: Option<&str>) -> Result<Self, PosetError> {
        let mut b = HierarchyBuilder::new();
        for t in types {
            b.add_type(t);
        }
        let known = |name: &str| {
            if types.contains(&name) {
                Ok(())
            } else {
                Err(PosetError::UnknownType(name.to_string()))
            }
        };
        for &(c, p) in edges {
            known(c)?;
            known(p)?;
            b.add_edge(c, p);
        }
        if let Some(t) = top {
            known(t)?;
            b.set_top(t);
        }
        b.build()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Result<TypeId, PosetError> {
        self.index.get(name).copied().ok_or_else(|| PosetError::UnknownType(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Option<TypeId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: TypeId) -> &str {
        &self.names[id.index()]
    }

    pub fn top(&self) -> Option<TypeId> {
        self.top
    }

    pub fn types(&self) -> impl Iterator<Item = TypeId> + '_ {
        (0..self.names.len() as u32).map(TypeId)
    }

    /// Declared `(child, parent)` edges in declaration order.
    pub fn edges(&self) -> &[(TypeId, TypeId)] {
        &self.edges
    }

    /// `a <= b`: `a` is `b` or one of its subtypes.
    pub fn leq(&self, a: &str, b: &str) -> Result<bool, PosetError> {
        Ok(self.leq_id(self.id(a)?, self.id(b)?))
    }

    pub fn leq_id(&self, a: TypeId, b: TypeId) -> bool {
        self.reach[a.index()][b.index()]
    }

    pub fn meet(&self, a: &str, b: &str) -> Result<Option<String>, PosetError> {
        let m = self.meet_id(self.id(a)?, self.id(b)?)?;
        Ok(m.map(|t| self.name(t).to_string()))
    }

    /// The unique maximal common subtype of `a` and `b`, if any.
    pub fn meet_id(&self, a: TypeId, b: TypeId) -> Result<Option<TypeId>, PosetError> {
        let maximal = maximal_common_subtypes(&self.reach, a.index(), b.index());
        match maximal.as_slice() {
            [] => Ok(None),
            [m] => Ok(Some(TypeId(*m as u32))),
            many => Err(PosetError::NotBoundedComplete {
                a: self.name(a).to_string(),
                b: self.name(b).to_string(),
                candidates: many.iter().map(|&c| self.names[c].clone()).collect(),
            }),
        }
    }
}

/// A pair of types `left⊗right`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CartesianType {
    pub left: TypeId,
    pub right: TypeId,
}

impl CartesianType {
    pub fn new(left: TypeId, right: TypeId) -> Self {
        CartesianType { left, right }
    }

    pub fn named(h: &TypeHierarchy, left: &str, right: &str) -> Result<Self, PosetError> {
        Ok(CartesianType::new(h.id(left)?, h.id(right)?))
    }

    pub fn display<'a>(&self, h: &'a TypeHierarchy) -> CartesianDisplay<'a> {
        CartesianDisplay { h, ty: *self }
    }
}

pub struct CartesianDisplay<'a> {
    h: &'a TypeHierarchy,
    ty: CartesianType,
}

impl fmt::Display for CartesianDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}⊗{}", self.h.name(self.ty.left), self.h.name(self.ty.right))
    }
}

/// Two unordered members whose componentwise meet is not a member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    pub x: CartesianType,
    pub y: CartesianType,
    pub missing: CartesianType,
}

impl Conflict {
    pub fn describe(&self, h: &TypeHierarchy) -> String {
        format!(
            "({}, {}) have no common specialisation: missing ⟨{}, {}⟩",
            self.x.display(h),
            self.y.display(h),
            h.name(self.missing.left),
            h.name(self.missing.right)
        )
    }
}

/// A set of cartesian types ordered componentwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CartesianPoset {
    hierarchy: Arc<TypeHierarchy>,
    members: Vec<CartesianType>,
}

impl CartesianPoset {
    pub fn new(hierarchy: Arc<TypeHierarchy>, members: impl IntoIterator<Item = CartesianType>) -> Self {
        let mut out: Vec<CartesianType> = Vec::new();
        for m in members {
            if !out.contains(&m) {
                out.push(m);
            }
        }
        CartesianPoset { hierarchy, members: out }
    }

    pub fn hierarchy(&self) -> &Arc<TypeHierarchy> {
        &self.hierarchy
    }

    pub fn members(&self) -> &[CartesianType] {
        &self.members
    }

    pub fn contains(&self, t: CartesianType) -> bool {
        self.members.contains(&t)
    }

    pub fn cartesian_leq(&self, x: CartesianType, y: CartesianType) -> bool {
        self.hierarchy.leq_id(x.left, y.left) && self.hierarchy.leq_id(x.right, y.right)
    }

    /// Name-level `⟨x1,x2⟩ ⪯ ⟨y1,y2⟩`.
    pub fn leq_named(&self, x: (&str, &str), y: (&str, &str)) -> Result<bool, PosetError> {
        let h = &self.hierarchy;
        Ok(self.cartesian_leq(CartesianType::named(h, x.0, x.1)?, CartesianType::named(h, y.0, y.1)?))
    }

    pub fn check_well_formed(&self) -> Result<(), Vec<Conflict>> {
        let mut conflicts = Vec::new();
        for (i, &x) in self.members.iter().enumerate() {
            for &y in &self.members[i + 1..] {
                if self.cartesian_leq(x, y) || self.cartesian_leq(y, x) {
                    continue;
                }
                let h = &self.hierarchy;
                // bounded completeness was established when `h` was built
                let m1 = h.meet_id(x.left, y.left).ok().flatten();
                let m2 = h.meet_id(x.right, y.right).ok().flatten();
                if let (Some(m1), Some(m2)) = (m1, m2) {
                    let missing = CartesianType::new(m1, m2);
                    if !self.contains(missing) {
                        conflicts.push(Conflict { x, y, missing });
                    }
                }
            }
        }
        if conflicts.is_empty() {
            Ok(())
        } else {
            Err(conflicts)
        }
    }
}
