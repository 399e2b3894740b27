//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;
use std::sync::Arc;

use genrule::generic_rule::{GenericRule, PartialRule, RuleError, RuleExpr, Value};
use genrule::parser::{Calculus, LexEntry, Lexicon};
use genrule::poset::{CartesianType, HierarchyBuilder, PosetError, TypeHierarchy, TypeId};
use genrule::Grammar;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::rngs::StdRng;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("grammars").join(name)
}

pub fn load(name: &str) -> Grammar {
    let src = std::fs::read_to_string(fixture(name)).unwrap();
    Grammar::from_source(&src).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// A gapped coordination with `extra` more conjuncts.
pub fn coordination(extra: usize) -> String {
    let more = [("Mary", "tomorrow"), ("Bill", "tonight")];
    let mut s = String::from("John met Jane yesterday and Chris today");
    for (np, adv) in more.iter().cycle().take(extra) {
        s.push_str(&format!(" and {np} {adv}"));
    }
    s
}

/// A random DAG over `t0..tn`, edges only from higher to lower index.
#[derive(Clone, Debug)]
pub struct Dag {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Dag {
    pub fn name(i: usize) -> String {
        format!("t{i}")
    }

    /// Reachability by depth-first search over the declared edges.
    pub fn reach(&self) -> Vec<Vec<bool>> {
        let mut reach = vec![vec![false; self.n]; self.n];
        for (a, row) in reach.iter_mut().enumerate() {
            let mut stack = vec![a];
            while let Some(x) = stack.pop() {
                if row[x] {
                    continue;
                }
                row[x] = true;
                stack.extend(self.edges.iter().filter(|e| e.0 == x).map(|e| e.1));
            }
        }
        reach
    }

    pub fn build(&self) -> Result<TypeHierarchy, PosetError> {
        let mut b = HierarchyBuilder::new();
        for i in 0..self.n {
            b.add_type(&Dag::name(i));
        }
        for &(c, p) in &self.edges {
            b.add_edge(&Dag::name(c), &Dag::name(p));
        }
        b.build()
    }

    pub fn random(rng: &mut StdRng, max_types: usize) -> Dag {
        let n = rng.gen_range(1..=max_types);
        let mut edges = Vec::new();
        for c in 1..n {
            for p in 0..c {
                if rng.gen_bool(0.35) {
                    edges.push((c, p));
                }
            }
        }
        Dag { n, edges }
    }
}

pub fn arb_dag(max_types: usize) -> impl Strategy<Value = Dag> {
    (1..=max_types).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (1..n).flat_map(|c| (0..c).map(move |p| (c, p))).collect();
        let len = pairs.len();
        proptest::collection::vec(proptest::bool::weighted(0.35), len).prop_map(move |keep| Dag {
            n,
            edges: pairs.iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| *e).collect(),
        })
    })
}

/// Maximal common lower bounds of `a` and `b`, by enumeration.
pub fn maximal_lower_bounds(reach: &[Vec<bool>], a: usize, b: usize) -> Vec<usize> {
    let common: Vec<usize> = (0..reach.len()).filter(|&c| reach[c][a] && reach[c][b]).collect();
    common.iter().copied().filter(|&c| !common.iter().any(|&d| d != c && reach[c][d])).collect()
}

/// Minimal signatures above `x`, by enumeration.
pub fn minimal_upper_bounds(reach: &[Vec<bool>], sigs: &[(usize, usize)], x: (usize, usize)) -> Vec<(usize, usize)> {
    let leq = |p: (usize, usize), q: (usize, usize)| reach[p.0][q.0] && reach[p.1][q.1];
    let above: Vec<(usize, usize)> = sigs.iter().copied().filter(|&s| leq(x, s)).collect();
    above.iter().copied().filter(|&s| !above.iter().any(|&t| t != s && leq(t, s))).collect()
}

pub fn tid(h: &TypeHierarchy, i: usize) -> TypeId {
    h.id(&Dag::name(i)).unwrap()
}

/// A guard-free generic rule mapping each signature to a result type, with
/// a lexicon of `words` words over the same hierarchy.
pub struct TypeMapCase {
    pub dag: Dag,
    pub reach: Vec<Vec<bool>>,
    pub hierarchy: Arc<TypeHierarchy>,
    /// `(left, right, result)`
    pub rules: Vec<(usize, usize, usize)>,
    pub calculus: Calculus,
    pub lexicon: Lexicon,
    /// Types of each word.
    pub words: Vec<Vec<usize>>,
}

impl TypeMapCase {
    pub fn random(rng: &mut StdRng, max_types: usize, max_rules: usize, words: usize) -> TypeMapCase {
        loop {
            let dag = Dag::random(rng, max_types);
            let Ok(h) = dag.build() else { continue };
            let h = Arc::new(h);
            let mut rules: Vec<(usize, usize, usize)> = Vec::new();
            for _ in 0..rng.gen_range(1..=max_rules) {
                let (l, r) = (rng.gen_range(0..dag.n), rng.gen_range(0..dag.n));
                if !rules.iter().any(|x| (x.0, x.1) == (l, r)) {
                    rules.push((l, r, rng.gen_range(0..dag.n)));
                }
            }
            let partial = rules
                .iter()
                .map(|&(l, r, t)| {
                    PartialRule::new(CartesianType::new(tid(&h, l), tid(&h, r)), RuleExpr::TypeResult(tid(&h, t)))
                })
                .collect();
            let Ok(rule) = GenericRule::new("SYN", h.clone(), partial) else { continue };
            let mut lexicon = Lexicon::new();
            let mut types = Vec::new();
            for w in 0..words {
                let mut ts = vec![rng.gen_range(0..dag.n)];
                if rng.gen_bool(0.25) {
                    let t = rng.gen_range(0..dag.n);
                    if !ts.contains(&t) {
                        ts.push(t);
                    }
                }
                for &t in &ts {
                    lexicon.add(&format!("w{w}"), LexEntry { syn: Value::Type(tid(&h, t)), sem: None });
                }
                types.push(ts);
            }
            let reach = dag.reach();
            return TypeMapCase {
                dag,
                reach,
                hierarchy: h,
                rules,
                calculus: Calculus::Syn(vec![rule]),
                lexicon,
                words: types,
            };
        }
    }

    /// The result type for `a b`, chosen by enumerating signatures.
    pub fn combine(&self, a: usize, b: usize) -> Option<usize> {
        let sigs: Vec<(usize, usize)> = self.rules.iter().map(|r| (r.0, r.1)).collect();
        match minimal_upper_bounds(&self.reach, &sigs, (a, b)).as_slice() {
            [] => None,
            [s] => self.rules.iter().find(|r| (r.0, r.1) == *s).map(|r| r.2),
            _ => panic!("well-formed rules bind uniquely"),
        }
    }

    /// `table[a][b]` is the bit set of results for `a b`.
    pub fn table(&self) -> Vec<Vec<u32>> {
        (0..self.dag.n).map(|a| (0..self.dag.n).map(|b| self.combine(a, b).map_or(0, |t| 1 << t)).collect()).collect()
    }
}

/// CKY over bit sets of types, extended one word at a time so that
/// sentences sharing a prefix share its cells.
pub struct Cky<'t> {
    table: &'t [Vec<u32>],
    /// `columns[j][i]` holds the types derivable for `[i, j+1)`.
    columns: Vec<Vec<u32>>,
}

impl<'t> Cky<'t> {
    pub fn new(table: &'t [Vec<u32>]) -> Self {
        Cky { table, columns: Vec::new() }
    }

    pub fn push(&mut self, word_types: u32) {
        let j = self.columns.len();
        let mut col = vec![0u32; j + 1];
        col[j] = word_types;
        for i in (0..j).rev() {
            let mut cell = 0;
            for k in i + 1..=j {
                // [i, k) from column k-1, [k, j+1) from the new column
                let left = self.columns[k - 1][i];
                let right = col[k];
                if left == 0 || right == 0 {
                    continue;
                }
                for a in bits(left) {
                    for b in bits(right) {
                        cell |= self.table[a][b];
                    }
                }
            }
            col[i] = cell;
        }
        self.columns.push(col);
    }

    pub fn pop(&mut self) {
        self.columns.pop();
    }

    /// Types derivable for the whole input.
    pub fn whole(&self) -> u32 {
        self.columns.last().map_or(0, |c| c[0])
    }
}

pub fn bits(set: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| set & (1 << i) != 0)
}

// --- poset laws, each checked against enumeration over the declared edges

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

/// Hierarchies that fail to build must really lack a unique maximal
/// common subtype somewhere.
fn built(dag: &Dag) -> Result<Option<TypeHierarchy>, TestCaseError> {
    match dag.build() {
        Ok(h) => Ok(Some(h)),
        Err(PosetError::NotBoundedComplete { .. }) => {
            let reach = dag.reach();
            let bad = (0..dag.n).any(|a| (0..dag.n).any(|b| maximal_lower_bounds(&reach, a, b).len() > 1));
            check(bad, || format!("{dag:?} rejected without a witness"))?;
            Ok(None)
        }
        Err(e) => Err(TestCaseError::fail(format!("{dag:?}: {e}"))),
    }
}

pub fn leq_is_a_partial_order(dag: &Dag) -> Result<(), TestCaseError> {
    let Some(h) = built(dag)? else { return Ok(()) };
    let reach = dag.reach();
    let t = |i| tid(&h, i);
    for a in 0..dag.n {
        check(h.leq_id(t(a), t(a)), || format!("t{a} not reflexive"))?;
        for b in 0..dag.n {
            check(h.leq_id(t(a), t(b)) == reach[a][b], || format!("t{a} ≤ t{b} disagrees with the edges"))?;
            if a != b {
                check(!(h.leq_id(t(a), t(b)) && h.leq_id(t(b), t(a))), || format!("t{a}, t{b} not antisymmetric"))?;
            }
            for c in 0..dag.n {
                if h.leq_id(t(a), t(b)) && h.leq_id(t(b), t(c)) {
                    check(h.leq_id(t(a), t(c)), || format!("t{a} ≤ t{b} ≤ t{c} not transitive"))?;
                }
            }
        }
    }
    Ok(())
}

pub fn meet_is_greatest_common_subtype(dag: &Dag) -> Result<(), TestCaseError> {
    let Some(h) = built(dag)? else { return Ok(()) };
    let reach = dag.reach();
    for a in 0..dag.n {
        for b in 0..dag.n {
            let common: Vec<usize> = (0..dag.n).filter(|&c| reach[c][a] && reach[c][b]).collect();
            let greatest = common.iter().copied().find(|&g| common.iter().all(|&c| reach[c][g]));
            let got = h.meet_id(tid(&h, a), tid(&h, b)).map_err(|e| TestCaseError::fail(e.to_string()))?;
            check(got == greatest.map(|g| tid(&h, g)), || {
                format!("meet(t{a}, t{b}) = {got:?}, expected {greatest:?}")
            })?;
        }
    }
    Ok(())
}

pub fn cartesian_leq_is_componentwise(dag: &Dag, sigs: &[(usize, usize)]) -> Result<(), TestCaseError> {
    let Some(h) = built(dag)? else { return Ok(()) };
    let reach = dag.reach();
    let h = Arc::new(h);
    let cart = |p: (usize, usize)| CartesianType::new(tid(&h, p.0 % dag.n), tid(&h, p.1 % dag.n));
    let poset = genrule::CartesianPoset::new(h.clone(), sigs.iter().map(|&s| cart(s)));
    for &x in sigs {
        for &y in sigs {
            let (x, y) = ((x.0 % dag.n, x.1 % dag.n), (y.0 % dag.n, y.1 % dag.n));
            let expected = reach[x.0][y.0] && reach[x.1][y.1];
            check(poset.cartesian_leq(cart(x), cart(y)) == expected, || format!("{x:?} ≤ {y:?} should be {expected}"))?;
        }
    }
    Ok(())
}

pub fn dynamic_bind_is_minimal(dag: &Dag, sigs: &[(usize, usize)]) -> Result<(), TestCaseError> {
    let Some(h) = built(dag)? else { return Ok(()) };
    let reach = dag.reach();
    let h = Arc::new(h);
    let mut distinct: Vec<(usize, usize)> = Vec::new();
    for &(a, b) in sigs {
        let s = (a % dag.n, b % dag.n);
        if !distinct.contains(&s) {
            distinct.push(s);
        }
    }
    let partial: Vec<PartialRule> = distinct
        .iter()
        .map(|&(a, b)| PartialRule::new(CartesianType::new(tid(&h, a), tid(&h, b)), RuleExpr::TypeResult(tid(&h, a))))
        .collect();
    let well_formed = GenericRule::new("G", h.clone(), partial.clone()).is_ok();
    let rule = GenericRule::new_unchecked("G", h.clone(), partial).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for a in 0..dag.n {
        for b in 0..dag.n {
            let minimal = minimal_upper_bounds(&reach, &distinct, (a, b));
            let got = rule.dynamic_bind(tid(&h, a), tid(&h, b));
            match (minimal.as_slice(), got) {
                ([], Ok(None)) => {}
                ([s], Ok(Some(r))) => check(r.signature == CartesianType::new(tid(&h, s.0), tid(&h, s.1)), || {
                    format!("t{a}⊗t{b} bound wrongly")
                })?,
                (many, Err(RuleError::BindingConflict { candidates, .. })) if many.len() > 1 => {
                    check(!well_formed, || format!("conflict at t{a}⊗t{b} in a well-formed rule"))?;
                    check(candidates.len() == many.len(), || format!("conflict at t{a}⊗t{b} lists {candidates:?}"))?;
                }
                (m, got) => return Err(TestCaseError::fail(format!("t{a}⊗t{b}: expected {m:?}, got {got:?}"))),
            }
        }
    }
    Ok(())
}

pub fn arb_sigs() -> impl Strategy<Value = Vec<(usize, usize)>> {
    proptest::collection::vec((0usize..8, 0usize..8), 1..=5)
}
