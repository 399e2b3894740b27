//! Deductive shift-reduce parsing driven by generic rules.
//!
//! Items are configurations `[α • β, j]`: a stack `α` of entries and a
//! list `β` of entries returned to the input, together covering the first
//! `j` tokens. When a rule yields several entries (tuple elimination) the
//! first replaces the reduced pair on the stack and the rest go back in
//! front of the remaining input, so that material below them can combine
//! first.
//!
//! Items are stored as a graph-structured stack. A node is a top entry
//! together with its returned entries, at one input position; a link says
//! which node may sit directly beneath another. Every path from a node down
//! to the bottom is a reachable stack, so the graph holds the exhaustive
//! item set while sharing common prefixes. Reduces look only at the top two
//! entries, so each pair of linked nodes is tried once and the result is
//! linked to everything under the lower node.
//!
//! The graph is closed one input position at a time. Each link remembers
//! how it was derived, so complete derivations, with their full stacks, can
//! be read back from any goal node.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::catgram::{Category, HierarchyBinding, CONJ};
use crate::generic_rule::{GenericRule, Guard, InfoDomain, Located, RuleError, TokenContext, Value};
use crate::lambda::LambdaTerm;
use crate::poset::{CartesianType, TypeHierarchy, TypeId};
use crate::span::Span;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StackEntry {
    pub syn: Value,
    pub sem: Option<LambdaTerm>,
    pub span: Span,
    /// Shifted straight from the lexicon rather than built by a reduce.
    pub lexical: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Item {
    pub stack: Vec<StackEntry>,
    /// Entries waiting to be shifted before token `j`.
    pub pending: Vec<StackEntry>,
    pub j: usize,
}

impl Item {
    pub fn axiom() -> Self {
        Item { stack: Vec::new(), pending: Vec::new(), j: 0 }
    }

    /// Whether the stack and pending spans run through `[0, j)` without gaps.
    pub fn is_tiled(&self) -> bool {
        let mut at = 0;
        for e in self.stack.iter().chain(&self.pending) {
            if e.span.start != at || e.span.is_empty() {
                return false;
            }
            at = e.span.end;
        }
        at == self.j
    }
}

/// A binary production `lhs -> left right`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Production {
    pub lhs: TypeId,
    pub left: TypeId,
    pub right: TypeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Calculus {
    /// Syntax only. With several rules every rule is tried on every pair.
    Syn(Vec<GenericRule>),
    /// A reduce needs both the syntactic and the semantic rule to succeed.
    SynSem { syn: GenericRule, sem: GenericRule },
    /// Productions decide the new type, the rule computes the payload.
    CfgGeneric { productions: Vec<Production>, sem: GenericRule },
}

impl Calculus {
    pub fn rules(&self) -> Vec<&GenericRule> {
        match self {
            Calculus::Syn(rules) => rules.iter().collect(),
            Calculus::SynSem { syn, sem } => vec![syn, sem],
            Calculus::CfgGeneric { sem, .. } => vec![sem],
        }
    }

    pub fn has_semantics(&self) -> bool {
        !matches!(self, Calculus::Syn(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Goal {
    /// Accepts any result classified at or below this type.
    Type(TypeId),
    /// Accepts a result of exactly this shape.
    Category(Category),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexEntry {
    pub syn: Value,
    pub sem: Option<LambdaTerm>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    words: BTreeMap<String, Vec<LexEntry>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, word: &str, entry: LexEntry) {
        let entries = self.words.entry(word.to_string()).or_default();
        if !entries.contains(&entry) {
            entries.push(entry);
        }
    }

    pub fn get(&self, word: &str) -> Option<&[LexEntry]> {
        self.words.get(word).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[LexEntry])> {
        self.words.iter().map(|(w, e)| (w.as_str(), e.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_items: usize,
    /// Items holding a larger category are dropped.
    pub max_category_size: usize,
    pub max_derivations: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_items: 500_000, max_category_size: 64, max_derivations: 10_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    /// Nodes and links of the stack graph.
    pub items: usize,
    pub nodes: usize,
    pub links: usize,
    pub shifts: usize,
    /// Rule applications tried on a pair of linked nodes.
    pub attempted: usize,
    /// Applications that returned a result.
    pub fired: usize,
    pub pruned: usize,
}

/// Which partial rules produced a reduce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fired {
    /// Index into the syntactic rules or the productions.
    pub rule: usize,
    pub signature: Option<CartesianType>,
    pub sem_signature: Option<CartesianType>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepKind {
    /// Shifts lexical entry `entry` of the next token.
    Shift {
        entry: usize,
    },
    /// Shifts the first returned entry.
    ShiftPending,
    Reduce(Fired),
}

/// A node of the stack graph: `layer` is the input position it ends at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub layer: u32,
    pub index: u32,
}

impl NodeId {
    /// The empty stack.
    pub const BOTTOM: NodeId = NodeId { layer: 0, index: 0 };
}

/// How a link was derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    /// Lexical entry `entry` of the token was shifted onto the lower node.
    Shift { entry: usize },
    /// The upper node is the first entry the lower node returned.
    ShiftPending,
    /// `top` over `mid` reduced; the lower node was beneath `mid`.
    Reduce { top: NodeId, mid: NodeId, fired: Fired },
}

impl Origin {
    pub fn kind(self) -> StepKind {
        match self {
            Origin::Shift { entry } => StepKind::Shift { entry },
            Origin::ShiftPending => StepKind::ShiftPending,
            Origin::Reduce { fired, .. } => StepKind::Reduce(fired),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Link {
    pub below: NodeId,
    /// Empty when the graph was built without recording derivations.
    pub origins: Vec<Origin>,
}

#[derive(Clone, Debug)]
pub struct Node {
    /// `None` only for the bottom.
    pub top: Option<StackEntry>,
    pub pending: Vec<StackEntry>,
    pub links: Vec<Link>,
}

/// The nodes ending at one input position.
#[derive(Clone, Debug, Default)]
pub struct Layer {
    pub nodes: Vec<Node>,
    index: FxHashMap<(StackEntry, Vec<StackEntry>), u32>,
}

impl Layer {
    fn bottom() -> Self {
        Layer { nodes: vec![Node { top: None, pending: Vec::new(), links: Vec::new() }], index: FxHashMap::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unknown word `{word}` at position {position}")]
    UnknownWord { word: String, position: usize },
    #[error("word `{word}` at position {position} has no semantic term")]
    MissingSemantics { word: String, position: usize },
    #[error("categories need a hierarchy binding to be classified")]
    NoBinding,
    #[error("lambda terms cannot serve as syntactic payloads")]
    TermAsSyntax,
    #[error("rule `{0}` split a constituent, which semantic parsing does not support")]
    SplitWithSemantics(String),
    #[error("item budget of {0} exceeded")]
    ItemBudget(usize),
    #[error("rules with a `conj-after` guard need the whole sentence")]
    LookaheadGuard,
    #[error(transparent)]
    Rule(#[from] RuleError),
}

/// Everything derivable from one sentence.
#[derive(Clone, Debug)]
pub struct Chart {
    pub tokens: Vec<String>,
    pub conj: Vec<bool>,
    pub layers: Vec<Arc<Layer>>,
    /// Nodes over the bottom that span the input and match the goal.
    pub goals: Vec<NodeId>,
    pub stats: Stats,
}

impl Chart {
    pub fn accepted(&self) -> bool {
        !self.goals.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.layers[id.layer as usize].nodes[id.index as usize]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.layers.iter().enumerate().flat_map(|(l, layer)| {
            layer.nodes.iter().enumerate().map(move |(i, n)| (NodeId { layer: l as u32, index: i as u32 }, n))
        })
    }

    /// The item whose stack is the path `path`, top first, ending at the bottom.
    pub fn item(&self, path: &[NodeId]) -> Item {
        let stack = path.iter().rev().filter_map(|&id| self.node(id).top.clone()).collect();
        let pending = path.first().map(|&id| self.node(id).pending.clone()).unwrap_or_default();
        Item { stack, pending, j: path.first().map_or(0, |id| id.layer as usize) }
    }

    fn link(&self, upper: NodeId, lower: NodeId) -> Option<&Link> {
        self.node(upper).links.iter().find(|l| l.below == lower)
    }
}

/// One path from the axiom to a goal item.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub steps: Vec<StepKind>,
    /// The items visited, starting with the axiom.
    pub items: Vec<Item>,
}

impl Derivation {
    /// The single entry left on the stack.
    pub fn result(&self) -> &StackEntry {
        &self.items.last().expect("a derivation visits the axiom").stack[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("step {0} does not start from the previous item")]
    Broken(usize),
    #[error("step {0} cannot be re-derived")]
    NotReproduced(usize),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub struct Parser<'g> {
    hierarchy: &'g Arc<TypeHierarchy>,
    binding: Option<&'g HierarchyBinding>,
    calculus: &'g Calculus,
    lexicon: &'g Lexicon,
    limits: Limits,
}

impl<'g> Parser<'g> {
    pub fn new(
        hierarchy: &'g Arc<TypeHierarchy>,
        binding: Option<&'g HierarchyBinding>,
        calculus: &'g Calculus,
        lexicon: &'g Lexicon,
    ) -> Self {
        Parser { hierarchy, binding, calculus, lexicon, limits: Limits::default() }
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn hierarchy(&self) -> &Arc<TypeHierarchy> {
        self.hierarchy
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    /// The type an entry binds as.
    pub fn syn_type(&self, e: &StackEntry) -> Result<TypeId, ParseError> {
        match &e.syn {
            Value::Type(t) => Ok(*t),
            Value::Cat(c) => Ok(self.binding.ok_or(ParseError::NoBinding)?.classify(c, e.lexical)),
            Value::Term(_) => Err(ParseError::TermAsSyntax),
        }
    }

    pub fn matches_goal(&self, e: &StackEntry, goal: &Goal) -> Result<bool, ParseError> {
        Ok(match goal {
            Goal::Type(t) => self.hierarchy.leq_id(self.syn_type(e)?, *t),
            Goal::Category(c) => matches!(&e.syn, Value::Cat(x) if x.same_shape(c)),
        })
    }

    fn entries(&self, word: &str, position: usize) -> Result<&'g [LexEntry], ParseError> {
        let entries =
            self.lexicon.get(word).ok_or_else(|| ParseError::UnknownWord { word: word.to_string(), position })?;
        if self.calculus.has_semantics() && entries.iter().any(|e| e.sem.is_none()) {
            return Err(ParseError::MissingSemantics { word: word.to_string(), position });
        }
        Ok(entries)
    }

    fn lexical(&self, e: &LexEntry, position: usize) -> StackEntry {
        StackEntry {
            syn: e.syn.clone(),
            sem: if self.calculus.has_semantics() { e.sem.clone() } else { None },
            span: Span::unit(position),
            lexical: true,
        }
    }

    /// Positions holding a conjunction, judged by the lexical entries alone.
    pub fn conj_flags<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<bool>, ParseError> {
        let conj = self.hierarchy.get(CONJ);
        tokens
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let Some(conj) = conj else { return Ok(false) };
                for e in self.entries(w.as_ref(), i)? {
                    let probe = StackEntry { syn: e.syn.clone(), sem: None, span: Span::unit(i), lexical: true };
                    if self.hierarchy.leq_id(self.syn_type(&probe)?, conj) {
                        return Ok(true);
                    }
                }
                Ok(false)
            })
            .collect()
    }

    /// Every way the rules combine `e1` with `e2` to its right, as the
    /// entries produced; results holding an oversized category are dropped.
    pub fn combine(
        &self,
        e1: &StackEntry,
        e2: &StackEntry,
        conj: &dyn TokenContext,
        stats: &mut Stats,
    ) -> Result<Vec<(Vec<StackEntry>, Fired)>, ParseError> {
        let (x1, x2) = (self.syn_type(e1)?, self.syn_type(e2)?);
        let syn_args = || (Located::new(e1.syn.clone(), e1.span), Located::new(e2.syn.clone(), e2.span));
        let sem_args = || {
            let term = |e: &StackEntry| Value::Term(e.sem.clone().expect("semantic entries carry terms"));
            (Located::new(term(e1), e1.span), Located::new(term(e2), e2.span))
        };
        let mut out = Vec::new();
        match self.calculus {
            Calculus::Syn(rules) => {
                for (i, g) in rules.iter().enumerate() {
                    stats.attempted += 1;
                    let (l, r) = syn_args();
                    let Some(applied) = g.apply(x1, x2, &l, &r, conj)? else { continue };
                    stats.fired += 1;
                    let produced = applied
                        .outputs
                        .into_iter()
                        .map(|o| StackEntry { syn: o.value, sem: None, span: o.span, lexical: false })
                        .collect();
                    out.push((produced, Fired { rule: i, signature: Some(applied.signature), sem_signature: None }));
                }
            }
            Calculus::SynSem { syn, sem } => {
                stats.attempted += 1;
                let (l, r) = syn_args();
                let Some(s) = syn.apply(x1, x2, &l, &r, conj)? else { return Ok(out) };
                let (l, r) = sem_args();
                let Some(m) = sem.apply(x1, x2, &l, &r, conj)? else { return Ok(out) };
                stats.fired += 1;
                let ([s_out], [m_out]) = (s.outputs.as_slice(), m.outputs.as_slice()) else {
                    return Err(ParseError::SplitWithSemantics(syn.label(s.signature)));
                };
                let Value::Term(term) = &m_out.value else {
                    return Err(RuleError::PayloadMismatch {
                        expected: InfoDomain::Terms,
                        found: m_out.value.domain(),
                    }
                    .into());
                };
                let produced = vec![StackEntry {
                    syn: s_out.value.clone(),
                    sem: Some(term.clone()),
                    span: s_out.span,
                    lexical: false,
                }];
                out.push((produced, Fired { rule: 0, signature: Some(s.signature), sem_signature: Some(m.signature) }));
            }
            Calculus::CfgGeneric { productions, sem } => {
                for (i, p) in productions.iter().enumerate() {
                    if !(self.hierarchy.leq_id(x1, p.left) && self.hierarchy.leq_id(x2, p.right)) {
                        continue;
                    }
                    stats.attempted += 1;
                    let (l, r) = sem_args();
                    let Some(m) = sem.apply(x1, x2, &l, &r, conj)? else { continue };
                    stats.fired += 1;
                    let [Located { value: Value::Term(term), span }] = m.outputs.as_slice() else {
                        return Err(ParseError::SplitWithSemantics(sem.label(m.signature)));
                    };
                    let produced = vec![StackEntry {
                        syn: Value::Type(p.lhs),
                        sem: Some(term.clone()),
                        span: *span,
                        lexical: false,
                    }];
                    out.push((produced, Fired { rule: i, signature: None, sem_signature: Some(m.signature) }));
                }
            }
        }
        let max = self.limits.max_category_size;
        let before = out.len();
        out.retain(|(produced, _)| !produced.iter().any(|e| matches!(&e.syn, Value::Cat(c) if c.size() > max)));
        stats.pruned += before - out.len();
        Ok(out)
    }

    /// All items one reduce away from `item`.
    pub fn reduce(&self, item: &Item, conj: &dyn TokenContext) -> Result<Vec<(Item, Fired)>, ParseError> {
        let n = item.stack.len();
        if n < 2 {
            return Ok(Vec::new());
        }
        let mut stats = Stats::default();
        let combined = self.combine(&item.stack[n - 2], &item.stack[n - 1], conj, &mut stats)?;
        Ok(combined
            .into_iter()
            .map(|(produced, fired)| {
                let mut stack = item.stack[..n - 2].to_vec();
                let mut produced = produced.into_iter();
                stack.extend(produced.next());
                let mut pending: Vec<StackEntry> = produced.collect();
                pending.extend(item.pending.iter().cloned());
                (Item { stack, pending, j: item.j }, fired)
            })
            .collect())
    }

    /// Builds the stack graph for `tokens`, recording how every link was
    /// derived.
    pub fn parse<S: AsRef<str>>(&self, tokens: &[S], goal: &Goal) -> Result<Chart, ParseError> {
        let conj = self.conj_flags(tokens)?;
        let mut layers = vec![Arc::new(Layer::bottom())];
        let mut stats = Stats { items: 1, nodes: 1, ..Stats::default() };
        for (j, token) in tokens.iter().enumerate() {
            let entries = self.entries(token.as_ref(), j)?;
            let layer = Closure::run(self, &layers, entries, &conj, true, &mut stats)?;
            layers.push(Arc::new(layer));
        }
        let mut chart = Chart {
            tokens: tokens.iter().map(|t| t.as_ref().to_string()).collect(),
            conj,
            layers,
            goals: Vec::new(),
            stats,
        };
        chart.goals = self.goal_nodes(&chart.layers, goal)?;
        Ok(chart)
    }

    fn goal_nodes(&self, layers: &[Arc<Layer>], goal: &Goal) -> Result<Vec<NodeId>, ParseError> {
        let mut out = Vec::new();
        let last = layers.len() - 1;
        if last == 0 {
            return Ok(out);
        }
        for (i, node) in layers[last].nodes.iter().enumerate() {
            let Some(top) = &node.top else { continue };
            if node.pending.is_empty()
                && node.links.iter().any(|l| l.below == NodeId::BOTTOM)
                && self.matches_goal(top, goal)?
            {
                out.push(NodeId { layer: last as u32, index: i as u32 });
            }
        }
        Ok(out)
    }

    /// Whether `tokens` derive `goal`, without recording derivations.
    pub fn recognize<S: AsRef<str>>(&self, tokens: &[S], goal: &Goal) -> Result<bool, ParseError> {
        let mut r = Recognizer {
            parser: self,
            layers: vec![Arc::new(Layer::bottom())],
            conj: self.conj_flags(tokens)?,
            stats: Stats::default(),
        };
        for (j, token) in tokens.iter().enumerate() {
            let entries = self.entries(token.as_ref(), j)?;
            let layer = Closure::run(self, &r.layers, entries, &r.conj, false, &mut r.stats)?;
            r.layers.push(Arc::new(layer));
        }
        Ok(!self.goal_nodes(&r.layers, goal)?.is_empty())
    }

    /// A left-to-right recognizer that can be extended one word at a time
    /// and cloned to share a common prefix between sentences.
    pub fn recognizer(&self) -> Result<Recognizer<'_, 'g>, ParseError> {
        let lookahead =
            self.calculus.rules().iter().any(|g| g.rules().iter().any(|r| r.guard == Some(Guard::ConjAfter)));
        if lookahead {
            return Err(ParseError::LookaheadGuard);
        }
        Ok(Recognizer {
            parser: self,
            layers: vec![Arc::new(Layer::bottom())],
            conj: Vec::new(),
            stats: Stats { items: 1, nodes: 1, ..Stats::default() },
        })
    }

    /// Every derivation of a goal item, in canonical order, and whether the
    /// limit cut the enumeration short.
    pub fn derivations(&self, chart: &Chart) -> (Vec<Derivation>, bool) {
        let mut walk = Walk {
            chart,
            limit: self.limits.max_derivations,
            steps: Vec::new(),
            on_path: HashSet::new(),
            found: Vec::new(),
        };
        let mut truncated = false;
        for &goal in &chart.goals {
            if !walk.back(vec![goal, NodeId::BOTTOM]) {
                truncated = true;
                break;
            }
        }
        let mut keyed: Vec<(Vec<String>, Derivation)> = walk
            .found
            .into_iter()
            .map(|(kinds, paths)| {
                let d = Derivation { steps: kinds, items: paths.iter().map(|p| chart.item(p)).collect() };
                (self.sort_key(&d), d)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        (keyed.into_iter().map(|(_, d)| d).collect(), truncated)
    }

    fn sort_key(&self, d: &Derivation) -> Vec<String> {
        d.steps
            .iter()
            .zip(&d.items[1..])
            .map(|(&kind, to)| format!("{}|{}", self.step_label(kind), self.render_item(to)))
            .collect()
    }

    /// `shift` or the fired rule labels, e.g. `SYN_{NP⊗VP_i}, SEM_{Proper-Noun⊗VP}`.
    pub fn step_label(&self, kind: StepKind) -> String {
        match kind {
            StepKind::Shift { .. } | StepKind::ShiftPending => "shift".to_string(),
            StepKind::Reduce(f) => self.rule_label(f),
        }
    }

    pub fn rule_label(&self, f: Fired) -> String {
        let h = self.hierarchy;
        match self.calculus {
            Calculus::Syn(rules) => rules[f.rule].label(f.signature.expect("syntactic reduces carry a signature")),
            Calculus::SynSem { syn, sem } => format!(
                "{}, {}",
                syn.label(f.signature.expect("syntactic signature")),
                sem.label(f.sem_signature.expect("semantic signature"))
            ),
            Calculus::CfgGeneric { productions, sem } => {
                let p = productions[f.rule];
                format!(
                    "{} -> {} {}, {}",
                    h.name(p.lhs),
                    h.name(p.left),
                    h.name(p.right),
                    sem.label(f.sem_signature.expect("semantic signature"))
                )
            }
        }
    }

    pub fn render_syn(&self, v: &Value) -> String {
        v.render(self.hierarchy)
    }

    /// `[ Betty[0,1) got+angry[1,2) • , 2 , \P. P(Betty) , \x. ANGRY(x) ]`,
    /// with returned entries after the bullet.
    pub fn render_item(&self, item: &Item) -> String {
        let mut s = String::from("[ ");
        let entry = |s: &mut String, e: &StackEntry| {
            s.push_str(&self.render_syn(&e.syn));
            s.push_str(&e.span.to_string());
            s.push(' ');
        };
        for e in &item.stack {
            entry(&mut s, e);
        }
        s.push_str("• ");
        for e in &item.pending {
            entry(&mut s, e);
        }
        s.push_str(&format!(", {}", item.j));
        if self.calculus.has_semantics() {
            for e in &item.stack {
                if let Some(t) = &e.sem {
                    s.push_str(&format!(" , {t}"));
                }
            }
        }
        s.push_str(" ]");
        s
    }

    /// Re-executes `d` on explicit stacks from the axiom and returns the
    /// item it reaches.
    pub fn replay(&self, chart: &Chart, d: &Derivation) -> Result<Item, ReplayError> {
        let mut current = Item::axiom();
        for (i, &step) in d.steps.iter().enumerate() {
            if d.items[i] != current {
                return Err(ReplayError::Broken(i));
            }
            let target = &d.items[i + 1];
            let next = match step {
                StepKind::Shift { entry } => {
                    let word = chart.tokens.get(current.j).ok_or(ReplayError::NotReproduced(i))?;
                    let e = self.entries(word, current.j)?.get(entry).ok_or(ReplayError::NotReproduced(i))?;
                    if !current.pending.is_empty() {
                        return Err(ReplayError::NotReproduced(i));
                    }
                    let mut stack = current.stack.clone();
                    stack.push(self.lexical(e, current.j));
                    Item { stack, pending: Vec::new(), j: current.j + 1 }
                }
                StepKind::ShiftPending => {
                    let (first, rest) = current.pending.split_first().ok_or(ReplayError::NotReproduced(i))?;
                    let mut stack = current.stack.clone();
                    stack.push(first.clone());
                    Item { stack, pending: rest.to_vec(), j: current.j }
                }
                StepKind::Reduce(fired) => self
                    .reduce(&current, &chart.conj)?
                    .into_iter()
                    .find(|(it, f)| *f == fired && it == target)
                    .map(|(it, _)| it)
                    .ok_or(ReplayError::NotReproduced(i))?,
            };
            if &next != target {
                return Err(ReplayError::NotReproduced(i));
            }
            current = next;
        }
        Ok(current)
    }
}

const LINEAR_LINKS: usize = 16;

// Builds the layer for one token on top of the frozen earlier layers.
struct Closure<'a, 'p, 'g> {
    parser: &'a Parser<'g>,
    below: &'a [Arc<Layer>],
    layer: Layer,
    at: u32,
    conj: &'p dyn TokenContext,
    record: bool,
    stats: &'a mut Stats,
    // links awaiting their reduces, as (upper index, link position)
    agenda: VecDeque<(u32, usize)>,
    // how many links of each current node have been processed; these form
    // a prefix of its link list
    done: Vec<usize>,
    // for each current node, the processed links above it and what
    // reducing them produced
    above: Vec<Vec<Reduced>>,
    dedupe: FxHashMap<(u32, NodeId), usize>,
    scratch: Vec<NodeId>,
}

// An upper node and the nodes its reduce with the lower one produced.
type Reduced = (u32, Vec<(u32, Fired)>);

impl<'a, 'p, 'g> Closure<'a, 'p, 'g> {
    fn run(
        parser: &'a Parser<'g>,
        below: &'a [Arc<Layer>],
        entries: &[LexEntry],
        conj: &'p dyn TokenContext,
        record: bool,
        stats: &'a mut Stats,
    ) -> Result<Layer, ParseError> {
        let at = below.len() as u32;
        let mut c = Closure {
            parser,
            below,
            layer: Layer::default(),
            at,
            conj,
            record,
            stats,
            agenda: VecDeque::new(),
            done: Vec::new(),
            above: Vec::new(),
            dedupe: FxHashMap::default(),
            scratch: Vec::new(),
        };
        let prev = at - 1;
        let ready: Vec<NodeId> = below[prev as usize]
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.pending.is_empty())
            .map(|(i, _)| NodeId { layer: prev, index: i as u32 })
            .collect();
        for (k, e) in entries.iter().enumerate() {
            let shifted = c.node(parser.lexical(e, prev as usize), Vec::new())?;
            for &m in &ready {
                c.stats.shifts += 1;
                c.link(shifted, m, Origin::Shift { entry: k })?;
            }
        }
        while let Some((upper, pos)) = c.agenda.pop_front() {
            c.process(upper, pos)?;
        }
        Ok(c.layer)
    }

    fn get(&self, id: NodeId) -> &Node {
        if id.layer == self.at {
            &self.layer.nodes[id.index as usize]
        } else {
            &self.below[id.layer as usize].nodes[id.index as usize]
        }
    }

    fn current(&self, index: u32) -> NodeId {
        NodeId { layer: self.at, index }
    }

    fn budget(&self) -> Result<(), ParseError> {
        let max = self.parser.limits.max_items;
        if self.stats.items > max {
            return Err(ParseError::ItemBudget(max));
        }
        Ok(())
    }

    fn node(&mut self, top: StackEntry, pending: Vec<StackEntry>) -> Result<u32, ParseError> {
        let key = (top, pending);
        if let Some(&i) = self.layer.index.get(&key) {
            return Ok(i);
        }
        let i = self.layer.nodes.len() as u32;
        self.layer.index.insert(key.clone(), i);
        let (top, pending) = key;
        self.layer.nodes.push(Node { top: Some(top), pending: pending.clone(), links: Vec::new() });
        self.done.push(0);
        self.above.push(Vec::new());
        self.stats.nodes += 1;
        self.stats.items += 1;
        self.budget()?;
        if let Some((first, rest)) = pending.split_first() {
            let shifted = self.node(first.clone(), rest.to_vec())?;
            self.stats.shifts += 1;
            self.link(shifted, self.current(i), Origin::ShiftPending)?;
        }
        Ok(i)
    }

    fn link(&mut self, upper: u32, lower: NodeId, origin: Origin) -> Result<(), ParseError> {
        let links = &self.layer.nodes[upper as usize].links;
        // short link lists are searched directly, long ones through the index
        let existing = if links.len() <= LINEAR_LINKS {
            links.iter().position(|l| l.below == lower)
        } else {
            self.dedupe.get(&(upper, lower)).copied()
        };
        if let Some(pos) = existing {
            let origins = &mut self.layer.nodes[upper as usize].links[pos].origins;
            if self.record && !origins.contains(&origin) {
                origins.push(origin);
            }
            return Ok(());
        }
        let links = &mut self.layer.nodes[upper as usize].links;
        let pos = links.len();
        links.push(Link { below: lower, origins: if self.record { vec![origin] } else { Vec::new() } });
        if pos == LINEAR_LINKS {
            for (i, l) in links.iter().enumerate() {
                self.dedupe.insert((upper, l.below), i);
            }
        } else if pos > LINEAR_LINKS {
            self.dedupe.insert((upper, lower), pos);
        }
        self.agenda.push_back((upper, pos));
        self.stats.links += 1;
        self.stats.items += 1;
        self.budget()
    }

    fn process(&mut self, upper: u32, pos: usize) -> Result<(), ParseError> {
        debug_assert_eq!(self.done[upper as usize], pos);
        self.done[upper as usize] = pos + 1;
        let lower = self.layer.nodes[upper as usize].links[pos].below;
        let top = self.current(upper);

        // `upper` on top of `lower`: reduce them, then link the results to
        // everything already known beneath `lower`
        if lower != NodeId::BOTTOM {
            let (e1, e2) = (
                self.get(lower).top.clone().expect("only the bottom has no entry"),
                self.layer.nodes[upper as usize].top.clone().expect("current nodes have entries"),
            );
            let combined = self.parser.combine(&e1, &e2, self.conj, self.stats)?;
            let mut results = Vec::with_capacity(combined.len());
            for (produced, fired) in combined {
                let mut produced = produced.into_iter();
                let first = produced.next().expect("rules produce at least one entry");
                let mut pending: Vec<StackEntry> = produced.collect();
                pending.extend(self.layer.nodes[upper as usize].pending.iter().cloned());
                results.push((self.node(first, pending)?, fired));
            }
            let mut beneath = std::mem::take(&mut self.scratch);
            beneath.clear();
            if lower.layer == self.at {
                let n = &self.layer.nodes[lower.index as usize];
                beneath.extend(n.links[..self.done[lower.index as usize]].iter().map(|l| l.below));
            } else {
                beneath.extend(self.get(lower).links.iter().map(|l| l.below));
            }
            for &(r, fired) in &results {
                for &l in &beneath {
                    self.link(r, l, Origin::Reduce { top, mid: lower, fired })?;
                }
            }
            self.scratch = beneath;
            if lower.layer == self.at {
                self.above[lower.index as usize].push((upper, results));
            }
        }

        // `upper` as the middle entry: pairs already reduced above it now
        // reach `lower` too
        for k in 0..self.above[upper as usize].len() {
            let t = self.above[upper as usize][k].0;
            for m in 0..self.above[upper as usize][k].1.len() {
                let (r, fired) = self.above[upper as usize][k].1[m];
                self.link(r, lower, Origin::Reduce { top: self.current(t), mid: top, fired })?;
            }
        }
        Ok(())
    }
}

// Walks links backwards from a goal path to the bottom, one step per link.
struct Walk<'c> {
    chart: &'c Chart,
    limit: usize,
    steps: Vec<(StepKind, Vec<NodeId>)>,
    on_path: HashSet<Vec<NodeId>>,
    found: Vec<(Vec<StepKind>, Vec<Vec<NodeId>>)>,
}

impl Walk<'_> {
    // false once `limit` derivations have been collected
    fn back(&mut self, path: Vec<NodeId>) -> bool {
        if path == [NodeId::BOTTOM] {
            if self.found.len() >= self.limit {
                return false;
            }
            let kinds = self.steps.iter().rev().map(|(k, _)| *k).collect();
            let mut paths = vec![path];
            paths.extend(self.steps.iter().rev().map(|(_, p)| p.clone()));
            self.found.push((kinds, paths));
            return true;
        }
        let link = self.chart.link(path[0], path[1]).expect("paths follow links");
        self.on_path.insert(path.clone());
        let mut more = true;
        for &origin in &link.origins {
            let prev: Vec<NodeId> = match origin {
                Origin::Shift { .. } | Origin::ShiftPending => path[1..].to_vec(),
                Origin::Reduce { top, mid, .. } => [top, mid].into_iter().chain(path[1..].iter().copied()).collect(),
            };
            if self.on_path.contains(&prev) {
                continue;
            }
            self.steps.push((origin.kind(), path.clone()));
            more = self.back(prev);
            self.steps.pop();
            if !more {
                break;
            }
        }
        self.on_path.remove(&path);
        more
    }
}

/// The stack graph after a prefix of the input.
#[derive(Clone)]
pub struct Recognizer<'p, 'g> {
    parser: &'p Parser<'g>,
    layers: Vec<Arc<Layer>>,
    conj: Vec<bool>,
    stats: Stats,
}

impl Recognizer<'_, '_> {
    pub fn position(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn advance(&self, word: &str) -> Result<Self, ParseError> {
        let p = self.parser;
        let entries = p.entries(word, self.position())?;
        let mut conj = self.conj.clone();
        conj.extend(p.conj_flags(&[word])?);
        let mut stats = self.stats;
        let layer = Closure::run(p, &self.layers, entries, &conj, false, &mut stats)?;
        let mut layers = self.layers.clone();
        layers.push(Arc::new(layer));
        Ok(Recognizer { parser: p, layers, conj, stats })
    }

    pub fn accepts(&self, goal: &Goal) -> Result<bool, ParseError> {
        Ok(!self.parser.goal_nodes(&self.layers, goal)?.is_empty())
    }

    /// Entries derived for the whole prefix read so far.
    pub fn complete(&self) -> impl Iterator<Item = &StackEntry> {
        let last = if self.position() == 0 { &[][..] } else { &self.layers[self.position()].nodes[..] };
        last.iter()
            .filter(|n| n.pending.is_empty() && n.links.iter().any(|l| l.below == NodeId::BOTTOM))
            .filter_map(|n| n.top.as_ref())
    }
}

impl fmt::Debug for Recognizer<'_, '_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Recognizer").field("position", &self.position()).field("stats", &self.stats).finish()
    }
}
