//! Grammar files.
//!
//! ```text
//! # comment
//! [types]
//! top T
//! phrase < T
//! vm = (np\s)\(np\s)      # abbreviation usable in categories
//! [lexicon]
//! Betty : Betty : \P. P(Betty)
//! [cfg]
//! S -> NP VP
//! [generic SYN]
//! C C : ituple requires conj-before
//! [goal]
//! s
//! ```
//!
//! Lexical entries give a type name or a category depending on what the
//! syntactic rules combine; the lambda term is required when a semantic
//! rule is present. Which calculus runs follows from the rule domains:
//! productions plus one semantic rule, one syntactic plus one semantic
//! rule, or syntactic rules alone.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use thiserror::Error;

use crate::catgram::{Category, HierarchyBinding};
use crate::generic_rule::{GenericRule, Guard, InfoDomain, PartialRule, RuleError, RuleExpr, Value};
use crate::lambda::LambdaTerm;
use crate::parser::{Calculus, Goal, LexEntry, Lexicon, Parser, Production};
use crate::poset::{CartesianType, HierarchyBuilder, PosetError, TypeHierarchy};

/// A problem found while validating a syntactically correct file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Problem>),
    #[error("the grammar declares no goal")]
    NoGoal,
    #[error("unknown goal `{0}`")]
    BadGoal(String),
}

fn syntax(line: usize, msg: impl fmt::Display) -> GrammarError {
    GrammarError::Syntax { line, msg: msg.to_string() }
}

fn invalid(line: Option<usize>, msg: impl fmt::Display) -> GrammarError {
    GrammarError::Invalid(vec![Problem { line, message: msg.to_string() }])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    pub hierarchy: Arc<TypeHierarchy>,
    /// Abbreviations with their expanded definitions.
    pub aliases: Vec<(String, Category)>,
    /// Present when the syntactic payloads are categories.
    pub binding: Option<HierarchyBinding>,
    pub lexicon: Lexicon,
    pub calculus: Calculus,
    pub goal: Option<Goal>,
}

type Lines = Vec<(usize, String)>;
type Aliases = Vec<(String, Category)>;

#[derive(Default)]
struct Sections {
    types: Option<Lines>,
    lexicon: Option<Lines>,
    cfg: Option<Lines>,
    generic: Vec<(String, usize, Lines)>,
    goal: Option<Lines>,
}

fn split_sections(src: &str) -> Result<Sections, GrammarError> {
    let mut s = Sections::default();
    let mut current: Option<&mut Lines> = None;
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        if let Some(header) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
            let header = header.trim();
            let mut words = header.split_whitespace();
            let slot = match (words.next(), words.next(), words.next()) {
                (Some("types"), None, _) => &mut s.types,
                (Some("lexicon"), None, _) => &mut s.lexicon,
                (Some("cfg"), None, _) => &mut s.cfg,
                (Some("goal"), None, _) => &mut s.goal,
                (Some("generic"), Some(name), None) => {
                    if s.generic.iter().any(|(n, _, _)| n == name) {
                        return Err(syntax(line, format!("section `[generic {name}]` appears twice")));
                    }
                    s.generic.push((name.to_string(), line, Vec::new()));
                    current = s.generic.last_mut().map(|g| &mut g.2);
                    continue;
                }
                _ => return Err(syntax(line, format!("unknown section `[{header}]`"))),
            };
            if slot.is_some() {
                return Err(syntax(line, format!("section `[{header}]` appears twice")));
            }
            current = Some(slot.insert(Vec::new()));
            continue;
        }
        if text.starts_with('[') {
            return Err(syntax(line, "unterminated section header"));
        }
        match current.as_deref_mut() {
            Some(lines) => lines.push((line, text.to_string())),
            None => return Err(syntax(line, "content before the first section")),
        }
    }
    Ok(s)
}

fn parse_category(line: usize, src: &str, aliases: &[(String, Category)]) -> Result<Category, GrammarError> {
    Category::parse(src).and_then(|c| c.expand_aliases(aliases)).map_err(|e| syntax(line, e))
}

fn build_hierarchy(lines: &Lines) -> Result<(Arc<TypeHierarchy>, Aliases), GrammarError> {
    let mut b = HierarchyBuilder::new();
    let mut aliases: Aliases = Vec::new();
    for (line, text) in lines {
        let words: Vec<&str> = text.split_whitespace().collect();
        match words.as_slice() {
            ["top", name] => b.set_top(name),
            [child, "<", parent] => b.add_edge(child, parent),
            [name] => {
                b.add_type(name);
            }
            [name, "=", ..] => {
                let def = text.split_once('=').map(|(_, d)| d.trim()).unwrap_or_default();
                if aliases.iter().any(|(n, _)| n == name) {
                    return Err(syntax(*line, format!("abbreviation `{name}` defined twice")));
                }
                let cat = parse_category(*line, def, &aliases)?;
                aliases.push((name.to_string(), cat));
            }
            _ => {
                return Err(syntax(
                    *line,
                    format!("expected `child < parent`, `top NAME`, `NAME` or `NAME = category`, found `{text}`"),
                ))
            }
        }
    }
    let problems = b.diagnose();
    if !problems.is_empty() {
        return Err(GrammarError::Invalid(
            problems.into_iter().map(|p| Problem { line: None, message: p.to_string() }).collect(),
        ));
    }
    let h = b.build().map_err(|e| invalid(None, e))?;
    Ok((Arc::new(h), aliases))
}

fn resolve(h: &TypeHierarchy, line: usize, name: &str) -> Result<crate::poset::TypeId, GrammarError> {
    h.id(name).map_err(|e: PosetError| syntax(line, e))
}

fn parse_rule_line(h: &TypeHierarchy, line: usize, text: &str) -> Result<PartialRule, GrammarError> {
    let (sig, body) = text.split_once(':').ok_or_else(|| syntax(line, "expected `t1 t2 : rule [requires guard]`"))?;
    let names: Vec<&str> = sig.split_whitespace().collect();
    let [left, right] = names.as_slice() else {
        return Err(syntax(line, "a signature names exactly two types"));
    };
    let signature = CartesianType::new(resolve(h, line, left)?, resolve(h, line, right)?);
    let mut body = body.trim();
    let mut guard = None;
    if let Some((expr, g)) = body.rsplit_once(" requires ") {
        let g = g.trim();
        guard = Some(Guard::from_name(g).ok_or_else(|| syntax(line, format!("unknown guard `{g}`")))?);
        body = expr.trim();
    }
    let expr = RuleExpr::parse(body, h).map_err(|e| syntax(line, e))?;
    Ok(PartialRule { signature, body: expr, guard })
}

fn build_rule(
    h: &Arc<TypeHierarchy>,
    name: &str,
    header: usize,
    lines: &Lines,
) -> Result<(GenericRule, Vec<Problem>), GrammarError> {
    let mut rules: Vec<PartialRule> = Vec::new();
    for (i, (line, text)) in lines.iter().enumerate() {
        let r = parse_rule_line(h, *line, text)?;
        if let Some(k) = rules.iter().position(|q| q.signature == r.signature) {
            return Err(invalid(
                Some(*line),
                format!("rule {name} declares {} twice (first on line {})", r.signature.display(h), lines[k].0),
            ));
        }
        debug_assert_eq!(rules.len(), i);
        rules.push(r);
    }
    let g = GenericRule::new_unchecked(name, h.clone(), rules).map_err(|e| match e {
        RuleError::Empty(_) | RuleError::MixedDomains(..) => invalid(Some(header), e),
        other => syntax(header, other),
    })?;
    let problems = match g.poset().check_well_formed() {
        Ok(()) => Vec::new(),
        Err(conflicts) => conflicts
            .iter()
            .map(|c| Problem { line: Some(header), message: format!("rule {name}: {}", c.describe(h)) })
            .collect(),
    };
    Ok((g, problems))
}

impl Grammar {
    /// Loads and validates a grammar. Every validation problem found is
    /// reported together.
    pub fn from_source(src: &str) -> Result<Self, GrammarError> {
        let sections = split_sections(src)?;
        let (hierarchy, aliases) = build_hierarchy(sections.types.as_ref().unwrap_or(&Vec::new()))?;
        let h = &hierarchy;

        let mut problems = Vec::new();
        let mut syn_rules = Vec::new();
        let mut sem_rules = Vec::new();
        for (name, header, lines) in &sections.generic {
            let (g, p) = build_rule(h, name, *header, lines)?;
            problems.extend(p);
            if g.domain() == InfoDomain::Terms {
                sem_rules.push(g);
            } else {
                syn_rules.push(g);
            }
        }
        if !problems.is_empty() {
            return Err(GrammarError::Invalid(problems));
        }

        let mut productions = Vec::new();
        for (line, text) in sections.cfg.iter().flatten() {
            let words: Vec<&str> = text.split_whitespace().collect();
            let [lhs, "->", left, right] = words.as_slice() else {
                return Err(syntax(*line, "expected a binary production `A -> B C`"));
            };
            productions.push(Production {
                lhs: resolve(h, *line, lhs)?,
                left: resolve(h, *line, left)?,
                right: resolve(h, *line, right)?,
            });
        }

        let (calculus, syn_domain) = if sections.cfg.is_some() {
            match (syn_rules.len(), sem_rules.len()) {
                (0, 1) => (Calculus::CfgGeneric { productions, sem: sem_rules.remove(0) }, InfoDomain::Types),
                _ => {
                    return Err(invalid(
                        None,
                        "a [cfg] grammar takes exactly one rule over lambda terms and no other rules",
                    ))
                }
            }
        } else {
            match (syn_rules.len(), sem_rules.len()) {
                (0, _) => return Err(invalid(None, "the grammar has no rule over types or categories")),
                (1, 1) => {
                    let syn = syn_rules.remove(0);
                    let d = syn.domain();
                    (Calculus::SynSem { syn, sem: sem_rules.remove(0) }, d)
                }
                (_, 0) => {
                    let d = syn_rules[0].domain();
                    if let Some(other) = syn_rules.iter().find(|g| g.domain() != d) {
                        return Err(invalid(
                            None,
                            format!(
                                "rule {} combines {} but rule {} combines {}",
                                syn_rules[0].name(),
                                d,
                                other.name(),
                                other.domain()
                            ),
                        ));
                    }
                    (Calculus::Syn(syn_rules), d)
                }
                _ => return Err(invalid(None, "a semantic rule pairs with exactly one syntactic rule")),
            }
        };

        let binding = match syn_domain {
            InfoDomain::Categories => {
                Some(HierarchyBinding::new(hierarchy.clone(), &aliases).map_err(|e| invalid(None, e))?)
            }
            _ => None,
        };

        let mut lexicon = Lexicon::new();
        for (line, text) in sections.lexicon.iter().flatten() {
            let parts: Vec<&str> = text.splitn(3, ':').map(str::trim).collect();
            let (word, syn_src, sem_src) = match parts.as_slice() {
                [w, s] => (*w, *s, None),
                [w, s, t] => (*w, *s, Some(*t)),
                _ => return Err(syntax(*line, "expected `word : category [: term]`")),
            };
            if word.is_empty() || word.contains(char::is_whitespace) {
                return Err(syntax(*line, format!("`{word}` is not a single token; join multiword items with `+`")));
            }
            let syn = match syn_domain {
                InfoDomain::Categories => Value::Cat(parse_category(*line, syn_src, &aliases)?),
                _ => Value::Type(resolve(h, *line, syn_src)?),
            };
            let sem = sem_src.map(|t| LambdaTerm::parse(t).map_err(|e| syntax(*line, e))).transpose()?;
            if calculus.has_semantics() && sem.is_none() {
                return Err(syntax(*line, format!("`{word}` needs a lambda term for the semantic rule")));
            }
            lexicon.add(word, LexEntry { syn, sem });
        }

        let mut grammar = Grammar { hierarchy, aliases, binding, lexicon, calculus, goal: None };
        let goal_lines = sections.goal.unwrap_or_default();
        match goal_lines.as_slice() {
            [] => {}
            [(line, text)] => grammar.goal = Some(grammar.parse_goal(text).map_err(|e| syntax(*line, e))?),
            [_, (line, _), ..] => return Err(syntax(*line, "only one goal may be declared")),
        }
        Ok(grammar)
    }

    /// A hierarchy type name, or a category for category grammars.
    pub fn parse_goal(&self, text: &str) -> Result<Goal, GrammarError> {
        let text = text.trim();
        if let Some(t) = self.hierarchy.get(text) {
            return Ok(Goal::Type(t));
        }
        if self.binding.is_some() {
            return Category::parse(text)
                .and_then(|c| c.expand_aliases(&self.aliases))
                .map(Goal::Category)
                .map_err(|_| GrammarError::BadGoal(text.to_string()));
        }
        Err(GrammarError::BadGoal(text.to_string()))
    }

    pub fn parser(&self) -> Parser<'_> {
        Parser::new(&self.hierarchy, self.binding.as_ref(), &self.calculus, &self.lexicon)
    }

    pub fn render_goal(&self, goal: &Goal) -> String {
        match goal {
            Goal::Type(t) => self.hierarchy.name(*t).to_string(),
            Goal::Category(c) => c.to_string(),
        }
    }

    /// Grammar-file text that loads back into an equal grammar.
    pub fn to_source(&self) -> String {
        let h = &self.hierarchy;
        let mut out = String::from("[types]\n");
        for t in h.types() {
            let _ = writeln!(out, "{}", h.name(t));
        }
        for &(c, p) in h.edges() {
            let _ = writeln!(out, "{} < {}", h.name(c), h.name(p));
        }
        if let Some(top) = h.top() {
            let _ = writeln!(out, "top {}", h.name(top));
        }
        for (name, def) in &self.aliases {
            let _ = writeln!(out, "{name} = {def}");
        }
        out.push_str("\n[lexicon]\n");
        for (word, entries) in self.lexicon.iter() {
            for e in entries {
                let _ = write!(out, "{word} : {}", e.syn.render(h));
                if let Some(t) = &e.sem {
                    let _ = write!(out, " : {t}");
                }
                out.push('\n');
            }
        }
        if let Calculus::CfgGeneric { productions, .. } = &self.calculus {
            out.push_str("\n[cfg]\n");
            for p in productions {
                let _ = writeln!(out, "{} -> {} {}", h.name(p.lhs), h.name(p.left), h.name(p.right));
            }
        }
        for g in self.calculus.rules() {
            let _ = writeln!(out, "\n[generic {}]", g.name());
            for r in g.rules() {
                let _ =
                    write!(out, "{} {} : {}", h.name(r.signature.left), h.name(r.signature.right), r.body.display(h));
                if let Some(guard) = r.guard {
                    let _ = write!(out, " requires {}", guard.name());
                }
                out.push('\n');
            }
        }
        if let Some(goal) = &self.goal {
            let _ = write!(out, "\n[goal]\n{}\n", self.render_goal(goal));
        }
        out
    }
}
