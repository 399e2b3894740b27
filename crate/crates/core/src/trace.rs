//! Step-by-step records of a derivation, for text and JSON output.

use std::fmt::Write as _;

use serde::Serialize;

use crate::parser::{Chart, Derivation, Parser, StackEntry, StepKind};
use crate::span::Span;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EntryRecord {
    pub syn: String,
    pub sem: Option<String>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub step: usize,
    /// `axiom`, `shift` or `reduce`.
    pub kind: &'static str,
    /// Fired partial rules, for reduces.
    pub rule: Option<String>,
    /// Shifted word, for shifts.
    pub word: Option<String>,
    pub j: usize,
    pub consumed: Vec<EntryRecord>,
    pub produced: Vec<EntryRecord>,
    /// Tokens covered by the consumed or shifted material.
    pub span: Option<Span>,
    /// The item reached.
    pub item: String,
}

fn entry(p: &Parser<'_>, e: &StackEntry) -> EntryRecord {
    EntryRecord { syn: p.render_syn(&e.syn), sem: e.sem.as_ref().map(ToString::to_string), span: e.span }
}

pub fn records(p: &Parser<'_>, chart: &Chart, d: &Derivation) -> Vec<TraceRecord> {
    let axiom = &d.items[0];
    let mut out = vec![TraceRecord {
        step: 0,
        kind: "axiom",
        rule: None,
        word: None,
        j: 0,
        consumed: Vec::new(),
        produced: Vec::new(),
        span: None,
        item: p.render_item(axiom),
    }];
    for (i, &kind) in d.steps.iter().enumerate() {
        let (from, to) = (&d.items[i], &d.items[i + 1]);
        let kept = match kind {
            StepKind::Shift { .. } | StepKind::ShiftPending => from.stack.len(),
            StepKind::Reduce(_) => from.stack.len() - 2,
        };
        let consumed: Vec<EntryRecord> = from.stack[kept..].iter().map(|x| entry(p, x)).collect();
        // a reduce may also return entries to the input
        let returned = to.pending.len().saturating_sub(from.pending.len());
        let produced: Vec<EntryRecord> = to.stack[kept..]
            .iter()
            .chain(&to.pending[..if matches!(kind, StepKind::Reduce(_)) { returned } else { 0 }])
            .map(|x| entry(p, x))
            .collect();
        let (kind, rule, word, span) = match kind {
            StepKind::Shift { .. } => ("shift", None, Some(chart.tokens[from.j].clone()), Some(Span::unit(from.j))),
            StepKind::ShiftPending => ("shift", None, None, from.pending.first().map(|x| x.span)),
            StepKind::Reduce(f) => {
                let span = consumed.iter().map(|c| c.span).reduce(Span::hull);
                ("reduce", Some(p.rule_label(f)), None, span)
            }
        };
        out.push(TraceRecord {
            step: i + 1,
            kind,
            rule,
            word,
            j: to.j,
            consumed,
            produced,
            span,
            item: p.render_item(to),
        });
    }
    out
}

fn entries_text(es: &[EntryRecord]) -> String {
    es.iter().map(|e| format!("{}{}", e.syn, e.span)).collect::<Vec<_>>().join(" ")
}

/// One block per step: what happened, then the item reached.
pub fn render_text(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let what = match r.kind {
            "shift" => match &r.word {
                Some(w) => format!("shift   {w}"),
                None => format!("shift   {}", entries_text(&r.produced)),
            },
            "reduce" => format!(
                "reduce  {}  [{}]\n            {} => {}",
                r.rule.as_deref().unwrap_or_default(),
                r.span.map(|s| s.to_string()).unwrap_or_default(),
                entries_text(&r.consumed),
                entries_text(&r.produced)
            ),
            other => other.to_string(),
        };
        let _ = writeln!(out, "{:>3}  {what}\n     {}", r.step, r.item);
    }
    out
}

/// The fired rule labels in order.
pub fn rule_sequence(records: &[TraceRecord]) -> Vec<String> {
    records.iter().filter_map(|r| r.rule.clone()).collect()
}
