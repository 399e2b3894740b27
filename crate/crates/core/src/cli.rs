//! The `genrule` command line.
//!
//! Exit status: 0 clean or accepted, 1 rejected, 2 grammar error, 3 usage
//! error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser as ClapParser, Subcommand};
use serde::Serialize;

use crate::grammar::{Grammar, GrammarError};
use crate::parser::{ParseError, Stats};
use crate::trace::{self, TraceRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_GRAMMAR: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(ClapParser, Debug)]
#[command(name = "genrule", version, about = "Parse with generic rules and dynamic binding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a grammar and report hierarchy and rule problems.
    Check { file: PathBuf },
    /// Parse a sentence; tokens are separated by whitespace.
    Parse {
        file: PathBuf,
        sentence: String,
        /// Show every derivation, not just the first.
        #[arg(long)]
        all: bool,
        /// Show each shift and reduce with the partial rule that fired.
        #[arg(long)]
        trace: bool,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
        /// Override the grammar's goal (a type name or a category).
        #[arg(long, value_name = "G")]
        goal: Option<String>,
        /// Report item and reduce tallies.
        #[arg(long)]
        count: bool,
    },
}

#[derive(Serialize)]
struct StatsJson {
    items: usize,
    nodes: usize,
    links: usize,
    shifts: usize,
    attempted: usize,
    fired: usize,
    pruned: usize,
}

impl From<Stats> for StatsJson {
    fn from(s: Stats) -> Self {
        StatsJson {
            items: s.items,
            nodes: s.nodes,
            links: s.links,
            shifts: s.shifts,
            attempted: s.attempted,
            fired: s.fired,
            pruned: s.pruned,
        }
    }
}

#[derive(Serialize)]
struct DerivationJson {
    result: trace::EntryRecord,
    steps: Vec<TraceRecord>,
}

#[derive(Serialize)]
struct ParseJson<'a> {
    accepted: bool,
    goal: String,
    tokens: &'a [String],
    derivation_count: usize,
    truncated: bool,
    derivations: Vec<DerivationJson>,
    stats: StatsJson,
}

struct Opts {
    all: bool,
    trace: bool,
    json: bool,
    goal: Option<String>,
    count: bool,
}

/// Runs the command line with `args` (including the program name) and
/// returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match cli.command {
        Command::Check { file } => check(&file, out, err),
        Command::Parse { file, sentence, all, trace, json, goal, count } => {
            parse(&file, &sentence, &Opts { all, trace, json, goal, count }, out, err)
        }
    }
}

fn load(path: &Path, err: &mut dyn Write) -> Result<Grammar, i32> {
    let src = std::fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
        EXIT_GRAMMAR
    })?;
    Grammar::from_source(&src).map_err(|e| {
        report_grammar_error(path, &e, err);
        EXIT_GRAMMAR
    })
}

fn report_grammar_error(path: &Path, e: &GrammarError, w: &mut dyn Write) {
    match e {
        GrammarError::Invalid(problems) => {
            for p in problems {
                let _ = writeln!(w, "{}: {p}", path.display());
            }
            let _ = writeln!(w, "{} problem(s) found", problems.len());
        }
        other => {
            let _ = writeln!(w, "{}: {other}", path.display());
        }
    }
}

fn check(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let src = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            return EXIT_GRAMMAR;
        }
    };
    match Grammar::from_source(&src) {
        Ok(g) => {
            let rules = g.calculus.rules();
            let partial: usize = rules.iter().map(|r| r.rules().len()).sum();
            let _ = writeln!(
                out,
                "{}: ok ({} types, {} rule(s) with {} partial rules, {} words, no conflicts)",
                path.display(),
                g.hierarchy.len(),
                rules.len(),
                partial,
                g.lexicon.len()
            );
            EXIT_OK
        }
        Err(e) => {
            report_grammar_error(path, &e, out);
            EXIT_GRAMMAR
        }
    }
}

fn parse(path: &Path, sentence: &str, opts: &Opts, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let g = match load(path, err) {
        Ok(g) => g,
        Err(code) => return code,
    };
    let goal = match (&opts.goal, &g.goal) {
        (Some(text), _) => match g.parse_goal(text) {
            Ok(goal) => goal,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_USAGE;
            }
        },
        (None, Some(goal)) => goal.clone(),
        (None, None) => {
            let _ = writeln!(err, "error: {}; pass --goal", GrammarError::NoGoal);
            return EXIT_USAGE;
        }
    };
    let tokens: Vec<&str> = sentence.split_whitespace().collect();
    let parser = g.parser();
    let chart = match parser.parse(&tokens, &goal) {
        Ok(c) => c,
        Err(e @ ParseError::UnknownWord { .. }) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_REJECTED;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_GRAMMAR;
        }
    };
    let (derivations, truncated) = parser.derivations(&chart);
    let shown = if opts.all { &derivations[..] } else { &derivations[..derivations.len().min(1)] };
    let goal_text = g.render_goal(&goal);

    if opts.json {
        let report = ParseJson {
            accepted: chart.accepted(),
            goal: goal_text,
            tokens: &chart.tokens,
            derivation_count: derivations.len(),
            truncated,
            derivations: shown
                .iter()
                .map(|d| {
                    let steps = trace::records(&parser, &chart, d);
                    let last = d.result();
                    let result = trace::EntryRecord {
                        syn: parser.render_syn(&last.syn),
                        sem: last.sem.as_ref().map(ToString::to_string),
                        span: last.span,
                    };
                    DerivationJson { result, steps }
                })
                .collect(),
            stats: chart.stats.into(),
        };
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        if chart.accepted() {
            let more = if truncated { "+" } else { "" };
            let _ = writeln!(out, "accepted: {}{more} derivation(s) to {goal_text}", derivations.len());
        } else {
            let _ = writeln!(out, "rejected: no derivation to {goal_text}");
        }
        for (i, d) in shown.iter().enumerate() {
            let records = trace::records(&parser, &chart, d);
            let _ = writeln!(out, "derivation {}:", i + 1);
            if opts.trace {
                let _ = write!(out, "{}", trace::render_text(&records));
            } else {
                let _ = writeln!(out, "  rules: {}", trace::rule_sequence(&records).join(" ; "));
                let last = d.result();
                let sem = last.sem.as_ref().map(|t| format!(" : {t}")).unwrap_or_default();
                let _ = writeln!(out, "  result: {}{}{sem}", parser.render_syn(&last.syn), last.span);
            }
        }
        if opts.count {
            let s = chart.stats;
            let _ = writeln!(
                out,
                "items: {} ({} nodes, {} links)\nshifts: {}\nreduces attempted: {}\nreduces fired: {}\npruned: {}",
                s.items, s.nodes, s.links, s.shifts, s.attempted, s.fired, s.pruned
            );
        }
    }
    if chart.accepted() {
        EXIT_OK
    } else {
        EXIT_REJECTED
    }
}
