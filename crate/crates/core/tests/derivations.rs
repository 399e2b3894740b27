mod common;

use genrule::catgram::Category;
use genrule::generic_rule::Value;
use genrule::lambda::LambdaTerm;
use genrule::parser::{Goal, Item, Limits, ParseError, StepKind};
use genrule::{trace, Grammar};

use common::{coordination, load};

fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn semantics(g: &Grammar, sentence: &str) -> Vec<LambdaTerm> {
    let p = g.parser();
    let chart = p.parse(&words(sentence), g.goal.as_ref().unwrap()).unwrap();
    p.derivations(&chart).0.iter().map(|d| d.result().sem.clone().unwrap()).collect()
}

#[test]
fn context_free_backbone_gives_the_same_meaning() {
    let with_rule = semantics(&load("betty.gr"), "Betty got+angry");
    let with_cfg = semantics(&load("betty-cfg.gr"), "Betty got+angry");
    assert_eq!(with_rule.len(), 1);
    assert_eq!(with_cfg.len(), 1);
    assert!(with_rule[0].alpha_eq(&with_cfg[0]));
    assert!(with_cfg[0].alpha_eq(&LambdaTerm::parse("ANGRY(Betty) & ANGRY(Pete)").unwrap()));
}

#[test]
fn ordinary_subjects_use_the_default_meaning() {
    let sems = semantics(&load("betty-cfg.gr"), "Sue left");
    assert_eq!(sems.len(), 1);
    assert!(sems[0].alpha_eq(&LambdaTerm::parse("LEFT(Sue)").unwrap()));
}

#[test]
fn a_nil_meaning_blocks_the_derivation() {
    let src = "\
[types]
Proper-Noun < NP
Betty < Proper-Noun
she < NP
VP_1 < VP
S

[lexicon]
Betty : Betty : \\P. P(Betty)
she : she : \\P. P(she)
runs : VP_1 : \\x. RUN(x)

[generic SYN]
NP VP : type(S)

[generic SEM]
Proper-Noun VP : term(\\x y. x(y))

[goal]
S
";
    let g = Grammar::from_source(src).unwrap();
    assert_eq!(semantics(&g, "Betty runs").len(), 1);
    assert!(semantics(&g, "she runs").is_empty());
}

#[test]
fn coordination_trace_rebuilds_both_conjuncts() {
    let g = load("ncc.gr");
    let p = g.parser();
    let sentence = coordination(0);
    let tokens = words(&sentence);
    let chart = p.parse(&tokens, g.goal.as_ref().unwrap()).unwrap();
    let (ds, truncated) = p.derivations(&chart);
    assert!(!truncated);
    assert!(!ds.is_empty());
    for d in &ds {
        assert_eq!(p.render_syn(&d.result().syn), "s");
        let records = trace::records(&p, &chart, d);
        let produced: Vec<String> =
            records.iter().flat_map(|r| r.produced.iter().map(|e| format!("{}{}", e.syn, e.span))).collect();
        // the right conjunct becomes a tuple and is eliminated into pieces
        // that line up with the left conjunct
        assert!(produced.contains(&"<np, (np\\s)\\(np\\s)>[5,7)".to_string()), "{produced:?}");
        assert!(produced.contains(&"np[2,3)".to_string()), "{produced:?}");
        assert!(produced.contains(&"(np\\s)\\(np\\s)[3,4)".to_string()), "{produced:?}");
        let shifted: Vec<&str> = records.iter().filter_map(|r| r.word.as_deref()).collect();
        assert_eq!(shifted, tokens);
    }
}

#[test]
fn dangling_conjunction_is_rejected() {
    let g = load("ncc.gr");
    let p = g.parser();
    let sentence = format!("{} and", coordination(0));
    let chart = p.parse(&words(&sentence), g.goal.as_ref().unwrap()).unwrap();
    assert!(!chart.accepted());
    assert!(p.derivations(&chart).0.is_empty());
}

#[test]
fn longer_coordinations_are_accepted() {
    let g = load("ncc.gr");
    let p = g.parser();
    for extra in 1..=2 {
        let sentence = coordination(extra);
        assert!(p.recognize(&words(&sentence), g.goal.as_ref().unwrap()).unwrap(), "{sentence}");
    }
}

#[test]
fn subject_verb_tuples_form_before_a_conjunction() {
    let g = load("ncc.gr");
    let p = g.parser();
    let chart = p.parse(&words("John made and Peter painted a+wooden+chair"), g.goal.as_ref().unwrap()).unwrap();
    let pair = Category::parse("<np, (np\\s)/np>").unwrap();
    let formed = chart.nodes().any(|(_, n)| {
        n.top.as_ref().is_some_and(|e| {
            e.span.start == 0 && e.span.end == 2 && matches!(&e.syn, Value::Cat(c) if c.without_spans() == pair)
        })
    });
    assert!(formed);
}

#[test]
fn lookahead_guards_need_the_whole_sentence() {
    let g = load("ncc.gr");
    assert!(matches!(g.parser().recognizer().err(), Some(ParseError::LookaheadGuard)));
}

#[test]
fn derivations_replay_on_every_fixture() {
    let cases = [
        ("subject-predicate.gr", "Mary fumes"),
        ("subject-predicate.gr", "she runs"),
        ("betty.gr", "Betty got+angry"),
        ("betty-cfg.gr", "Sue left"),
        ("ncc.gr", "John met Jane yesterday and Chris today and Mary tomorrow"),
        ("ncc-unrestricted.gr", "John met Jane yesterday and Chris today"),
        ("ncc-ntuple.gr", "John read a+book about+linguistics on+Monday and a+journal about+computers on+Tuesday"),
    ];
    for (name, sentence) in cases {
        let g = load(name);
        let p = g.parser();
        let tokens = words(sentence);
        let chart = p.parse(&tokens, g.goal.as_ref().unwrap()).unwrap();
        let (ds, _) = p.derivations(&chart);
        assert!(!ds.is_empty(), "{name}: {sentence}");
        for d in &ds {
            assert_eq!(d.items[0], Item::axiom());
            assert_eq!(d.items.len(), d.steps.len() + 1);
            assert!(d.items.iter().all(Item::is_tiled), "{name}");
            let last = p.replay(&chart, d).unwrap();
            assert_eq!(&last, d.items.last().unwrap(), "{name}");
            assert_eq!((last.stack.len(), last.j), (1, tokens.len()));
            let shifts = d.steps.iter().filter(|k| matches!(k, StepKind::Shift { .. })).count();
            assert_eq!(shifts, tokens.len());
        }
        // enumeration order is canonical
        let again: Vec<Vec<StepKind>> = p.derivations(&chart).0.into_iter().map(|d| d.steps).collect();
        assert_eq!(again, ds.iter().map(|d| d.steps.clone()).collect::<Vec<_>>(), "{name}");
    }
}

#[test]
fn guards_and_specificity_shrink_the_search() {
    let sentence = coordination(0);
    let tokens = words(&sentence);
    let run = |name: &str| {
        let g = load(name);
        let p = g.parser();
        let chart = p.parse(&tokens, g.goal.as_ref().unwrap()).unwrap();
        (p.derivations(&chart).0.len(), chart.stats)
    };
    let ((guarded, gs), (free, fs)) = (run("ncc.gr"), run("ncc-unrestricted.gr"));
    assert!(guarded >= 1 && guarded <= free);
    assert!(gs.items < fs.items);
    assert!(gs.attempted < fs.attempted);
    assert!(gs.fired <= fs.fired);
    for s in [gs, fs] {
        assert!(s.fired <= s.attempted);
        assert_eq!(s.items, s.nodes + s.links);
    }
}

#[test]
fn empty_input_attempts_nothing() {
    let g = load("ncc.gr");
    let p = g.parser();
    let chart = p.parse::<&str>(&[], g.goal.as_ref().unwrap()).unwrap();
    assert!(!chart.accepted());
    assert_eq!((chart.stats.attempted, chart.stats.fired, chart.stats.shifts), (0, 0, 0));
}

#[test]
fn derivation_limit_truncates() {
    // four words under one associative rule: five bracketings
    let g = Grammar::from_source("[types]\nA\n[lexicon]\nx : A\n[generic R]\nA A : type(A)\n[goal]\nA\n").unwrap();
    let tokens = ["x"; 4];
    let goal = g.goal.clone().unwrap();
    let full = g.parser();
    let (all, truncated) = full.derivations(&full.parse(&tokens, &goal).unwrap());
    assert_eq!((all.len(), truncated), (5, false));
    let limited = g.parser().with_limits(Limits { max_derivations: 2, ..Limits::default() });
    let (ds, truncated) = limited.derivations(&limited.parse(&tokens, &goal).unwrap());
    assert_eq!((ds.len(), truncated), (2, true));
    assert!(ds.iter().all(|d| all.iter().any(|a| a.steps == d.steps)));
}

#[test]
fn item_budget_is_enforced() {
    let g = load("ncc-unrestricted.gr");
    let p = g.parser().with_limits(Limits { max_items: 20, ..Limits::default() });
    let err = p.parse(&words(&coordination(0)), g.goal.as_ref().unwrap()).unwrap_err();
    assert_eq!(err, ParseError::ItemBudget(20));
}

#[test]
fn category_goals_match_exact_shapes() {
    let g = load("ncc.gr");
    let p = g.parser();
    let goal = Goal::Category(Category::parse("np\\s").unwrap());
    assert!(p.recognize(&words("met Jane"), &goal).unwrap());
    assert!(!p.recognize(&words("John met Jane"), &goal).unwrap());
}
