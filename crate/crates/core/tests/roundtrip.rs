use proptest::prelude::*;
use stex_disamb::corpus::{fragment, CorpusEntry};
use stex_disamb::latex::{self, parse_math, parse_with};
use stex_disamb::normalize::{normalize, normalize_math, NormalizationConfig};
use stex_disamb::registry::Registry;

const DOCS: [&str; 5] = [
    include_str!("../data/corpus/natarith.tex"),
    include_str!("../data/corpus/intarith.tex"),
    include_str!("../data/corpus/realarith.tex"),
    include_str!("../data/corpus/sets.tex"),
    include_str!("../data/corpus/logic.tex"),
];
const SYNTH: &str = include_str!("../data/synth/bundled.jsonl");

/// Every text fragment of the bundled corpus: whole documents, their
/// fragments, and both sides of every synthetic sentence.
fn fragments() -> Vec<String> {
    let mut out = Vec::new();
    for doc in DOCS {
        out.push(doc.to_string());
        out.extend(fragment(doc));
    }
    for line in SYNTH.lines() {
        let e: CorpusEntry = serde_json::from_str(line).unwrap();
        out.push(e.s_stex);
        out.push(e.s_latex);
    }
    out
}

fn math_bodies() -> Vec<String> {
    SYNTH
        .lines()
        .map(|l| serde_json::from_str::<CorpusEntry>(l).unwrap())
        .flat_map(|e| e.math_stex.into_iter().chain(e.math_latex))
        .collect()
}

#[test]
fn corpus_is_large_enough() {
    assert!(fragments().len() >= 500);
}

#[test]
fn parse_render_is_identity_on_the_corpus() {
    let reg = Registry::sample();
    let mut failures = Vec::new();
    for f in fragments() {
        match parse_with(&f, &reg) {
            Ok(nodes) if latex::render(&nodes) == f => {}
            Ok(nodes) => failures.push(format!("rendered differently: {f:?} -> {:?}", latex::render(&nodes))),
            Err(e) => failures.push(format!("{e}: {f:?}")),
        }
    }
    for m in math_bodies() {
        let nodes = parse_math(&m, &reg).unwrap();
        if latex::render(&nodes) != m {
            failures.push(format!("math: {m:?}"));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn normalize_is_idempotent_on_the_corpus() {
    let reg = Registry::sample();
    let cfg = NormalizationConfig::default();
    let mut failures = 0;
    for f in fragments() {
        let once = normalize(&parse_with(&f, &reg).unwrap(), &cfg);
        let twice = normalize(&once, &cfg);
        let reparsed = normalize(&parse_with(&latex::render(&once), &reg).unwrap(), &cfg);
        if once != twice || latex::render(&reparsed) != latex::render(&once) {
            failures += 1;
            eprintln!("not idempotent: {f:?}");
        }
    }
    for m in math_bodies() {
        let once = normalize_math(&parse_math(&m, &reg).unwrap(), &cfg);
        if normalize_math(&once, &cfg) != once {
            failures += 1;
            eprintln!("math not idempotent: {m:?}");
        }
    }
    assert_eq!(failures, 0);
}

fn latexish() -> impl Strategy<Value = String> {
    let atom = prop_oneof![
        "[a-z0-9 ,.=+()]{1,6}",
        Just(r"\cdot ".to_string()),
        Just(r"\alpha".to_string()),
        Just(r"\,".to_string()),
        Just("%c\n".to_string()),
        Just("  \n\t".to_string()),
    ];
    let leaf = prop::collection::vec(atom, 0..6).prop_map(|v| v.concat());
    leaf.prop_recursive(3, 40, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(|s| format!("{{{s}}}")),
            inner.clone().prop_map(|s| format!("${s}$")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!(r"\natplus{{{a},{b}}}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!(r"\frac{{{a}}}{{{b}}}")),
            inner.clone().prop_map(|s| format!(r"\nattimes[cdot]{{{s}}}")),
            prop::collection::vec(inner, 1..3).prop_map(|v| v.concat()),
        ]
    })
}

proptest! {
    #[test]
    fn parse_render_identity(src in latexish()) {
        let reg = Registry::sample();
        if let Ok(nodes) = parse_with(&src, &reg) {
            prop_assert_eq!(latex::render(&nodes), src);
        }
    }

    #[test]
    fn normalize_idempotent(src in latexish()) {
        let reg = Registry::sample();
        let cfg = NormalizationConfig::default();
        if let Ok(nodes) = parse_with(&src, &reg) {
            let once = normalize(&nodes, &cfg);
            prop_assert_eq!(&normalize(&once, &cfg), &once);
        }
    }
}
