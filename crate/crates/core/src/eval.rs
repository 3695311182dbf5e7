//! The eight evaluation checks over (S_latex, S_stex, S_R) expression
//! triples and the aggregated report.

use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::latex::{self, LatexNode};
use crate::normalize::{normalize_math, NormalizationConfig};
use crate::registry::{check_math, expand_math, Registry};
use crate::semantics::{omdoc_equal, term_to_omdoc, Semantics};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Skipped,
}

impl Outcome {
    pub fn passed(self) -> bool {
        self == Outcome::Pass
    }

    fn of(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// The checks in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Islatex,
    Stexcheck,
    EvalLatex,
    Omdoc,
    Translated,
    Inferred,
    ProvidedStex,
    StexAsOmdoc,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::Islatex,
        Check::Stexcheck,
        Check::EvalLatex,
        Check::Omdoc,
        Check::Translated,
        Check::Inferred,
        Check::ProvidedStex,
        Check::StexAsOmdoc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Islatex => "islatex",
            Check::Stexcheck => "stexcheck",
            Check::EvalLatex => "eval_latex",
            Check::Omdoc => "omdoc",
            Check::Translated => "translated",
            Check::Inferred => "inferred",
            Check::ProvidedStex => "provided_stex",
            Check::StexAsOmdoc => "stex_as_omdoc",
        }
    }

    /// Checks whose pass this check's pass implies.
    pub fn implies(self) -> &'static [Check] {
        match self {
            Check::Islatex => &[],
            Check::Stexcheck | Check::Omdoc => &[Check::Islatex],
            Check::EvalLatex => &[Check::Islatex],
            Check::Translated => &[Check::Omdoc, Check::Islatex],
            Check::Inferred => &[Check::Translated, Check::Omdoc, Check::Islatex],
            Check::ProvidedStex => &[Check::EvalLatex, Check::Stexcheck, Check::Islatex],
            Check::StexAsOmdoc => &[Check::Omdoc, Check::Islatex],
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalTriple {
    pub s_latex: String,
    pub s_stex: String,
    pub s_r: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub islatex: Outcome,
    pub stexcheck: Outcome,
    pub eval_latex: Outcome,
    pub omdoc: Outcome,
    pub translated: Outcome,
    pub inferred: Outcome,
    pub provided_stex: Outcome,
    pub stex_as_omdoc: Outcome,
    /// Whether `inferred` passed only because S_R is a bare variable.
    #[serde(default)]
    pub trivial_inference: bool,
    pub diagnostics: String,
}

impl CheckResult {
    fn skipped() -> Self {
        CheckResult {
            islatex: Outcome::Skipped,
            stexcheck: Outcome::Skipped,
            eval_latex: Outcome::Skipped,
            omdoc: Outcome::Skipped,
            translated: Outcome::Skipped,
            inferred: Outcome::Skipped,
            provided_stex: Outcome::Skipped,
            stex_as_omdoc: Outcome::Skipped,
            trivial_inference: false,
            diagnostics: String::new(),
        }
    }

    pub fn get(&self, c: Check) -> Outcome {
        match c {
            Check::Islatex => self.islatex,
            Check::Stexcheck => self.stexcheck,
            Check::EvalLatex => self.eval_latex,
            Check::Omdoc => self.omdoc,
            Check::Translated => self.translated,
            Check::Inferred => self.inferred,
            Check::ProvidedStex => self.provided_stex,
            Check::StexAsOmdoc => self.stex_as_omdoc,
        }
    }

    #[cfg(test)]
    fn set(&mut self, c: Check, o: Outcome) {
        *match c {
            Check::Islatex => &mut self.islatex,
            Check::Stexcheck => &mut self.stexcheck,
            Check::EvalLatex => &mut self.eval_latex,
            Check::Omdoc => &mut self.omdoc,
            Check::Translated => &mut self.translated,
            Check::Inferred => &mut self.inferred,
            Check::ProvidedStex => &mut self.provided_stex,
            Check::StexAsOmdoc => &mut self.stex_as_omdoc,
        } = o;
    }

    /// Pairs `(c, d)` where `c` passed although `d`, which it implies, did not.
    pub fn lattice_violations(&self) -> Vec<(Check, Check)> {
        let mut out = Vec::new();
        for c in Check::ALL {
            if self.get(c).passed() {
                for &d in c.implies() {
                    if !self.get(d).passed() {
                        out.push((c, d));
                    }
                }
            }
        }
        out
    }

    fn note(&mut self, c: Check, msg: impl fmt::Display) {
        if !self.diagnostics.is_empty() {
            self.diagnostics.push_str("; ");
        }
        let _ = write!(self.diagnostics, "{c}: {msg}");
    }
}

fn norm_render(nodes: &[LatexNode], cfg: &NormalizationConfig) -> String {
    latex::render(&normalize_math(nodes, cfg))
}

fn expanded(nodes: &[LatexNode], reg: &Registry, cfg: &NormalizationConfig) -> Result<String, String> {
    let pre = normalize_math(nodes, cfg);
    let ex = expand_math(&pre, reg).map_err(|e| e.to_string())?;
    Ok(norm_render(&ex, cfg))
}

/// Runs all checks on one triple of math bodies (no `$` delimiters).
/// Failures are outcomes; nothing here returns an error.
pub fn run_checks(s_latex: &str, s_stex: &str, s_r: &str, sem: &Semantics) -> CheckResult {
    let reg = sem.reg;
    let cfg = sem.norm;
    let mut res = CheckResult::skipped();

    let r = match latex::parse_math(s_r, reg) {
        Ok(r) => r,
        Err(e) => {
            res.islatex = Outcome::Fail;
            res.note(Check::Islatex, e);
            return res;
        }
    };
    res.islatex = Outcome::Pass;

    let check = check_math(&r, reg, cfg);
    res.stexcheck = Outcome::of(check.is_ok());
    if let Some(o) = check.offenses.first() {
        res.note(Check::Stexcheck, format!("{:?} `{}`", o.kind, o.text));
    }

    res.eval_latex = match (expanded(&r, reg, cfg), latex::parse_math(s_latex, reg)) {
        (Ok(got), Ok(want)) => {
            let want = norm_render(&want, cfg);
            if got != want {
                res.note(Check::EvalLatex, format!("`{got}` vs `{want}`"));
            }
            Outcome::of(got == want)
        }
        (Err(e), _) => {
            res.note(Check::EvalLatex, e);
            Outcome::Fail
        }
        (_, Err(e)) => {
            res.note(Check::EvalLatex, format!("S_latex: {e}"));
            Outcome::Fail
        }
    };

    let label = latex::parse_math(s_stex, reg);
    res.provided_stex = match &label {
        Ok(l) => Outcome::of(norm_render(l, cfg) == norm_render(&r, cfg)),
        Err(e) => {
            res.note(Check::ProvidedStex, format!("S_stex: {e}"));
            Outcome::Fail
        }
    };

    let term = match sem.stex_to_omdoc_term(&r) {
        Ok(t) => t,
        Err(e) => {
            res.omdoc = Outcome::Fail;
            res.note(Check::Omdoc, e);
            return res;
        }
    };
    res.omdoc = Outcome::Pass;

    res.stex_as_omdoc = match label.map_err(|e| e.to_string()).and_then(|l| {
        sem.stex_to_omdoc_term(&l).map_err(|e| e.to_string())
    }) {
        Ok(expected) => Outcome::of(omdoc_equal(&term_to_omdoc(&expected), &term_to_omdoc(&term))),
        Err(e) => {
            res.note(Check::StexAsOmdoc, format!("S_stex: {e}"));
            Outcome::Fail
        }
    };

    match sem.translate(&term) {
        Ok(typed) => {
            res.translated = Outcome::Pass;
            match sem.infer_type(&typed) {
                Ok(inf) => {
                    res.inferred = Outcome::Pass;
                    res.trivial_inference = inf.trivial;
                }
                Err(e) => {
                    res.inferred = Outcome::Fail;
                    res.note(Check::Inferred, e);
                }
            }
        }
        Err(e) => {
            res.translated = Outcome::Fail;
            res.note(Check::Translated, e);
        }
    }
    res
}

/// Checks every triple in parallel; results keep input order.
pub fn evaluate(triples: &[EvalTriple], sem: &Semantics) -> Vec<CheckResult> {
    let out: Vec<CheckResult> = triples
        .par_iter()
        .map(|t| run_checks(&t.s_latex, &t.s_stex, &t.s_r, sem))
        .collect();
    for (i, r) in out.iter().enumerate() {
        for (c, d) in r.lattice_violations() {
            log::warn!("input {i}: {c} passed but {d} did not");
        }
    }
    out
}

/// One line of the per-input log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub index: usize,
    #[serde(flatten)]
    pub triple: EvalTriple,
    #[serde(flatten)]
    pub result: CheckResult,
}

pub fn log_records(triples: &[EvalTriple], results: &[CheckResult]) -> Vec<LogRecord> {
    triples
        .iter()
        .zip(results)
        .enumerate()
        .map(|(index, (t, r))| LogRecord {
            index,
            triple: t.clone(),
            result: r.clone(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub check: Check,
    pub passed: usize,
    pub percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub rows: Vec<ReportRow>,
    /// Inputs breaking the implication lattice.
    pub lattice_violations: usize,
    /// Inputs whose `inferred` pass is a bare variable.
    pub trivial_inferences: usize,
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
#[error("cannot aggregate an empty result set")]
pub struct EmptyResults;

/// Pass rates over all inputs; skipped checks count as failed.
pub fn aggregate(results: &[CheckResult]) -> Result<EvalReport, EmptyResults> {
    if results.is_empty() {
        return Err(EmptyResults);
    }
    let total = results.len();
    let rows = Check::ALL
        .iter()
        .map(|&check| {
            let passed = results.iter().filter(|r| r.get(check).passed()).count();
            ReportRow {
                check,
                passed,
                percent: 100.0 * passed as f64 / total as f64,
            }
        })
        .collect();
    Ok(EvalReport {
        total,
        rows,
        lattice_violations: results.iter().filter(|r| !r.lattice_violations().is_empty()).count(),
        trivial_inferences: results.iter().filter(|r| r.trivial_inference).count(),
    })
}

impl EvalReport {
    pub fn percent(&self, c: Check) -> f64 {
        self.rows.iter().find(|r| r.check == c).map_or(0.0, |r| r.percent)
    }
}

/// Two-column table: total, then one percentage per check, grouped as
/// syntax, semantics, and comparison with the label.
pub fn render_report(report: &EvalReport) -> String {
    let width = 14;
    let mut out = String::new();
    let rule = format!("+{}+{}+\n", "-".repeat(width + 2), "-".repeat(9));
    out.push_str(&rule);
    let _ = writeln!(out, "| {:>width$} | {:<7} |", "Total inputs", report.total);
    out.push_str(&rule.replace('-', "="));
    for row in &report.rows {
        let _ = writeln!(out, "| {:>width$} | {:<7} |", row.check.name(), format!("{:.1}%", row.percent));
        if matches!(row.check, Check::EvalLatex | Check::Inferred | Check::StexAsOmdoc) {
            out.push_str(&rule);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{Lattice, SymbolSet};

    struct Fixture {
        reg: Registry,
        symbols: SymbolSet,
        lattice: Lattice,
        norm: NormalizationConfig,
    }

    impl Fixture {
        fn new() -> Self {
            Fixture {
                reg: Registry::sample(),
                symbols: SymbolSet::core(),
                lattice: Lattice::default(),
                norm: NormalizationConfig::default(),
            }
        }

        fn sem(&self) -> Semantics<'_> {
            Semantics::new(&self.reg, &self.symbols, &self.lattice, &self.norm)
        }
    }

    fn passes(r: &CheckResult) -> Vec<&'static str> {
        Check::ALL
            .iter()
            .filter(|c| r.get(**c).passed())
            .map(|c| c.name())
            .collect()
    }

    const EVALEX: [(&str, &str, &str); 4] = [
        (
            r"\mathbb{N}=\{0,1,2,3,\ldots\}",
            r"\eq{\NaturalNumbers,\setdots{0,1,2,3}}",
            r"\NaturalNumbers=\set{0,1,2,3}",
        ),
        (
            r"(A \subseteq B)\Leftrightarrow(\forall x\in A. x\in B)",
            r"\biimpl{\sseteq{A}{B}}{\foral{\inset{x}{A}}{\inset{x}{B}}}",
            r"\biimpl{\sseteq{A}{B}}{\foral{x}{A}\inset{x}{B}}}",
        ),
        (
            r"\mathcal{P}(A):=\{x|x\subseteq A\}",
            r"\defeq{\powerset{A}}{\setst{x}{\sseteq{x}{A}}}",
            r"\defeq{\powerset{A}}{\bsetst{x}{x}{\sset{x}{x} A}}",
        ),
        (
            r"1+2+3+4+5=(5\cdot6)/2=15",
            r"\eq{\natplus{1,2,3,4,5},\natdiv[slash]{\nattimes[cdot]{5,6}}{2},15}",
            r"\natplus{1,2,3,4,5}=\natdiv[slash]{\natplus{\nattimes[cdot]{5,6},4,5}}{2}=15",
        ),
    ];

    #[test]
    fn worked_examples() {
        let fx = Fixture::new();
        let sem = fx.sem();
        let expected: [&[&str]; 4] = [
            &["islatex"],
            &[],
            &["islatex", "stexcheck"],
            &["islatex"],
        ];
        for ((l, s, r), want) in EVALEX.iter().zip(expected) {
            let res = run_checks(l, s, r, &sem);
            assert_eq!(passes(&res), want, "{r}: {}", res.diagnostics);
            assert!(res.lattice_violations().is_empty());
        }
        let row2 = run_checks(EVALEX[1].0, EVALEX[1].1, EVALEX[1].2, &sem);
        assert_eq!(row2.stexcheck, Outcome::Skipped);
    }

    #[test]
    fn labels_score_themselves() {
        let fx = Fixture::new();
        let sem = fx.sem();
        for (l, s, _) in EVALEX {
            let res = run_checks(l, s, s, &sem);
            for c in [Check::Islatex, Check::Stexcheck, Check::EvalLatex, Check::ProvidedStex] {
                assert!(res.get(c).passed(), "{s}: {c} {}", res.diagnostics);
            }
        }
        let res = run_checks(
            r"x\cdot0=0",
            r"\eq{\nattimes[cdot]{x,0},0}",
            r"\eq{\nattimes[cdot]{x,0},0}",
            &sem,
        );
        assert!(Check::ALL.iter().all(|c| res.get(*c).passed()), "{}", res.diagnostics);
        assert!(!res.trivial_inference);
    }

    #[test]
    fn identity_on_macro_free_input() {
        let fx = Fixture::new();
        let sem = fx.sem();
        let res = run_checks("x+1", r"\natplus{x,1}", "x+1", &sem);
        assert!(res.islatex.passed() && res.eval_latex.passed());
        assert!(!res.provided_stex.passed());
        let res = run_checks("n", "n", "n", &sem);
        assert!(Check::ALL.iter().all(|c| res.get(*c).passed()));
        assert!(res.trivial_inference);
    }

    #[test]
    fn semantic_chain() {
        let fx = Fixture::new();
        let sem = fx.sem();
        // aligned at OMDoc level but not typed
        let res = run_checks(r"\mathcal{P}(A)", r"\powerset{A}", r"\powerset{A}", &sem);
        assert_eq!(res.omdoc, Outcome::Pass);
        assert_eq!(res.translated, Outcome::Fail);
        assert_eq!(res.inferred, Outcome::Skipped);
        // ill typed
        let res = run_checks(r"-A", r"\intuminus{A}", r"\natsucc{\eq{a,b}}", &sem);
        assert_eq!(res.translated, Outcome::Pass);
        assert_eq!(res.inferred, Outcome::Fail);
        // different bracketing, same term
        let res = run_checks(
            "a+b",
            r"\natplus{a,b}",
            r"\natplus{(a),b}",
            &sem,
        );
        assert!(!res.provided_stex.passed());
        assert!(res.stex_as_omdoc.passed(), "{}", res.diagnostics);
    }

    #[test]
    fn deterministic() {
        let fx = Fixture::new();
        let sem = fx.sem();
        for (l, s, r) in EVALEX {
            assert_eq!(run_checks(l, s, r, &sem), run_checks(l, s, r, &sem));
        }
    }

    #[test]
    fn aggregate_percentages() {
        assert_eq!(aggregate(&[]), Err(EmptyResults));
        let mut all = CheckResult::skipped();
        for c in Check::ALL {
            all.set(c, Outcome::Pass);
        }
        let rep = aggregate(&[all.clone()]).unwrap();
        assert!(rep.rows.iter().all(|r| r.percent == 100.0));
        let mut fail = all.clone();
        fail.islatex = Outcome::Fail;
        let mut results = vec![all; 156];
        results.extend(vec![fail; 5]);
        let rep = aggregate(&results).unwrap();
        assert_eq!(rep.total, 161);
        assert_eq!(format!("{:.1}", rep.percent(Check::Islatex)), "96.9");
        assert_eq!(rep.lattice_violations, 5);
    }

    #[test]
    fn report_layout() {
        let fx = Fixture::new();
        let sem = fx.sem();
        let results: Vec<_> = EVALEX.iter().map(|(l, s, r)| run_checks(l, s, r, &sem)).collect();
        let text = render_report(&aggregate(&results).unwrap());
        let names: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with('|'))
            .map(|l| l.split('|').nth(1).unwrap().trim())
            .collect();
        assert_eq!(
            names,
            [
                "Total inputs",
                "islatex",
                "stexcheck",
                "eval_latex",
                "omdoc",
                "translated",
                "inferred",
                "provided_stex",
                "stex_as_omdoc"
            ]
        );
        assert!(text.contains("| 75.0%"));
    }

    #[test]
    fn log_lines_are_flat() {
        let fx = Fixture::new();
        let sem = fx.sem();
        let t = EvalTriple {
            s_latex: "n".into(),
            s_stex: "n".into(),
            s_r: "n".into(),
        };
        let r = evaluate(std::slice::from_ref(&t), &sem);
        let rec = &log_records(&[t], &r)[0];
        let v = serde_json::to_value(rec).unwrap();
        assert_eq!(v["islatex"], "pass");
        assert_eq!(v["s_r"], "n");
        let back: LogRecord = serde_json::from_value(v).unwrap();
        assert_eq!(&back, rec);
    }
}
