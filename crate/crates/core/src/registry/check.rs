use serde::Serialize;

use crate::latex::{self, LatexNode, Span};
use crate::normalize::NormalizationConfig;

use super::Registry;

/// Letters that commonly serve as variable names.
pub(crate) const GREEK: &[&str] = &[
    "alpha",
    "beta",
    "gamma",
    "delta",
    "epsilon",
    "varepsilon",
    "zeta",
    "eta",
    "theta",
    "vartheta",
    "iota",
    "kappa",
    "lambda",
    "mu",
    "nu",
    "xi",
    "varpi",
    "rho",
    "varrho",
    "sigma",
    "varsigma",
    "tau",
    "upsilon",
    "phi",
    "varphi",
    "chi",
    "psi",
    "omega",
    "Gamma",
    "Delta",
    "Theta",
    "Lambda",
    "Xi",
    "Pi",
    "Sigma",
    "Upsilon",
    "Phi",
    "Psi",
    "Omega",
    "ell",
    "imath",
    "jmath",
    "prime",
];

/// Font switches that build variable names such as `\mathcal{G}`.
pub(crate) const VARIABLE_FONTS: &[&str] = &[
    "mathcal",
    "mathfrak",
    "mathscr",
    "mathit",
    "mathbf",
    "mathsf",
    "mathrm",
    "boldsymbol",
    "overline",
    "hat",
    "tilde",
    "bar",
    "vec",
];

/// Characters that never carry meaning of their own.
fn is_neutral_char(c: char) -> bool {
    c.is_alphanumeric()
        || c.is_whitespace()
        || matches!(c, '\'' | '_' | '^' | ',' | '.' | '(' | ')')
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OffenseKind {
    /// A character with presentation meaning, such as `=` or `+`.
    Symbol,
    /// A command that is neither a registry macro, a variable nor non-semantic.
    Command,
    ArityMismatch,
    UnknownVariant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Offense {
    pub span: Span,
    pub text: String,
    pub kind: OffenseKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DisambiguationCheck {
    pub offenses: Vec<Offense>,
}

impl DisambiguationCheck {
    pub fn is_ok(&self) -> bool {
        self.offenses.is_empty()
    }
}

/// Checks every math segment of a text-mode node list. Spans are byte offsets
/// into the rendered `nodes`.
pub fn is_fully_disambiguated(
    nodes: &[LatexNode],
    reg: &Registry,
    cfg: &NormalizationConfig,
) -> DisambiguationCheck {
    let mut out = Vec::new();
    for m in latex::find_math(nodes) {
        Checker {
            reg,
            cfg,
            out: &mut out,
        }
        .list(&m.segment.body, m.body_span.start);
    }
    DisambiguationCheck { offenses: out }
}

/// Checks a math body given without delimiters.
pub fn check_math(
    nodes: &[LatexNode],
    reg: &Registry,
    cfg: &NormalizationConfig,
) -> DisambiguationCheck {
    let mut out = Vec::new();
    Checker {
        reg,
        cfg,
        out: &mut out,
    }
    .list(nodes, 0);
    DisambiguationCheck { offenses: out }
}

struct Checker<'a> {
    reg: &'a Registry,
    cfg: &'a NormalizationConfig,
    out: &'a mut Vec<Offense>,
}

impl Checker<'_> {
    fn offend(&mut self, start: usize, text: &str, kind: OffenseKind) {
        self.out.push(Offense {
            span: Span::new(start, start + text.len()),
            text: text.to_string(),
            kind,
        });
    }

    fn list(&mut self, nodes: &[LatexNode], mut offset: usize) {
        for node in nodes {
            self.node(node, offset);
            offset += node.source_len();
        }
    }

    fn args(&mut self, c: &latex::Command, offset: usize, skip_optional: bool) {
        let mut at = offset + 1 + c.name.len() + c.space.len();
        for a in &c.args {
            let delim = usize::from(a.kind != latex::ArgKind::Bare);
            at += a.prefix.len() + delim;
            if !(skip_optional && a.is_optional()) {
                self.list(&a.body, at);
            }
            at += latex::source_len(&a.body) + delim;
        }
    }

    fn node(&mut self, node: &LatexNode, offset: usize) {
        match node {
            LatexNode::Text(t) => {
                let mut run: Option<usize> = None;
                for (i, c) in t.char_indices() {
                    match (is_neutral_char(c), run) {
                        (false, None) => run = Some(i),
                        (true, Some(s)) => {
                            self.offend(offset + s, &t[s..i], OffenseKind::Symbol);
                            run = None;
                        }
                        _ => {}
                    }
                }
                if let Some(s) = run {
                    self.offend(offset + s, &t[s..], OffenseKind::Symbol);
                }
            }
            LatexNode::Whitespace(_) | LatexNode::Comment(_) | LatexNode::Math(_) => {}
            LatexNode::Group(ch) => self.list(ch, offset + 1),
            LatexNode::Command(c) => {
                let whole = node.render();
                if let Some(decl) = self.reg.get(&c.name) {
                    let variant = c
                        .optional_args()
                        .next()
                        .map(|b| latex::render(b).trim().to_string());
                    if decl.notation_for(variant.as_deref()).is_none() {
                        self.offend(offset, &whole, OffenseKind::UnknownVariant);
                    } else if c.required_count() != decl.arity {
                        self.offend(offset, &whole, OffenseKind::ArityMismatch);
                    }
                    self.args(c, offset, true);
                } else if c.name == "text" || self.cfg.is_non_semantic(&c.name) {
                } else if GREEK.contains(&c.name.as_str())
                    || VARIABLE_FONTS.contains(&c.name.as_str())
                    || self.cfg.transparent_commands.contains(&c.name)
                    || matches!(c.name.as_str(), "underbrace" | "overbrace")
                {
                    self.args(c, offset, false);
                } else {
                    let head = format!("\\{}", c.name);
                    self.offend(offset, &head, OffenseKind::Command);
                    self.args(c, offset, false);
                }
            }
            LatexNode::Environment(e) => {
                let head = format!("\\begin{{{}}}", e.name);
                self.offend(offset, &head, OffenseKind::Command);
            }
        }
    }
}
