//! Canonical form for LaTeX trees.
//!
//! Two fragments that differ only in spacing, comments, kerning or whether
//! macro arguments are braced normalize to the same tree, and the rendered
//! tree parses back to itself. Parentheses are left alone.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::latex::{
    Arg, ArgKind, Builtins, CommandTable, EnvKind, LatexNode, MathDelimiter, MathSegment, Mode,
};
use crate::registry::Registry;

const DEFAULT_CONFIG: &str = include_str!("../data/normalize.toml");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationConfig {
    pub non_semantic_commands: BTreeSet<String>,
    #[serde(default)]
    pub transparent_commands: BTreeSet<String>,
    #[serde(default = "yes")]
    pub strip_comments: bool,
    #[serde(default = "yes")]
    pub collapse_whitespace: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("`\\{0}` is a registry macro and cannot be non-semantic")]
    RegistryMacro(String),
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig::from_toml(DEFAULT_CONFIG).expect("bundled normalizer config parses")
    }
}

impl NormalizationConfig {
    pub fn from_toml(src: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(src)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        NormalizationConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self, reg: &Registry) -> Result<(), ConfigError> {
        match self
            .non_semantic_commands
            .iter()
            .chain(&self.transparent_commands)
            .find(|c| reg.contains(c))
        {
            Some(c) => Err(ConfigError::RegistryMacro(c.clone())),
            None => Ok(()),
        }
    }

    pub fn is_non_semantic(&self, name: &str) -> bool {
        self.non_semantic_commands.contains(name)
    }
}

/// Normalizes a text-mode node list.
pub fn normalize(nodes: &[LatexNode], cfg: &NormalizationConfig) -> Vec<LatexNode> {
    let mut out = Normalizer { cfg }.list(nodes, Mode::Text);
    while out.first().is_some_and(LatexNode::is_whitespace) {
        out.remove(0);
    }
    while out.last().is_some_and(LatexNode::is_whitespace) {
        out.pop();
    }
    out
}

/// Normalizes the body of a math segment.
pub fn normalize_math(nodes: &[LatexNode], cfg: &NormalizationConfig) -> Vec<LatexNode> {
    Normalizer { cfg }.list(nodes, Mode::Math)
}

struct Normalizer<'c> {
    cfg: &'c NormalizationConfig,
}

/// Removes a TeX dimension such as `2pt` or `-.5em` from the front of `s`.
fn strip_dimension(s: &str) -> &str {
    let num_end = s
        .char_indices()
        .find(|&(i, c)| !(c.is_ascii_digit() || c == '.' || (i == 0 && c == '-')))
        .map_or(s.len(), |(i, _)| i);
    if num_end == 0 || !s[..num_end].bytes().any(|b| b.is_ascii_digit()) {
        return s;
    }
    let rest = &s[num_end..];
    match rest.get(..2) {
        Some(u)
            if [
                "pt", "em", "ex", "mu", "cm", "mm", "in", "bp", "sp", "pc", "dd", "cc",
            ]
            .contains(&u) =>
        {
            &rest[2..]
        }
        _ => s,
    }
}

fn is_verb(node: &LatexNode) -> bool {
    matches!(node, LatexNode::Text(t) if t.starts_with("\\verb"))
}

fn starts_arglike(node: &LatexNode) -> bool {
    node.first_char().is_some_and(|c| c == '{' || c == '[')
}

impl Normalizer<'_> {
    fn list(&self, nodes: &[LatexNode], mode: Mode) -> Vec<LatexNode> {
        let mut out = Vec::with_capacity(nodes.len());
        // `space` of each zero-argument control word as it was in the input.
        let mut had_space = Vec::new();
        let mut strip_dim = false;
        let mut after_comment = false;
        for node in nodes {
            let was_after_comment = std::mem::take(&mut after_comment);
            match node {
                LatexNode::Comment(c) => {
                    if self.cfg.strip_comments {
                        after_comment = true;
                    } else {
                        out.push(LatexNode::Comment(c.clone()));
                        out.push(LatexNode::Whitespace("\n".into()));
                    }
                }
                LatexNode::Whitespace(ws) => {
                    let ws = if was_after_comment {
                        // The line break ending a comment belongs to the comment.
                        match ws.split_once('\n') {
                            Some((_, rest)) => rest,
                            None => "",
                        }
                    } else {
                        ws.as_str()
                    };
                    if ws.is_empty() {
                        continue;
                    }
                    let ws = if self.cfg.collapse_whitespace {
                        " "
                    } else {
                        ws
                    };
                    out.push(LatexNode::Whitespace(ws.to_string()));
                }
                LatexNode::Text(t) => {
                    let t = if std::mem::take(&mut strip_dim) {
                        strip_dimension(t)
                    } else {
                        t
                    };
                    if !t.is_empty() {
                        out.push(LatexNode::Text(t.to_string()));
                    }
                }
                LatexNode::Command(c) => {
                    if self.cfg.is_non_semantic(&c.name) {
                        strip_dim = matches!(c.name.as_str(), "kern" | "mkern" | "hskip" | "mskip");
                        out.push(LatexNode::Whitespace(" ".into()));
                        continue;
                    }
                    if self.cfg.transparent_commands.contains(&c.name) {
                        for a in &c.args {
                            out.extend(self.list(&a.body, mode));
                        }
                        continue;
                    }
                    let am = Builtins
                        .command_shape(&c.name)
                        .and_then(|s| s.arg_mode)
                        .unwrap_or(mode);
                    let args: Vec<Arg> = c
                        .args
                        .iter()
                        .map(|a| Arg {
                            prefix: String::new(),
                            kind: if a.is_optional() {
                                ArgKind::Optional
                            } else {
                                ArgKind::Braced
                            },
                            body: self.list(&a.body, am),
                        })
                        .collect();
                    let mut cmd = c.clone();
                    cmd.args = args;
                    if cmd.args.is_empty() && cmd.is_control_word() {
                        had_space.push((out.len(), !c.space.is_empty()));
                    }
                    cmd.space.clear();
                    out.push(LatexNode::Command(cmd));
                }
                LatexNode::Group(ch) => out.push(LatexNode::Group(self.list(ch, mode))),
                LatexNode::Math(m) => {
                    let delimiter = match m.delimiter {
                        MathDelimiter::Paren => MathDelimiter::Inline,
                        d => d,
                    };
                    let mut body = self.list(&m.body, Mode::Math);
                    if body.is_empty() && delimiter == MathDelimiter::Inline {
                        // `$$` would read as display math.
                        body.push(LatexNode::Whitespace(" ".into()));
                    }
                    out.push(LatexNode::Math(MathSegment { delimiter, body }));
                }
                LatexNode::Environment(e) => {
                    let kind = Builtins
                        .env_shape(&e.name)
                        .map_or(EnvKind::Normal, |s| s.kind);
                    let mut e = e.clone();
                    if kind != EnvKind::Verbatim {
                        let body_mode = if kind == EnvKind::Math {
                            Mode::Math
                        } else {
                            mode
                        };
                        for a in &mut e.args {
                            a.prefix.clear();
                            if !a.is_optional() {
                                a.kind = ArgKind::Braced;
                            }
                            a.body = self.list(&a.body, mode);
                        }
                        e.body = self.list(&e.body, body_mode);
                    }
                    out.push(LatexNode::Environment(e));
                }
            }
        }
        let mut spaced = vec![false; out.len()];
        for (i, had) in had_space {
            spaced[i] = had;
        }
        self.post(out, spaced, mode)
    }

    /// Flattens trivial groups, merges neighbours and fixes control-word spacing.
    fn post(&self, nodes: Vec<LatexNode>, spaced: Vec<bool>, mode: Mode) -> Vec<LatexNode> {
        let n = nodes.len();
        let mut items: Vec<(LatexNode, bool)> = Vec::with_capacity(n);
        for i in 0..n {
            let node = nodes[i].clone();
            let next_arglike = nodes[i + 1..]
                .iter()
                .find(|x| !x.is_whitespace())
                .is_some_and(starts_arglike);
            match flatten(&node, next_arglike) {
                Some(inner) => items.push((inner, false)),
                None => items.push((node, spaced[i])),
            }
        }

        if mode == Mode::Math {
            let mut kept = Vec::with_capacity(items.len());
            for i in 0..items.len() {
                if items[i].0.is_whitespace() {
                    // Keep a space only where removing it would attach a group to the previous command.
                    let after_args = kept.last().is_some_and(|(p, _): &(LatexNode, bool)| {
                        matches!(p, LatexNode::Command(c) if !c.args.is_empty())
                    });
                    let before_group = items[i + 1..]
                        .iter()
                        .find(|(x, _)| !x.is_whitespace())
                        .is_some_and(|(x, _)| starts_arglike(x));
                    if !(after_args && before_group) {
                        continue;
                    }
                }
                kept.push(items[i].clone());
            }
            items = kept;
        }

        let mut merged: Vec<(LatexNode, bool)> = Vec::with_capacity(items.len());
        for (node, sp) in items {
            match (merged.last_mut(), &node) {
                (Some((LatexNode::Text(a), _)), LatexNode::Text(b))
                    if !a.starts_with("\\verb") && !is_verb(&node) =>
                {
                    a.push_str(b)
                }
                (Some((LatexNode::Whitespace(a), _)), LatexNode::Whitespace(b)) => {
                    if !self.cfg.collapse_whitespace {
                        a.push_str(b)
                    }
                }
                _ => merged.push((node, sp)),
            }
        }

        let mut out: Vec<LatexNode> = Vec::with_capacity(merged.len());
        let mut i = 0;
        while i < merged.len() {
            let (node, had) = &merged[i];
            match node {
                LatexNode::Command(c) if c.args.is_empty() && c.is_control_word() => {
                    let next = match mode {
                        Mode::Math => merged[i + 1..]
                            .iter()
                            .map(|(x, _)| x)
                            .find(|x| !x.is_whitespace()),
                        Mode::Text => merged.get(i + 1).map(|(x, _)| x),
                    };
                    let mut c = c.clone();
                    let letter_next = next.is_some_and(|x| {
                        x.first_char().is_some_and(|ch| ch.is_alphabetic()) || starts_arglike(x)
                    });
                    let space = match mode {
                        Mode::Math => letter_next,
                        Mode::Text => {
                            let ws_next = next.is_some_and(LatexNode::is_whitespace);
                            if ws_next {
                                i += 1;
                            }
                            *had || ws_next || letter_next
                        }
                    };
                    c.space = if space { " ".into() } else { String::new() };
                    out.push(LatexNode::Command(c));
                }
                other => out.push(other.clone()),
            }
            i += 1;
        }
        out
    }
}

/// The single token inside a redundant group, if it can stand on its own.
fn flatten(node: &LatexNode, next_arglike: bool) -> Option<LatexNode> {
    let LatexNode::Group(ch) = node else {
        return None;
    };
    let [inner] = &ch[..] else { return None };
    match inner {
        LatexNode::Text(t) if t.chars().count() == 1 && !matches!(t.as_str(), "[" | "]" | ",") => {
            Some(inner.clone())
        }
        LatexNode::Command(c) if c.args.is_empty() && !next_arglike => Some(inner.clone()),
        _ => None,
    }
}
