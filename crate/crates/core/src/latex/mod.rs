//! Lossless LaTeX syntax trees.
//!
//! [`parse`] turns source text into a list of [`LatexNode`]s and [`render`]
//! turns them back into exactly the same bytes. Every piece of the input,
//! including whitespace and comments, has a home in the tree, which makes
//! byte spans recoverable from the tree alone (see [`find_math`]).

mod parse;
pub(crate) mod shapes;

pub use parse::{parse, parse_math, parse_with, ParseError, ParseErrorKind};
pub use shapes::{ArgSpec, Builtins, CommandShape, CommandTable, EnvKind, EnvShape};

use std::fmt::Write as _;

/// Parsing mode: TeX treats text and math differently (`$` opens or closes).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Text,
    Math,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MathDelimiter {
    /// `$ ... $`
    Inline,
    /// `$$ ... $$`
    Display,
    /// `\[ ... \]`
    Bracket,
    /// `\( ... \)`, treated like `$ ... $`
    Paren,
}

impl MathDelimiter {
    pub fn open(self) -> &'static str {
        match self {
            MathDelimiter::Inline => "$",
            MathDelimiter::Display => "$$",
            MathDelimiter::Bracket => "\\[",
            MathDelimiter::Paren => "\\(",
        }
    }

    pub fn close(self) -> &'static str {
        match self {
            MathDelimiter::Inline => "$",
            MathDelimiter::Display => "$$",
            MathDelimiter::Bracket => "\\]",
            MathDelimiter::Paren => "\\)",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArgKind {
    /// `[ ... ]`
    Optional,
    /// `{ ... }`
    Braced,
    /// A single unbraced token, as in `\frac 12`.
    Bare,
}

/// One argument of a command or environment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Arg {
    /// Whitespace (and comments) TeX skipped before the argument.
    pub prefix: String,
    pub kind: ArgKind,
    pub body: Vec<LatexNode>,
}

impl Arg {
    pub fn braced(body: Vec<LatexNode>) -> Self {
        Arg {
            prefix: String::new(),
            kind: ArgKind::Braced,
            body,
        }
    }

    pub fn optional(body: Vec<LatexNode>) -> Self {
        Arg {
            prefix: String::new(),
            kind: ArgKind::Optional,
            body,
        }
    }

    pub fn is_optional(&self) -> bool {
        self.kind == ArgKind::Optional
    }

    fn render_into(&self, out: &mut String) {
        out.push_str(&self.prefix);
        match self.kind {
            ArgKind::Optional => {
                out.push('[');
                render_into(&self.body, out);
                out.push(']');
            }
            ArgKind::Braced => {
                out.push('{');
                render_into(&self.body, out);
                out.push('}');
            }
            ArgKind::Bare => render_into(&self.body, out),
        }
    }

    fn delim_len(&self) -> usize {
        match self.kind {
            ArgKind::Bare => 0,
            _ => 1,
        }
    }
}

/// A control sequence together with the arguments the parser attached to it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Command {
    /// Name without the backslash: `cdot`, `frac`, `,`, `{`.
    pub name: String,
    /// Whitespace swallowed after a control word.
    pub space: String,
    pub args: Vec<Arg>,
}

impl Command {
    pub fn new(name: impl Into<String>) -> Self {
        Command {
            name: name.into(),
            space: String::new(),
            args: Vec::new(),
        }
    }

    pub fn with_args(name: impl Into<String>, args: Vec<Arg>) -> Self {
        Command {
            name: name.into(),
            space: String::new(),
            args,
        }
    }

    /// `true` for control words such as `\cdot`, `false` for control symbols such as `\,`.
    pub fn is_control_word(&self) -> bool {
        self.name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic())
    }

    pub fn optional_args(&self) -> impl Iterator<Item = &Vec<LatexNode>> {
        self.args
            .iter()
            .filter(|a| a.is_optional())
            .map(|a| &a.body)
    }

    /// Required arguments, braced or not, in order.
    pub fn braced_args(&self) -> impl Iterator<Item = &Vec<LatexNode>> {
        self.args
            .iter()
            .filter(|a| !a.is_optional())
            .map(|a| &a.body)
    }

    pub fn required_count(&self) -> usize {
        self.args.iter().filter(|a| !a.is_optional()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MathSegment {
    pub delimiter: MathDelimiter,
    pub body: Vec<LatexNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Environment {
    pub name: String,
    /// Arguments directly after `\begin{name}`.
    pub args: Vec<Arg>,
    pub body: Vec<LatexNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LatexNode {
    Text(String),
    Command(Command),
    Group(Vec<LatexNode>),
    Math(MathSegment),
    Environment(Environment),
    /// Comment text without the leading `%`; the line break stays outside.
    Comment(String),
    Whitespace(String),
}

impl LatexNode {
    pub fn text(s: impl Into<String>) -> Self {
        LatexNode::Text(s.into())
    }

    pub fn command(name: impl Into<String>) -> Self {
        LatexNode::Command(Command::new(name))
    }

    pub fn render_into(&self, out: &mut String) {
        match self {
            LatexNode::Text(s) | LatexNode::Whitespace(s) => out.push_str(s),
            LatexNode::Comment(s) => {
                out.push('%');
                out.push_str(s);
            }
            LatexNode::Command(c) => {
                out.push('\\');
                out.push_str(&c.name);
                out.push_str(&c.space);
                for a in &c.args {
                    a.render_into(out);
                }
            }
            LatexNode::Group(children) => {
                out.push('{');
                render_into(children, out);
                out.push('}');
            }
            LatexNode::Math(m) => {
                out.push_str(m.delimiter.open());
                render_into(&m.body, out);
                out.push_str(m.delimiter.close());
            }
            LatexNode::Environment(e) => {
                let _ = write!(out, "\\begin{{{}}}", e.name);
                for a in &e.args {
                    a.render_into(out);
                }
                render_into(&e.body, out);
                let _ = write!(out, "\\end{{{}}}", e.name);
            }
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_into(&mut s);
        s
    }

    /// Length in bytes of the rendered node.
    pub fn source_len(&self) -> usize {
        match self {
            LatexNode::Text(s) | LatexNode::Whitespace(s) => s.len(),
            LatexNode::Comment(s) => s.len() + 1,
            LatexNode::Command(c) => {
                1 + c.name.len()
                    + c.space.len()
                    + c.args
                        .iter()
                        .map(|a| a.prefix.len() + 2 * a.delim_len() + source_len(&a.body))
                        .sum::<usize>()
            }
            LatexNode::Group(ch) => 2 + source_len(ch),
            LatexNode::Math(m) => {
                m.delimiter.open().len() + m.delimiter.close().len() + source_len(&m.body)
            }
            LatexNode::Environment(e) => {
                14 + 2 * e.name.len()
                    + e.args
                        .iter()
                        .map(|a| a.prefix.len() + 2 * a.delim_len() + source_len(&a.body))
                        .sum::<usize>()
                    + source_len(&e.body)
            }
        }
    }

    pub fn is_whitespace(&self) -> bool {
        matches!(self, LatexNode::Whitespace(_))
    }

    /// First character this node renders, if any.
    pub fn first_char(&self) -> Option<char> {
        match self {
            LatexNode::Text(s) | LatexNode::Whitespace(s) => s.chars().next(),
            LatexNode::Comment(_) => Some('%'),
            LatexNode::Command(_) | LatexNode::Environment(_) => Some('\\'),
            LatexNode::Group(_) => Some('{'),
            LatexNode::Math(m) => m.delimiter.open().chars().next(),
        }
    }

    /// Whether the rendered node ends in a control word, so that a following
    /// letter would be swallowed into its name.
    pub fn ends_with_control_word(&self) -> bool {
        match self {
            LatexNode::Command(c) => match c.args.last() {
                None => c.is_control_word() && c.space.is_empty(),
                Some(a) if a.kind == ArgKind::Bare => {
                    a.body.last().is_some_and(|n| n.ends_with_control_word())
                }
                Some(_) => false,
            },
            _ => false,
        }
    }
}

/// Concatenated source text of `nodes`.
pub fn render(nodes: &[LatexNode]) -> String {
    let mut out = String::with_capacity(source_len(nodes));
    render_into(nodes, &mut out);
    out
}

pub fn render_into(nodes: &[LatexNode], out: &mut String) {
    for n in nodes {
        n.render_into(out);
    }
}

pub fn source_len(nodes: &[LatexNode]) -> usize {
    nodes.iter().map(LatexNode::source_len).sum()
}

/// Half-open byte range into the parsed source.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn slice<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }
}

/// A math segment located in the source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MathMatch<'a> {
    /// Span including the delimiters.
    pub span: Span,
    /// Span of the body alone.
    pub body_span: Span,
    pub segment: &'a MathSegment,
}

/// All math segments in document order. Math nested inside math (through
/// `\text{...}`) is not reported separately.
pub fn find_math(nodes: &[LatexNode]) -> Vec<MathMatch<'_>> {
    let mut out = Vec::new();
    collect_math(nodes, 0, &mut out);
    out
}

fn collect_math<'a>(nodes: &'a [LatexNode], mut offset: usize, out: &mut Vec<MathMatch<'a>>) {
    for node in nodes {
        let len = node.source_len();
        match node {
            LatexNode::Math(m) => {
                let open = m.delimiter.open().len();
                let close = m.delimiter.close().len();
                out.push(MathMatch {
                    span: Span::new(offset, offset + len),
                    body_span: Span::new(offset + open, offset + len - close),
                    segment: m,
                });
            }
            _ => for_each_child(node, offset, |children, at| collect_math(children, at, out)),
        }
        offset += len;
    }
}

/// Calls `f` with every child list of `node` and the byte offset at which it starts.
pub fn for_each_child<'a>(
    node: &'a LatexNode,
    offset: usize,
    mut f: impl FnMut(&'a [LatexNode], usize),
) {
    match node {
        LatexNode::Command(c) => {
            let mut at = offset + 1 + c.name.len() + c.space.len();
            for a in &c.args {
                at += a.prefix.len() + a.delim_len();
                f(&a.body, at);
                at += source_len(&a.body) + a.delim_len();
            }
        }
        LatexNode::Group(ch) => f(ch, offset + 1),
        LatexNode::Math(m) => f(&m.body, offset + m.delimiter.open().len()),
        LatexNode::Environment(e) => {
            let mut at = offset + 8 + e.name.len();
            for a in &e.args {
                at += a.prefix.len() + a.delim_len();
                f(&a.body, at);
                at += source_len(&a.body) + a.delim_len();
            }
            f(&e.body, at);
        }
        LatexNode::Text(_) | LatexNode::Comment(_) | LatexNode::Whitespace(_) => {}
    }
}

/// Splits `nodes` at commas that sit at the top level (not inside groups or
/// arguments). Text nodes are cut at the comma; the commas themselves are dropped.
pub fn split_top_level_commas(nodes: &[LatexNode]) -> Vec<Vec<LatexNode>> {
    let mut items = vec![Vec::new()];
    for node in nodes {
        match node {
            LatexNode::Text(s) if s.contains(',') => {
                let mut pieces = s.split(',');
                if let Some(first) = pieces.next() {
                    if !first.is_empty() {
                        items.last_mut().unwrap().push(LatexNode::text(first));
                    }
                }
                for piece in pieces {
                    items.push(Vec::new());
                    if !piece.is_empty() {
                        items.last_mut().unwrap().push(LatexNode::text(piece));
                    }
                }
            }
            other => items.last_mut().unwrap().push(other.clone()),
        }
    }
    items
}

/// Removes whitespace and comment nodes at the top level of `nodes`.
pub fn strip_trivia(nodes: &[LatexNode]) -> Vec<&LatexNode> {
    nodes
        .iter()
        .filter(|n| !matches!(n, LatexNode::Whitespace(_) | LatexNode::Comment(_)))
        .collect()
}
