//! Notation-matching baseline: every operator token maps to one fixed sTeX
//! macro, and a precedence parser builds the application tree.

use std::path::Path;

use serde::Deserialize;

use crate::latex::{self, ArgKind, LatexNode};
use crate::registry::Registry;

use super::{TranslateError, TranslationRequest, TranslationResponse, Translator};

const DEFAULT_LEXICON: &str = include_str!("../../data/translator/lexicon.json");

/// Precedence for lexicon operators whose notation does not declare one.
const DEFAULT_PRECEDENCE: i32 = 500;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    token: String,
    #[serde(rename = "macro")]
    macro_name: String,
    #[serde(default)]
    variant: Option<String>,
    #[serde(default)]
    precedence: Option<i32>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLexicon {
    entries: Vec<RawEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fixity {
    Constant,
    Prefix,
    Infix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexEntry {
    pub token: String,
    pub macro_name: String,
    pub variant: Option<String>,
    pub fixity: Fixity,
    pub flexary: bool,
    pub precedence: i32,
}

impl LexEntry {
    fn head(&self) -> String {
        match &self.variant {
            Some(v) => format!("\\{}[{v}]", self.macro_name),
            None => format!("\\{}", self.macro_name),
        }
    }
}

/// Presentation tokens with one default disambiguation each. Fixity and
/// flexarity come from the registry declaration, precedence from its
/// notation unless the entry overrides it.
#[derive(Clone, Debug)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
}

impl Lexicon {
    pub fn from_json(src: &str, reg: &Registry) -> Result<Self, TranslateError> {
        let raw: RawLexicon =
            serde_json::from_str(src).map_err(|e| TranslateError::Lexicon(e.to_string()))?;
        let mut entries = Vec::with_capacity(raw.entries.len());
        for e in raw.entries {
            let bad = |m: &str| TranslateError::Lexicon(format!("`{}`: {m}", e.token));
            let decl = reg.get(&e.macro_name).ok_or_else(|| bad("unknown macro"))?;
            let notation = decl
                .notation_for(e.variant.as_deref())
                .ok_or_else(|| bad("unknown variant"))?;
            let fixity = match (decl.arity, decl.is_flexary()) {
                (0, _) => Fixity::Constant,
                (1, true) | (2, false) => Fixity::Infix,
                (1, false) => Fixity::Prefix,
                _ => return Err(bad("macro arity does not fit an operator")),
            };
            if e.token.trim().is_empty() {
                return Err(bad("empty token"));
            }
            let entry = LexEntry {
                precedence: e
                    .precedence
                    .or(notation.precedence)
                    .unwrap_or(DEFAULT_PRECEDENCE),
                token: e.token.trim().to_string(),
                macro_name: e.macro_name,
                variant: e.variant,
                fixity,
                flexary: decl.is_flexary(),
            };
            if entries
                .iter()
                .any(|o: &LexEntry| o.token == entry.token && o.fixity == entry.fixity)
            {
                return Err(TranslateError::Lexicon(format!("`{}` listed twice", entry.token)));
            }
            entries.push(entry);
        }
        Ok(Lexicon { entries })
    }

    pub fn load(path: &Path, reg: &Registry) -> Result<Self, TranslateError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| TranslateError::Lexicon(format!("{}: {e}", path.display())))?;
        Lexicon::from_json(&src, reg)
    }

    /// The bundled lexicon; needs the sample registry's macros.
    pub fn bundled(reg: &Registry) -> Result<Self, TranslateError> {
        Lexicon::from_json(DEFAULT_LEXICON, reg)
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    fn find(&self, token: &str, fixity: Fixity) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.token == token && e.fixity == fixity)
    }

    fn has_token(&self, token: &str) -> bool {
        self.entries.iter().any(|e| e.token == token)
    }

    /// Longest lexicon token that is a prefix of `s`, only among plain-text tokens.
    fn text_match(&self, s: &str) -> Option<&str> {
        self.entries
            .iter()
            .map(|e| e.token.as_str())
            .filter(|t| !t.starts_with('\\') && s.starts_with(t))
            .max_by_key(|t| t.len())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    /// Text or a command the lexicon knows.
    Lex(String),
    Open,
    Close,
    /// Punctuation the lexicon does not know; splits operands.
    Sep(String),
    /// Anything else, already rendered (and translated inside).
    Atom(String),
    Space(String),
}

fn is_atom_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '\'' | '.' | '^' | '_' | '!')
}

#[derive(Clone, Debug)]
enum Tree {
    Leaf(String),
    Paren(Box<Tree>),
    Op {
        entry: usize,
        args: Vec<Tree>,
        /// Still accepting further flexary arguments.
        open: bool,
    },
}

pub struct RulesTranslator {
    reg: Registry,
    lexicon: Lexicon,
}

impl RulesTranslator {
    pub fn new(reg: Registry, lexicon: Lexicon) -> Self {
        RulesTranslator { reg, lexicon }
    }

    /// Best-effort translation of a math body. Input that does not parse is
    /// returned unchanged.
    pub fn translate_math(&self, expr: &str) -> String {
        match latex::parse_math(expr, &self.reg) {
            Ok(nodes) => self.nodes(&nodes),
            Err(_) => expr.to_string(),
        }
    }

    fn nodes(&self, nodes: &[LatexNode]) -> String {
        let toks = self.tokens(nodes);
        let mut out = String::new();
        let mut seg: Vec<Tok> = Vec::new();
        let mut depth = 0usize;
        for t in toks {
            match &t {
                Tok::Open => depth += 1,
                Tok::Close if depth > 0 => depth -= 1,
                Tok::Close => {
                    self.flush(&mut seg, &mut out);
                    push_piece(&mut out, ")");
                    continue;
                }
                Tok::Sep(s) if depth == 0 => {
                    self.flush(&mut seg, &mut out);
                    push_piece(&mut out, s);
                    continue;
                }
                _ => {}
            }
            seg.push(t);
        }
        self.flush(&mut seg, &mut out);
        out
    }

    fn flush(&self, seg: &mut Vec<Tok>, out: &mut String) {
        if seg.is_empty() {
            return;
        }
        let lead: String = leading_space(seg);
        let trail: String = trailing_space(seg);
        let core: Vec<Tok> = seg
            .iter()
            .filter(|t| !matches!(t, Tok::Space(_)))
            .cloned()
            .collect();
        push_piece(out, &lead);
        let mut p = Parser {
            lex: &self.lexicon,
            toks: &core,
            pos: 0,
            rules: self,
        };
        match p.expr(i32::MIN).filter(|_| p.pos == core.len()) {
            Some(tree) => push_piece(out, &self.render(&tree, true)),
            None => push_piece(out, &raw(seg)),
        }
        push_piece(out, &trail);
        seg.clear();
    }

    fn render(&self, t: &Tree, top: bool) -> String {
        match t {
            Tree::Leaf(s) => s.clone(),
            Tree::Paren(inner) if matches!(**inner, Tree::Op { .. }) && !top => self.render(inner, false),
            Tree::Paren(inner) => format!("({})", self.render(inner, false)),
            Tree::Op { entry, args, .. } => {
                let e = &self.lexicon.entries[*entry];
                let rendered: Vec<String> = args.iter().map(|a| self.render(a, false)).collect();
                if e.flexary {
                    format!("{}{{{}}}", e.head(), rendered.join(","))
                } else {
                    let mut s = e.head();
                    for a in rendered {
                        s.push('{');
                        s.push_str(&a);
                        s.push('}');
                    }
                    s
                }
            }
        }
    }

    fn tokens(&self, nodes: &[LatexNode]) -> Vec<Tok> {
        let mut out = Vec::new();
        for node in nodes {
            match node {
                LatexNode::Whitespace(w) => out.push(Tok::Space(w.clone())),
                LatexNode::Comment(_) => {}
                LatexNode::Text(s) => self.text_tokens(s, &mut out),
                LatexNode::Group(body) => out.push(Tok::Atom(format!("{{{}}}", self.nodes(body)))),
                LatexNode::Command(c) => {
                    let whole = node.render();
                    let bare = whole.trim_end();
                    if self.lexicon.has_token(bare) {
                        out.push(Tok::Lex(bare.to_string()));
                        if bare.len() < whole.len() {
                            out.push(Tok::Space(whole[bare.len()..].to_string()));
                        }
                        continue;
                    }
                    let mut s = format!("\\{}", c.name);
                    for a in &c.args {
                        s.push_str(&a.prefix);
                        match a.kind {
                            ArgKind::Optional => {
                                s.push('[');
                                s.push_str(&latex::render(&a.body));
                                s.push(']');
                            }
                            ArgKind::Braced => {
                                s.push('{');
                                s.push_str(&self.nodes(&a.body));
                                s.push('}');
                            }
                            ArgKind::Bare => s.push_str(&latex::render(&a.body)),
                        }
                    }
                    s.push_str(&c.space);
                    out.push(Tok::Atom(s));
                }
                other => out.push(Tok::Atom(other.render())),
            }
        }
        out
    }

    fn text_tokens(&self, s: &str, out: &mut Vec<Tok>) {
        let mut rest = s;
        while let Some(c) = rest.chars().next() {
            if let Some(t) = self.lexicon.text_match(rest) {
                out.push(Tok::Lex(t.to_string()));
                rest = &rest[t.len()..];
            } else if c == '(' {
                out.push(Tok::Open);
                rest = &rest[1..];
            } else if c == ')' {
                out.push(Tok::Close);
                rest = &rest[1..];
            } else if c.is_whitespace() {
                let n = rest.find(|x: char| !x.is_whitespace()).unwrap_or(rest.len());
                out.push(Tok::Space(rest[..n].to_string()));
                rest = &rest[n..];
            } else if is_atom_char(c) {
                let n = rest
                    .char_indices()
                    .find(|&(i, x)| !is_atom_char(x) || (i > 0 && self.lexicon.text_match(&rest[i..]).is_some()))
                    .map_or(rest.len(), |(i, _)| i);
                out.push(Tok::Atom(rest[..n].to_string()));
                rest = &rest[n..];
            } else {
                out.push(Tok::Sep(c.to_string()));
                rest = &rest[c.len_utf8()..];
            }
        }
    }
}

fn leading_space(seg: &[Tok]) -> String {
    seg.iter()
        .map_while(|t| match t {
            Tok::Space(s) => Some(s.as_str()),
            _ => None,
        })
        .collect()
}

fn trailing_space(seg: &[Tok]) -> String {
    if seg.iter().all(|t| matches!(t, Tok::Space(_))) {
        return String::new();
    }
    let mut parts: Vec<&str> = seg
        .iter()
        .rev()
        .map_while(|t| match t {
            Tok::Space(s) => Some(s.as_str()),
            _ => None,
        })
        .collect();
    parts.reverse();
    parts.concat()
}

fn raw(seg: &[Tok]) -> String {
    let mut out = String::new();
    for t in seg {
        let s = match t {
            Tok::Lex(s) | Tok::Sep(s) | Tok::Atom(s) | Tok::Space(s) => s.as_str(),
            Tok::Open => "(",
            Tok::Close => ")",
        };
        push_piece(&mut out, s);
    }
    out
}

/// Appends `piece`, separating a trailing control word from a following letter.
fn push_piece(out: &mut String, piece: &str) {
    let ends_cw = {
        let tail = out.trim_end_matches(|c: char| c.is_ascii_alphabetic());
        tail.ends_with('\\') && tail.len() < out.len() && !tail.ends_with("\\\\")
    };
    if ends_cw && piece.starts_with(|c: char| c.is_ascii_alphabetic()) {
        out.push(' ');
    }
    out.push_str(piece);
}

struct Parser<'a> {
    lex: &'a Lexicon,
    toks: &'a [Tok],
    pos: usize,
    rules: &'a RulesTranslator,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn expr(&mut self, min: i32) -> Option<Tree> {
        let mut lhs = match self.peek()? {
            Tok::Lex(t) if self.lex.find(t, Fixity::Prefix).is_some() => {
                let entry = self.lex.find(t, Fixity::Prefix).unwrap();
                self.pos += 1;
                let arg = self.expr(self.lex.entries[entry].precedence)?;
                Tree::Op {
                    entry,
                    args: vec![arg],
                    open: false,
                }
            }
            _ => self.primary()?,
        };
        while let Some(Tok::Lex(t)) = self.peek() {
            let Some(entry) = self.lex.find(t, Fixity::Infix) else {
                break;
            };
            let e = &self.lex.entries[entry];
            if e.precedence <= min {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(e.precedence)?;
            lhs = match lhs {
                Tree::Op {
                    entry: prev,
                    mut args,
                    open: true,
                } if prev == entry => {
                    args.push(rhs);
                    Tree::Op {
                        entry,
                        args,
                        open: true,
                    }
                }
                other => Tree::Op {
                    entry,
                    args: vec![other, rhs],
                    open: e.flexary,
                },
            };
        }
        Some(lhs)
    }

    /// Juxtaposed atoms and parenthesized groups.
    fn primary(&mut self) -> Option<Tree> {
        let mut parts: Vec<Tree> = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Atom(_)) => {
                    let Some(Tok::Atom(a)) = self.peek().cloned() else { unreachable!() };
                    self.pos += 1;
                    parts.push(Tree::Leaf(a));
                }
                Some(Tok::Lex(t)) if self.lex.find(t, Fixity::Constant).is_some() => {
                    let e = &self.lex.entries[self.lex.find(t, Fixity::Constant).unwrap()];
                    self.pos += 1;
                    parts.push(Tree::Leaf(e.head()));
                }
                Some(Tok::Open) => {
                    let close = self.matching_close()?;
                    let inner = &self.toks[self.pos + 1..close];
                    let mut sub = Parser {
                        lex: self.lex,
                        toks: inner,
                        pos: 0,
                        rules: self.rules,
                    };
                    let tree = match sub.expr(i32::MIN).filter(|_| sub.pos == inner.len()) {
                        Some(t) => Tree::Paren(Box::new(t)),
                        None => Tree::Leaf(format!("({})", self.rules.nodes_raw(inner))),
                    };
                    self.pos = close + 1;
                    parts.push(tree);
                }
                _ => break,
            }
        }
        match parts.len() {
            0 => None,
            1 => parts.pop(),
            _ => {
                let mut s = String::new();
                for p in &parts {
                    push_piece(&mut s, &self.rules.render(p, true));
                }
                Some(Tree::Leaf(s))
            }
        }
    }

    fn matching_close(&self) -> Option<usize> {
        let mut depth = 0;
        for (i, t) in self.toks.iter().enumerate().skip(self.pos) {
            match t {
                Tok::Open => depth += 1,
                Tok::Close => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(i);
                    }
                }
                _ => {}
            }
        }
        None
    }
}

impl RulesTranslator {
    /// Parenthesized content that is not a single expression, e.g. `(a,b)`.
    fn nodes_raw(&self, toks: &[Tok]) -> String {
        let mut out = String::new();
        let mut seg = Vec::new();
        let mut depth = 0usize;
        for t in toks {
            match t {
                Tok::Open => depth += 1,
                Tok::Close => depth = depth.saturating_sub(1),
                Tok::Sep(s) if depth == 0 => {
                    self.flush_slice(&seg, &mut out);
                    seg.clear();
                    push_piece(&mut out, s);
                    continue;
                }
                _ => {}
            }
            seg.push(t.clone());
        }
        self.flush_slice(&seg, &mut out);
        out
    }

    fn flush_slice(&self, seg: &[Tok], out: &mut String) {
        let mut v = seg.to_vec();
        self.flush(&mut v, out);
    }
}

impl Translator for RulesTranslator {
    fn translate(&self, req: &TranslationRequest) -> Result<TranslationResponse, TranslateError> {
        Ok(TranslationResponse {
            expression_stex: self.translate_math(&req.expression_latex),
            terminated: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latex::Builtins;

    fn parses(s: &str) -> bool {
        latex::parse_math(s, &Builtins).is_ok()
    }

    fn rules() -> RulesTranslator {
        let reg = Registry::sample();
        let lex = Lexicon::bundled(&reg).unwrap();
        RulesTranslator::new(reg, lex)
    }

    #[test]
    fn operators() {
        let r = rules();
        let cases = [
            (r"a\cdot b", r"\nattimes[cdot]{a,b}"),
            ("a+b", r"\natplus{a,b}"),
            ("a+b+c", r"\natplus{a,b,c}"),
            ("(a+b)+c", r"\natplus{\natplus{a,b},c}"),
            (r"a+b\cdot c", r"\natplus{a,\nattimes[cdot]{b,c}}"),
            ("a-b-c", r"\intminus{\intminus{a}{b}}{c}"),
            ("-a", r"\intuminus{a}"),
            ("", ""),
            ("n", "n"),
            (r"x\in\mathbb{N}", r"\inset{x}{\NaturalNumbers}"),
            ("f(x)+1", r"\natplus{f(x),1}"),
            ("a, b+c", r"a, \natplus{b,c}"),
        ];
        for (input, want) in cases {
            assert_eq!(r.translate_math(input), want, "{input}");
        }
    }

    #[test]
    fn arithmetic_chain_label() {
        assert_eq!(
            rules().translate_math(r"1+2+3+4+5=(5\cdot6)/2=15"),
            r"\eq{\natplus{1,2,3,4,5},\natdiv[slash]{\nattimes[cdot]{5,6}}{2},15}"
        );
    }

    #[test]
    fn unmatched_passes_through() {
        let r = rules();
        assert_eq!(r.translate_math(r"\{0,1,2,3,\ldots\}"), r"\{0,1,2,3,\ldots\}");
        assert_eq!(r.translate_math("a+"), "a+");
        assert_eq!(r.translate_math("(a"), "(a");
        assert_eq!(r.translate_math("a)"), "a)");
        assert_eq!(r.translate_math(r"\frac{a+b}{2}"), r"\frac{\natplus{a,b}}{2}");
        assert_eq!(r.translate_math(r"\alpha x+y"), r"\natplus{\alpha x,y}");
        assert_eq!(r.translate_math("{"), "{");
    }

    #[test]
    fn constants_keep_control_word_boundary() {
        assert_eq!(rules().translate_math(r"\mathbb{N}x"), r"\NaturalNumbers x");
    }

    #[test]
    fn output_parses() {
        let r = rules();
        for s in [r"(A \subseteq B)\Leftrightarrow(\forall x\in A. x\in B)", r"\mathcal{P}(A):=\{x|x\subseteq A\}", "((a)", "-(-(x))"] {
            let out = r.translate_math(s);
            assert!(parses(&out), "{s} -> {out}");
        }
    }

    #[test]
    fn lexicon_errors() {
        let reg = Registry::sample();
        assert!(Lexicon::from_json(r#"{"entries":[{"token":"+","macro":"nope"}]}"#, &reg).is_err());
        assert!(Lexicon::from_json(r#"{"entries":[{"token":"+","macro":"natplus","variant":"q"}]}"#, &reg).is_err());
        assert!(Lexicon::from_json(r#"{"entries":[{"token":"|","macro":"bsetst"}]}"#, &reg).is_err());
        assert!(Lexicon::from_json(
            r#"{"entries":[{"token":"+","macro":"natplus"},{"token":"+","macro":"realplus"}]}"#,
            &reg
        )
        .is_err());
    }
}
