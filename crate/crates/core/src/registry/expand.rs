use crate::latex::shapes::stex_markup_arity;
use crate::latex::{self, Arg, ArgKind, Builtins, CommandTable, EnvKind, LatexNode, Mode};

use super::{parse_keys, Registry, SymbolDecl};

const MAX_DEPTH: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExpandError {
    #[error("unknown macro `\\{0}`")]
    UnknownMacro(String),
    #[error("`\\{name}` takes {expected} argument(s), found {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("`\\{name}` has no variant `{variant}`")]
    UnknownVariant { name: String, variant: String },
    #[error("expansion of `\\{0}` does not terminate")]
    TooDeep(String),
}

/// Replaces every registry macro in a text-mode node list by its notation.
pub fn expand(nodes: &[LatexNode], reg: &Registry) -> Result<Vec<LatexNode>, ExpandError> {
    Expander { reg, depth: 0 }.list(nodes, Mode::Text)
}

/// Like [`expand`] for the body of a math segment.
pub fn expand_math(nodes: &[LatexNode], reg: &Registry) -> Result<Vec<LatexNode>, ExpandError> {
    Expander { reg, depth: 0 }.list(nodes, Mode::Math)
}

/// An argument after expansion, with the precedence of the macro it came from.
#[derive(Clone, Debug)]
struct Item {
    nodes: Vec<LatexNode>,
    prec: Option<i32>,
}

#[derive(Clone, Debug)]
enum ArgVal {
    Single(Item),
    List(Vec<Item>),
}

impl ArgVal {
    fn items(&self) -> Vec<Item> {
        match self {
            ArgVal::Single(i) => vec![i.clone()],
            ArgVal::List(l) => l.clone(),
        }
    }

    fn raw(&self) -> Vec<LatexNode> {
        match self {
            ArgVal::Single(i) => i.nodes.clone(),
            ArgVal::List(l) => {
                let mut out = Vec::new();
                for (k, i) in l.iter().enumerate() {
                    if k > 0 {
                        out.push(LatexNode::text(","));
                    }
                    out.extend(i.nodes.iter().cloned());
                }
                out
            }
        }
    }
}

struct Expander<'r> {
    reg: &'r Registry,
    depth: usize,
}

fn arg_mode(name: &str, mode: Mode) -> Mode {
    Builtins
        .command_shape(name)
        .and_then(|s| s.arg_mode)
        .unwrap_or(mode)
}

impl Expander<'_> {
    fn list(&mut self, nodes: &[LatexNode], mode: Mode) -> Result<Vec<LatexNode>, ExpandError> {
        let mut out: Vec<LatexNode> = Vec::with_capacity(nodes.len());
        for node in nodes {
            match node {
                LatexNode::Command(c) => {
                    if let Some(decl) = self.reg.get(&c.name) {
                        let expanded = self.apply(decl, c, mode)?;
                        push_all(&mut out, expanded);
                        continue;
                    }
                    if let Some(n) = stex_markup_arity(&c.name) {
                        let words = self.markup(c, n)?;
                        push_all(&mut out, words);
                        continue;
                    }
                    if mode == Mode::Math
                        && c.is_control_word()
                        && Builtins.command_shape(&c.name).is_none()
                    {
                        return Err(ExpandError::UnknownMacro(c.name.clone()));
                    }
                    let am = arg_mode(&c.name, mode);
                    let mut c = c.clone();
                    for a in &mut c.args {
                        a.body = self.list(&a.body, am)?;
                    }
                    push(&mut out, LatexNode::Command(c));
                }
                LatexNode::Group(ch) => {
                    let ch = self.list(ch, mode)?;
                    push(&mut out, LatexNode::Group(ch));
                }
                LatexNode::Math(m) => {
                    let mut m = m.clone();
                    m.body = self.list(&m.body, Mode::Math)?;
                    push(&mut out, LatexNode::Math(m));
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
                            a.body = self.list(&a.body, mode)?;
                        }
                        e.body = self.list(&e.body, body_mode)?;
                    }
                    push(&mut out, LatexNode::Environment(e));
                }
                other => push(&mut out, other.clone()),
            }
        }
        Ok(out)
    }

    fn apply(
        &mut self,
        decl: &SymbolDecl,
        c: &latex::Command,
        mode: Mode,
    ) -> Result<Vec<LatexNode>, ExpandError> {
        if self.depth >= MAX_DEPTH {
            return Err(ExpandError::TooDeep(decl.macro_name.clone()));
        }
        let variant = c
            .optional_args()
            .next()
            .map(|b| latex::render(b).trim().to_string());
        let notation =
            decl.notation_for(variant.as_deref())
                .ok_or_else(|| ExpandError::UnknownVariant {
                    name: decl.macro_name.clone(),
                    variant: variant.clone().unwrap_or_default(),
                })?;
        let found = c.required_count();
        if found != decl.arity {
            return Err(ExpandError::ArityMismatch {
                name: decl.macro_name.clone(),
                expected: decl.arity,
                found,
            });
        }
        let mut args = Vec::with_capacity(decl.arity);
        for (i, body) in c.braced_args().enumerate() {
            if decl.assoc_arg == Some(i + 1) {
                let items = latex::split_top_level_commas(body)
                    .into_iter()
                    .map(|item| self.item(trim(&item), mode))
                    .collect::<Result<_, _>>()?;
                args.push(ArgVal::List(items));
            } else {
                args.push(ArgVal::Single(self.item(trim(body), mode)?));
            }
        }
        let instantiated = instantiate(&notation.nodes, &args);
        self.depth += 1;
        let result = self.list(&instantiated, mode);
        self.depth -= 1;
        result
    }

    fn item(&mut self, nodes: &[LatexNode], mode: Mode) -> Result<Item, ExpandError> {
        let prec = self.precedence_of(nodes);
        Ok(Item {
            nodes: self.list(nodes, mode)?,
            prec,
        })
    }

    /// Precedence of an unexpanded argument: that of its head macro, if it is
    /// a single registry macro application.
    fn precedence_of(&self, nodes: &[LatexNode]) -> Option<i32> {
        let [LatexNode::Command(c)] = latex::strip_trivia(nodes)[..] else {
            return None;
        };
        let decl = self.reg.get(&c.name)?;
        let variant = c
            .optional_args()
            .next()
            .map(|b| latex::render(b).trim().to_string());
        decl.notation_for(variant.as_deref())
            .and_then(|n| n.precedence)
    }

    /// `\Defi{multiplication}` becomes `Multiplication`, `\trefiis[x]{natural}{number}`
    /// becomes `natural numbers`.
    fn markup(&mut self, c: &latex::Command, arity: usize) -> Result<Vec<LatexNode>, ExpandError> {
        let mut words: Vec<Vec<LatexNode>> = Vec::with_capacity(arity);
        for body in c.braced_args() {
            words.push(self.list(body, Mode::Text)?);
        }
        if c.name.ends_with('s') {
            if let Some(LatexNode::Text(t)) = words.last_mut().and_then(|w| w.last_mut()) {
                *t = pluralize(t);
            }
        }
        if c.name.starts_with(|ch: char| ch.is_ascii_uppercase()) {
            if let Some(LatexNode::Text(t)) = words.first_mut().and_then(|w| w.first_mut()) {
                let mut chars = t.chars();
                if let Some(f) = chars.next() {
                    *t = f.to_uppercase().chain(chars).collect();
                }
            }
        }
        let mut out = Vec::new();
        for (i, w) in words.into_iter().enumerate() {
            if i > 0 {
                out.push(LatexNode::Whitespace(" ".into()));
            }
            out.extend(w);
        }
        Ok(out)
    }
}

fn pluralize(word: &str) -> String {
    if word.ends_with('s') || word.ends_with('x') || word.ends_with("ch") || word.ends_with("sh") {
        format!("{word}es")
    } else if let Some(stem) = word
        .strip_suffix('y')
        .filter(|s| !s.ends_with(['a', 'e', 'i', 'o', 'u']))
    {
        format!("{stem}ies")
    } else {
        format!("{word}s")
    }
}

fn trim(nodes: &[LatexNode]) -> &[LatexNode] {
    let skip = |n: &LatexNode| matches!(n, LatexNode::Whitespace(_) | LatexNode::Comment(_));
    let start = nodes.iter().position(|n| !skip(n)).unwrap_or(nodes.len());
    let end = nodes
        .iter()
        .rposition(|n| !skip(n))
        .map_or(start, |i| i + 1);
    &nodes[start..end]
}

/// Appends `node`, separating it from a preceding control word when it starts
/// with a letter (`\times` followed by `b` must not become `\timesb`).
fn push(out: &mut Vec<LatexNode>, node: LatexNode) {
    if out.last().is_some_and(|l| l.ends_with_control_word())
        && node.first_char().is_some_and(|c| c.is_ascii_alphabetic())
    {
        out.push(LatexNode::Whitespace(" ".into()));
    }
    out.push(node);
}

fn push_all(out: &mut Vec<LatexNode>, nodes: Vec<LatexNode>) {
    for n in nodes {
        push(out, n);
    }
}

fn placeholder(nodes: &[LatexNode]) -> Option<usize> {
    match trim(nodes) {
        [LatexNode::Text(t)] => {
            let d = t.strip_prefix('#')?;
            (d.len() == 1).then(|| d.parse().ok()).flatten()
        }
        _ => None,
    }
}

fn bracketed(item: Item, p: Option<i32>, out: &mut Vec<LatexNode>) {
    let wrap = matches!((item.prec, p), (Some(q), Some(p)) if q < p);
    if wrap {
        out.push(LatexNode::text("("));
    }
    push_all(out, item.nodes);
    if wrap {
        out.push(LatexNode::text(")"));
    }
}

/// Substitutes arguments into a notation, resolving `\assoc`, `\infix`,
/// `\prefix` and `\postfix` with precedence-driven bracketing.
fn instantiate(template: &[LatexNode], args: &[ArgVal]) -> Vec<LatexNode> {
    let mut out = Vec::new();
    for node in template {
        match node {
            LatexNode::Text(t) => substitute_text(t, args, &mut out),
            LatexNode::Command(c)
                if matches!(c.name.as_str(), "assoc" | "infix" | "prefix" | "postfix") =>
            {
                let p = c
                    .optional_args()
                    .next()
                    .and_then(|b| parse_keys(&latex::render(b)).ok())
                    .and_then(|keys| keys.into_iter().find(|(k, _)| k == "p"))
                    .and_then(|(_, v)| v.parse().ok());
                let req: Vec<&Vec<LatexNode>> = c.braced_args().collect();
                let op = instantiate(req.first().map_or(&[][..], |v| &v[..]), args);
                let operand = |k: usize| -> Vec<Item> {
                    let body = req.get(k).map_or(&[][..], |v| &v[..]);
                    match placeholder(body).and_then(|i| args.get(i - 1)) {
                        Some(a) => a.items(),
                        None => latex::split_top_level_commas(&instantiate(body, args))
                            .into_iter()
                            .map(|nodes| Item { nodes, prec: None })
                            .collect(),
                    }
                };
                let single = |k: usize| -> Item {
                    let body = req.get(k).map_or(&[][..], |v| &v[..]);
                    match placeholder(body).and_then(|i| args.get(i - 1)) {
                        Some(ArgVal::Single(i)) => i.clone(),
                        Some(list) => Item {
                            nodes: list.raw(),
                            prec: None,
                        },
                        None => Item {
                            nodes: instantiate(body, args),
                            prec: None,
                        },
                    }
                };
                match c.name.as_str() {
                    "assoc" => {
                        for (i, item) in operand(1).into_iter().enumerate() {
                            if i > 0 {
                                push_all(&mut out, op.clone());
                            }
                            bracketed(item, p, &mut out);
                        }
                    }
                    "infix" => {
                        bracketed(single(1), p, &mut out);
                        push_all(&mut out, op);
                        bracketed(single(2), p, &mut out);
                    }
                    "prefix" => {
                        push_all(&mut out, op);
                        bracketed(single(1), p, &mut out);
                    }
                    _ => {
                        bracketed(single(1), p, &mut out);
                        push_all(&mut out, op);
                    }
                }
            }
            LatexNode::Command(c) => {
                let mut c = c.clone();
                for a in &mut c.args {
                    let body = instantiate(&a.body, args);
                    *a = Arg {
                        prefix: a.prefix.clone(),
                        kind: brace_if_many(a.kind, &body),
                        body,
                    };
                }
                push(&mut out, LatexNode::Command(c));
            }
            LatexNode::Group(ch) => push(&mut out, LatexNode::Group(instantiate(ch, args))),
            LatexNode::Math(m) => {
                let mut m = m.clone();
                m.body = instantiate(&m.body, args);
                push(&mut out, LatexNode::Math(m));
            }
            other => push(&mut out, other.clone()),
        }
    }
    out
}

/// A bare argument that received a multi-node substitution must be braced.
fn brace_if_many(kind: ArgKind, body: &[LatexNode]) -> ArgKind {
    match kind {
        ArgKind::Bare if body.len() != 1 => ArgKind::Braced,
        k => k,
    }
}

fn substitute_text(t: &str, args: &[ArgVal], out: &mut Vec<LatexNode>) {
    let mut rest = t;
    while let Some(i) = rest.find('#') {
        let d = rest[i + 1..].chars().next().and_then(|c| c.to_digit(10));
        let Some(arg) = d.and_then(|d| args.get((d as usize).wrapping_sub(1))) else {
            push(out, LatexNode::text(&rest[..=i]));
            rest = &rest[i + 1..];
            continue;
        };
        if i > 0 {
            push(out, LatexNode::text(&rest[..i]));
        }
        push_all(out, arg.raw());
        rest = &rest[i + 2..];
    }
    if !rest.is_empty() {
        push(out, LatexNode::text(rest));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::{normalize_math, NormalizationConfig};

    fn ex(src: &str) -> String {
        let reg = Registry::sample();
        let nodes = latex::parse_math(src, &reg).unwrap();
        let out = expand_math(&nodes, &reg).unwrap();
        latex::render(&normalize_math(&out, &NormalizationConfig::default()))
    }

    fn err(src: &str) -> ExpandError {
        let reg = Registry::sample();
        expand_math(&latex::parse_math(src, &reg).unwrap(), &reg).unwrap_err()
    }

    #[test]
    fn multiplication_variants() {
        assert_eq!(ex(r"\nattimes[cdot]{a,b}"), r"a\cdot b");
        assert_eq!(ex(r"\nattimes{a,b}"), r"a\*b");
        assert_eq!(ex(r"\nattimes[x]{a,b}"), r"a\times b");
    }

    #[test]
    fn three_flexary_items_follow_the_assoc_template() {
        // \assoc[p=600]{\*}{a,b,c} interleaves the operator between the items.
        let items = ["a", "b", "c"];
        let oracle = items.join(r"\*");
        assert_eq!(ex(r"\nattimes{a,b,c}"), oracle);
    }

    #[test]
    fn bracketing_by_precedence() {
        assert_eq!(ex(r"\nattimes[cdot]{a,\natplus{b,c}}"), r"a\cdot(b+c)");
        assert_eq!(ex(r"\natplus{a,\nattimes[cdot]{b,c}}"), r"a+b\cdot c");
        assert_eq!(
            ex(r"\natdiv[slash]{\nattimes[cdot]{5,6}}{2}"),
            r"(5\cdot6)/2"
        );
        assert_eq!(ex(r"\natdiv{\natplus{1,2}}{2}"), r"\frac{1+2}{2}");
        assert_eq!(
            ex(r"\realuminus{\realuminus{\natsucc{\natsucc n}}}"),
            r"--S(S(n))"
        );
        assert_eq!(
            ex(r"\realuminus{\inttimes[x]{\mathcal F,y',y'}}"),
            r"-(\mathcal{F}\times y'\times y')"
        );
    }

    #[test]
    fn evaluation_example_labels() {
        assert_eq!(
            ex(r"\eq{\NaturalNumbers,\setdots{0,1,2,3}}"),
            r"\mathbb{N}=\{0,1,2,3,\ldots\}"
        );
        assert_eq!(
            ex(r"\biimpl{\sseteq{A}{B}}{\foral{\inset{x}{A}}{\inset{x}{B}}}"),
            r"(A\subseteq B)\Leftrightarrow(\forall x\in A.x\in B)"
        );
        assert_eq!(
            ex(r"\defeq{\powerset{A}}{\setst{x}{\sseteq{x}{A}}}"),
            r"\mathcal{P}(A):=\{x|x\subseteq A\}"
        );
        assert_eq!(
            ex(r"\eq{\natplus{1,2,3,4,5},\natdiv[slash]{\nattimes[cdot]{5,6}}{2},15}"),
            r"1+2+3+4+5=(5\cdot6)/2=15"
        );
    }

    #[test]
    fn arguments_appear_in_order() {
        let reg = Registry::sample();
        for d in reg.iter() {
            let vars: Vec<String> = (0..d.arity.max(1))
                .map(|i| format!("v{}", (b'a' + i as u8) as char))
                .collect();
            let src = match d.arity {
                0 => format!(r"\{}", d.macro_name),
                _ if d.is_flexary() => format!(r"\{}{{{}}}", d.macro_name, vars.join(",")),
                _ => format!(
                    r"\{}{}",
                    d.macro_name,
                    vars.iter().map(|v| format!("{{{v}}}")).collect::<String>()
                ),
            };
            let out = ex(&src);
            let positions: Vec<usize> = if d.arity == 0 {
                vec![]
            } else {
                vars.iter()
                    .map(|v| {
                        out.find(v.as_str())
                            .unwrap_or_else(|| panic!("{src} -> {out}"))
                    })
                    .collect()
            };
            assert!(positions.windows(2).all(|w| w[0] < w[1]), "{src} -> {out}");
        }
    }

    #[test]
    fn output_has_no_registry_macros_and_is_stable() {
        let reg = Registry::sample();
        let src = r"\eq{\nattimes[cdot]{x,\natsucc{y}},\natplus{x,\nattimes[cdot]{x,y}}}";
        let once = expand_math(&latex::parse_math(src, &reg).unwrap(), &reg).unwrap();
        let twice = expand_math(&once, &reg).unwrap();
        assert_eq!(once, twice);
        assert_eq!(ex(src), r"x\cdot S(y)=x+x\cdot y");
    }

    #[test]
    fn text_markup() {
        let reg = Registry::sample();
        let src =
            r"\Defi{multiplication} and \trefiis[naturalnumbers]{natural}{number} of \defis{body}";
        let out = expand(&latex::parse_with(src, &reg).unwrap(), &reg).unwrap();
        assert_eq!(
            latex::render(&out),
            "Multiplication and natural numbers of bodies"
        );
    }

    #[test]
    fn errors() {
        assert_eq!(
            err(r"\nattimes[star]{a,b}"),
            ExpandError::UnknownVariant {
                name: "nattimes".into(),
                variant: "star".into()
            }
        );
        assert_eq!(
            err(r"\foralS{x}{A}{P}"),
            ExpandError::UnknownMacro("foralS".into())
        );
        let reg = Registry::sample();
        let mut nodes = latex::parse_math(r"\natsucc{a}", &reg).unwrap();
        if let LatexNode::Command(c) = &mut nodes[0] {
            c.args.push(Arg::braced(vec![LatexNode::text("b")]));
        }
        assert_eq!(
            expand_math(&nodes, &reg).unwrap_err(),
            ExpandError::ArityMismatch {
                name: "natsucc".into(),
                expected: 1,
                found: 2
            }
        );
    }

    #[test]
    fn self_reference_is_cut_off() {
        let reg = Registry::from_sources([("t", r"\symdef{loop}{\loop}")]).unwrap();
        let nodes = latex::parse_math(r"\loop", &reg).unwrap();
        assert_eq!(
            expand_math(&nodes, &reg).unwrap_err(),
            ExpandError::TooDeep("loop".into())
        );
    }
}
