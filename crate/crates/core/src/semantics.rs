//! From sTeX math to OMDoc-style terms, along alignments into the typed
//! library, type inference, and OMDoc XML.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::latex::{self, LatexNode};
use crate::normalize::{normalize_math, NormalizationConfig};
use crate::registry::check::{GREEK, VARIABLE_FONTS};
use crate::registry::Registry;
use crate::term::{Lattice, SymbolSet, Term, TypeExpr, TypedSymbol, TYPED_MODULE};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SemanticError {
    #[error("`\\{0}` is not a registry macro")]
    UnknownCommand(String),
    #[error("`\\{name}` has no variant `{variant}`")]
    UnknownVariant { name: String, variant: String },
    #[error("`\\{name}` takes {expected} argument(s), found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("`{0}` is not a single application, variable or number")]
    MalformedApplication(String),
    #[error("symbol `{0}` has no typed counterpart")]
    UnalignedSymbol(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("at {path:?}: `{head}` is not a function")]
    NotAFunction { path: Vec<usize>, head: String },
    #[error("at {path:?}: `{head}` takes {expected} argument(s), found {found}")]
    Arity {
        path: Vec<usize>,
        head: String,
        expected: usize,
        found: usize,
    },
    #[error("at {path:?}: expected {expected}, found {found}")]
    Mismatch {
        path: Vec<usize>,
        expected: TypeExpr,
        found: TypeExpr,
    },
}

/// Result of type inference. A lone variable succeeds without telling
/// anything, which `trivial` records.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Inferred {
    pub ty: Option<TypeExpr>,
    pub trivial: bool,
    /// Types assigned to the free variables.
    pub vars: BTreeMap<String, TypeExpr>,
}

/// Everything the semantic layer needs: the registry for sTeX macros, the
/// typed symbols with their alignments, and the subtype lattice.
pub struct Semantics<'a> {
    pub reg: &'a Registry,
    pub symbols: &'a SymbolSet,
    pub lattice: &'a Lattice,
    pub norm: &'a NormalizationConfig,
    /// Read a bare `=` as equality, the way LaTeXML guesses.
    pub recover_equality: bool,
}

impl<'a> Semantics<'a> {
    pub fn new(
        reg: &'a Registry,
        symbols: &'a SymbolSet,
        lattice: &'a Lattice,
        norm: &'a NormalizationConfig,
    ) -> Self {
        Semantics {
            reg,
            symbols,
            lattice,
            norm,
            recover_equality: false,
        }
    }

    /// OMDoc-level term: symbols are `Sym(cd, omdoc_name)` of the registry.
    pub fn stex_to_omdoc_term(&self, math: &[LatexNode]) -> Result<Term, SemanticError> {
        self.term_of(&normalize_math(math, self.norm))
    }

    /// Typed term: OMDoc term translated along the alignments.
    pub fn stex_to_term(&self, math: &[LatexNode]) -> Result<Term, SemanticError> {
        self.translate(&self.stex_to_omdoc_term(math)?)
    }

    fn term_of(&self, nodes: &[LatexNode]) -> Result<Term, SemanticError> {
        let items = latex::strip_trivia(nodes);
        if let Some(inner) = strip_parens(&items) {
            return self.term_of(&inner);
        }
        match items[..] {
            [LatexNode::Command(c)] if self.reg.contains(&c.name) => return self.application(c),
            [LatexNode::Command(c)] if !is_variable_command(&c.name) => {
                return Err(SemanticError::UnknownCommand(c.name.clone()))
            }
            [LatexNode::Group(ch)] => return self.term_of(ch),
            [LatexNode::Text(t)] if !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()) => {
                if let Ok(k) = t.parse() {
                    return Ok(Term::IntLit(k));
                }
            }
            _ => {}
        }
        if !items.is_empty() && items.iter().all(|n| is_variable_like(n)) {
            let first_digit = items[0].first_char().is_some_and(|c| c.is_ascii_digit());
            if !first_digit {
                let name: String = items.iter().map(|n| n.render()).collect();
                return Ok(Term::var(&name));
            }
        }
        if self.recover_equality {
            if let Some(t) = self.recover_eq(&items)? {
                return Ok(t);
            }
        }
        if let Some(c) = first_unknown_command(&items, self.reg) {
            return Err(SemanticError::UnknownCommand(c));
        }
        Err(SemanticError::MalformedApplication(
            items.iter().map(|n| n.render()).collect(),
        ))
    }

    fn application(&self, c: &latex::Command) -> Result<Term, SemanticError> {
        let decl = self.reg.get(&c.name).expect("caller checked");
        let variant = c
            .optional_args()
            .next()
            .map(|b| latex::render(b).trim().to_string());
        if decl.notation_for(variant.as_deref()).is_none() {
            return Err(SemanticError::UnknownVariant {
                name: c.name.clone(),
                variant: variant.unwrap_or_default(),
            });
        }
        let found = c.required_count();
        if found != decl.arity {
            return Err(SemanticError::Arity {
                name: c.name.clone(),
                expected: decl.arity,
                found,
            });
        }
        let head = Term::sym(&decl.cd(), &decl.omdoc_name);
        if decl.arity == 0 {
            return Ok(head);
        }
        let mut args = Vec::new();
        for (i, body) in c.braced_args().enumerate() {
            if decl.assoc_arg == Some(i + 1) {
                for item in latex::split_top_level_commas(body) {
                    args.push(self.term_of(&item)?);
                }
            } else {
                args.push(self.term_of(body)?);
            }
        }
        Ok(Term::apply(head, args))
    }

    fn recover_eq(&self, items: &[&LatexNode]) -> Result<Option<Term>, SemanticError> {
        let owned: Vec<LatexNode> = items.iter().map(|n| (*n).clone()).collect();
        let mut parts: Vec<Vec<LatexNode>> = vec![Vec::new()];
        for node in owned {
            match node {
                LatexNode::Text(t) if t.contains('=') => {
                    let mut pieces = t.split('=');
                    if let Some(first) = pieces.next().filter(|p| !p.is_empty()) {
                        parts.last_mut().unwrap().push(LatexNode::text(first));
                    }
                    for p in pieces {
                        parts.push(Vec::new());
                        if !p.is_empty() {
                            parts.last_mut().unwrap().push(LatexNode::text(p));
                        }
                    }
                }
                other => parts.last_mut().unwrap().push(other),
            }
        }
        if parts.len() < 2 {
            return Ok(None);
        }
        let Some(eq) = self.reg.iter().find(|d| d.omdoc_name == "equal") else {
            return Ok(None);
        };
        let args = parts
            .iter()
            .map(|p| self.term_of(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some(Term::apply(Term::sym(&eq.cd(), &eq.omdoc_name), args)))
    }

    /// Replaces registry symbols by their aligned typed symbols.
    pub fn translate(&self, t: &Term) -> Result<Term, SemanticError> {
        match t {
            Term::Sym { module, name } => {
                let typed = self
                    .reg
                    .by_omdoc(module, name)
                    .find_map(|d| self.symbols.by_macro(&d.macro_name))
                    .ok_or_else(|| SemanticError::UnalignedSymbol(format!("{module}?{name}")))?;
                Ok(Term::typed(&typed.name))
            }
            Term::Apply { head, args } => Ok(Term::apply(
                self.translate(head)?,
                args.iter()
                    .map(|a| self.translate(a))
                    .collect::<Result<_, _>>()?,
            )),
            other => Ok(other.clone()),
        }
    }

    pub fn infer_type(&self, t: &Term) -> Result<Inferred, TypeError> {
        infer_type(t, self.symbols, self.lattice)
    }
}

/// Strips one pair of parentheses enclosing the whole list.
fn strip_parens(items: &[&LatexNode]) -> Option<Vec<LatexNode>> {
    let (LatexNode::Text(first), LatexNode::Text(last)) = (items.first()?, items.last()?) else {
        return None;
    };
    if !first.starts_with('(') || !last.ends_with(')') {
        return None;
    }
    let mut inner: Vec<LatexNode> = items.iter().map(|n| (*n).clone()).collect();
    if let LatexNode::Text(t) = &mut inner[0] {
        t.remove(0);
    }
    if let Some(LatexNode::Text(t)) = inner.last_mut() {
        t.pop()?;
    }
    // The opening parenthesis must close only at the very end.
    let mut depth = 1i32;
    for n in &inner {
        if let LatexNode::Text(t) = n {
            for c in t.chars() {
                depth += match c {
                    '(' => 1,
                    ')' => -1,
                    _ => 0,
                };
                if depth == 0 {
                    return None;
                }
            }
        }
    }
    inner.retain(|n| !matches!(n, LatexNode::Text(t) if t.is_empty()));
    Some(inner)
}

fn is_variable_command(name: &str) -> bool {
    GREEK.contains(&name) || VARIABLE_FONTS.contains(&name)
}

fn is_variable_like(node: &LatexNode) -> bool {
    match node {
        LatexNode::Text(t) => t
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '\'' | '_' | '^')),
        LatexNode::Command(c) => {
            is_variable_command(&c.name)
                && c.args
                    .iter()
                    .all(|a| !a.is_optional() && a.body.iter().all(is_variable_like))
        }
        LatexNode::Group(ch) => ch.iter().all(is_variable_like),
        LatexNode::Whitespace(_) => true,
        _ => false,
    }
}

fn first_unknown_command(items: &[&LatexNode], reg: &Registry) -> Option<String> {
    items.iter().find_map(|n| match n {
        LatexNode::Command(c) if !reg.contains(&c.name) && !is_variable_command(&c.name) => {
            Some(c.name.clone())
        }
        _ => None,
    })
}

struct Infer<'a> {
    symbols: &'a SymbolSet,
    lattice: &'a Lattice,
    vars: BTreeMap<String, TypeExpr>,
}

impl Infer<'_> {
    fn symbol(&self, name: &str) -> Result<&TypedSymbol, TypeError> {
        self.symbols
            .get(name)
            .ok_or_else(|| TypeError::UnknownSymbol(name.to_string()))
    }

    fn synth(&mut self, t: &Term, path: &mut Vec<usize>) -> Result<Option<TypeExpr>, TypeError> {
        match t {
            Term::IntLit(k) => Ok(Some(TypeExpr::base(if *k >= 0 { "Nat" } else { "Int" }))),
            Term::Var { name, ty } => {
                if let Some(ty) = ty {
                    self.bind(name, ty, path)?;
                }
                Ok(self.vars.get(name).cloned())
            }
            Term::Sym { module, name } => {
                if module != TYPED_MODULE {
                    return Err(TypeError::UnknownSymbol(format!("{module}?{name}")));
                }
                Ok(Some(self.symbol(name)?.ty.clone()))
            }
            Term::Apply { head, args } => {
                let (flexary, head_ty) = match &**head {
                    Term::Sym { module, name } if module == TYPED_MODULE => {
                        let s = self.symbol(name)?;
                        (s.flexary, s.ty.clone())
                    }
                    other => (
                        false,
                        self.synth(other, path)?.unwrap_or(TypeExpr::base("?")),
                    ),
                };
                let TypeExpr::Fun(params, result) = head_ty else {
                    return Err(TypeError::NotAFunction {
                        path: path.clone(),
                        head: head.to_string(),
                    });
                };
                let ok = if flexary {
                    args.len() >= params.len()
                } else {
                    args.len() == params.len()
                };
                if !ok {
                    return Err(TypeError::Arity {
                        path: path.clone(),
                        head: head.to_string(),
                        expected: params.len(),
                        found: args.len(),
                    });
                }
                for (i, a) in args.iter().enumerate() {
                    let expected = &params[i.min(params.len() - 1)];
                    path.push(i);
                    self.check(a, expected, path)?;
                    path.pop();
                }
                Ok(Some(*result))
            }
        }
    }

    /// Narrows the type of a variable to the meet of what it had and `ty`.
    fn bind(&mut self, name: &str, ty: &TypeExpr, path: &[usize]) -> Result<(), TypeError> {
        let new = match self.vars.get(name) {
            None => ty.clone(),
            Some(old) => self
                .lattice
                .meet(old, ty)
                .ok_or_else(|| TypeError::Mismatch {
                    path: path.to_vec(),
                    expected: ty.clone(),
                    found: old.clone(),
                })?,
        };
        self.vars.insert(name.to_string(), new);
        Ok(())
    }

    fn check(
        &mut self,
        t: &Term,
        expected: &TypeExpr,
        path: &mut Vec<usize>,
    ) -> Result<(), TypeError> {
        if let Term::Var { name, ty } = t {
            if let Some(ty) = ty {
                if !self.lattice.is_subtype(ty, expected) {
                    return Err(TypeError::Mismatch {
                        path: path.clone(),
                        expected: expected.clone(),
                        found: ty.clone(),
                    });
                }
            }
            return self.bind(name, ty.as_ref().unwrap_or(expected), path);
        }
        let found = self.synth(t, path)?.expect("only variables lack a type");
        if self.lattice.is_subtype(&found, expected) {
            Ok(())
        } else {
            Err(TypeError::Mismatch {
                path: path.clone(),
                expected: expected.clone(),
                found,
            })
        }
    }
}

/// Principal type of a typed term. Untyped variables get the meet of the
/// parameter types they are used at.
pub fn infer_type(t: &Term, symbols: &SymbolSet, lattice: &Lattice) -> Result<Inferred, TypeError> {
    let mut inf = Infer {
        symbols,
        lattice,
        vars: BTreeMap::new(),
    };
    let ty = inf.synth(t, &mut Vec::new())?;
    Ok(Inferred {
        ty,
        trivial: matches!(t, Term::Var { .. }),
        vars: inf.vars,
    })
}

/// Whether `t` type-checks against `expected`.
pub fn checks_against(
    t: &Term,
    expected: &TypeExpr,
    symbols: &SymbolSet,
    lattice: &Lattice,
) -> bool {
    let mut inf = Infer {
        symbols,
        lattice,
        vars: BTreeMap::new(),
    };
    inf.check(t, expected, &mut Vec::new()).is_ok()
}

/// Renders a typed term as sTeX, asking `variant` which notation to use for
/// each occurrence of an aligned symbol.
pub fn term_to_stex(
    t: &Term,
    symbols: &SymbolSet,
    variant: &mut dyn FnMut(&TypedSymbol) -> Option<String>,
) -> Result<String, SemanticError> {
    let mut out = String::new();
    write_stex(t, symbols, variant, &mut out)?;
    Ok(out)
}

fn write_stex(
    t: &Term,
    symbols: &SymbolSet,
    variant: &mut dyn FnMut(&TypedSymbol) -> Option<String>,
    out: &mut String,
) -> Result<(), SemanticError> {
    let head = |name: &str,
                module: &str,
                variant: &mut dyn FnMut(&TypedSymbol) -> Option<String>,
                out: &mut String| {
        let s = (module == TYPED_MODULE)
            .then(|| symbols.get(name))
            .flatten()
            .filter(|s| s.alignment.is_some())
            .ok_or_else(|| SemanticError::UnalignedSymbol(name.to_string()))?;
        let a = s.alignment.as_ref().unwrap();
        let _ = write!(out, "\\{}", a.macro_name);
        if let Some(v) = variant(s) {
            let _ = write!(out, "[{v}]");
        }
        Ok::<_, SemanticError>(s)
    };
    match t {
        Term::Var { name, .. } => out.push_str(name),
        Term::IntLit(k) => {
            let _ = write!(out, "{k}");
        }
        Term::Sym { module, name } => {
            head(name, module, variant, out)?;
        }
        Term::Apply { head: h, args } => {
            let Term::Sym { module, name } = &**h else {
                return Err(SemanticError::MalformedApplication(t.to_string()));
            };
            let s = head(name, module, variant, out)?;
            if s.flexary {
                out.push('{');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write_stex(a, symbols, variant, out)?;
                }
                out.push('}');
            } else {
                for a in args {
                    out.push('{');
                    write_stex(a, symbols, variant, out)?;
                    out.push('}');
                }
            }
        }
    }
    Ok(())
}

fn escape_attr(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// OMDoc XML with two-space indentation.
pub fn term_to_omdoc(t: &Term) -> String {
    fn go(t: &Term, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        match t {
            Term::Apply { head, args } => {
                let _ = writeln!(out, "{pad}<OMA>");
                go(head, indent + 1, out);
                for a in args {
                    go(a, indent + 1, out);
                }
                let _ = writeln!(out, "{pad}</OMA>");
            }
            Term::Sym { module, name } => {
                let _ = writeln!(
                    out,
                    "{pad}<OMS cd=\"{}\" name=\"{}\"/>",
                    escape_attr(module),
                    escape_attr(name)
                );
            }
            Term::Var { name, .. } => {
                let _ = writeln!(out, "{pad}<OMV name=\"{}\"/>", escape_attr(name));
            }
            Term::IntLit(k) => {
                let _ = writeln!(out, "{pad}<OMI>{k}</OMI>");
            }
        }
    }
    let mut out = String::new();
    go(t, 0, &mut out);
    out
}

/// Structural equality of two XML documents: same element names, same
/// attribute sets and same non-blank text, regardless of formatting and
/// attribute order. Unparsable input is equal to nothing.
pub fn omdoc_equal(a: &str, b: &str) -> bool {
    fn same(x: roxmltree::Node, y: roxmltree::Node) -> bool {
        if x.tag_name() != y.tag_name() {
            return false;
        }
        let attrs = |n: roxmltree::Node| {
            let mut v: Vec<(String, String)> = n
                .attributes()
                .map(|a| (a.name().to_string(), a.value().to_string()))
                .collect();
            v.sort();
            v
        };
        if attrs(x) != attrs(y) {
            return false;
        }
        fn kids<'a, 'i>(n: roxmltree::Node<'a, 'i>) -> Vec<roxmltree::Node<'a, 'i>> {
            n.children()
                .filter(|c| c.is_element() || !c.text().unwrap_or("").trim().is_empty())
                .collect()
        }
        let (kx, ky) = (kids(x), kids(y));
        kx.len() == ky.len()
            && kx
                .iter()
                .zip(&ky)
                .all(|(p, q)| match (p.is_element(), q.is_element()) {
                    (true, true) => same(*p, *q),
                    (false, false) => p.text().map(str::trim) == q.text().map(str::trim),
                    _ => false,
                })
    }
    match (roxmltree::Document::parse(a), roxmltree::Document::parse(b)) {
        (Ok(x), Ok(y)) => same(x.root_element(), y.root_element()),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PRODUCT_XML: &str = r#"<OMA>
  <OMS cd="smglom:mv?equal" name="equal"/>
  <OMA>
    <OMS cd="smglom:arithmetics?natarith"
        name="multiplication"/>
    <OMV name="x"/>
    <OMI>0</OMI>
  </OMA>
  <OMI>0</OMI>
</OMA>"#;

    struct Env {
        reg: Registry,
        symbols: SymbolSet,
        lattice: Lattice,
        norm: NormalizationConfig,
    }

    impl Env {
        fn new() -> Self {
            Env {
                reg: Registry::sample(),
                symbols: SymbolSet::core(),
                lattice: Lattice::default(),
                norm: NormalizationConfig::default(),
            }
        }

        fn sem(&self) -> Semantics<'_> {
            Semantics::new(&self.reg, &self.symbols, &self.lattice, &self.norm)
        }

        fn omdoc(&self, src: &str) -> Result<Term, SemanticError> {
            self.sem()
                .stex_to_omdoc_term(&latex::parse_math(src, &self.reg).unwrap())
        }

        fn typed(&self, src: &str) -> Result<Term, SemanticError> {
            self.sem()
                .stex_to_term(&latex::parse_math(src, &self.reg).unwrap())
        }
    }

    fn ty(s: &str) -> TypeExpr {
        s.parse().unwrap()
    }

    #[test]
    fn product_equation_term() {
        let env = Env::new();
        let t = env.omdoc(r"\eq{\nattimes[cdot]{x,0},0}").unwrap();
        let expected = Term::apply(
            Term::sym("smglom:mv?equal", "equal"),
            vec![
                Term::apply(
                    Term::sym("smglom:arithmetics?natarith", "multiplication"),
                    vec![Term::var("x"), Term::IntLit(0)],
                ),
                Term::IntLit(0),
            ],
        );
        assert_eq!(t, expected);
        assert!(omdoc_equal(&term_to_omdoc(&t), PRODUCT_XML));
    }

    #[test]
    fn simple_terms() {
        let env = Env::new();
        assert_eq!(env.omdoc("n").unwrap(), Term::var("n"));
        assert_eq!(
            env.omdoc(r"\mathcal{F}_0'").unwrap(),
            Term::var(r"\mathcal{F}_0'")
        );
        assert_eq!(env.omdoc("(42)").unwrap(), Term::IntLit(42));
        assert_eq!(
            env.omdoc(r"\natmorethan n{0}").unwrap(),
            Term::apply(
                Term::sym("smglom:arithmetics?natarith", "morethan"),
                vec![Term::var("n"), Term::IntLit(0)]
            )
        );
    }

    #[test]
    fn malformed_inputs() {
        let env = Env::new();
        assert!(
            matches!(env.omdoc(r"a\cdot b"), Err(SemanticError::UnknownCommand(c)) if c == "cdot")
        );
        assert!(matches!(
            env.omdoc(r"\NaturalNumbers=\set{0,1,2,3}"),
            Err(SemanticError::MalformedApplication(_))
        ));
        assert!(matches!(
            env.omdoc(r"\nattimes[star]{a,b}"),
            Err(SemanticError::UnknownVariant { .. })
        ));
        assert!(matches!(
            env.omdoc(r"\defeq{\powerset{A}}{\bsetst{x}{x}{\sset{x}{x} A}}"),
            Err(SemanticError::MalformedApplication(_))
        ));
        assert!(env.omdoc("").is_err());
        assert!(env.omdoc("(a)(b)").is_err());
    }

    #[test]
    fn equality_recovery_is_opt_in() {
        let env = Env::new();
        let mut sem = env.sem();
        sem.recover_equality = true;
        let t = sem
            .stex_to_omdoc_term(&latex::parse_math(r"\natplus{a,b}=c", &env.reg).unwrap())
            .unwrap();
        assert_eq!(t, env.omdoc(r"\eq{\natplus{a,b},c}").unwrap());
    }

    #[test]
    fn translation_needs_alignment() {
        let env = Env::new();
        let t = env.typed(r"\eq{\nattimes[cdot]{x,0},0}").unwrap();
        assert_eq!(
            t,
            Term::apply(
                Term::typed("eq"),
                vec![
                    Term::apply(
                        Term::typed("nattimes"),
                        vec![Term::var("x"), Term::IntLit(0)]
                    ),
                    Term::IntLit(0)
                ]
            )
        );
        assert!(matches!(
            env.typed(r"\powerset{A}"),
            Err(SemanticError::UnalignedSymbol(_))
        ));
    }

    #[test]
    fn inference() {
        let env = Env::new();
        let sem = env.sem();
        let t = Term::apply(
            Term::typed("nattimes"),
            vec![Term::typed_var("x", ty("Nat")), Term::IntLit(0)],
        );
        assert_eq!(sem.infer_type(&t).unwrap().ty, Some(ty("Nat")));

        let v = sem.infer_type(&Term::var("n")).unwrap();
        assert!(v.trivial);
        assert_eq!(v.ty, None);

        let t = Term::apply(
            Term::typed("realplus"),
            vec![Term::IntLit(1), Term::typed_var("r", ty("Real"))],
        );
        assert_eq!(sem.infer_type(&t).unwrap().ty, Some(ty("Real")));

        let t = Term::apply(
            Term::typed("natsucc"),
            vec![Term::typed_var("r", ty("Real"))],
        );
        assert!(matches!(
            sem.infer_type(&t),
            Err(TypeError::Mismatch { .. })
        ));

        let t = Term::apply(Term::typed("natsucc"), vec![Term::IntLit(-1)]);
        assert!(matches!(
            sem.infer_type(&t),
            Err(TypeError::Mismatch { .. })
        ));

        let t = Term::apply(Term::typed("natsucc"), vec![Term::var("a"), Term::var("b")]);
        assert!(matches!(sem.infer_type(&t), Err(TypeError::Arity { .. })));

        let t = Term::apply(Term::typed("natzero"), vec![Term::var("a")]);
        assert!(matches!(
            sem.infer_type(&t),
            Err(TypeError::NotAFunction { .. })
        ));
    }

    #[test]
    fn untyped_variables_take_the_meet() {
        let env = Env::new();
        let t = env.typed(r"\eq{\realuminus{x},\natsucc{x}}").unwrap();
        let inf = env.sem().infer_type(&t).unwrap();
        assert_eq!(inf.ty, Some(ty("Prop")));
        assert_eq!(inf.vars["x"], ty("Nat"));
        let flexary = env.typed(r"\natplus{a,b,c,\natsucc{d}}").unwrap();
        assert_eq!(env.sem().infer_type(&flexary).unwrap().ty, Some(ty("Nat")));
    }

    #[test]
    fn stex_rendering_round_trips() {
        let env = Env::new();
        let t = Term::apply(
            Term::typed("realuminus"),
            vec![Term::apply(
                Term::typed("realuminus"),
                vec![Term::apply(
                    Term::typed("natsucc"),
                    vec![Term::apply(Term::typed("natsucc"), vec![Term::var("n")])],
                )],
            )],
        );
        let s = term_to_stex(&t, &env.symbols, &mut |_| None).unwrap();
        assert_eq!(s, r"\realuminus{\realuminus{\natsucc{\natsucc{n}}}}");
        assert_eq!(env.typed(&s).unwrap(), t);
        let t = Term::apply(
            Term::typed("nattimes"),
            vec![Term::var("a"), Term::typed("natzero")],
        );
        let s = term_to_stex(&t, &env.symbols, &mut |s| {
            (s.name == "nattimes").then(|| "x".to_string())
        })
        .unwrap();
        assert_eq!(s, r"\nattimes[x]{a,\natzero}");
        assert_eq!(env.typed(&s).unwrap(), t);
    }

    #[test]
    fn xml_equality() {
        let a = r#"<OMS cd="c" name="n"/>"#;
        let b = r#"<OMS  name="n"   cd="c" />"#;
        assert!(omdoc_equal(a, a));
        assert!(omdoc_equal(a, b));
        assert!(!omdoc_equal(a, r#"<OMS cd="c" name="m"/>"#));
        assert!(!omdoc_equal(a, "<OMS"));
        assert!(!omdoc_equal("<OMI>1</OMI>", "<OMI>2</OMI>"));
        assert!(omdoc_equal("<OMI>1</OMI>", "<OMI> 1 </OMI>"));
    }
}
