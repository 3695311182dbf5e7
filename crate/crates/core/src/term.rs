//! Types, typed symbols and applied terms.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::registry::Registry;

/// Module name of typed symbols in [`Term::Sym`].
pub const TYPED_MODULE: &str = "mitm";

const DEFAULT_LATTICE: &str = include_str!("../data/typed/lattice.json");
const CORE_SYMBOLS: &str = include_str!("../data/typed/core.jsonl");

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TypeExpr {
    Base(String),
    /// Curried function type flattened into its parameter list.
    Fun(Vec<TypeExpr>, Box<TypeExpr>),
}

impl TypeExpr {
    pub fn base(name: &str) -> Self {
        TypeExpr::Base(name.to_string())
    }

    pub fn fun(params: Vec<TypeExpr>, result: TypeExpr) -> Self {
        TypeExpr::Fun(params, Box::new(result))
    }

    pub fn params(&self) -> &[TypeExpr] {
        match self {
            TypeExpr::Fun(p, _) => p,
            TypeExpr::Base(_) => &[],
        }
    }

    pub fn result(&self) -> &TypeExpr {
        match self {
            TypeExpr::Fun(_, r) => r,
            b => b,
        }
    }

    fn bases<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            TypeExpr::Base(b) => out.push(b),
            TypeExpr::Fun(p, r) => {
                p.iter().for_each(|t| t.bases(out));
                r.bases(out);
            }
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Base(b) => f.write_str(b),
            TypeExpr::Fun(p, r) => {
                f.write_str("(->")?;
                for t in p {
                    write!(f, " {t}")?;
                }
                write!(f, " {r})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeSyntaxError {
    #[error("unexpected end of type")]
    Eof,
    #[error("unexpected `{0}` in type")]
    Unexpected(String),
    #[error("function type needs at least one parameter")]
    NoParams,
}

impl FromStr for TypeExpr {
    type Err = TypeSyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let spaced = s.replace('(', " ( ").replace(')', " ) ");
        let mut toks = spaced.split_whitespace().peekable();
        let t = parse_type(&mut toks)?;
        match toks.next() {
            None => Ok(t),
            Some(x) => Err(TypeSyntaxError::Unexpected(x.into())),
        }
    }
}

fn parse_type<'a>(
    toks: &mut std::iter::Peekable<impl Iterator<Item = &'a str>>,
) -> Result<TypeExpr, TypeSyntaxError> {
    match toks.next().ok_or(TypeSyntaxError::Eof)? {
        "(" => {
            match toks.next().ok_or(TypeSyntaxError::Eof)? {
                "->" => {}
                x => return Err(TypeSyntaxError::Unexpected(x.into())),
            }
            let mut parts = Vec::new();
            while toks.peek().ok_or(TypeSyntaxError::Eof)? != &")" {
                parts.push(parse_type(toks)?);
            }
            toks.next();
            let result = parts.pop().ok_or(TypeSyntaxError::NoParams)?;
            if parts.is_empty() {
                return Err(TypeSyntaxError::NoParams);
            }
            Ok(TypeExpr::fun(parts, result))
        }
        x @ (")" | "->") => Err(TypeSyntaxError::Unexpected(x.into())),
        name => Ok(TypeExpr::base(name)),
    }
}

impl TryFrom<String> for TypeExpr {
    type Error = TypeSyntaxError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<TypeExpr> for String {
    fn from(t: TypeExpr) -> String {
        t.to_string()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LatticeError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("subtype pair mentions undeclared type `{0}`")]
    Undeclared(String),
    #[error("subtyping is cyclic between `{0}` and `{1}`")]
    Cycle(String, String),
}

#[derive(Deserialize)]
struct LatticeFile {
    types: Vec<String>,
    #[serde(default)]
    subtype: Vec<(String, String)>,
}

/// A partial order on base type names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    types: Vec<String>,
    /// Reflexive-transitive closure: `le[a]` holds every `b` with `a <= b`.
    le: BTreeMap<String, BTreeSet<String>>,
}

impl Default for Lattice {
    fn default() -> Self {
        Lattice::from_json(DEFAULT_LATTICE).expect("bundled lattice is valid")
    }
}

impl Lattice {
    pub fn new(types: Vec<String>, subtype: &[(String, String)]) -> Result<Self, LatticeError> {
        let mut le: BTreeMap<String, BTreeSet<String>> = types
            .iter()
            .map(|t| (t.clone(), BTreeSet::from([t.clone()])))
            .collect();
        for (a, b) in subtype {
            for t in [a, b] {
                if !le.contains_key(t) {
                    return Err(LatticeError::Undeclared(t.clone()));
                }
            }
            le.get_mut(a).unwrap().insert(b.clone());
        }
        // Warshall.
        for k in &types {
            for i in &types {
                if le[i].contains(k) {
                    let ks = le[k].clone();
                    le.get_mut(i).unwrap().extend(ks);
                }
            }
        }
        for a in &types {
            for b in &le[a] {
                if a != b && le[b].contains(a) {
                    return Err(LatticeError::Cycle(a.clone(), b.clone()));
                }
            }
        }
        Ok(Lattice { types, le })
    }

    pub fn from_json(src: &str) -> Result<Self, LatticeError> {
        let f: LatticeFile = serde_json::from_str(src)?;
        Lattice::new(f.types, &f.subtype)
    }

    pub fn load(path: &Path) -> Result<Self, LatticeError> {
        Lattice::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn contains(&self, name: &str) -> bool {
        self.le.contains_key(name)
    }

    fn base_le(&self, a: &str, b: &str) -> bool {
        a == b || self.le.get(a).is_some_and(|s| s.contains(b))
    }

    /// `a <= b`; function types are contravariant in parameters.
    pub fn is_subtype(&self, a: &TypeExpr, b: &TypeExpr) -> bool {
        match (a, b) {
            (TypeExpr::Base(x), TypeExpr::Base(y)) => self.base_le(x, y),
            (TypeExpr::Fun(pa, ra), TypeExpr::Fun(pb, rb)) => {
                pa.len() == pb.len()
                    && pa.iter().zip(pb).all(|(x, y)| self.is_subtype(y, x))
                    && self.is_subtype(ra, rb)
            }
            _ => false,
        }
    }

    /// Base types strictly below `name`, in declaration order.
    pub fn strict_subtypes(&self, name: &str) -> Vec<&str> {
        self.types
            .iter()
            .filter(|t| t.as_str() != name && self.base_le(t, name))
            .map(String::as_str)
            .collect()
    }

    /// Greatest common subtype of two base types, if any.
    pub fn meet(&self, a: &TypeExpr, b: &TypeExpr) -> Option<TypeExpr> {
        if self.is_subtype(a, b) {
            return Some(a.clone());
        }
        if self.is_subtype(b, a) {
            return Some(b.clone());
        }
        let (TypeExpr::Base(x), TypeExpr::Base(y)) = (a, b) else {
            return None;
        };
        let lower: Vec<&String> = self
            .types
            .iter()
            .filter(|t| self.base_le(t, x) && self.base_le(t, y))
            .collect();
        lower
            .iter()
            .find(|t| lower.iter().all(|u| self.base_le(u, t)))
            .map(|t| TypeExpr::Base((*t).clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Apply {
        head: Box<Term>,
        args: Vec<Term>,
    },
    Sym {
        module: String,
        name: String,
    },
    /// Variables carry a type when one is known; OMDoc drops it.
    Var {
        name: String,
        ty: Option<TypeExpr>,
    },
    IntLit(i64),
}

impl Term {
    pub fn sym(module: &str, name: &str) -> Self {
        Term::Sym {
            module: module.into(),
            name: name.into(),
        }
    }

    pub fn typed(name: &str) -> Self {
        Term::sym(TYPED_MODULE, name)
    }

    pub fn var(name: &str) -> Self {
        Term::Var {
            name: name.into(),
            ty: None,
        }
    }

    pub fn typed_var(name: &str, ty: TypeExpr) -> Self {
        Term::Var {
            name: name.into(),
            ty: Some(ty),
        }
    }

    pub fn apply(head: Term, args: Vec<Term>) -> Self {
        Term::Apply {
            head: Box::new(head),
            args,
        }
    }

    /// Whether a `Sym` named `name` occurs anywhere in the term.
    pub fn contains_sym(&self, name: &str) -> bool {
        match self {
            Term::Sym { name: n, .. } => n == name,
            Term::Apply { head, args } => {
                head.contains_sym(name) || args.iter().any(|a| a.contains_sym(name))
            }
            _ => false,
        }
    }

    /// Free variables with their types, in order of first occurrence.
    pub fn free_vars(&self) -> Vec<(&str, Option<&TypeExpr>)> {
        fn walk<'a>(t: &'a Term, out: &mut Vec<(&'a str, Option<&'a TypeExpr>)>) {
            match t {
                Term::Var { name, ty } => {
                    if !out.iter().any(|(n, _)| n == name) {
                        out.push((name, ty.as_ref()));
                    }
                }
                Term::Apply { head, args } => {
                    walk(head, out);
                    args.iter().for_each(|a| walk(a, out));
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// The same term with all variable types dropped.
    pub fn erase_types(&self) -> Term {
        match self {
            Term::Var { name, .. } => Term::var(name),
            Term::Apply { head, args } => Term::apply(
                head.erase_types(),
                args.iter().map(Term::erase_types).collect(),
            ),
            t => t.clone(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Apply { head, args } => head.size() + args.iter().map(Term::size).sum::<usize>(),
            _ => 1,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Sym { name, .. } => f.write_str(name),
            Term::Var { name, .. } => write!(f, "?{name}"),
            Term::IntLit(k) => write!(f, "{k}"),
            Term::Apply { head, args } => {
                write!(f, "({head}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Link from a typed symbol to the sTeX macro that presents it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alignment {
    #[serde(rename = "macro")]
    pub macro_name: String,
    /// Notation variants to draw from; `""` is the base notation. Empty
    /// means the base notation only.
    #[serde(default)]
    pub variants: Vec<String>,
}

impl Alignment {
    pub fn variant_choices(&self) -> Vec<Option<&str>> {
        if self.variants.is_empty() {
            return vec![None];
        }
        self.variants
            .iter()
            .map(|v| (!v.is_empty()).then_some(v.as_str()))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypedSymbol {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: TypeExpr,
    /// The last parameter may be repeated.
    #[serde(default)]
    pub flexary: bool,
    #[serde(default)]
    pub alignment: Option<Alignment>,
}

impl TypedSymbol {
    pub fn params(&self) -> &[TypeExpr] {
        self.ty.params()
    }

    pub fn result(&self) -> &TypeExpr {
        self.ty.result()
    }

    pub fn is_function(&self) -> bool {
        !self.params().is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SymbolError {
    #[error("{0}")]
    Jsonl(#[from] crate::jsonl::JsonlError),
    #[error("duplicate typed symbol `{0}`")]
    Duplicate(String),
    #[error("`{symbol}` uses undeclared type `{ty}`")]
    UnknownType { symbol: String, ty: String },
    #[error("`{symbol}` is aligned with unknown macro `\\{macro_name}`")]
    UnknownMacro { symbol: String, macro_name: String },
    #[error("`{symbol}` is aligned with `\\{macro_name}` which has no variant `{variant}`")]
    UnknownVariant {
        symbol: String,
        macro_name: String,
        variant: String,
    },
    #[error("`{symbol}` does not match the arity of `\\{macro_name}`")]
    Arity { symbol: String, macro_name: String },
    #[error("`\\{0}` is aligned more than once")]
    DoubleAlignment(String),
    #[error("flexary symbol `{0}` needs a function type")]
    FlexaryConstant(String),
}

/// A set of typed symbols indexed by name and by aligned macro.
#[derive(Clone, Debug, Default)]
pub struct SymbolSet {
    symbols: Vec<TypedSymbol>,
    by_name: HashMap<String, usize>,
    by_macro: HashMap<String, usize>,
}

impl SymbolSet {
    pub fn new(symbols: Vec<TypedSymbol>) -> Result<Self, SymbolError> {
        let mut set = SymbolSet::default();
        for (i, s) in symbols.iter().enumerate() {
            if set.by_name.insert(s.name.clone(), i).is_some() {
                return Err(SymbolError::Duplicate(s.name.clone()));
            }
            if s.flexary && !s.is_function() {
                return Err(SymbolError::FlexaryConstant(s.name.clone()));
            }
            if let Some(a) = &s.alignment {
                if set.by_macro.insert(a.macro_name.clone(), i).is_some() {
                    return Err(SymbolError::DoubleAlignment(a.macro_name.clone()));
                }
            }
        }
        set.symbols = symbols;
        Ok(set)
    }

    pub fn from_jsonl(src: &str) -> Result<Self, SymbolError> {
        SymbolSet::new(crate::jsonl::read(src.as_bytes())?)
    }

    pub fn load(path: &Path) -> Result<Self, SymbolError> {
        SymbolSet::new(crate::jsonl::read_path(path)?)
    }

    /// The bundled twelve arithmetic symbols.
    pub fn core() -> Self {
        SymbolSet::from_jsonl(CORE_SYMBOLS).expect("bundled symbols are valid")
    }

    pub fn get(&self, name: &str) -> Option<&TypedSymbol> {
        self.by_name.get(name).map(|&i| &self.symbols[i])
    }

    pub fn by_macro(&self, macro_name: &str) -> Option<&TypedSymbol> {
        self.by_macro.get(macro_name).map(|&i| &self.symbols[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &TypedSymbol> {
        self.symbols.iter()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Checks types against the lattice and alignments against the registry.
    pub fn validate(&self, lattice: &Lattice, reg: &Registry) -> Result<(), SymbolError> {
        for s in &self.symbols {
            let mut bases = Vec::new();
            s.ty.bases(&mut bases);
            if let Some(b) = bases.into_iter().find(|b| !lattice.contains(b)) {
                return Err(SymbolError::UnknownType {
                    symbol: s.name.clone(),
                    ty: b.into(),
                });
            }
            let Some(a) = &s.alignment else { continue };
            let decl = reg
                .get(&a.macro_name)
                .ok_or_else(|| SymbolError::UnknownMacro {
                    symbol: s.name.clone(),
                    macro_name: a.macro_name.clone(),
                })?;
            for v in a.variant_choices() {
                if decl.notation_for(v).is_none() {
                    return Err(SymbolError::UnknownVariant {
                        symbol: s.name.clone(),
                        macro_name: a.macro_name.clone(),
                        variant: v.unwrap_or_default().into(),
                    });
                }
            }
            let fits = if decl.is_flexary() {
                s.flexary && decl.arity == 1
            } else {
                !s.flexary && s.params().len() == decl.arity
            };
            if !fits {
                return Err(SymbolError::Arity {
                    symbol: s.name.clone(),
                    macro_name: a.macro_name.clone(),
                });
            }
        }
        Ok(())
    }
}
