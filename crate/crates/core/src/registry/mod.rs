//! sTeX symbol declarations and the registry that indexes them.
//!
//! Signature modules (`\begin{modsig}{name} ... \end{modsig}`) are read with
//! [`load_modsig`]; a [`Registry`] combines several modules, resolves the
//! notation templates against the full symbol table and serves as the
//! [`CommandTable`] for parsing sTeX input.

pub(crate) mod check;
mod expand;

pub use check::{check_math, is_fully_disambiguated, DisambiguationCheck, Offense, OffenseKind};
pub use expand::{expand, expand_math, ExpandError};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use crate::latex::{self, Builtins, CommandShape, CommandTable, EnvShape, LatexNode};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("parse error: {0}")]
    Parse(#[from] latex::ParseError),
    #[error("\\symvariant for unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("malformed key list `[{0}]`")]
    MalformedKeys(String),
    #[error("malformed arity `[{arity}]` for `{name}`")]
    BadArity { name: String, arity: String },
    #[error("`\\{0}` is declared twice")]
    DuplicateMacro(String),
    #[error("notation of `{name}` uses placeholders {found:?}, expected #1..#{arity}")]
    Placeholders {
        name: String,
        arity: usize,
        found: Vec<usize>,
    },
    #[error("notation of `{name}` does not parse: {source}")]
    Notation {
        name: String,
        source: latex::ParseError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        source: Box<LoadError>,
    },
}

/// A notation template together with the precedence it exposes to its context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Notation {
    pub source: String,
    pub nodes: Vec<LatexNode>,
    /// `None` for atomic notations, which are never bracketed.
    pub precedence: Option<i32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolDecl {
    pub macro_name: String,
    pub omdoc_name: String,
    pub module: String,
    /// Directory the module was loaded from; the first half of the OMDoc `cd`.
    pub namespace: String,
    pub arity: usize,
    /// 1-based index of the flexary argument, if any.
    pub assoc_arg: Option<usize>,
    pub precedence: Option<i32>,
    pub notation: Notation,
    pub variants: BTreeMap<String, Notation>,
}

impl SymbolDecl {
    pub fn is_flexary(&self) -> bool {
        self.assoc_arg.is_some()
    }

    /// OMDoc content dictionary, e.g. `smglom:arithmetics?natarith`.
    pub fn cd(&self) -> String {
        if self.namespace.is_empty() {
            format!("smglom:{}", self.module)
        } else {
            format!("smglom:{}?{}", self.namespace, self.module)
        }
    }

    /// The base notation for `None`, otherwise the named variant.
    pub fn notation_for(&self, variant: Option<&str>) -> Option<&Notation> {
        match variant {
            None => Some(&self.notation),
            Some(v) => self.variants.get(v),
        }
    }
}

/// One signature module.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Module {
    pub name: String,
    pub namespace: String,
    pub symbols: Vec<SymbolDecl>,
}

/// Reads the `\symdef` and `\symvariant` declarations of a signature module.
///
/// `source` may be a whole file containing a `modsig` environment or just the
/// body of one; in the latter case the module is unnamed.
pub fn load_modsig(source: &str) -> Result<Module, LoadError> {
    let nodes = latex::parse(source)?;
    let (name, body) = match find_modsig(&nodes) {
        Some((name, body)) => (name, body),
        None => (String::new(), &nodes[..]),
    };
    let mut module = Module {
        name: name.clone(),
        namespace: String::new(),
        symbols: Vec::new(),
    };
    collect_decls(body, &name, &mut module.symbols)?;
    Ok(module)
}

fn find_modsig(nodes: &[LatexNode]) -> Option<(String, &[LatexNode])> {
    for n in nodes {
        if let LatexNode::Environment(e) = n {
            if e.name == "modsig" {
                let name = e
                    .args
                    .first()
                    .map(|a| latex::render(&a.body).trim().to_string())
                    .unwrap_or_default();
                return Some((name, &e.body));
            }
            if let Some(found) = find_modsig(&e.body) {
                return Some(found);
            }
        }
    }
    None
}

fn collect_decls(
    nodes: &[LatexNode],
    module: &str,
    out: &mut Vec<SymbolDecl>,
) -> Result<(), LoadError> {
    for n in nodes {
        let LatexNode::Command(c) = n else {
            if let LatexNode::Environment(e) = n {
                collect_decls(&e.body, module, out)?;
            }
            continue;
        };
        match c.name.as_str() {
            "symdef" => {
                let (keys, name, arity, notation) = symdef_parts(c);
                let name = latex::render(name).trim().to_string();
                let keys = parse_keys(&keys)?;
                let arity = parse_arity(&name, arity.as_deref())?;
                let mut omdoc_name = name.clone();
                let mut assoc_arg = None;
                let mut precedence = None;
                for (k, v) in &keys {
                    match k.as_str() {
                        "name" => omdoc_name = v.clone(),
                        "assocarg" => {
                            assoc_arg = Some(
                                v.parse()
                                    .map_err(|_| LoadError::MalformedKeys(format!("{k}={v}")))?,
                            )
                        }
                        "p" => {
                            precedence = Some(
                                v.parse()
                                    .map_err(|_| LoadError::MalformedKeys(format!("{k}={v}")))?,
                            )
                        }
                        _ => {}
                    }
                }
                let notation = notation_from(&name, arity, latex::render(notation), precedence)?;
                out.push(SymbolDecl {
                    macro_name: name,
                    omdoc_name,
                    module: module.to_string(),
                    namespace: String::new(),
                    arity,
                    assoc_arg,
                    precedence: notation.precedence,
                    notation,
                    variants: BTreeMap::new(),
                });
            }
            "symvariant" => {
                let mut req = c.braced_args();
                let (Some(name), Some(variant), Some(notation)) =
                    (req.next(), req.next(), req.next())
                else {
                    continue;
                };
                let name = latex::render(name).trim().to_string();
                let variant = latex::render(variant).trim().to_string();
                let Some(decl) = out.iter_mut().rev().find(|d| d.macro_name == name) else {
                    return Err(LoadError::UnknownSymbol(name));
                };
                let notation =
                    notation_from(&name, decl.arity, latex::render(notation), decl.precedence)?;
                decl.variants.insert(variant, notation);
            }
            _ => {}
        }
    }
    Ok(())
}

/// Splits `\symdef[keys]{name}[arity]{notation}` into its four parts.
fn symdef_parts(c: &latex::Command) -> (String, &[LatexNode], Option<String>, &[LatexNode]) {
    let mut keys = String::new();
    let mut arity = None;
    let mut required = Vec::new();
    for a in &c.args {
        if a.is_optional() {
            if required.is_empty() {
                keys = latex::render(&a.body);
            } else {
                arity = Some(latex::render(&a.body));
            }
        } else {
            required.push(&a.body[..]);
        }
    }
    let name = required.first().copied().unwrap_or(&[]);
    let notation = required.get(1).copied().unwrap_or(&[]);
    (keys, name, arity, notation)
}

/// Parses `key=value,key=value`. Bare flags are allowed and get an empty value.
pub(crate) fn parse_keys(src: &str) -> Result<Vec<(String, String)>, LoadError> {
    let mut out = Vec::new();
    for item in src.split(',') {
        let item = item.trim();
        if item.is_empty() {
            if src.trim().is_empty() {
                continue;
            }
            return Err(LoadError::MalformedKeys(src.to_string()));
        }
        let (k, v) = match item.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => (item, ""),
        };
        if k.is_empty()
            || !k
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(LoadError::MalformedKeys(src.to_string()));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn parse_arity(name: &str, arity: Option<&str>) -> Result<usize, LoadError> {
    match arity {
        None => Ok(0),
        Some(a) => a.trim().parse().map_err(|_| LoadError::BadArity {
            name: name.to_string(),
            arity: a.to_string(),
        }),
    }
}

fn notation_from(
    name: &str,
    arity: usize,
    source: String,
    fallback: Option<i32>,
) -> Result<Notation, LoadError> {
    let nodes = latex::parse_math(&source, &Builtins).map_err(|e| LoadError::Notation {
        name: name.to_string(),
        source: e,
    })?;
    let found: Vec<usize> = placeholders(&nodes).into_iter().collect();
    if found.iter().any(|&i| i == 0 || i > arity) || (arity > 0 && found.len() != arity) {
        return Err(LoadError::Placeholders {
            name: name.to_string(),
            arity,
            found,
        });
    }
    let precedence = template_precedence(&nodes).or(fallback);
    Ok(Notation {
        source,
        nodes,
        precedence,
    })
}

/// Indices `i` of all `#i` occurring in `nodes`.
pub(crate) fn placeholders(nodes: &[LatexNode]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    visit_text(nodes, &mut |s| {
        let b = s.as_bytes();
        for i in 0..b.len().saturating_sub(1) {
            if b[i] == b'#' && b[i + 1].is_ascii_digit() {
                out.insert((b[i + 1] - b'0') as usize);
            }
        }
    });
    out
}

fn visit_text(nodes: &[LatexNode], f: &mut impl FnMut(&str)) {
    for n in nodes {
        match n {
            LatexNode::Text(s) => f(s),
            other => latex::for_each_child(other, 0, |children, _| visit_text(children, f)),
        }
    }
}

/// The `p=` of a notation whose outermost form is `\assoc`, `\infix`, `\prefix` or `\postfix`.
pub(crate) fn template_precedence(nodes: &[LatexNode]) -> Option<i32> {
    let [LatexNode::Command(c)] = latex::strip_trivia(nodes)[..] else {
        return None;
    };
    if !matches!(c.name.as_str(), "assoc" | "infix" | "prefix" | "postfix") {
        return None;
    }
    let keys = c.optional_args().next().map(|b| latex::render(b))?;
    parse_keys(&keys)
        .ok()?
        .into_iter()
        .find(|(k, _)| k == "p")
        .and_then(|(_, v)| v.parse().ok())
}

/// A set of loaded modules with a macro-name index.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    decls: Vec<SymbolDecl>,
    modules: BTreeMap<String, Vec<usize>>,
    index: HashMap<String, usize>,
}

const SAMPLE: &[(&str, &str)] = &[
    ("mv", include_str!("../../data/registry/mv/equal.tex")),
    ("mv", include_str!("../../data/registry/mv/defeq.tex")),
    (
        "arithmetics",
        include_str!("../../data/registry/arithmetics/natarith.tex"),
    ),
    (
        "arithmetics",
        include_str!("../../data/registry/arithmetics/intarith.tex"),
    ),
    (
        "arithmetics",
        include_str!("../../data/registry/arithmetics/realarith.tex"),
    ),
    (
        "sets",
        include_str!("../../data/registry/sets/numbersets.tex"),
    ),
    ("sets", include_str!("../../data/registry/sets/sets.tex")),
    ("logic", include_str!("../../data/registry/logic/logic.tex")),
];

impl Registry {
    /// Combines modules and re-reads every notation with the combined table,
    /// so templates may refer to other registry macros.
    pub fn from_modules(modules: Vec<Module>) -> Result<Self, LoadError> {
        let mut reg = Registry::default();
        for m in modules {
            let key = if m.namespace.is_empty() {
                m.name.clone()
            } else {
                format!("{}?{}", m.namespace, m.name)
            };
            for mut d in m.symbols {
                if reg.index.contains_key(&d.macro_name) {
                    return Err(LoadError::DuplicateMacro(d.macro_name));
                }
                d.namespace = m.namespace.clone();
                reg.index.insert(d.macro_name.clone(), reg.decls.len());
                reg.modules
                    .entry(key.clone())
                    .or_default()
                    .push(reg.decls.len());
                reg.decls.push(d);
            }
        }
        let mut reparsed = Vec::with_capacity(reg.decls.len());
        for d in &reg.decls {
            let reparse = |n: &Notation| {
                latex::parse_math(&n.source, &reg).map_err(|e| LoadError::Notation {
                    name: d.macro_name.clone(),
                    source: e,
                })
            };
            let base = reparse(&d.notation)?;
            let variants = d
                .variants
                .values()
                .map(reparse)
                .collect::<Result<Vec<_>, _>>()?;
            reparsed.push((base, variants));
        }
        for (d, (base, variants)) in reg.decls.iter_mut().zip(reparsed) {
            d.notation.nodes = base;
            for (n, nodes) in d.variants.values_mut().zip(variants) {
                n.nodes = nodes;
            }
        }
        Ok(reg)
    }

    /// Loads `(namespace, source)` pairs.
    pub fn from_sources<'a>(
        sources: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, LoadError> {
        let modules = sources
            .into_iter()
            .map(|(ns, src)| {
                let mut m = load_modsig(src)?;
                m.namespace = ns.to_string();
                Ok(m)
            })
            .collect::<Result<Vec<_>, LoadError>>()?;
        Registry::from_modules(modules)
    }

    /// Loads the modules listed in a manifest (one path per line, relative to
    /// the manifest; blank lines and `#` comments are skipped). A module's
    /// namespace is the name of its parent directory.
    pub fn load_manifest(path: &Path) -> Result<Self, LoadError> {
        fn io(p: &Path) -> impl FnOnce(std::io::Error) -> LoadError + '_ {
            move |source| LoadError::Io {
                path: p.to_path_buf(),
                source,
            }
        }
        let text = std::fs::read_to_string(path).map_err(io(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut modules = Vec::new();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let file = base.join(line);
            let src = std::fs::read_to_string(&file).map_err(io(&file))?;
            let mut m = load_modsig(&src).map_err(|e| LoadError::InFile {
                path: file.clone(),
                source: Box::new(e),
            })?;
            m.namespace = Path::new(line)
                .parent()
                .and_then(|p| p.file_name())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            modules.push(m);
        }
        Registry::from_modules(modules)
    }

    /// The bundled sample registry.
    pub fn sample() -> Self {
        Registry::from_sources(SAMPLE.iter().copied()).expect("bundled registry loads")
    }

    pub fn get(&self, macro_name: &str) -> Option<&SymbolDecl> {
        self.index.get(macro_name).map(|&i| &self.decls[i])
    }

    pub fn contains(&self, macro_name: &str) -> bool {
        self.index.contains_key(macro_name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SymbolDecl> {
        self.decls.iter()
    }

    /// Modules keyed by `namespace?name`.
    pub fn modules(&self) -> impl Iterator<Item = (&str, Vec<&SymbolDecl>)> {
        self.modules
            .iter()
            .map(|(k, ix)| (k.as_str(), ix.iter().map(|&i| &self.decls[i]).collect()))
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    /// Finds the declaration with the given OMDoc identity.
    pub fn by_omdoc(&self, cd: &str, name: &str) -> impl Iterator<Item = &SymbolDecl> {
        let (cd, name) = (cd.to_string(), name.to_string());
        self.decls
            .iter()
            .filter(move |d| d.omdoc_name == name && d.cd() == cd)
    }
}

impl CommandTable for Registry {
    fn command_shape(&self, name: &str) -> Option<CommandShape> {
        match self.get(name) {
            Some(d) => Some(CommandShape::opt_then(d.arity)),
            None => Builtins.command_shape(name),
        }
    }

    fn env_shape(&self, name: &str) -> Option<EnvShape> {
        Builtins.env_shape(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG: &str = r"\begin{modsig}{natarith}
  ...
  \symdef[name=multiplication]{nattimesOp}{\*}
  \symvariant{nattimesOp}{cdot}{\mathop\cdot}
  \symdef[assocarg=1,name=multiplication]
    {nattimes}[1]{\assoc[p=600]{\nattimesOp}{#1}}
  \symvariant{nattimes}[1]{cdot}
    {\assoc[p=600]{\nattimesOp[cdot]}{#1}}
...
\end{modsig}";

    #[test]
    fn signature_block_of_the_example() {
        let m = load_modsig(FIG).unwrap();
        assert_eq!(m.name, "natarith");
        assert_eq!(m.symbols.len(), 2);
        let op = &m.symbols[0];
        assert_eq!(
            (op.macro_name.as_str(), op.omdoc_name.as_str(), op.arity),
            ("nattimesOp", "multiplication", 0)
        );
        assert_eq!(op.variants.keys().collect::<Vec<_>>(), ["cdot"]);
        let t = &m.symbols[1];
        assert_eq!(
            (t.macro_name.as_str(), t.arity, t.assoc_arg, t.precedence),
            ("nattimes", 1, Some(1), Some(600))
        );
        assert!(t.is_flexary());
        assert_eq!(t.variants.keys().collect::<Vec<_>>(), ["cdot"]);
    }

    #[test]
    fn empty_body() {
        let m = load_modsig(r"\begin{modsig}{empty}\end{modsig}").unwrap();
        assert!(m.symbols.is_empty());
        assert!(load_modsig("").unwrap().symbols.is_empty());
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            load_modsig(r"\symvariant{nope}{v}{x}"),
            Err(LoadError::UnknownSymbol(n)) if n == "nope"
        ));
        assert!(matches!(
            load_modsig(r"\symdef[name=a,,p=1]{a}{x}"),
            Err(LoadError::MalformedKeys(_))
        ));
        assert!(matches!(
            load_modsig(r"\symdef[=x]{a}{x}"),
            Err(LoadError::MalformedKeys(_))
        ));
        assert!(matches!(
            load_modsig(r"\symdef{a}[two]{#1}"),
            Err(LoadError::BadArity { .. })
        ));
        assert!(matches!(
            load_modsig(r"\symdef{a}[2]{#1}"),
            Err(LoadError::Placeholders { .. })
        ));
        assert!(matches!(
            load_modsig(r"\symdef{a}[1]{#1}\symvariant{a}[1]{v}{#2}"),
            Err(LoadError::Placeholders { .. })
        ));
        let dup = Registry::from_sources([("x", r"\symdef{a}{1}"), ("y", r"\symdef{a}{2}")]);
        assert!(matches!(dup, Err(LoadError::DuplicateMacro(_))));
    }

    #[test]
    fn sample_registry() {
        let reg = Registry::sample();
        assert_eq!(
            reg.get("nattimes").unwrap().cd(),
            "smglom:arithmetics?natarith"
        );
        assert_eq!(reg.get("eq").unwrap().cd(), "smglom:mv?equal");
        assert_eq!(
            reg.get("natdiv")
                .unwrap()
                .notation_for(Some("slash"))
                .unwrap()
                .precedence,
            Some(650)
        );
        assert_eq!(reg.get("natdiv").unwrap().notation.precedence, None);
        assert_eq!(reg.command_shape("inset").unwrap().required(), 2);
        let by: Vec<_> = reg
            .by_omdoc("smglom:arithmetics?natarith", "multiplication")
            .collect();
        assert_eq!(by.len(), 2);
        let total: usize = reg.modules().map(|(_, d)| d.len()).sum();
        assert_eq!(total, reg.len());
    }

    #[test]
    fn manifest_matches_bundled_sample() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/registry/manifest.txt");
        let loaded = Registry::load_manifest(&path).unwrap();
        let sample = Registry::sample();
        assert_eq!(
            loaded.iter().collect::<Vec<_>>(),
            sample.iter().collect::<Vec<_>>()
        );
    }
}
