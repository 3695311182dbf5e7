use std::borrow::Cow;

use super::Mode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArgSpec {
    Optional,
    Required,
}

/// How many arguments a known command takes and in which mode they are read.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandShape {
    pub args: Cow<'static, [ArgSpec]>,
    /// `Some(Mode::Text)` for commands like `\text` whose arguments leave math mode.
    pub arg_mode: Option<Mode>,
}

impl CommandShape {
    pub const fn fixed(args: &'static [ArgSpec]) -> Self {
        CommandShape {
            args: Cow::Borrowed(args),
            arg_mode: None,
        }
    }

    pub const fn text(args: &'static [ArgSpec]) -> Self {
        CommandShape {
            args: Cow::Borrowed(args),
            arg_mode: Some(Mode::Text),
        }
    }

    /// One optional argument followed by `n` required ones.
    pub fn opt_then(n: usize) -> Self {
        let mut args = Vec::with_capacity(n + 1);
        args.push(ArgSpec::Optional);
        args.extend(std::iter::repeat_n(ArgSpec::Required, n));
        CommandShape {
            args: Cow::Owned(args),
            arg_mode: None,
        }
    }

    pub fn required(&self) -> usize {
        self.args
            .iter()
            .filter(|a| **a == ArgSpec::Required)
            .count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvKind {
    /// Body inherits the surrounding mode.
    Normal,
    /// Body is math (`equation`, `align`, ...).
    Math,
    /// Body is kept as raw text up to `\end{name}`.
    Verbatim,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvShape {
    pub kind: EnvKind,
    pub args: Cow<'static, [ArgSpec]>,
}

/// Source of argument shapes for the parser.
///
/// Commands without a shape are parsed greedily: they take directly adjacent
/// `[...]` and `{...}` groups and nothing else.
pub trait CommandTable: Sync {
    fn command_shape(&self, name: &str) -> Option<CommandShape>;

    fn env_shape(&self, name: &str) -> Option<EnvShape> {
        Builtins.env_shape(name)
    }
}

/// Standard LaTeX commands plus the sTeX declaration and markup macros.
#[derive(Clone, Copy, Debug, Default)]
pub struct Builtins;

use ArgSpec::{Optional as O, Required as R};

const NONE: &[ArgSpec] = &[];
const R1: &[ArgSpec] = &[R];
const R2: &[ArgSpec] = &[R, R];
const O1: &[ArgSpec] = &[O];
const OR1: &[ArgSpec] = &[O, R];
const OR2: &[ArgSpec] = &[O, R, R];
const OR3: &[ArgSpec] = &[O, R, R, R];

/// Zero-argument math symbols. Listing them keeps the parser from attaching
/// neighbouring groups to them.
pub(crate) const MATH_SYMBOLS: &[&str] = &[
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
    "pi",
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
    "hbar",
    "aleph",
    "infty",
    "emptyset",
    "varnothing",
    "nabla",
    "partial",
    "cdot",
    "times",
    "div",
    "pm",
    "mp",
    "ast",
    "star",
    "circ",
    "bullet",
    "cap",
    "cup",
    "setminus",
    "wedge",
    "vee",
    "land",
    "lor",
    "neg",
    "lnot",
    "in",
    "notin",
    "ni",
    "subset",
    "subseteq",
    "supset",
    "supseteq",
    "subsetneq",
    "leq",
    "le",
    "geq",
    "ge",
    "neq",
    "ne",
    "equiv",
    "approx",
    "sim",
    "simeq",
    "cong",
    "propto",
    "mid",
    "nmid",
    "parallel",
    "perp",
    "to",
    "mapsto",
    "rightarrow",
    "leftarrow",
    "Rightarrow",
    "Leftarrow",
    "leftrightarrow",
    "Leftrightarrow",
    "iff",
    "implies",
    "forall",
    "exists",
    "nexists",
    "ldots",
    "cdots",
    "vdots",
    "ddots",
    "dots",
    "sum",
    "prod",
    "int",
    "oint",
    "bigcup",
    "bigcap",
    "lim",
    "sup",
    "inf",
    "max",
    "min",
    "log",
    "ln",
    "exp",
    "sin",
    "cos",
    "tan",
    "det",
    "dim",
    "ker",
    "deg",
    "gcd",
    "mod",
    "bmod",
    "langle",
    "rangle",
    "lfloor",
    "rfloor",
    "lceil",
    "rceil",
    "vert",
    "Vert",
    "lvert",
    "rvert",
    "prime",
    "colon",
    "top",
    "bot",
    "vdash",
    "models",
    "quad",
    "qquad",
    "displaystyle",
    "textstyle",
    "scriptstyle",
    "mathstrut",
    "limits",
    "nolimits",
    "left",
    "right",
    "big",
    "Big",
    "bigg",
    "Bigg",
    "bigl",
    "bigr",
    "Bigl",
    "Bigr",
    "middle",
    "lbrace",
    "rbrace",
    "backslash",
    "biggl",
    "biggr",
    "Biggl",
    "Biggr",
    "kern",
    "mkern",
    "hskip",
    "mskip",
    "enspace",
    "thinspace",
    "medspace",
    "thickspace",
    "negthinspace",
    "strut",
    "allowbreak",
    "nobreak",
    "relax",
    "nonumber",
    "notag",
    "scriptscriptstyle",
    "not",
    "oplus",
    "otimes",
    "uparrow",
    "downarrow",
    "hookrightarrow",
    "longrightarrow",
    "Longrightarrow",
    "mapsfrom",
    "lhd",
    "rhd",
    "preceq",
    "succeq",
    "prec",
    "succ",
    "ll",
    "gg",
    "sqcup",
    "sqcap",
    "uplus",
    "amalg",
    "dagger",
    "wp",
    "Re",
    "Im",
    "complement",
    "triangle",
    "angle",
    "square",
    "checkmark",
    "surd",
    "flat",
    "sharp",
    "natural",
    "ldotp",
    "cdotp",
    "lvert",
    "rvert",
    "lVert",
    "rVert",
    "arg",
    "cosh",
    "sinh",
    "tanh",
    "cot",
    "sec",
    "csc",
    "arcsin",
    "arccos",
    "arctan",
    "liminf",
    "limsup",
    "Pr",
    "hom",
    "lg",
    "coprod",
    "bigoplus",
    "bigotimes",
    "bigvee",
    "bigwedge",
    "iint",
    "iiint",
    "mho",
    "Finv",
    "beth",
    "gimel",
    "daleth",
];

fn is_stex_markup(name: &str) -> Option<usize> {
    // \defi, \Defi, \defis, \trefii, \Trefiis, ... ; the number of i's is the arity.
    let rest = name
        .strip_prefix("def")
        .or_else(|| name.strip_prefix("Def"))
        .or_else(|| name.strip_prefix("tref"))
        .or_else(|| name.strip_prefix("Tref"))?;
    let rest = rest.strip_suffix('s').unwrap_or(rest);
    if rest.is_empty() || rest.len() > 3 || !rest.bytes().all(|b| b == b'i') {
        return None;
    }
    Some(rest.len())
}

pub(crate) fn stex_markup_arity(name: &str) -> Option<usize> {
    is_stex_markup(name)
}

impl CommandTable for Builtins {
    fn command_shape(&self, name: &str) -> Option<CommandShape> {
        let shape = match name {
            "symdef" => CommandShape::fixed(&[O, R, O, R]),
            "symvariant" => CommandShape::fixed(&[R, O, R, R]),
            "assoc" | "prefix" | "postfix" => CommandShape::fixed(OR2),
            "infix" => CommandShape::fixed(OR3),
            "frac" | "dfrac" | "tfrac" | "binom" | "textcolor" => CommandShape::fixed(R2),
            "sqrt" => CommandShape::fixed(OR1),
            "mathcal" | "mathbb" | "mathfrak" | "mathscr" | "mathrm" | "mathbf" | "mathit"
            | "mathsf" | "mathtt" | "boldsymbol" | "mathop" | "mathbin" | "mathrel" | "mathord"
            | "overline" | "underline" | "hat" | "widehat" | "bar" | "tilde" | "widetilde"
            | "vec" | "dot" | "ddot" | "overbrace" | "underbrace" | "operatorname" | "hspace"
            | "vspace" | "hphantom" | "vphantom" | "phantom" | "label" | "ref" | "eqref"
            | "pageref" | "url" | "footnote" => CommandShape::fixed(R1),
            "text" | "textrm" | "textbf" | "textit" | "textsf" | "texttt" | "textsc" | "emph"
            | "mbox" | "hbox" | "intertext" => CommandShape::text(R1),
            "cite" | "citep" | "citet" => CommandShape::fixed(OR1),
            "item" => CommandShape::fixed(O1),
            "importmhmodule" | "gimport" | "usemhmodule" | "importmodule" | "usemodule" => {
                CommandShape::fixed(OR1)
            }
            _ if MATH_SYMBOLS.contains(&name) => CommandShape::fixed(NONE),
            _ => {
                let mut s = CommandShape::opt_then(is_stex_markup(name)?);
                s.arg_mode = Some(Mode::Text);
                s
            }
        };
        Some(shape)
    }

    fn env_shape(&self, name: &str) -> Option<EnvShape> {
        let (kind, args): (EnvKind, &'static [ArgSpec]) = match name {
            "verbatim" | "verbatim*" | "Verbatim" | "lstlisting" | "minted" | "comment" => {
                (EnvKind::Verbatim, O1)
            }
            "equation" | "equation*" | "align" | "align*" | "gather" | "gather*" | "multline"
            | "multline*" | "eqnarray" | "eqnarray*" | "displaymath" | "math" | "flalign"
            | "flalign*" => (EnvKind::Math, NONE),
            "modsig" => (EnvKind::Normal, R1),
            "mhmodnl" => (EnvKind::Normal, R2),
            "module" | "definition" | "theorem" | "lemma" | "example" | "proof" | "remark"
            | "corollary" | "sdefinition" | "sexample" | "assertion" | "itemize" | "enumerate"
            | "figure" | "table" => (EnvKind::Normal, O1),
            "array" | "tabular" => (EnvKind::Normal, R1),
            "cases" | "matrix" | "pmatrix" | "bmatrix" => (EnvKind::Normal, NONE),
            "minipage" => (EnvKind::Normal, OR1),
            "document" | "center" | "abstract" | "quote" => (EnvKind::Normal, NONE),
            _ => return None,
        };
        Some(EnvShape {
            kind,
            args: Cow::Borrowed(args),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stex_markup_names() {
        assert_eq!(is_stex_markup("defi"), Some(1));
        assert_eq!(is_stex_markup("Defis"), Some(1));
        assert_eq!(is_stex_markup("trefiis"), Some(2));
        assert_eq!(is_stex_markup("defiii"), Some(3));
        assert_eq!(is_stex_markup("definition"), None);
        assert_eq!(is_stex_markup("def"), None);
    }
}
