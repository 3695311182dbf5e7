//! Random well-typed terms over the typed symbols, verbalized as sTeX
//! sentences for data augmentation.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{extract_entry, stable_hash, CorpusEntry, CorpusError};
use crate::normalize::NormalizationConfig;
use crate::registry::Registry;
use crate::semantics::{term_to_stex, SemanticError};
use crate::term::{Lattice, SymbolSet, Term, TypeExpr, TypedSymbol};

const DEFAULT_VERBALIZATIONS: &str = include_str!("../data/typed/verbalizations.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub p_var: f64,
    pub p_fun: f64,
    pub p_up: f64,
    pub fun_decay: f64,
    pub up_decay: f64,
    pub subtype_prob: f64,
    /// Chance of each further argument to a flexary symbol (at most two).
    pub p_extra_arg: f64,
    pub max_depth: usize,
    pub variable_pool: Vec<String>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            p_var: 0.4,
            p_fun: 0.4,
            p_up: 0.5,
            fun_decay: 0.5,
            up_decay: 0.5,
            subtype_prob: 0.3,
            p_extra_arg: 0.3,
            max_depth: 6,
            variable_pool: default_pool(),
            seed: 0,
        }
    }
}

fn default_pool() -> Vec<String> {
    let mut pool = Vec::new();
    for deco in ["", "'", "_0", "_1"] {
        for base in ["a", "b", "n", "m", "x", "y", "k", "\\ell"] {
            pool.push(format!("{base}{deco}"));
        }
    }
    for c in ["A", "B", "C", "F", "G"] {
        pool.push(format!("\\mathcal{{{c}}}"));
    }
    pool
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let probs = [
            ("p_var", self.p_var),
            ("p_fun", self.p_fun),
            ("p_up", self.p_up),
            ("subtype_prob", self.subtype_prob),
            ("p_extra_arg", self.p_extra_arg),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if self.p_var + self.p_fun > 1.0 + 1e-9 {
            return Err(SynthError::Config("p_var + p_fun exceeds 1".into()));
        }
        for (name, d) in [("fun_decay", self.fun_decay), ("up_decay", self.up_decay)] {
            if !(0.0..1.0).contains(&d) {
                return Err(SynthError::Config(format!("{name} = {d} must lie in [0, 1)")));
            }
        }
        if self.max_depth == 0 {
            return Err(SynthError::Config("max_depth must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown start symbol `{0}`")]
    UnknownSymbol(String),
    #[error("cannot build a term of type {ty} for `{symbol}`")]
    GenerationFailure { symbol: String, ty: TypeExpr },
    #[error("no verbalization for type {0}")]
    MissingVerbalization(String),
    #[error("symbol `{0}` has no sTeX alignment")]
    UnalignedSymbol(String),
    #[error("per-symbol count must be at least 1")]
    ZeroPerSymbol,
    #[error("invalid verbalizations: {0}")]
    Templates(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Independent random stream for one generation task.
pub fn rng_for(seed: u64, symbol: &str, index: usize) -> ChaCha8Rng {
    let mixed = stable_hash(&format!("{seed}:{symbol}:{index}"));
    ChaCha8Rng::seed_from_u64(mixed)
}

struct Generator<'a, R> {
    symbols: &'a SymbolSet,
    lattice: &'a Lattice,
    cfg: &'a SynthConfig,
    rng: &'a mut R,
    used: Vec<String>,
    start: &'a str,
}

struct Options<'a> {
    w_var: f64,
    w_fun: f64,
    w_const: f64,
    funs: Vec<&'a TypedSymbol>,
    consts: Vec<&'a TypedSymbol>,
}

impl Options<'_> {
    fn any(&self) -> bool {
        self.w_var + self.w_fun + self.w_const > 0.0
    }
}

impl<'a, R: Rng> Generator<'a, R> {
    fn fail(&self, ty: &TypeExpr) -> SynthError {
        SynthError::GenerationFailure {
            symbol: self.start.to_string(),
            ty: ty.clone(),
        }
    }

    fn options(&self, ty: &TypeExpr, depth: usize) -> Options<'a> {
        let cfg = self.cfg;
        let var_ok = cfg.p_var > 0.0 && self.used.len() < cfg.variable_pool.len();
        let p_fun = if depth >= cfg.max_depth {
            0.0
        } else {
            cfg.p_fun * cfg.fun_decay.powi(depth as i32 - 1)
        };
        let p_const = (1.0 - cfg.p_var - p_fun).max(0.0);
        let funs: Vec<_> = self
            .symbols
            .iter()
            .filter(|s| s.is_function() && s.result() == ty)
            .collect();
        let consts: Vec<_> = self
            .symbols
            .iter()
            .filter(|s| !s.is_function() && &s.ty == ty)
            .collect();
        let f = p_fun * funs.len() as f64;
        let c = p_const * consts.len() as f64;
        let w_var = if var_ok { cfg.p_var } else { 0.0 };
        let rest = 1.0 - w_var;
        let (w_fun, w_const) = if f + c > 0.0 {
            (rest * f / (f + c), rest * c / (f + c))
        } else {
            (0.0, 0.0)
        };
        Options {
            w_var,
            w_fun,
            w_const,
            funs,
            consts,
        }
    }

    /// A term whose type is `ty` or, with `subtype_prob`, a strict subtype of it.
    fn fill(&mut self, ty: &TypeExpr, depth: usize) -> Result<Term, SynthError> {
        let target = match ty {
            TypeExpr::Base(name) => {
                let subs: Vec<TypeExpr> = self
                    .lattice
                    .strict_subtypes(name)
                    .into_iter()
                    .map(TypeExpr::base)
                    .filter(|t| self.options(t, depth).any())
                    .collect();
                let own = self.options(ty, depth).any();
                let pick_sub = !subs.is_empty() && (!own || self.rng.gen_bool(self.cfg.subtype_prob));
                if pick_sub {
                    subs.choose(self.rng).unwrap().clone()
                } else {
                    ty.clone()
                }
            }
            TypeExpr::Fun(..) => ty.clone(),
        };
        let o = self.options(&target, depth);
        if !o.any() {
            return Err(self.fail(&target));
        }
        let total = o.w_var + o.w_fun + o.w_const;
        let x = self.rng.gen::<f64>() * total;
        if x < o.w_var {
            Ok(self.fresh_var(target))
        } else if x < o.w_var + o.w_fun && !o.funs.is_empty() {
            let f = *o.funs.choose(self.rng).unwrap();
            self.apply(f, depth)
        } else if !o.consts.is_empty() {
            let c = *o.consts.choose(self.rng).unwrap();
            Ok(Term::typed(&c.name))
        } else {
            Err(self.fail(&target))
        }
    }

    fn fresh_var(&mut self, ty: TypeExpr) -> Term {
        let free: Vec<&String> = self
            .cfg
            .variable_pool
            .iter()
            .filter(|n| !self.used.contains(n))
            .collect();
        let name = (*free.choose(self.rng).expect("caller checked the pool")).clone();
        self.used.push(name.clone());
        Term::typed_var(&name, ty)
    }

    fn arg_types(&mut self, f: &TypedSymbol) -> Vec<TypeExpr> {
        let mut tys = f.params().to_vec();
        if f.flexary {
            let last = tys.last().unwrap().clone();
            for _ in 0..2 {
                if !self.rng.gen_bool(self.cfg.p_extra_arg) {
                    break;
                }
                tys.push(last.clone());
            }
        }
        tys
    }

    fn apply(&mut self, f: &TypedSymbol, depth: usize) -> Result<Term, SynthError> {
        let tys = self.arg_types(f);
        let args = tys
            .iter()
            .map(|t| self.fill(t, depth + 1))
            .collect::<Result<_, _>>()?;
        Ok(Term::apply(Term::typed(&f.name), args))
    }

    fn generate(&mut self, start: &TypedSymbol) -> Result<Term, SynthError> {
        let (mut term, mut ty) = if start.is_function() {
            (self.apply(start, 0)?, start.result().clone())
        } else {
            (Term::typed(&start.name), start.ty.clone())
        };
        let mut k = 0;
        while k < self.cfg.max_depth
            && self
                .rng
                .gen_bool(self.cfg.p_up * self.cfg.up_decay.powi(k as i32))
        {
            let enclosing: Vec<(&TypedSymbol, Vec<usize>)> = self
                .symbols
                .iter()
                .filter_map(|f| {
                    let slots: Vec<usize> = (0..f.params().len())
                        .filter(|&i| self.lattice.is_subtype(&ty, &f.params()[i]))
                        .collect();
                    (!slots.is_empty()).then_some((f, slots))
                })
                .collect();
            let Some((f, slots)) = enclosing.choose(self.rng) else {
                break;
            };
            let slot = *slots.choose(self.rng).unwrap();
            let tys = self.arg_types(f);
            let mut args = Vec::with_capacity(tys.len());
            for (i, t) in tys.iter().enumerate() {
                if i == slot {
                    args.push(std::mem::replace(&mut term, Term::IntLit(0)));
                } else {
                    args.push(self.fill(t, 1)?);
                }
            }
            term = Term::apply(Term::typed(&f.name), args);
            ty = f.result().clone();
            k += 1;
        }
        Ok(term)
    }
}

/// A random well-typed term containing `start`. Variables carry their types.
pub fn gen_term(
    symbols: &SymbolSet,
    lattice: &Lattice,
    start: &str,
    cfg: &SynthConfig,
    rng: &mut impl Rng,
) -> Result<Term, SynthError> {
    let s = symbols
        .get(start)
        .ok_or_else(|| SynthError::UnknownSymbol(start.to_string()))?;
    Generator {
        symbols,
        lattice,
        cfg,
        rng,
        used: Vec::new(),
        start,
    }
    .generate(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Prefixed,
    Suffixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Forms {
    pub singular: Vec<String>,
    pub plural: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeVerbalizations {
    pub prefixed: Forms,
    pub suffixed: Forms,
}

/// A sentence around the term: `text` introduces the variables in `{intro}`,
/// `closed` is used when there are none. `{t}` is the term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub form: Form,
    pub text: String,
    pub closed: String,
}

/// Templates use `@v` for one variable name (inside math the template
/// opens itself) and `@vs` for a list of variables, each in its own math.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerbalizationSet {
    pub types: BTreeMap<String, TypeVerbalizations>,
    pub frames: Vec<Frame>,
}

impl Default for VerbalizationSet {
    fn default() -> Self {
        VerbalizationSet::from_json(DEFAULT_VERBALIZATIONS).expect("bundled verbalizations are valid")
    }
}

impl VerbalizationSet {
    pub fn from_json(src: &str) -> Result<Self, SynthError> {
        let v: VerbalizationSet =
            serde_json::from_str(src).map_err(|e| SynthError::Templates(e.to_string()))?;
        v.validate()?;
        Ok(v)
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let src = std::fs::read_to_string(path).map_err(|e| SynthError::Templates(e.to_string()))?;
        VerbalizationSet::from_json(&src)
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Templates(m));
        if self.frames.is_empty() {
            return bad("no frames".into());
        }
        for f in &self.frames {
            if !f.text.contains("{intro}") || !f.text.contains("{t}") || !f.closed.contains("{t}") {
                return bad(format!("frame `{}` lacks a hole", f.text));
            }
        }
        for (ty, v) in &self.types {
            for forms in [&v.prefixed, &v.suffixed] {
                if forms.singular.iter().any(|s| !s.contains("@v") || s.contains("@vs")) {
                    return bad(format!("singular template for {ty} needs `@v`"));
                }
                if forms.plural.iter().any(|s| !s.contains("@vs")) {
                    return bad(format!("plural template for {ty} needs `@vs`"));
                }
            }
        }
        Ok(())
    }
}

fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// Renders `t` as sTeX with a random notation variant per occurrence and
/// wraps it in a random frame that introduces its free variables.
pub fn verbalize(
    t: &Term,
    symbols: &SymbolSet,
    templates: &VerbalizationSet,
    rng: &mut impl Rng,
) -> Result<String, SynthError> {
    let mut pick_variant = |s: &TypedSymbol| -> Option<String> {
        let choices = s.alignment.as_ref()?.variant_choices();
        choices.choose(rng).copied().flatten().map(str::to_string)
    };
    let stex = term_to_stex(t, symbols, &mut pick_variant).map_err(|e| match e {
        SemanticError::UnalignedSymbol(n) => SynthError::UnalignedSymbol(n),
        other => SynthError::UnalignedSymbol(other.to_string()),
    })?;
    let math = format!("${stex}$");

    let mut groups: Vec<(String, Vec<&str>)> = Vec::new();
    for (name, ty) in t.free_vars() {
        let ty = ty.map_or_else(|| "?".to_string(), TypeExpr::to_string);
        match groups.iter_mut().find(|(t, _)| *t == ty) {
            Some((_, names)) => names.push(name),
            None => groups.push((ty, vec![name])),
        }
    }
    let frame = templates.frames.choose(rng).expect("validated non-empty");
    if groups.is_empty() {
        return Ok(frame.closed.replace("{t}", &math));
    }
    let mut intros = Vec::with_capacity(groups.len());
    for (ty, names) in &groups {
        let v = templates
            .types
            .get(ty)
            .ok_or_else(|| SynthError::MissingVerbalization(ty.clone()))?;
        let forms = match frame.form {
            Form::Prefixed => &v.prefixed,
            Form::Suffixed => &v.suffixed,
        };
        let intro = if let [single] = names[..] {
            forms
                .singular
                .choose(rng)
                .ok_or_else(|| SynthError::MissingVerbalization(ty.clone()))?
                .replace("@v", single)
        } else {
            let list: Vec<String> = names.iter().map(|n| format!("${n}$")).collect();
            forms
                .plural
                .choose(rng)
                .ok_or_else(|| SynthError::MissingVerbalization(ty.clone()))?
                .replace("@vs", &join_list(&list))
        };
        intros.push(intro);
    }
    Ok(frame
        .text
        .replace("{intro}", &join_list(&intros))
        .replace("{t}", &math))
}

/// Everything synthesis draws on.
pub struct Synthesizer<'a> {
    pub symbols: &'a SymbolSet,
    pub lattice: &'a Lattice,
    pub templates: &'a VerbalizationSet,
    pub reg: &'a Registry,
    pub norm: &'a NormalizationConfig,
    pub cfg: &'a SynthConfig,
}

#[derive(Debug)]
pub struct SynthFailure {
    pub symbol: String,
    pub index: usize,
    pub error: SynthError,
}

#[derive(Debug, Default)]
pub struct SynthOutput {
    pub entries: Vec<CorpusEntry>,
    pub failures: Vec<SynthFailure>,
}

impl Synthesizer<'_> {
    /// Term and sentence for task `(start, index)`.
    pub fn sentence(&self, start: &str, index: usize) -> Result<(Term, String), SynthError> {
        let mut rng = rng_for(self.cfg.seed, start, index);
        let t = gen_term(self.symbols, self.lattice, start, self.cfg, &mut rng)?;
        let s = verbalize(&t, self.symbols, self.templates, &mut rng)?;
        Ok((t, s))
    }

    pub fn entry(&self, start: &str, index: usize) -> Result<CorpusEntry, SynthError> {
        let (_, s) = self.sentence(start, index)?;
        let mut e = extract_entry(&s, &format!("synth:{start}#{index}"), self.reg, self.norm)?;
        e.synthetic = true;
        Ok(e)
    }

    /// `per_symbol` entries for every aligned symbol, sorted by symbol name
    /// and index. Failed tasks are logged and reported, not retried.
    pub fn corpus(&self, per_symbol: usize) -> Result<SynthOutput, SynthError> {
        if per_symbol == 0 {
            return Err(SynthError::ZeroPerSymbol);
        }
        self.cfg.validate()?;
        let mut starts: Vec<&str> = self
            .symbols
            .iter()
            .filter(|s| s.alignment.is_some())
            .map(|s| s.name.as_str())
            .collect();
        starts.sort_unstable();
        let tasks: Vec<(&str, usize)> = starts
            .iter()
            .flat_map(|s| (0..per_symbol).map(move |i| (*s, i)))
            .collect();
        let results: Vec<_> = tasks
            .par_iter()
            .map(|&(s, i)| (s, i, self.entry(s, i)))
            .collect();
        let mut out = SynthOutput::default();
        for (symbol, index, r) in results {
            match r {
                Ok(e) => out.entries.push(e),
                Err(error) => {
                    log::warn!("synth:{symbol}#{index}: {error}");
                    out.failures.push(SynthFailure {
                        symbol: symbol.to_string(),
                        index,
                        error,
                    });
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::infer_type;

    fn ty(s: &str) -> TypeExpr {
        s.parse().unwrap()
    }

    fn zero_succ() -> SymbolSet {
        SymbolSet::from_jsonl(
            "{\"name\":\"zero\",\"type\":\"Nat\"}\n{\"name\":\"succ\",\"type\":\"(-> Nat Nat)\"}",
        )
        .unwrap()
    }

    #[test]
    fn single_choice_at_every_step() {
        let cfg = SynthConfig {
            p_var: 0.0,
            p_fun: 0.0,
            p_up: 0.0,
            ..SynthConfig::default()
        };
        let t = gen_term(&zero_succ(), &Lattice::default(), "succ", &cfg, &mut rng_for(1, "succ", 0)).unwrap();
        assert_eq!(t, Term::apply(Term::typed("succ"), vec![Term::typed("zero")]));
    }

    #[test]
    fn uninhabited_parameter_fails() {
        let set = SymbolSet::from_jsonl("{\"name\":\"f\",\"type\":\"(-> Set Nat)\"}").unwrap();
        let cfg = SynthConfig {
            p_var: 0.0,
            ..SynthConfig::default()
        };
        let err = gen_term(&set, &Lattice::default(), "f", &cfg, &mut rng_for(0, "f", 0)).unwrap_err();
        assert!(matches!(err, SynthError::GenerationFailure { .. }));
        assert!(matches!(
            gen_term(&set, &Lattice::default(), "g", &cfg, &mut rng_for(0, "g", 0)),
            Err(SynthError::UnknownSymbol(_))
        ));
    }

    #[test]
    fn all_variables_when_p_var_is_one() {
        let cfg = SynthConfig {
            p_var: 1.0,
            p_fun: 0.0,
            p_up: 0.0,
            ..SynthConfig::default()
        };
        let set = SymbolSet::core();
        for i in 0..50 {
            let t = gen_term(&set, &Lattice::default(), "nattimes", &cfg, &mut rng_for(3, "nattimes", i)).unwrap();
            let Term::Apply { head, args } = t else { panic!() };
            assert_eq!(*head, Term::typed("nattimes"));
            assert!(args.iter().all(|a| matches!(a, Term::Var { .. })));
        }
    }

    #[test]
    fn no_up_steps_keep_start_at_root() {
        let cfg = SynthConfig {
            p_up: 0.0,
            ..SynthConfig::default()
        };
        let set = SymbolSet::core();
        for i in 0..100 {
            let t = gen_term(&set, &Lattice::default(), "realuminus", &cfg, &mut rng_for(5, "x", i)).unwrap();
            let Term::Apply { head, .. } = t else { panic!() };
            assert_eq!(*head, Term::typed("realuminus"));
        }
    }

    #[test]
    fn generated_terms_are_well_typed_and_contain_start() {
        let set = SymbolSet::core();
        let lattice = Lattice::default();
        let cfg = SynthConfig::default();
        for s in set.iter() {
            for i in 0..100 {
                let t = gen_term(&set, &lattice, &s.name, &cfg, &mut rng_for(2, &s.name, i)).unwrap();
                assert!(t.contains_sym(&s.name), "{t}");
                infer_type(&t, &set, &lattice).unwrap_or_else(|e| panic!("{t}: {e}"));
                let names: Vec<_> = t.free_vars().into_iter().map(|(n, _)| n).collect();
                let mut uniq = names.clone();
                uniq.sort_unstable();
                uniq.dedup();
                assert_eq!(uniq.len(), names.len());
            }
        }
    }

    #[test]
    fn subtypes_fill_real_slots_never_the_reverse() {
        let set = SymbolSet::core();
        let lattice = Lattice::default();
        let cfg = SynthConfig {
            p_up: 0.0,
            subtype_prob: 0.9,
            ..SynthConfig::default()
        };
        let mut saw_nat_under_real = false;
        for i in 0..300 {
            for start in ["realplus", "natplus"] {
                let t = gen_term(&set, &lattice, start, &cfg, &mut rng_for(11, start, i)).unwrap();
                assert!(infer_type(&t, &set, &lattice).is_ok(), "{t}");
                if let Term::Apply { args, .. } = &t {
                    for a in args {
                        let found = match a {
                            Term::Var { ty, .. } => ty.clone().unwrap(),
                            other => infer_type(other, &set, &lattice).unwrap().ty.unwrap(),
                        };
                        if start == "natplus" {
                            assert_eq!(found, ty("Nat"));
                        } else if found == ty("Nat") {
                            saw_nat_under_real = true;
                        }
                    }
                }
            }
        }
        assert!(saw_nat_under_real);
    }

    #[test]
    fn nested_negation_shape_is_reachable() {
        // -(-(S(S(n)))) with one free natural number.
        let target = Term::apply(
            Term::typed("realuminus"),
            vec![Term::apply(
                Term::typed("realuminus"),
                vec![Term::apply(
                    Term::typed("natsucc"),
                    vec![Term::apply(Term::typed("natsucc"), vec![Term::typed_var("n", ty("Nat"))])],
                )],
            )],
        );
        let set = SymbolSet::core();
        let lattice = Lattice::default();
        let cfg = SynthConfig::default();
        fn shape(t: &Term) -> Term {
            match t {
                Term::Var { .. } => Term::var("_"),
                Term::Apply { head, args } => Term::apply(shape(head), args.iter().map(shape).collect()),
                other => other.clone(),
            }
        }
        let found = (0..200_000).any(|i| {
            let t = gen_term(&set, &lattice, "natsucc", &cfg, &mut rng_for(0, "natsucc", i)).unwrap();
            shape(&t) == shape(&target)
        });
        assert!(found);
    }

    #[test]
    fn frames_choose_forms() {
        let set = SymbolSet::core();
        let templates = VerbalizationSet::default();
        let t = Term::apply(Term::typed("natsucc"), vec![Term::typed_var("x", ty("Nat"))]);
        let mut seen_prefixed = false;
        let mut seen_suffixed = false;
        for i in 0..200 {
            let s = verbalize(&t, &set, &templates, &mut rng_for(0, "v", i)).unwrap();
            assert!(s.ends_with(r"$\natsucc{x}$."), "{s}");
            if s.starts_with("Assume we have") {
                seen_prefixed = true;
                let forms = &templates.types["Nat"].prefixed.singular;
                assert!(forms.iter().any(|f| s.contains(&f.replace("@v", "x"))), "{s}");
            }
            if s.starts_with("Let") {
                seen_suffixed = true;
                let forms = &templates.types["Nat"].suffixed.singular;
                assert!(forms.iter().any(|f| s.contains(&f.replace("@v", "x"))), "{s}");
            }
        }
        assert!(seen_prefixed && seen_suffixed);
    }

    #[test]
    fn plural_and_closed_sentences() {
        let set = SymbolSet::core();
        let templates = VerbalizationSet::default();
        let t = Term::apply(
            Term::typed("natplus"),
            vec![Term::typed_var("a", ty("Nat")), Term::typed_var("b", ty("Nat")), Term::typed_var("c", ty("Int"))],
        );
        let s = verbalize(&t, &set, &templates, &mut rng_for(0, "p", 0)).unwrap();
        assert!(s.contains("$a$ and $b$"), "{s}");
        let closed = Term::apply(Term::typed("natsucc"), vec![Term::typed("natzero")]);
        let s = verbalize(&closed, &set, &templates, &mut rng_for(0, "c", 0)).unwrap();
        assert!(templates.frames.iter().any(|f| f.closed.replace("{t}", r"$\natsucc{\natzero}$") == s), "{s}");
    }

    #[test]
    fn verbalization_errors() {
        let set = SymbolSet::core();
        let templates = VerbalizationSet::default();
        let t = Term::apply(Term::typed("natsucc"), vec![Term::typed_var("p", ty("Prop"))]);
        assert!(matches!(
            verbalize(&t, &set, &templates, &mut rng_for(0, "e", 0)),
            Err(SynthError::MissingVerbalization(_))
        ));
        let t = Term::typed("nope");
        assert!(matches!(
            verbalize(&t, &set, &templates, &mut rng_for(0, "e", 0)),
            Err(SynthError::UnalignedSymbol(_))
        ));
        assert!(VerbalizationSet::from_json(r#"{"types":{},"frames":[]}"#).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig::default().validate().is_ok());
        let bad = SynthConfig {
            p_var: 0.7,
            p_fun: 0.7,
            ..SynthConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SynthConfig {
            fun_decay: 1.0,
            ..SynthConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn corpus_is_deterministic_and_valid() {
        let reg = Registry::sample();
        let norm = NormalizationConfig::default();
        let symbols = SymbolSet::core();
        let lattice = Lattice::default();
        let templates = VerbalizationSet::default();
        let cfg = SynthConfig {
            seed: 7,
            ..SynthConfig::default()
        };
        let syn = Synthesizer {
            symbols: &symbols,
            lattice: &lattice,
            templates: &templates,
            reg: &reg,
            norm: &norm,
            cfg: &cfg,
        };
        let a = syn.corpus(10).unwrap();
        let b = syn.corpus(10).unwrap();
        assert!(a.failures.is_empty(), "{:?}", a.failures);
        assert_eq!(a.entries.len(), 120);
        assert_eq!(a.entries, b.entries);
        for e in &a.entries {
            assert!(e.synthetic);
            crate::corpus::check_entry(e, &reg, &norm).unwrap();
        }
        assert!(matches!(syn.corpus(0), Err(SynthError::ZeroPerSymbol)));
    }
}
