use stex_disamb::latex::{self, parse_math};
use stex_disamb::normalize::{normalize_math, NormalizationConfig};
use stex_disamb::registry::{expand_math, load_modsig, Registry};
use stex_disamb::semantics::{omdoc_equal, term_to_omdoc, Semantics};
use stex_disamb::term::{Lattice, SymbolSet};

const NATARITH: &str = include_str!("../data/registry/arithmetics/natarith.tex");
const CANONICAL: &str = include_str!("fixtures/product.omdoc.xml");

fn expand_with(reg: &Registry, src: &str) -> String {
    let norm = NormalizationConfig::default();
    let m = parse_math(src, reg).unwrap();
    latex::render(&normalize_math(&expand_math(&m, reg).unwrap(), &norm))
}

#[test]
fn multiplication_variants_expand_from_the_signature_alone() {
    let module = load_modsig(NATARITH).unwrap();
    let reg = Registry::from_modules(vec![module]).unwrap();
    assert_eq!(expand_with(&reg, r"\nattimes[cdot]{a,b}"), r"a\cdot b");
    assert_eq!(expand_with(&reg, r"\nattimes{a,b}"), r"a\*b");
    assert_eq!(expand_with(&reg, r"\nattimes[x]{a,b}"), r"a\times b");
}

#[test]
fn multiplication_variants_expand_in_the_sample_registry() {
    let reg = Registry::sample();
    assert_eq!(expand_with(&reg, r"\nattimes[cdot]{a,b}"), r"a\cdot b");
    assert_eq!(expand_with(&reg, r"\nattimes{a,b}"), r"a\*b");
    assert_eq!(expand_with(&reg, r"\nattimes[x]{a,b}"), r"a\times b");
}

#[test]
fn equation_becomes_the_canonical_omdoc_tree() {
    let reg = Registry::sample();
    let (symbols, lattice, norm) = (
        SymbolSet::core(),
        Lattice::default(),
        NormalizationConfig::default(),
    );
    let sem = Semantics::new(&reg, &symbols, &lattice, &norm);
    let math = parse_math(r"\eq{\nattimes[cdot]{x,0},0}", &reg).unwrap();
    let t = sem.stex_to_omdoc_term(&math).unwrap();
    let xml = term_to_omdoc(&t);
    assert!(omdoc_equal(&xml, CANONICAL), "{xml}");
    assert!(!omdoc_equal(&xml.replace("multiplication", "addition"), CANONICAL));
}
