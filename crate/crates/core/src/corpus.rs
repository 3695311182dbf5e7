//! Parallel sTeX/LaTeX corpus: fragmentation, entry extraction and
//! training-line serialization.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::latex::{
    self, Builtins, CommandTable, EnvKind, LatexNode, MathDelimiter, MathSegment, ParseError,
};
use crate::normalize::{normalize, normalize_math, NormalizationConfig};
use crate::registry::{expand, expand_math, ExpandError, Registry};

/// Separator token between the parts of a training line.
pub const SEP: &str = "<s>";

/// Fragments end after the first math segment that closes inside this
/// window (in characters from the fragment start).
pub const CUT_WINDOW: (usize, usize) = (350, 650);

const TRAILING_PUNCT: &[char] = &['.', ',', ';', ':', '!', '?'];

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub s_latex: String,
    pub s_stex: String,
    pub math_latex: Vec<String>,
    pub math_stex: Vec<String>,
    pub source_id: String,
    pub synthetic: bool,
}

impl CorpusEntry {
    pub fn n_s(&self) -> usize {
        self.math_stex.len()
    }

    /// Document part of `source_id`, i.e. everything before the last `#`.
    pub fn document(&self) -> &str {
        self.source_id
            .rsplit_once('#')
            .map_or(&self.source_id, |(d, _)| d)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{source_id}: {err}")]
    Parse { source_id: String, err: ParseError },
    #[error("{source_id}: {err}")]
    Expand { source_id: String, err: ExpandError },
    #[error("{source_id}: fragment contains no math")]
    NoMath { source_id: String },
    #[error("{source_id}: fragment contains `<s>` or a line break after normalization")]
    Reserved { source_id: String },
    #[error("{source_id}: expansion changed the number of math segments ({stex} vs {latex})")]
    Misaligned {
        source_id: String,
        stex: usize,
        latex: usize,
    },
}

impl CorpusError {
    pub fn source_id(&self) -> &str {
        match self {
            CorpusError::Parse { source_id, .. }
            | CorpusError::Expand { source_id, .. }
            | CorpusError::NoMath { source_id }
            | CorpusError::Reserved { source_id }
            | CorpusError::Misaligned { source_id, .. } => source_id,
        }
    }
}

/// Replaces environments by their bodies: math environments become `\[...\]`,
/// verbatim environments disappear, everything else keeps only its body.
pub fn flatten(nodes: &[LatexNode]) -> Vec<LatexNode> {
    let mut out = Vec::with_capacity(nodes.len());
    for node in nodes {
        match node {
            LatexNode::Environment(e) => {
                match Builtins
                    .env_shape(&e.name)
                    .map_or(EnvKind::Normal, |s| s.kind)
                {
                    EnvKind::Verbatim => {}
                    EnvKind::Math => out.push(LatexNode::Math(MathSegment {
                        delimiter: MathDelimiter::Bracket,
                        body: e.body.clone(),
                    })),
                    EnvKind::Normal => out.extend(flatten(&e.body)),
                }
            }
            LatexNode::Group(ch) => out.push(LatexNode::Group(flatten(ch))),
            other => out.push(other.clone()),
        }
    }
    out
}

/// Cuts a document into fragments of roughly 500 characters that preferably
/// end in a math segment. Fragments without math are dropped.
pub fn fragment(document: &str) -> Vec<String> {
    let nodes = match latex::parse(document) {
        Ok(n) => n,
        Err(e) => {
            log::warn!("document does not parse: {e}");
            return Vec::new();
        }
    };
    let flat = latex::render(&flatten(&nodes));
    let nodes = match latex::parse(&flat) {
        Ok(n) => n,
        Err(e) => {
            log::warn!("flattened document does not parse: {e}");
            return Vec::new();
        }
    };

    // Byte offset paired with character offset.
    type Pos = (usize, usize);
    let mut math_spans: Vec<(Pos, Pos)> = Vec::new();
    let mut math_ends: Vec<Pos> = Vec::new();
    let mut breaks: Vec<Pos> = Vec::new();
    let (mut byte, mut ch) = (0, 0);
    for (i, node) in nodes.iter().enumerate() {
        let text = node.render();
        let end = (byte + text.len(), ch + text.chars().count());
        match node {
            LatexNode::Math(_) => {
                math_spans.push(((byte, ch), end));
                let punct = match nodes.get(i + 1) {
                    Some(LatexNode::Text(t)) => {
                        t.len() - t.trim_start_matches(TRAILING_PUNCT).len()
                    }
                    _ => 0,
                };
                // Trailing punctuation is ASCII, so bytes and chars agree.
                math_ends.push((end.0 + punct, end.1 + punct));
            }
            LatexNode::Whitespace(_) => breaks.push((byte, ch)),
            _ => {}
        }
        (byte, ch) = end;
    }
    let total: Pos = (byte, ch);
    breaks.push(total);

    let skip_ws = |mut p: Pos| {
        for c in flat[p.0..].chars() {
            if !c.is_whitespace() {
                break;
            }
            p = (p.0 + c.len_utf8(), p.1 + 1);
        }
        p
    };

    let (lo, hi) = CUT_WINDOW;
    let mut out = Vec::new();
    let mut start = skip_ws((0, 0));
    while start.0 < total.0 {
        let cut = math_ends
            .iter()
            .find(|e| e.0 > start.0 && (lo..=hi).contains(&(e.1 - start.1)))
            .copied()
            .or((total.1 - start.1 <= hi).then_some(total))
            .or_else(|| {
                breaks
                    .iter()
                    .rev()
                    .find(|b| b.0 > start.0 && b.1 - start.1 <= hi)
                    .copied()
            })
            .or_else(|| breaks.iter().find(|b| b.0 > start.0).copied())
            .unwrap_or(total);
        let has_math = math_spans
            .iter()
            .any(|(s, e)| s.0 >= start.0 && e.0 <= cut.0);
        if has_math {
            out.push(flat[start.0..cut.0].trim_end().to_string());
        }
        start = skip_ws(cut);
    }
    out
}

/// Builds the 4-tuple for one fragment: the normalized sTeX sentence, its
/// normalized expansion, and the per-segment math bodies of both.
pub fn extract_entry(
    sentence: &str,
    source_id: &str,
    reg: &Registry,
    cfg: &NormalizationConfig,
) -> Result<CorpusEntry, CorpusError> {
    let sid = || source_id.to_string();
    let nodes = latex::parse_with(sentence, reg).map_err(|err| CorpusError::Parse {
        source_id: sid(),
        err,
    })?;
    let stex = normalize(&nodes, cfg);
    let expanded = expand(&stex, reg).map_err(|err| CorpusError::Expand {
        source_id: sid(),
        err,
    })?;
    let plain = normalize(&expanded, cfg);

    let bodies = |nodes: &[LatexNode]| -> Vec<String> {
        latex::find_math(nodes)
            .iter()
            .map(|m| latex::render(&m.segment.body))
            .collect()
    };
    let entry = CorpusEntry {
        s_latex: latex::render(&plain),
        s_stex: latex::render(&stex),
        math_latex: bodies(&plain),
        math_stex: bodies(&stex),
        source_id: sid(),
        synthetic: false,
    };
    if entry.math_stex.is_empty() {
        return Err(CorpusError::NoMath { source_id: sid() });
    }
    if entry.math_stex.len() != entry.math_latex.len() {
        return Err(CorpusError::Misaligned {
            source_id: sid(),
            stex: entry.math_stex.len(),
            latex: entry.math_latex.len(),
        });
    }
    let reserved = |s: &String| s.contains(SEP) || s.contains('\n');
    if reserved(&entry.s_latex) || reserved(&entry.s_stex) {
        return Err(CorpusError::Reserved { source_id: sid() });
    }
    Ok(entry)
}

/// Fragments a document and extracts an entry per fragment. Fragment ids
/// are `{doc_id}#{k}`.
pub fn extract_document(
    document: &str,
    doc_id: &str,
    reg: &Registry,
    cfg: &NormalizationConfig,
) -> (Vec<CorpusEntry>, Vec<CorpusError>) {
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (k, frag) in fragment(document).iter().enumerate() {
        match extract_entry(frag, &format!("{doc_id}#{k}"), reg, cfg) {
            Ok(e) => entries.push(e),
            Err(e) => errors.push(e),
        }
    }
    (entries, errors)
}

/// Checks the structural invariants of an entry. Returns a description of
/// the first violation.
pub fn check_entry(
    entry: &CorpusEntry,
    reg: &Registry,
    cfg: &NormalizationConfig,
) -> Result<(), String> {
    if entry.math_latex.len() != entry.math_stex.len() {
        return Err("math_latex and math_stex differ in length".into());
    }
    if entry.math_stex.is_empty() {
        return Err("no math segments".into());
    }
    let stex = latex::parse_with(&entry.s_stex, reg).map_err(|e| format!("s_stex: {e}"))?;
    latex::parse(&entry.s_latex).map_err(|e| format!("s_latex: {e}"))?;
    let expanded = expand(&stex, reg).map_err(|e| format!("s_stex: {e}"))?;
    let s_latex = latex::render(&normalize(&expanded, cfg));
    if s_latex != entry.s_latex {
        return Err(format!(
            "expansion of s_stex is `{s_latex}`, not `{}`",
            entry.s_latex
        ));
    }
    for (i, (l, s)) in entry.math_latex.iter().zip(&entry.math_stex).enumerate() {
        latex::parse_math(l, &Builtins).map_err(|e| format!("math_latex[{i}]: {e}"))?;
        let m = latex::parse_math(s, reg).map_err(|e| format!("math_stex[{i}]: {e}"))?;
        let m = expand_math(&m, reg).map_err(|e| format!("math_stex[{i}]: {e}"))?;
        let rendered = latex::render(&normalize_math(&m, cfg));
        if &rendered != l {
            return Err(format!("math_stex[{i}] expands to `{rendered}`, not `{l}`"));
        }
    }
    Ok(())
}

/// One training line per math segment:
/// `S_latex <s> $m_latex$ <s> $m_stex$ <s>`.
pub fn to_training_examples(entry: &CorpusEntry) -> Vec<String> {
    entry
        .math_latex
        .iter()
        .zip(&entry.math_stex)
        .map(|(l, s)| format!("{} {SEP} ${l}$ {SEP} ${s}$ {SEP}", entry.s_latex))
        .collect()
}

/// The prompt part of a training line, up to and including the second separator.
pub fn prompt(sentence_latex: &str, expression_latex: &str) -> String {
    format!("{sentence_latex} {SEP} ${expression_latex}$ {SEP}")
}

/// Drops entries whose `(s_latex, s_stex)` pair was seen before, keeping order.
pub fn dedup(entries: Vec<CorpusEntry>) -> Vec<CorpusEntry> {
    let mut seen = HashSet::new();
    entries
        .into_iter()
        .filter(|e| seen.insert((e.s_latex.clone(), e.s_stex.clone())))
        .collect()
}

/// FNV-1a followed by a splitmix64 finalizer, so that similar names spread
/// over the whole range.
pub(crate) fn stable_hash(s: &str) -> u64 {
    let mut h = s.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    });
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Splits entries into (train, eval) by source document. A document lands
/// in eval when its hash falls below `eval_fraction`, so the assignment is
/// stable across runs and corpus sizes.
pub fn split_by_document(
    entries: Vec<CorpusEntry>,
    eval_fraction: f64,
) -> (Vec<CorpusEntry>, Vec<CorpusEntry>) {
    entries.into_iter().partition(|e| {
        let h = stable_hash(e.document()) as f64 / u64::MAX as f64;
        h >= eval_fraction
    })
}

/// Per-document counts of entries and math segments, tab separated.
pub fn report(entries: &[CorpusEntry]) -> String {
    let mut per: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for e in entries {
        let c = per.entry(e.document()).or_default();
        c.0 += 1;
        c.1 += e.n_s();
    }
    let mut out = String::from("source\tentries\texpressions\n");
    let (mut te, mut tx) = (0, 0);
    for (doc, (n, m)) in &per {
        let _ = writeln!(out, "{doc}\t{n}\t{m}");
        te += n;
        tx += m;
    }
    let _ = writeln!(out, "total\t{te}\t{tx}");
    out
}
