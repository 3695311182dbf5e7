//! Translators from LaTeX math to sTeX math, the wire protocol for external
//! models, and splicing translated expressions back into a sentence.

mod rules;

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusEntry, SEP};
use crate::eval::EvalTriple;
use crate::latex::{self, Span};
use crate::registry::Registry;

pub use rules::{Fixity, LexEntry, Lexicon, RulesTranslator};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationRequest {
    pub sentence_latex: String,
    pub expression_latex: String,
    /// Asks the model for greedy decoding so that answers are reproducible.
    #[serde(default = "yes")]
    pub greedy: bool,
}

fn yes() -> bool {
    true
}

impl TranslationRequest {
    pub fn new(sentence_latex: &str, expression_latex: &str) -> Self {
        TranslationRequest {
            sentence_latex: sentence_latex.to_string(),
            expression_latex: expression_latex.to_string(),
            greedy: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationResponse {
    pub expression_stex: String,
    /// `false` when generation hit a length cap before emitting `<s>`.
    pub terminated: bool,
}

/// What a server sends instead of a response when it cannot answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TranslateError {
    #[error("no answer within {0:?}")]
    Timeout(Duration),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("endpoint error: {0}")]
    Endpoint(String),
    #[error("generation stopped before `<s>`")]
    Unterminated { partial: String },
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("unknown translator `{0}` (expected identity, rules, rules:<lexicon> or external:<addr>)")]
    UnknownTranslator(String),
}

impl TranslateError {
    /// Whether the failure lies with an external endpoint rather than local data.
    pub fn is_endpoint(&self) -> bool {
        matches!(
            self,
            TranslateError::Timeout(_)
                | TranslateError::Protocol(_)
                | TranslateError::Endpoint(_)
                | TranslateError::Unterminated { .. }
        )
    }
}

/// A pure function from requests to responses, given its static configuration.
pub trait Translator: Send + Sync {
    fn translate(&self, req: &TranslationRequest) -> Result<TranslationResponse, TranslateError>;
}

/// Returns the LaTeX unchanged.
pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn translate(&self, req: &TranslationRequest) -> Result<TranslationResponse, TranslateError> {
        Ok(TranslationResponse {
            expression_stex: req.expression_latex.clone(),
            terminated: true,
        })
    }
}

/// Cuts a generation at the first `<s>` and removes the `$` the training
/// format puts around expressions.
pub fn clean_generation(resp: TranslationResponse) -> Result<TranslationResponse, TranslateError> {
    let (text, terminated) = match resp.expression_stex.find(SEP) {
        Some(i) => (&resp.expression_stex[..i], true),
        None => (resp.expression_stex.as_str(), resp.terminated),
    };
    let mut t = text.trim();
    if t.len() >= 2 && t.starts_with('$') && t.ends_with('$') && !t.ends_with("\\$") {
        t = t[1..t.len() - 1].trim();
    }
    if !terminated {
        return Err(TranslateError::Unterminated {
            partial: t.to_string(),
        });
    }
    Ok(TranslationResponse {
        expression_stex: t.to_string(),
        terminated,
    })
}

/// Parses one response line of the wire protocol.
pub fn decode_response(line: &str) -> Result<TranslationResponse, TranslateError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Wire {
        Ok(TranslationResponse),
        Err(ErrorResponse),
    }
    match serde_json::from_str::<Wire>(line.trim()) {
        Ok(Wire::Ok(r)) => clean_generation(r),
        Ok(Wire::Err(e)) => Err(TranslateError::Protocol(e.error)),
        Err(e) => Err(TranslateError::Protocol(format!("bad response `{}`: {e}", line.trim()))),
    }
}

struct StdioConn {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl StdioConn {
    fn spawn(argv: &[String]) -> Result<Self, TranslateError> {
        let (prog, args) = argv
            .split_first()
            .ok_or_else(|| TranslateError::Endpoint("empty command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| TranslateError::Endpoint(format!("{prog}: {e}")))?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = child.stdout.take().expect("piped");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(StdioConn {
            child,
            stdin,
            lines: rx,
        })
    }
}

impl Drop for StdioConn {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Talks newline-delimited JSON with a child process, one request at a
/// time. A connection that timed out is replaced before the next request.
pub struct StdioTranslator {
    argv: Vec<String>,
    timeout: Duration,
    conn: Mutex<Option<StdioConn>>,
}

impl StdioTranslator {
    pub fn new(argv: Vec<String>, timeout: Duration) -> Result<Self, TranslateError> {
        let conn = StdioConn::spawn(&argv)?;
        Ok(StdioTranslator {
            argv,
            timeout,
            conn: Mutex::new(Some(conn)),
        })
    }
}

impl Translator for StdioTranslator {
    fn translate(&self, req: &TranslationRequest) -> Result<TranslationResponse, TranslateError> {
        let mut guard = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            *guard = Some(StdioConn::spawn(&self.argv)?);
        }
        let conn = guard.as_mut().unwrap();
        let mut line = serde_json::to_string(req).expect("request serializes");
        line.push('\n');
        if let Err(e) = conn.stdin.write_all(line.as_bytes()).and_then(|_| conn.stdin.flush()) {
            *guard = None;
            return Err(TranslateError::Endpoint(e.to_string()));
        }
        match conn.lines.recv_timeout(self.timeout) {
            Ok(Ok(l)) => decode_response(&l),
            Ok(Err(e)) => {
                *guard = None;
                Err(TranslateError::Endpoint(e.to_string()))
            }
            Err(RecvTimeoutError::Timeout) => {
                *guard = None;
                Err(TranslateError::Timeout(self.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => {
                *guard = None;
                Err(TranslateError::Endpoint("process closed its output".into()))
            }
        }
    }
}

/// POSTs each request as JSON to one URL.
pub struct HttpTranslator {
    url: String,
    timeout: Duration,
    agent: ureq::Agent,
}

impl HttpTranslator {
    pub fn new(url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTranslator {
            url: url.to_string(),
            timeout,
            agent,
        }
    }
}

impl Translator for HttpTranslator {
    fn translate(&self, req: &TranslationRequest) -> Result<TranslationResponse, TranslateError> {
        let mut resp = self.agent.post(&self.url).send_json(req).map_err(|e| match e {
            ureq::Error::Timeout(_) => TranslateError::Timeout(self.timeout),
            other => TranslateError::Endpoint(other.to_string()),
        })?;
        let body = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => TranslateError::Timeout(self.timeout),
            other => TranslateError::Endpoint(other.to_string()),
        })?;
        decode_response(&body)
    }
}

/// Builds a translator from `identity`, `rules`, `rules:<lexicon.json>`, or
/// `external:<addr>` where `addr` is an `http://` URL or a command line.
pub fn from_spec(
    spec: &str,
    reg: &Registry,
    timeout: Duration,
) -> Result<Box<dyn Translator>, TranslateError> {
    if spec == "identity" {
        return Ok(Box::new(IdentityTranslator));
    }
    if spec == "rules" {
        return Ok(Box::new(RulesTranslator::new(reg.clone(), Lexicon::bundled(reg)?)));
    }
    if let Some(path) = spec.strip_prefix("rules:") {
        let lex = Lexicon::load(std::path::Path::new(path), reg)?;
        return Ok(Box::new(RulesTranslator::new(reg.clone(), lex)));
    }
    if let Some(addr) = spec.strip_prefix("external:") {
        if addr.starts_with("http://") || addr.starts_with("https://") {
            return Ok(Box::new(HttpTranslator::new(addr, timeout)));
        }
        let argv: Vec<String> = addr.split_whitespace().map(str::to_string).collect();
        return Ok(Box::new(StdioTranslator::new(argv, timeout)?));
    }
    Err(TranslateError::UnknownTranslator(spec.to_string()))
}

/// Answers protocol requests read line by line until end of input. Bad
/// lines get an error object; the loop keeps going.
pub fn serve(
    translator: &dyn Translator,
    input: impl BufRead,
    mut output: impl Write,
) -> std::io::Result<usize> {
    let mut served = 0;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<TranslationRequest>(&line) {
            Ok(req) => match translator.translate(&req) {
                Ok(r) => serde_json::to_string(&r),
                Err(e) => serde_json::to_string(&ErrorResponse { error: e.to_string() }),
            },
            Err(e) => serde_json::to_string(&ErrorResponse {
                error: format!("malformed request: {e}"),
            }),
        }
        .expect("responses serialize");
        writeln!(output, "{reply}")?;
        output.flush()?;
        served += 1;
    }
    Ok(served)
}

/// Replaces each span of `source` by the matching replacement. Spans must
/// be ordered and disjoint.
pub fn splice(source: &str, parts: &[(Span, String)]) -> String {
    let mut out = String::with_capacity(source.len());
    let mut at = 0;
    for (span, text) in parts {
        out.push_str(&source[at..span.start]);
        out.push_str(text);
        at = span.end;
    }
    out.push_str(&source[at..]);
    out
}

/// The sentence-level function: every math body of `sentence` is translated
/// in the context of the whole sentence and put back in place.
pub fn translate_sentence(
    sentence: &str,
    translator: &dyn Translator,
    reg: &Registry,
) -> Result<String, TranslateError> {
    let nodes = latex::parse_with(sentence, reg)
        .map_err(|e| TranslateError::Protocol(format!("sentence does not parse: {e}")))?;
    let mut parts = Vec::new();
    for m in latex::find_math(&nodes) {
        let body = &sentence[m.body_span.start..m.body_span.end];
        let r = translator.translate(&TranslationRequest::new(sentence, body))?;
        parts.push((m.body_span, r.expression_stex));
    }
    Ok(splice(sentence, &parts))
}

/// One triple per math segment of every entry, with the translator's
/// answer as S_R. Unterminated generations are kept as they are.
pub fn triples_from_corpus(
    entries: &[CorpusEntry],
    translator: &dyn Translator,
) -> Result<Vec<EvalTriple>, TranslateError> {
    let jobs: Vec<(&CorpusEntry, usize)> = entries
        .iter()
        .flat_map(|e| (0..e.math_latex.len().min(e.math_stex.len())).map(move |k| (e, k)))
        .collect();
    jobs.par_iter()
        .map(|&(e, k)| {
            let req = TranslationRequest::new(&e.s_latex, &e.math_latex[k]);
            let s_r = match translator.translate(&req) {
                Ok(r) => r.expression_stex,
                Err(TranslateError::Unterminated { partial }) => {
                    log::warn!("{}: unterminated generation", e.source_id);
                    partial
                }
                Err(other) => return Err(other),
            };
            Ok(EvalTriple {
                s_latex: e.math_latex[k].clone(),
                s_stex: e.math_stex[k].clone(),
                s_r,
            })
        })
        .collect()
}
