//! `sdis`: parse, expand, build corpora, synthesize, serialize training
//! data, evaluate translators and check sTeX.

mod ast;

use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use walkdir::WalkDir;

use stex_disamb::corpus::{self, CorpusEntry};
use stex_disamb::eval::{self, EvalTriple};
use stex_disamb::jsonl;
use stex_disamb::latex;
use stex_disamb::normalize::{normalize, normalize_math, NormalizationConfig};
use stex_disamb::registry::{check_math, expand, expand_math, Registry};
use stex_disamb::semantics::Semantics;
use stex_disamb::synth::{SynthConfig, Synthesizer, VerbalizationSet};
use stex_disamb::term::{Lattice, SymbolSet};
use stex_disamb::translator::{self, TranslateError};

#[derive(Parser, Debug)]
#[command(name = "sdis", version, about = "Disambiguate LaTeX math into sTeX: corpora, synthesis and evaluation")]
struct Cli {
    /// Print a machine-readable JSON result instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for extract, synth and eval.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Registry manifest; the bundled sample registry when absent.
    #[arg(long, global = true, env = "SDIS_REGISTRY", value_name = "MANIFEST")]
    registry: Option<PathBuf>,
    /// Normalization settings (TOML).
    #[arg(long, global = true, value_name = "TOML")]
    normalization: Option<PathBuf>,
    /// Typed symbols (JSON Lines); the bundled set when absent.
    #[arg(long, global = true, value_name = "JSONL")]
    symbols: Option<PathBuf>,
    /// Subtype lattice (JSON); the bundled one when absent.
    #[arg(long, global = true, value_name = "JSON")]
    lattice: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse a file (or `-` for stdin) and dump its syntax tree.
    Parse {
        file: PathBuf,
        /// Treat the input as a math body.
        #[arg(long)]
        math: bool,
    },
    /// Expand all sTeX macros into plain LaTeX and normalize the result.
    Expand {
        file: PathBuf,
        #[arg(long)]
        math: bool,
    },
    /// Build a parallel corpus from the `.tex` files under a directory.
    Extract {
        dir: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Drop repeated (s_latex, s_stex) pairs.
        #[arg(long)]
        dedup: bool,
        /// Move this fraction of documents to `--eval-output`.
        #[arg(long, requires = "eval_output", value_name = "F")]
        eval_fraction: Option<f64>,
        #[arg(long, value_name = "PATH")]
        eval_output: Option<PathBuf>,
        /// Write per-document counts (TSV).
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Synthesize sentences from random well-typed terms.
    Synth {
        #[arg(long, value_name = "N")]
        per_symbol: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
        /// Verbalization templates (JSON).
        #[arg(long, value_name = "JSON")]
        templates: Option<PathBuf>,
        /// Generator probabilities (TOML); `--seed` overrides its seed.
        #[arg(long, value_name = "TOML")]
        config: Option<PathBuf>,
    },
    /// Serialize corpus files into training lines.
    Traindata {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Evaluate translations of an evaluation corpus or of given triples.
    Eval {
        /// Corpus entries, or triples with `s_latex`, `s_stex`, `s_r`.
        #[arg(long)]
        corpus: PathBuf,
        /// identity, rules, rules:<lexicon.json> or external:<url|command>.
        /// Only for corpus input.
        #[arg(long, default_value = "identity")]
        translator: String,
        /// Report file; printed only when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Per-input JSON Lines log; defaults to `<output>.log.jsonl`.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Seconds to wait for an external translator.
        #[arg(long, default_value_t = 60)]
        timeout: u64,
        /// Read a bare `=` as equality in the OMDoc checks.
        #[arg(long)]
        recover_equality: bool,
    },
    /// Report stexcheck offenses and inferred types for each math segment.
    Check {
        file: PathBuf,
        #[arg(long)]
        math: bool,
    },
    /// Answer translation requests on stdin/stdout.
    Serve {
        #[arg(long, default_value = "identity")]
        translator: String,
    },
}

/// Failure classes with their exit codes.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Endpoint(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Endpoint(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Data(e) | Failure::Endpoint(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

fn translate_failure(e: TranslateError) -> Failure {
    match e {
        TranslateError::UnknownTranslator(_) => Failure::Usage(e.into()),
        e if e.is_endpoint() => Failure::Endpoint(e.into()),
        e => Failure::Data(e.into()),
    }
}

type Res<T> = Result<T, Failure>;

struct Env {
    json: bool,
    reg: Registry,
    norm: NormalizationConfig,
    symbols_path: Option<PathBuf>,
    lattice_path: Option<PathBuf>,
}

impl Env {
    fn lattice(&self) -> Res<Lattice> {
        match &self.lattice_path {
            Some(p) => Ok(Lattice::load(p).with_context(|| format!("{}", p.display()))?),
            None => Ok(Lattice::default()),
        }
    }

    fn symbols(&self, lattice: &Lattice) -> Res<SymbolSet> {
        let set = match &self.symbols_path {
            Some(p) => SymbolSet::load(p).with_context(|| format!("{}", p.display()))?,
            None => SymbolSet::core(),
        };
        set.validate(lattice, &self.reg).context("typed symbols")?;
        Ok(set)
    }

    fn emit(&self, value: Value, text: impl FnOnce() -> String) {
        if self.json {
            println!("{value}");
        } else {
            print!("{}", text());
        }
    }
}

fn read_input(path: &Path) -> Res<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("stdin")?;
        return Ok(s);
    }
    Ok(fs::read_to_string(path).with_context(|| format!("{}", path.display()))?)
}

fn create(path: &Path) -> Res<BufWriter<fs::File>> {
    Ok(BufWriter::new(
        fs::File::create(path).with_context(|| format!("{}", path.display()))?,
    ))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Res<()> {
    jsonl::write(create(path)?, items).with_context(|| format!("{}", path.display()))?;
    Ok(())
}

fn parse_source(src: &str, math: bool, reg: &Registry) -> Result<Vec<latex::LatexNode>, latex::ParseError> {
    if math {
        latex::parse_math(src, reg)
    } else {
        latex::parse_with(src, reg)
    }
}

fn cmd_parse(env: &Env, file: &Path, math: bool) -> Res<()> {
    let src = read_input(file)?;
    let nodes = parse_source(&src, math, &env.reg).map_err(|e| Failure::Data(anyhow!("{}: {e}", file.display())))?;
    env.emit(json!({"command": "parse", "ok": true, "nodes": ast::to_json(&nodes)}), || ast::tree(&nodes));
    Ok(())
}

fn cmd_expand(env: &Env, file: &Path, math: bool) -> Res<()> {
    let src = read_input(file)?;
    let nodes = parse_source(&src, math, &env.reg).map_err(|e| Failure::Data(anyhow!("{}: {e}", file.display())))?;
    let out = if math {
        expand_math(&nodes, &env.reg)
    } else {
        expand(&nodes, &env.reg)
    }
    .map_err(|e| Failure::Data(anyhow!("{}: {e}", file.display())))?;
    let latex = latex::render(&if math {
        normalize_math(&out, &env.norm)
    } else {
        normalize(&out, &env.norm)
    });
    env.emit(json!({"command": "expand", "latex": latex}), || format!("{latex}\n"));
    Ok(())
}

fn tex_files(dir: &Path) -> Res<Vec<(String, PathBuf)>> {
    if !dir.is_dir() {
        return Err(Failure::Data(anyhow!("{} is not a directory", dir.display())));
    }
    let mut out = Vec::new();
    for e in WalkDir::new(dir).sort_by_file_name() {
        let e = e.context("walking input directory")?;
        if e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "tex") {
            let rel = e.path().strip_prefix(dir).unwrap_or(e.path()).with_extension("");
            let id = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            out.push((id, e.path().to_path_buf()));
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_extract(
    env: &Env,
    dir: &Path,
    output: &Path,
    dedup: bool,
    eval_fraction: Option<f64>,
    eval_output: Option<&Path>,
    report: Option<&Path>,
) -> Res<()> {
    if let Some(f) = eval_fraction {
        if !(0.0..=1.0).contains(&f) {
            return Err(Failure::Usage(anyhow!("--eval-fraction must lie in [0, 1]")));
        }
    }
    let files = tex_files(dir)?;
    let docs: Vec<(String, String)> = files
        .iter()
        .map(|(id, p)| Ok((id.clone(), read_input(p)?)))
        .collect::<Res<_>>()?;
    let results: Vec<_> = docs
        .par_iter()
        .map(|(id, src)| corpus::extract_document(src, id, &env.reg, &env.norm))
        .collect();
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (es, errs) in results {
        entries.extend(es);
        for e in errs {
            log::warn!("{e}");
            errors.push(json!({"source_id": e.source_id(), "message": e.to_string()}));
        }
    }
    if dedup {
        entries = corpus::dedup(entries);
    }
    let (train, held) = match eval_fraction {
        Some(f) => corpus::split_by_document(entries.clone(), f),
        None => (entries.clone(), Vec::new()),
    };
    write_jsonl(output, &train)?;
    if let Some(p) = eval_output {
        write_jsonl(p, &held)?;
    }
    if let Some(p) = report {
        fs::write(p, corpus::report(&entries)).with_context(|| format!("{}", p.display()))?;
    }
    let expressions: usize = train.iter().map(CorpusEntry::n_s).sum();
    env.emit(
        json!({
            "command": "extract",
            "documents": docs.len(),
            "entries": train.len(),
            "expressions": expressions,
            "eval_entries": held.len(),
            "errors": errors,
            "output": output,
        }),
        || {
            format!(
                "{} documents, {} entries, {} expressions, {} eval entries, {} rejected fragments\n",
                docs.len(),
                train.len(),
                expressions,
                held.len(),
                errors.len()
            )
        },
    );
    Ok(())
}

fn cmd_synth(
    env: &Env,
    per_symbol: usize,
    seed: u64,
    output: &Path,
    templates: Option<&Path>,
    config: Option<&Path>,
) -> Res<()> {
    if per_symbol == 0 {
        return Err(Failure::Usage(anyhow!("--per-symbol must be at least 1")));
    }
    let lattice = env.lattice()?;
    let symbols = env.symbols(&lattice)?;
    let templates = match templates {
        Some(p) => VerbalizationSet::load(p).with_context(|| format!("{}", p.display()))?,
        None => VerbalizationSet::default(),
    };
    let mut cfg = match config {
        Some(p) => toml::from_str::<SynthConfig>(&read_input(p)?).with_context(|| format!("{}", p.display()))?,
        None => SynthConfig::default(),
    };
    cfg.seed = seed;
    cfg.validate().map_err(|e| Failure::Usage(e.into()))?;
    let syn = Synthesizer {
        symbols: &symbols,
        lattice: &lattice,
        templates: &templates,
        reg: &env.reg,
        norm: &env.norm,
        cfg: &cfg,
    };
    let out = syn.corpus(per_symbol).map_err(|e| Failure::Data(e.into()))?;
    write_jsonl(output, &out.entries)?;
    let failures: Vec<Value> = out
        .failures
        .iter()
        .map(|f| json!({"symbol": f.symbol, "index": f.index, "message": f.error.to_string()}))
        .collect();
    let aligned = symbols.iter().filter(|s| s.alignment.is_some()).count();
    env.emit(
        json!({
            "command": "synth",
            "symbols": aligned,
            "entries": out.entries.len(),
            "failures": failures,
            "output": output,
        }),
        || format!("{} symbols, {} entries, {} failures\n", aligned, out.entries.len(), failures.len()),
    );
    Ok(())
}

fn cmd_traindata(env: &Env, inputs: &[PathBuf], output: &Path) -> Res<()> {
    let mut w = create(output)?;
    let (mut entries, mut lines) = (0usize, 0usize);
    for p in inputs {
        let es: Vec<CorpusEntry> = jsonl::read_path(p).with_context(|| format!("{}", p.display()))?;
        for e in &es {
            for l in corpus::to_training_examples(e) {
                writeln!(w, "{l}").context("writing training data")?;
                lines += 1;
            }
        }
        entries += es.len();
    }
    w.flush().context("writing training data")?;
    env.emit(
        json!({"command": "traindata", "entries": entries, "lines": lines, "output": output}),
        || format!("{entries} entries, {lines} lines\n"),
    );
    Ok(())
}

fn load_triples(path: &Path, spec: &str, env: &Env, timeout: Duration) -> Res<Vec<EvalTriple>> {
    let rows: Vec<Value> = jsonl::read_path(path).with_context(|| format!("{}", path.display()))?;
    if rows.iter().all(|r| r.get("s_r").is_some()) && !rows.is_empty() {
        if spec != "identity" {
            return Err(Failure::Usage(anyhow!(
                "{} already holds translations (`s_r`); drop --translator",
                path.display()
            )));
        }
        return rows
            .into_iter()
            .map(|r| serde_json::from_value(r).context("triple").map_err(Failure::Data))
            .collect();
    }
    let entries: Vec<CorpusEntry> = rows
        .into_iter()
        .map(serde_json::from_value)
        .collect::<Result<_, _>>()
        .with_context(|| format!("{}: neither triples nor corpus entries", path.display()))?;
    let t = translator::from_spec(spec, &env.reg, timeout).map_err(translate_failure)?;
    translator::triples_from_corpus(&entries, t.as_ref()).map_err(translate_failure)
}

fn cmd_eval(
    env: &Env,
    corpus_path: &Path,
    spec: &str,
    output: Option<&Path>,
    log_path: Option<&Path>,
    timeout: u64,
    recover_equality: bool,
) -> Res<()> {
    let lattice = env.lattice()?;
    let symbols = env.symbols(&lattice)?;
    let triples = load_triples(corpus_path, spec, env, Duration::from_secs(timeout))?;
    let mut sem = Semantics::new(&env.reg, &symbols, &lattice, &env.norm);
    sem.recover_equality = recover_equality;
    let results = eval::evaluate(&triples, &sem);
    let report = eval::aggregate(&results).map_err(|e| Failure::Data(e.into()))?;
    let table = eval::render_report(&report);
    if let Some(p) = output {
        fs::write(p, &table).with_context(|| format!("{}", p.display()))?;
    }
    let log_path = log_path
        .map(Path::to_path_buf)
        .or_else(|| output.map(|p| p.with_extension("log.jsonl")));
    if let Some(p) = &log_path {
        write_jsonl(p, &eval::log_records(&triples, &results))?;
    }
    env.emit(
        json!({"command": "eval", "report": report, "log": log_path}),
        || {
            let mut s = table.clone();
            if report.lattice_violations > 0 {
                s.push_str(&format!("warning: {} inputs break the implication lattice\n", report.lattice_violations));
            }
            s
        },
    );
    Ok(())
}

fn cmd_check(env: &Env, file: &Path, math: bool) -> Res<()> {
    let lattice = env.lattice()?;
    let symbols = env.symbols(&lattice)?;
    let sem = Semantics::new(&env.reg, &symbols, &lattice, &env.norm);
    let src = read_input(file)?;
    let nodes = parse_source(&src, math, &env.reg).map_err(|e| Failure::Data(anyhow!("{}: {e}", file.display())))?;
    let bodies: Vec<(usize, Vec<latex::LatexNode>)> = if math {
        vec![(0, nodes)]
    } else {
        latex::find_math(&nodes)
            .into_iter()
            .map(|m| (m.body_span.start, m.segment.body.clone()))
            .collect()
    };
    let mut segments = Vec::new();
    let mut text = String::new();
    let mut all_ok = true;
    for (offset, body) in &bodies {
        let offenses = check_math(body, &env.reg, &env.norm).offenses;
        let typed = sem.stex_to_term(body).map_err(|e| e.to_string()).and_then(|t| {
            sem.infer_type(&t).map_err(|e| e.to_string())
        });
        let ok = offenses.is_empty() && typed.is_ok();
        all_ok &= ok;
        let rendered = latex::render(body);
        text.push_str(&format!("{} ${rendered}$\n", if ok { "ok  " } else { "FAIL" }));
        for o in &offenses {
            text.push_str(&format!("  {:?} `{}` at {}\n", o.kind, o.text, offset + o.span.start));
        }
        match &typed {
            Ok(inf) => text.push_str(&format!(
                "  type {}{}\n",
                inf.ty.as_ref().map_or_else(|| "?".to_string(), ToString::to_string),
                if inf.trivial { " (trivial)" } else { "" }
            )),
            Err(e) => text.push_str(&format!("  {e}\n")),
        }
        segments.push(json!({
            "math": rendered,
            "offset": offset,
            "offenses": offenses,
            "type": typed.as_ref().ok().and_then(|i| i.ty.as_ref().map(ToString::to_string)),
            "trivial": typed.as_ref().is_ok_and(|i| i.trivial),
            "error": typed.as_ref().err(),
        }));
    }
    env.emit(json!({"command": "check", "ok": all_ok, "segments": segments}), || text);
    Ok(())
}

fn cmd_serve(env: &Env, spec: &str) -> Res<()> {
    let t = translator::from_spec(spec, &env.reg, translator::DEFAULT_TIMEOUT).map_err(translate_failure)?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    translator::serve(t.as_ref(), stdin.lock(), stdout.lock()).context("serving")?;
    Ok(())
}

fn run(cli: Cli) -> Res<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Failure::Usage(anyhow!("--jobs must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool")?;
    }
    let reg = match &cli.registry {
        Some(p) => Registry::load_manifest(p).with_context(|| format!("registry {}", p.display()))?,
        None => Registry::sample(),
    };
    let norm = match &cli.normalization {
        Some(p) => NormalizationConfig::load(p).with_context(|| format!("{}", p.display()))?,
        None => NormalizationConfig::default(),
    };
    norm.validate(&reg).context("normalization settings")?;
    let env = Env {
        json: cli.json,
        reg,
        norm,
        symbols_path: cli.symbols,
        lattice_path: cli.lattice,
    };
    match cli.command {
        Cmd::Parse { file, math } => cmd_parse(&env, &file, math),
        Cmd::Expand { file, math } => cmd_expand(&env, &file, math),
        Cmd::Extract {
            dir,
            output,
            dedup,
            eval_fraction,
            eval_output,
            report,
        } => cmd_extract(
            &env,
            &dir,
            &output,
            dedup,
            eval_fraction,
            eval_output.as_deref(),
            report.as_deref(),
        ),
        Cmd::Synth {
            per_symbol,
            seed,
            output,
            templates,
            config,
        } => cmd_synth(&env, per_symbol, seed, &output, templates.as_deref(), config.as_deref()),
        Cmd::Traindata { inputs, output } => cmd_traindata(&env, &inputs, &output),
        Cmd::Eval {
            corpus,
            translator,
            output,
            log,
            timeout,
            recover_equality,
        } => cmd_eval(
            &env,
            &corpus,
            &translator,
            output.as_deref(),
            log.as_deref(),
            timeout,
            recover_equality,
        ),
        Cmd::Check { file, math } => cmd_check(&env, &file, math),
        Cmd::Serve { translator } => cmd_serve(&env, &translator),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let json = std::env::args().any(|a| a == "--json");
    let result = match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => Err(Failure::Usage(anyhow!("{}", e.render().to_string().trim_end()))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            if json {
                println!("{}", json!({"error": format!("{:#}", f.error()), "exit_code": code}));
            }
            eprintln!("sdis: {:#}", f.error());
            ExitCode::from(code)
        }
    }
}
