#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde_json::Value;

pub fn sdis() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sdis"));
    c.env_remove("SDIS_REGISTRY").env("RUST_LOG", "error");
    c
}

pub fn run(args: &[&str]) -> Output {
    sdis().args(args).output().expect("sdis runs")
}

/// Runs with `--json` and returns the exit code and the parsed stdout.
pub fn run_json(args: &[&str]) -> (i32, Value) {
    let out = sdis().arg("--json").args(args).output().expect("sdis runs");
    let text = String::from_utf8(out.stdout).unwrap();
    let v = serde_json::from_str(text.trim()).unwrap_or_else(|e| {
        panic!("{e}: {text:?}, stderr {}", String::from_utf8_lossy(&out.stderr))
    });
    (out.status.code().unwrap(), v)
}

pub fn core_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core")
}

pub fn corpus_dir() -> PathBuf {
    core_dir().join("data/corpus")
}

pub fn eval_fixture() -> PathBuf {
    core_dir().join("tests/fixtures/eval200.jsonl")
}

pub fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Errors of `instance` against `schemas/<name>.schema.json`.
pub fn schema_errors(name: &str, instance: &Value) -> Vec<String> {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("schemas/{name}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    v.iter_errors(instance).map(|e| format!("{e} at {}", e.instance_path())).collect()
}

pub fn assert_schema(name: &str, instance: &Value) {
    let errs = schema_errors(name, instance);
    assert!(errs.is_empty(), "{name}: {errs:?}\n{instance}");
}

/// A minimal HTTP endpoint that answers every POST with `answer(request)`
/// and counts requests.
pub struct HttpStub {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
}

impl HttpStub {
    pub fn start(answer: fn(&Value) -> Value) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/translate", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let counter = counter.clone();
                std::thread::spawn(move || {
                    let _ = stream.set_nodelay(true);
                    let mut w = stream.try_clone().unwrap();
                    let mut r = BufReader::new(stream);
                    loop {
                        let mut line = String::new();
                        if r.read_line(&mut line).unwrap_or(0) == 0 {
                            return;
                        }
                        let mut len = 0;
                        loop {
                            let mut h = String::new();
                            if r.read_line(&mut h).unwrap_or(0) == 0 {
                                return;
                            }
                            if h.trim().is_empty() {
                                break;
                            }
                            if let Some((k, v)) = h.split_once(':') {
                                if k.eq_ignore_ascii_case("content-length") {
                                    len = v.trim().parse().unwrap();
                                }
                            }
                        }
                        let mut body = vec![0; len];
                        r.read_exact(&mut body).unwrap();
                        counter.fetch_add(1, Ordering::SeqCst);
                        let req: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
                        let reply = answer(&req).to_string();
                        let msg = format!(
                            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{reply}",
                            reply.len()
                        );
                        let _ = w.write_all(msg.as_bytes());
                    }
                });
            }
        });
        HttpStub { url, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

/// Pipes `input` through `sdis serve` and returns the response lines.
pub fn serve(translator: &str, input: &str) -> Vec<Value> {
    let mut child = sdis()
        .args(["serve", "--translator", translator])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}
