//! External SMT solver driver.
//!
//! One solver process per satisfiability check, SMT-LIB 2 text over
//! stdin/stdout (the `z3 -in` protocol). On sat, model values are fetched
//! with `(get-value ...)` for exactly the applications the caller asks for,
//! matched back positionally. A watchdog thread kills the child at the
//! deadline.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelValue {
    Bool(bool),
    Int(i64),
}

impl ModelValue {
    pub fn as_bool(self) -> bool {
        match self {
            ModelValue::Bool(b) => b,
            ModelValue::Int(i) => i != 0,
        }
    }

    pub fn as_int(self) -> i64 {
        match self {
            ModelValue::Int(i) => i,
            ModelValue::Bool(b) => b as i64,
        }
    }
}

/// Named bindings for the queried applications.
#[derive(Debug, Clone, Default)]
pub struct Model {
    pub bindings: HashMap<String, ModelValue>,
}

#[derive(Debug, Clone)]
pub enum SatResult {
    Sat(Model),
    Unsat,
    Unknown(UnknownReason),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnknownReason {
    Timeout,
    SolverError(String),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SatResult::Unsat)
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub bin: String,
    pub args: Vec<String>,
}

impl SolverConfig {
    /// Solver from `SOLVER_BIN`/`SOLVER_ARGS`, falling back on `z3 -in` from
    /// PATH and then the repository's WASM shim.
    pub fn from_env() -> Result<SolverConfig> {
        if let Ok(bin) = std::env::var("SOLVER_BIN") {
            let args = std::env::var("SOLVER_ARGS")
                .map(|s| s.split_whitespace().map(str::to_string).collect())
                .unwrap_or_default();
            return Ok(SolverConfig { bin, args });
        }
        if spawnable("z3", &["-version"]) {
            return Ok(SolverConfig {
                bin: "z3".into(),
                args: vec!["-in".into()],
            });
        }
        let shim = concat!(env!("CARGO_MANIFEST_DIR"), "/../../tools/z3smt.js");
        if std::path::Path::new(shim).exists() {
            return Ok(SolverConfig {
                bin: shim.into(),
                args: vec![],
            });
        }
        Err(Error::Solver(
            "no solver configured: set SOLVER_BIN to an SMT-LIB 2 solver executable".into(),
        ))
    }
}

fn spawnable(bin: &str, args: &[&str]) -> bool {
    Command::new(bin)
        .args(args)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .is_ok()
}

pub struct Solver {
    config: SolverConfig,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Self {
        Solver { config }
    }

    pub fn from_env() -> Result<Self> {
        Ok(Solver::new(SolverConfig::from_env()?))
    }

    /// Plain satisfiability check of a script that ends in `(check-sat)`.
    pub fn check_sat(&self, script: &str, timeout_ms: u64) -> Result<SatResult> {
        self.check(script, &[], timeout_ms)
    }

    /// Satisfiability check; on sat, fetches the value of each `(name,
    /// term)` query and returns them keyed by name.
    pub fn check(
        &self,
        script: &str,
        queries: &[(String, String)],
        timeout_ms: u64,
    ) -> Result<SatResult> {
        let mut child = Command::new(&self.config.bin)
            .args(&self.config.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Solver(format!("cannot spawn `{}`: {e}", self.config.bin)))?;

        let deadline = Instant::now() + Duration::from_millis(timeout_ms);
        let done = Arc::new(AtomicBool::new(false));
        let watchdog = spawn_watchdog(&mut child, deadline, done.clone());

        let result = self.converse(&mut child, script, queries);
        done.store(true, Ordering::SeqCst);
        let timed_out = watchdog.join().unwrap_or(false);
        let _ = child.kill();
        let _ = child.wait();

        match result {
            Err(_) | Ok(SatResult::Unknown(_)) if timed_out => {
                Ok(SatResult::Unknown(UnknownReason::Timeout))
            }
            Err(e) => Ok(SatResult::Unknown(UnknownReason::SolverError(format!(
                "{e}"
            )))),
            Ok(r) => Ok(r),
        }
    }

    fn converse(
        &self,
        child: &mut Child,
        script: &str,
        queries: &[(String, String)],
    ) -> Result<SatResult> {
        let mut stdin = child
            .stdin
            .take()
            .ok_or_else(|| Error::Solver("no solver stdin".into()))?;
        let stdout = child
            .stdout
            .take()
            .ok_or_else(|| Error::Solver("no solver stdout".into()))?;
        let mut reader = BufReader::new(stdout);

        stdin
            .write_all(script.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::Solver(format!("write failed: {e}")))?;

        // Read until the check-sat verdict.
        let verdict = loop {
            let line = read_line(&mut reader)?;
            let line = line.trim();
            if line.is_empty() || line == "success" {
                continue;
            }
            if line == "sat" || line == "unsat" || line == "unknown" {
                break line.to_string();
            }
            if line.starts_with("(error") {
                return Ok(SatResult::Unknown(UnknownReason::SolverError(
                    line.to_string(),
                )));
            }
            return Ok(SatResult::Unknown(UnknownReason::SolverError(format!(
                "unexpected solver output: {line}"
            ))));
        };

        match verdict.as_str() {
            "unsat" => {
                let _ = stdin.write_all(b"(exit)\n");
                Ok(SatResult::Unsat)
            }
            "unknown" => {
                let _ = stdin.write_all(b"(exit)\n");
                Ok(SatResult::Unknown(UnknownReason::SolverError(
                    "solver returned unknown".into(),
                )))
            }
            _ => {
                let mut model = Model::default();
                if !queries.is_empty() {
                    let mut cmd = String::from("(get-value (");
                    for (i, (_, term)) in queries.iter().enumerate() {
                        if i > 0 {
                            cmd.push(' ');
                        }
                        cmd.push_str(term);
                    }
                    cmd.push_str("))\n");
                    stdin
                        .write_all(cmd.as_bytes())
                        .and_then(|_| stdin.flush())
                        .map_err(|e| Error::Solver(format!("write failed: {e}")))?;
                    let reply = read_balanced(&mut reader)?;
                    let values = parse_value_reply(&reply, queries.len())?;
                    for ((name, _), v) in queries.iter().zip(values) {
                        model.bindings.insert(name.clone(), v);
                    }
                }
                let _ = stdin.write_all(b"(exit)\n");
                Ok(SatResult::Sat(model))
            }
        }
    }
}

fn spawn_watchdog(
    child: &mut Child,
    deadline: Instant,
    done: Arc<AtomicBool>,
) -> std::thread::JoinHandle<bool> {
    // Killing by pid avoids sharing the Child across threads.
    let pid = child.id();
    std::thread::spawn(move || {
        loop {
            if done.load(Ordering::SeqCst) {
                return false;
            }
            if Instant::now() >= deadline {
                // SIGKILL the solver; reads in the main thread hit EOF.
                unsafe {
                    libc_kill(pid as i32);
                }
                return true;
            }
            std::thread::sleep(Duration::from_millis(10));
        }
    })
}

unsafe fn libc_kill(pid: i32) {
    // Minimal FFI to avoid a dependency for one syscall.
    extern "C" {
        fn kill(pid: i32, sig: i32) -> i32;
    }
    kill(pid, 9);
}

fn read_line(reader: &mut impl BufRead) -> Result<String> {
    let mut line = String::new();
    let n = reader
        .read_line(&mut line)
        .map_err(|e| Error::Solver(format!("read failed: {e}")))?;
    if n == 0 {
        return Err(Error::Solver("solver closed its output".into()));
    }
    Ok(line)
}

/// Reads until parentheses balance (the `(get-value ...)` reply).
fn read_balanced(reader: &mut impl BufRead) -> Result<String> {
    let mut buf = String::new();
    let mut depth: i32 = 0;
    let mut seen_any = false;
    loop {
        let line = read_line(reader)?;
        if line.trim() == "success" {
            continue;
        }
        for c in line.chars() {
            if c == '(' {
                depth += 1;
                seen_any = true;
            } else if c == ')' {
                depth -= 1;
            }
        }
        buf.push_str(&line);
        if seen_any && depth <= 0 {
            return Ok(buf);
        }
        if buf.len() > 16 * 1024 * 1024 {
            return Err(Error::Solver("oversized solver reply".into()));
        }
    }
}

/// Parses `(((term) value) ...)`, returning values in positional order.
fn parse_value_reply(reply: &str, expected: usize) -> Result<Vec<ModelValue>> {
    let sexpr = crate::sexpr::parse_sexpr(reply)
        .map_err(|e| Error::Solver(format!("bad get-value reply: {e}; reply: {reply}")))?;
    let crate::sexpr::Sexpr::List(pairs) = sexpr else {
        return Err(Error::Solver(format!("bad get-value reply: {reply}")));
    };
    if pairs.len() != expected {
        return Err(Error::Solver(format!(
            "expected {expected} model values, got {}",
            pairs.len()
        )));
    }
    pairs
        .iter()
        .map(|p| {
            let crate::sexpr::Sexpr::List(pair) = p else {
                return Err(Error::Solver("malformed model pair".into()));
            };
            let value = pair
                .last()
                .ok_or_else(|| Error::Solver("empty model pair".into()))?;
            parse_model_value(value)
        })
        .collect()
}

fn parse_model_value(e: &crate::sexpr::Sexpr) -> Result<ModelValue> {
    match e {
        crate::sexpr::Sexpr::Atom(a) => match a.as_str() {
            "true" => Ok(ModelValue::Bool(true)),
            "false" => Ok(ModelValue::Bool(false)),
            _ => a
                .parse::<i64>()
                .map(ModelValue::Int)
                .map_err(|_| Error::Solver(format!("unparsable model value `{a}`"))),
        },
        crate::sexpr::Sexpr::List(items) => {
            // Negative integers print as (- 5).
            if items.len() == 2 {
                if let (crate::sexpr::Sexpr::Atom(op), crate::sexpr::Sexpr::Atom(v)) =
                    (&items[0], &items[1])
                {
                    if op == "-" {
                        if let Ok(i) = v.parse::<i64>() {
                            return Ok(ModelValue::Int(-i));
                        }
                    }
                }
            }
            Err(Error::Solver("unparsable model value".into()))
        }
    }
}
