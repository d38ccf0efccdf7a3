//! Command-line front end: verify one problem file or a corpus directory.

use clap::{Args, Parser, Subcommand, ValueEnum};
use sqleq_core::error::Error;
use sqleq_core::problem::{database_to_json, parse_problem, Problem};
use sqleq_core::verify::{verify_at_bound, verify_incremental, Status, VerificationResult, VerifyOptions};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "sqleq",
    about = "Bounded SQL query equivalence checking modulo integrity constraints"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Prove two queries equal on all databases up to a bound, or produce a
    /// counterexample database.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Problem file (schema, constraints, q1, q2, options).
    #[arg(long, conflicts_with = "corpus")]
    problem: Option<PathBuf>,

    /// Directory of problem files; emits one JSON line per problem.
    #[arg(long)]
    corpus: Option<PathBuf>,

    /// Verify exactly this bound instead of incrementing from 1.
    #[arg(long, conflicts_with = "max_bound")]
    bound: Option<usize>,

    /// Increment the bound from 1 up to this value (default: the problem's).
    #[arg(long)]
    max_bound: Option<usize>,

    /// Total time budget in milliseconds (default: the problem's).
    #[arg(long)]
    timeout_ms: Option<u64>,

    /// Write the exact SMT-LIB scripts sent to the solver into a directory.
    #[arg(long)]
    dump_smt2: Option<PathBuf>,

    /// Print per-node inference annotations to stderr.
    #[arg(long)]
    dump_annotations: bool,

    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

fn main() {
    let cli = Cli::parse();
    let Cmd::Verify(args) = cli.cmd;
    let code = match (&args.problem, &args.corpus) {
        (Some(path), None) => run_single(path, &args),
        (None, Some(dir)) => run_corpus(dir, &args),
        _ => {
            eprintln!("error: provide exactly one of --problem or --corpus");
            2
        }
    };
    std::process::exit(code);
}

fn run_single(path: &Path, args: &VerifyArgs) -> i32 {
    let (line, code) = run_one(path, args);
    match args.format {
        Format::Json => println!("{line}"),
        Format::Text => print_text(&line),
    }
    code
}

fn run_corpus(dir: &Path, args: &VerifyArgs) -> i32 {
    let mut files: Vec<PathBuf> = match std::fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
            .collect(),
        Err(e) => {
            eprintln!("error: cannot read corpus directory: {e}");
            return 2;
        }
    };
    files.sort();
    // Problems are independent; results print in input order.
    let results = sqleq_core::par::par_map(files, |path| run_one(&path, args).0);
    for line in results {
        println!("{line}");
    }
    0
}

/// Runs one problem file, returning the JSON result line and the exit code.
fn run_one(path: &Path, args: &VerifyArgs) -> (String, i32) {
    let input_error = |msg: String| {
        let obj = serde_json::json!({
            "file": path.display().to_string(),
            "status": "unsupported",
            "reason": msg,
        });
        (obj.to_string(), 2)
    };
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => return input_error(format!("cannot read file: {e}")),
    };
    let problem = match parse_problem(&bytes) {
        Ok(p) => p,
        Err(e) => return input_error(e.to_string()),
    };
    let timeout = args.timeout_ms.unwrap_or(problem.timeout_ms);
    let opts = VerifyOptions {
        dump_smt2: args.dump_smt2.clone(),
        dump_annotations: args.dump_annotations,
    };
    let outcome = match args.bound {
        Some(n) => verify_at_bound(
            &problem.schema,
            &problem.constraints,
            &problem.q1,
            &problem.q2,
            n,
            timeout,
            &opts,
        ),
        None => {
            let max = args.max_bound.unwrap_or(problem.bound);
            verify_incremental(
                &problem.schema,
                &problem.constraints,
                &problem.q1,
                &problem.q2,
                max,
                timeout,
                &opts,
            )
        }
    };
    match outcome {
        Ok(result) => {
            let code = result.exit_code();
            (render(path, &problem, &result), code)
        }
        Err(Error::Unsupported { feature, location }) => input_error(format!(
            "unsupported feature `{feature}`{}",
            location.map(|l| format!(" at {l}")).unwrap_or_default()
        )),
        Err(e) => {
            let obj = serde_json::json!({
                "file": path.display().to_string(),
                "status": "unknown",
                "reason": e.to_string(),
            });
            (obj.to_string(), 3)
        }
    }
}

fn render(path: &Path, problem: &Problem, result: &VerificationResult) -> String {
    let mut obj = serde_json::Map::new();
    obj.insert(
        "file".into(),
        serde_json::Value::from(path.display().to_string()),
    );
    match &result.status {
        Status::Checked { bound } => {
            obj.insert("status".into(), "checked".into());
            obj.insert("bound".into(), serde_json::Value::from(*bound));
        }
        Status::Refuted { cex, at_bound } => {
            obj.insert("status".into(), "refuted".into());
            obj.insert("bound".into(), serde_json::Value::from(*at_bound));
            obj.insert("counterexample".into(), database_to_json(&cex.db));
        }
        Status::Unsupported { reason } => {
            obj.insert("status".into(), "unsupported".into());
            obj.insert("reason".into(), serde_json::Value::from(reason.clone()));
        }
        Status::Unknown { reason } => {
            obj.insert("status".into(), "unknown".into());
            obj.insert("reason".into(), serde_json::Value::from(reason.clone()));
        }
    }
    obj.insert(
        "timings".into(),
        serde_json::json!({"encode_ms": result.encode_ms, "solve_ms": result.solve_ms}),
    );
    if !result.warnings.is_empty() {
        obj.insert(
            "warnings".into(),
            serde_json::Value::from(result.warnings.clone()),
        );
    }
    if !problem.interner.is_empty() {
        let mut interning = serde_json::Map::new();
        for (s, code) in problem.interner.entries() {
            interning.insert(s.to_string(), serde_json::Value::from(code));
        }
        obj.insert("interning".into(), serde_json::Value::Object(interning));
    }
    serde_json::Value::Object(obj).to_string()
}

fn print_text(line: &str) {
    let v: serde_json::Value = serde_json::from_str(line).expect("internal JSON");
    let status = v["status"].as_str().unwrap_or("?");
    match status {
        "checked" => println!("checked: equivalent up to bound {}", v["bound"]),
        "refuted" => {
            println!("refuted: not equivalent (bound {})", v["bound"]);
            println!(
                "counterexample: {}",
                serde_json::to_string_pretty(&v["counterexample"]).unwrap()
            );
        }
        "unsupported" => println!("unsupported: {}", v["reason"]),
        _ => println!("unknown: {}", v["reason"]),
    }
    if let Some(w) = v.get("warnings").and_then(|w| w.as_array()) {
        for warning in w {
            println!("warning: {}", warning.as_str().unwrap_or(""));
        }
    }
    if let Some(t) = v.get("timings") {
        println!(
            "timings: encode {} ms, solve {} ms",
            t["encode_ms"], t["solve_ms"]
        );
    }
}
