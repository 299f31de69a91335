//! The `cohspace` command line: one JSON config per run, optionally
//! overridden field by field from flags.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use config::{
    Command, Format, LyapunovSystem, ObservableSpec, OutputSpec, QuantizeMode, RunConfig, StateSpec,
};
pub use run::{run, RunOutput};

use crate::error::CohError;
use crate::io::write_atomic;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "cohspace", version, about = "Coherent-space computations from a JSON config")]
struct Args {
    /// Command, as one word (`kernel-eval`) or two (`kernel eval`).
    words: Vec<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Payload path; standard output when absent.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "COHSPACE_THREADS")]
    threads: Option<usize>,
    /// Report path; defaults to `<out>.report.json`, or standard error.
    #[arg(long)]
    report: Option<String>,
    /// Arbitrary override `key=json`; dotted keys reach into sub-objects.
    #[arg(long = "set", value_name = "KEY=JSON")]
    set: Vec<String>,
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    z: Option<String>,
    #[arg(long)]
    z2: Option<String>,
    #[arg(long)]
    z0: Option<String>,
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long)]
    hamiltonian: Option<String>,
    #[arg(long)]
    energy: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    algebra: Option<String>,
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    observables: Option<String>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    tspan: Option<String>,
    #[arg(long)]
    interval: Option<String>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

/// Report written next to every payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    /// Full config with defaults filled in; feeding it back reproduces the run.
    pub config: Value,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub warnings: Vec<String>,
    pub summary: Value,
    pub payload: PayloadRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadRef {
    /// `None` when the payload went to standard output.
    pub path: Option<String>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub error: String,
    pub message: String,
    pub exit_code: i32,
}

impl ErrorReport {
    pub fn from_error(e: &CohError) -> Self {
        ErrorReport {
            error: e.kind().into(),
            message: e.to_string(),
            exit_code: exit_code(e),
        }
    }
}

/// Exit status for an error: configuration and input problems are 2,
/// everything else 1.
pub fn exit_code(e: &CohError) -> i32 {
    match e {
        CohError::Config(_) | CohError::Io(_) => EXIT_CONFIG,
        _ => EXIT_DOMAIN,
    }
}

/// A flag value: JSON text, a comma list of numbers, or a path to a JSON
/// file.
fn parse_flag_value(raw: &str) -> Result<Value, CohError> {
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        return Ok(v);
    }
    let nums: Option<Vec<f64>> = raw.split(',').map(|s| s.trim().parse().ok()).collect();
    if let Some(n) = nums {
        return Ok(n.into());
    }
    read_json(Path::new(raw))
}

fn read_json(path: &Path) -> Result<Value, CohError> {
    let text = std::fs::read_to_string(path).map_err(|e| CohError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CohError::Config(format!("{}: {e}", path.display())))
}

fn set_path(root: &mut Map<String, Value>, key: &str, v: Value) -> Result<(), CohError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields one part");
    let mut cur = root;
    for p in parts {
        let next = cur.entry(p.to_string()).or_insert_with(|| Value::Object(Map::new()));
        cur = next
            .as_object_mut()
            .ok_or_else(|| CohError::Config(format!("--set {key}: {p} is not an object")))?;
    }
    cur.insert(last.to_string(), v);
    Ok(())
}

/// Merges the config file, command words and flags into one JSON object.
fn merged_config(args: &Args) -> Result<Value, CohError> {
    let mut root = match &args.config {
        Some(p) => match read_json(p)? {
            Value::Object(m) => m,
            _ => return Err(CohError::Config("config must be a JSON object".into())),
        },
        None => Map::new(),
    };
    match args.words.as_slice() {
        [] => {}
        [w] => {
            root.insert("command".into(), w.clone().into());
        }
        [a, b] if a == "quantize" => {
            root.insert("command".into(), "quantize".into());
            root.insert("mode".into(), b.clone().into());
        }
        [a, b] => {
            root.insert("command".into(), format!("{a}-{b}").into());
        }
        w => return Err(CohError::Config(format!("unexpected arguments {:?}", &w[2..]))),
    }
    let fields: [(&str, &Option<String>); 17] = [
        ("space", &args.space),
        ("points", &args.points),
        ("z", &args.z),
        ("z2", &args.z2),
        ("z0", &args.z0),
        ("basis", &args.basis),
        ("matrix", &args.matrix),
        ("hamiltonian", &args.hamiltonian),
        ("energy", &args.energy),
        ("model", &args.model),
        ("algebra", &args.algebra),
        ("state", &args.state),
        ("observables", &args.observables),
        ("kernel", &args.kernel),
        ("system", &args.system),
        ("tspan", &args.tspan),
        ("interval", &args.interval),
    ];
    for (k, v) in fields {
        if let Some(raw) = v {
            root.insert(k.into(), parse_flag_value(raw)?);
        }
    }
    if let Some(v) = args.rtol {
        root.insert("rtol".into(), v.into());
    }
    if let Some(v) = args.tol {
        root.insert("tol".into(), v.into());
    }
    if let Some(v) = args.samples {
        root.insert("samples".into(), v.into());
    }
    if let Some(v) = args.seed {
        root.insert("seed".into(), v.into());
    }
    if let Some(v) = args.threads {
        root.insert("threads".into(), v.into());
    }
    for (key, v) in [("path", &args.out), ("report", &args.report)] {
        if let Some(p) = v {
            set_path(&mut root, &format!("output.{key}"), p.clone().into())?;
        }
    }
    if let Some(f) = &args.format {
        set_path(&mut root, "output.format", f.clone().into())?;
    }
    for s in &args.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| CohError::Config(format!("--set expects key=json, got {s:?}")))?;
        set_path(&mut root, k, parse_flag_value(v)?)?;
    }
    Ok(Value::Object(root))
}

/// Parses a config and runs it, writing the payload and report. Returns
/// the report (also on failure, when the config parsed) and the exit code.
pub fn execute(value: Value) -> (Option<RunReport>, i32) {
    let cfg = match RunConfig::from_value(value) {
        Ok(c) => c,
        Err(m) => {
            emit_error(&CohError::Config(m));
            return (None, EXIT_CONFIG);
        }
    };
    let start = Instant::now();
    let result = run(&cfg);
    let wall = start.elapsed().as_secs_f64();
    let mut report = RunReport {
        version: VERSION.into(),
        command: cfg.command.name().into(),
        config: cfg.to_value(),
        seed: cfg.seed,
        threads: cfg.threads,
        wall_time_s: wall,
        warnings: Vec::new(),
        summary: Value::Null,
        payload: PayloadRef {
            path: cfg.output.path.clone(),
            format: cfg.format(),
        },
        error: None,
    };
    let err = match result {
        Ok(out) => {
            report.warnings = out.warnings;
            report.summary = out.summary;
            report.payload.format = out.format;
            let written = match &cfg.output.path {
                Some(p) => write_atomic(Path::new(p), &out.payload),
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&out.payload).map_err(CohError::from)
                }
            };
            written.err().or(out.failure)
        }
        Err(e) => Some(e),
    };
    let code = err.as_ref().map_or(EXIT_OK, exit_code);
    if let Some(e) = &err {
        emit_error(e);
        report.error = Some(ErrorReport::from_error(e));
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    let report_path = cfg
        .output
        .report
        .clone()
        .or_else(|| cfg.output.path.as_ref().map(|p| format!("{p}.report.json")));
    match report_path {
        Some(p) => {
            if let Err(e) = write_atomic(Path::new(&p), text.as_bytes()) {
                emit_error(&e);
                return (Some(report), code.max(EXIT_DOMAIN));
            }
        }
        None => eprint!("{text}"),
    }
    (Some(report), code)
}

fn emit_error(e: &CohError) {
    eprintln!("{}", serde_json::to_string(&ErrorReport::from_error(e)).expect("error serializes"));
}

/// Entry point of the binary; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            emit_error(&CohError::Config(e.to_string().trim().to_string()));
            return EXIT_CONFIG;
        }
    };
    let value = match merged_config(&args) {
        Ok(v) => v,
        Err(e) => {
            emit_error(&e);
            return exit_code(&e).max(EXIT_CONFIG);
        }
    };
    execute(value).1
}

pub fn main() -> i32 {
    main_with_args(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Args {
        Args::try_parse_from(std::iter::once("cohspace").chain(v.iter().copied())).unwrap()
    }

    #[test]
    fn flag_values() {
        assert_eq!(parse_flag_value("[1,2]").unwrap(), serde_json::json!([1, 2]));
        assert_eq!(parse_flag_value("0,10").unwrap(), serde_json::json!([0.0, 10.0]));
        assert!(matches!(parse_flag_value("/no/such/file.json"), Err(CohError::Io(_))));
    }

    #[test]
    fn words_and_flags_merge() {
        let v = merged_config(&args(&[
            "spec",
            "solve",
            "--model",
            r#"{"model":"oscillator"}"#,
            "--interval",
            "0,10",
            "--set",
            "output.format=\"json\"",
        ]))
        .unwrap();
        assert_eq!(v["command"], "spec-solve");
        assert_eq!(v["output"]["format"], "json");
        let cfg = RunConfig::from_value(v).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.format(), Format::Json);
        let v = merged_config(&args(&["quantize", "generator"])).unwrap();
        assert_eq!(v["mode"], "generator");
    }

    #[test]
    fn config_echo_round_trips() {
        let v = serde_json::json!({
            "command": "kernel-check",
            "space": {"kind": "spin", "exponent": 2.0},
            "seed": 7
        });
        let cfg = RunConfig::from_value(v).unwrap();
        let echo = cfg.to_value();
        assert_eq!(echo["samples"], 50);
        assert_eq!(RunConfig::from_value(echo).unwrap(), cfg);
    }

    #[test]
    fn bad_configs_are_config_errors() {
        for v in [
            serde_json::json!({"command": "nope"}),
            serde_json::json!({"command": "kernel-eval"}),
            serde_json::json!([1, 2]),
            serde_json::json!({"command": "kernel-eval", "space": {"kind": "trivial", "dim": 2}, "z": [[1,0],[0,0]], "z2": [[0,0],[1,0]], "extra": 1}),
            serde_json::json!({"command": "kernel-eval", "space": {"kind": "trivial", "dim": 2}, "z": [[1,0],[0,0]], "z2": [[0,0],[1,0]], "output": {"format": "csv"}}),
        ] {
            assert_eq!(execute(v).1, EXIT_CONFIG);
        }
    }
}
