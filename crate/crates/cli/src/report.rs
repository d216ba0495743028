//! Report envelopes and deterministic output.
//!
//! JSON reports carry a header (tool, version, timestamp, effective config)
//! and a subcommand payload; CSV reports echo the same header as `#` comment
//! lines above a fixed header row. Two runs with equal inputs, seed and
//! version produce byte-identical output except for the timestamp.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};
use twoproj::{Error, Tolerances};

pub enum Payload {
    Json(Value),
    Csv { columns: String, rows: Vec<String> },
}

pub struct Report {
    pub config: Map<String, Value>,
    pub payload: Payload,
}

fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn render(report: &Report) -> String {
    match &report.payload {
        Payload::Json(payload) => {
            let envelope = json!({
                "header": {
                    "tool": "twoproj",
                    "version": env!("CARGO_PKG_VERSION"),
                    "timestamp": timestamp(),
                    "config": Value::Object(report.config.clone()),
                },
                "payload": payload,
            });
            let mut text = serde_json::to_string_pretty(&envelope).expect("report serializes");
            text.push('\n');
            text
        }
        Payload::Csv { columns, rows } => {
            let mut text = String::new();
            text.push_str(&format!(
                "# twoproj v{} timestamp={}\n",
                env!("CARGO_PKG_VERSION"),
                timestamp()
            ));
            for (key, value) in &report.config {
                text.push_str(&format!("# {key} = {value}\n"));
            }
            text.push_str(columns);
            text.push('\n');
            for row in rows {
                text.push_str(row);
                text.push('\n');
            }
            text
        }
    }
}

pub fn write_out(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())
        }
    }
}

/// Exit codes: 2 file-not-found, 3 parse error, 4 validation failure,
/// 1 anything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
        Error::Io(_) => 1,
        Error::Json(_) | Error::Parse { .. } => 3,
        Error::NotProjection { .. }
        | Error::NotHermitian { .. }
        | Error::NotPsd { .. }
        | Error::ContainmentViolation { .. }
        | Error::NotGenericPosition { .. }
        | Error::InvalidTolerance { .. }
        | Error::EntryCount { .. }
        | Error::NonFinite { .. }
        | Error::DimensionMismatch { .. } => 4,
        _ => 1,
    }
}

pub fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Io(_) => "io",
        Error::Json(_) | Error::Parse { .. } => "parse",
        Error::NotProjection { .. } => "not-a-projection",
        Error::NotHermitian { .. } => "not-hermitian",
        Error::SpectralCutAmbiguous { .. } => "spectral-cut-ambiguous",
        Error::NotGenericPosition { .. } => "not-generic-position",
        Error::SymbolVanishes { .. } => "symbol-vanishes",
        Error::WindingResidual { .. } => "winding-residual",
        Error::UnknownFamily { .. } => "unknown-family",
        Error::ZeroPolynomial => "zero-polynomial",
        Error::DegreeOverflow { .. } => "degree-overflow",
        Error::NotEssentiallyNormal { .. } => "not-essentially-normal",
        _ => "error",
    }
}

/// Renders an error as a machine-parsable object (JSON mode) or a plain
/// message.
pub fn render_error(err: &Error, json_mode: bool) -> String {
    if json_mode {
        let body = json!({
            "error": {
                "kind": error_kind(err),
                "message": err.to_string(),
                "exit_code": exit_code(err),
            }
        });
        format!("{}\n", serde_json::to_string_pretty(&body).unwrap())
    } else {
        format!("error: {err}\n")
    }
}

/// Base config map shared by every subcommand.
pub fn base_config(
    subcommand: &str,
    seed: u64,
    strict: bool,
    format: &str,
    tol_override: Option<f64>,
) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert("subcommand".into(), json!(subcommand));
    map.insert("seed".into(), json!(seed));
    map.insert("strict".into(), json!(strict));
    map.insert("format".into(), json!(format));
    map.insert(
        "tolerances".into(),
        serde_json::to_value(Tolerances::DEFAULT).unwrap(),
    );
    if let Some(tol) = tol_override {
        map.insert("tol_override".into(), json!(tol));
    }
    map
}
