use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Exit codes shared by every subcommand.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// A failure that maps to exit code 2: bad flags or malformed input.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

impl UsageError {
    pub fn new(msg: impl Into<String>) -> Self {
        UsageError(msg.into())
    }
}

/// Reads a file, or stdin for `None` and `-`.
pub fn read_input(path: Option<&Path>) -> Result<(String, String), UsageError> {
    match path {
        Some(p) if p != Path::new("-") => {
            let text = fs::read_to_string(p).map_err(|e| UsageError::new(format!("{}: {e}", p.display())))?;
            Ok((p.display().to_string(), text))
        }
        _ => {
            let mut text = String::new();
            io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| UsageError::new(format!("<stdin>: {e}")))?;
            Ok(("<stdin>".into(), text))
        }
    }
}

/// Parses JSON, reporting the source with line and column on failure.
pub fn parse_json<T: DeserializeOwned>(source: &str, text: &str) -> Result<T, UsageError> {
    serde_json::from_str(text)
        .map_err(|e| UsageError::new(format!("{source}:{}:{}: {e}", e.line(), e.column())))
}

pub fn load_json<T: DeserializeOwned>(path: Option<&Path>) -> Result<T, UsageError> {
    let (source, text) = read_input(path)?;
    parse_json(&source, &text)
}

/// Serializes `value` with a leading `"schema"` field.
pub fn with_schema<T: Serialize>(schema: &str, value: &T) -> serde_json::Value {
    let mut out = serde_json::Map::new();
    out.insert("schema".into(), schema.into());
    match serde_json::to_value(value).expect("serializable") {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                if k != "schema" {
                    out.insert(k, v);
                }
            }
        }
        other => {
            out.insert("value".into(), other);
        }
    }
    serde_json::Value::Object(out)
}

/// Writes pretty JSON to `out` or stdout.
pub fn emit_json(value: &serde_json::Value, out: Option<&Path>) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    match out {
        Some(p) => fs::write(p, text + "\n"),
        None => {
            let mut stdout = io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                other => other,
            }
        }
    }
}

/// Writes text to stdout, treating a closed pipe as success.
pub fn emit_text(text: &str) -> io::Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}
