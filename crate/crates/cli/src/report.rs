use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

/// Everything a run prints, in a fixed field order so identical
/// invocations give byte-identical output.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub input: String,
    /// SHA-256 of the input file's bytes, lowercase hex.
    pub input_digest: String,
    /// Precision parameters as given or derived (`j`, `h`, `delta`, `N`, ...).
    pub parameters: Vec<(String, String)>,
    pub iterations: Option<u64>,
    pub result: Value,
    /// Human-readable lines, each carrying its bound when it shows a value.
    #[serde(skip)]
    pub lines: Vec<String>,
    pub error: Option<String>,
    pub exit_status: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u128>,
}

impl RunReport {
    pub fn new(command: &'static str, input: &str, digest: String) -> Self {
        RunReport {
            command,
            input: input.to_string(),
            input_digest: digest,
            parameters: Vec::new(),
            iterations: None,
            result: Value::Null,
            lines: Vec::new(),
            error: None,
            exit_status: 0,
            wall_time_ms: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.push((key.to_string(), value.to_string()));
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    pub fn render_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serialises");
        if let Value::Object(map) = &mut v {
            let params: serde_json::Map<String, Value> = self
                .parameters
                .iter()
                .map(|(k, val)| (k.clone(), Value::String(val.clone())))
                .collect();
            map.insert("parameters".into(), Value::Object(params));
        }
        serde_json::to_string_pretty(&v).expect("report serialises")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(out, "input: {} (sha256 {})", self.input, self.input_digest);
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "param {k} = {v}");
        }
        if let Some(i) = self.iterations {
            let _ = writeln!(out, "iterations: {i}");
        }
        for l in &self.lines {
            let _ = writeln!(out, "{l}");
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error: {e}");
        }
        if let Some(ms) = self.wall_time_ms {
            let _ = writeln!(out, "wall time: {ms} ms");
        }
        let _ = writeln!(out, "exit status: {}", self.exit_status);
        out
    }
}
