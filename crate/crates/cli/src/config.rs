//! Line-oriented experiment configs.
//!
//! ```text
//! [dini]
//! kind = logpower
//! c = 1
//! q = 2
//! tol = 1e-8
//! ```
//!
//! One bracketed section names the command; the body is `key = value` lines.
//! Blank lines and `#` comments are ignored.  Unknown commands and unknown
//! or missing keys are rejected with the offending line/key named.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: String,
    pub params: BTreeMap<String, String>,
}

#[derive(Debug)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

pub const COMMANDS: &[&str] = &[
    "dini",
    "classify",
    "barrier-verify",
    "iterate-corner",
    "iterate-flat",
    "solve",
    "probe",
    "sharpness",
];

/// Allowed keys per command (every command also accepts `out` and `seed`).
fn allowed_keys(command: &str) -> &'static [&'static str] {
    match command {
        "dini" => &["kind", "c", "p", "q", "r0", "tol", "samples"],
        "classify" => &["domain", "q", "alpha", "slope", "probes", "tol"],
        "barrier-verify" => &["n", "lambda", "budget", "delta", "m", "gamma_kind", "gamma_c", "gamma_p", "gamma_q"],
        "iterate-corner" => &["n", "lambda", "delta", "mu", "m", "a1", "a2", "steps", "f_profile", "sigma_profile"],
        "iterate-flat" => &["n", "lambda", "delta", "mu", "m", "a1", "a2", "steps", "f_profile", "sigma_profile", "d_profile", "oracle"],
        "solve" => &["domain", "q", "alpha", "coeffs", "f", "h", "tol", "corrupt"],
        "probe" => &["domain", "q", "alpha", "direction", "k_min", "k_max", "h_factor", "window_factor", "tol"],
        "sharpness" => &["alpha_grid", "q_grid", "k_min", "k_max", "h_factor", "window_factor", "tol", "h"],
        _ => &[],
    }
}

fn required_keys(command: &str) -> &'static [&'static str] {
    match command {
        "dini" => &["kind"],
        "classify" => &["domain"],
        "barrier-verify" => &["n", "lambda"],
        "iterate-corner" => &["steps"],
        "iterate-flat" => &["steps"],
        "solve" => &["domain", "h"],
        "probe" => &["domain", "k_min", "k_max"],
        "sharpness" => &["alpha_grid", "q_grid"],
        _ => &[],
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ParseError> {
    let mut command: Option<String> = None;
    let mut params = BTreeMap::new();
    let mut command_line = 0usize;
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(stripped) = line.strip_prefix('[') {
            let name = stripped
                .strip_suffix(']')
                .ok_or(ParseError { line: line_no, message: "unterminated section header".into() })?
                .trim()
                .to_string();
            if command.is_some() {
                return Err(ParseError {
                    line: line_no,
                    message: "multiple section headers; one command per config".into(),
                });
            }
            if !COMMANDS.contains(&name.as_str()) {
                return Err(ParseError {
                    line: line_no,
                    message: format!("unknown command '{name}'"),
                });
            }
            command = Some(name);
            command_line = line_no;
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ParseError {
            line: line_no,
            message: format!("expected 'key = value', got '{line}'"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let cmd = command.as_ref().ok_or(ParseError {
            line: line_no,
            message: "key before any [section] header".into(),
        })?;
        if key != "out" && key != "seed" && !allowed_keys(cmd).contains(&key.as_str()) {
            return Err(ParseError {
                line: line_no,
                message: format!("unknown key '{key}' for command '{cmd}'"),
            });
        }
        if params.insert(key.clone(), value).is_some() {
            return Err(ParseError { line: line_no, message: format!("duplicate key '{key}'") });
        }
    }
    let command = command.ok_or(ParseError { line: 1, message: "missing [section] header".into() })?;
    for req in required_keys(&command) {
        if !params.contains_key(*req) {
            return Err(ParseError {
                line: command_line,
                message: format!("missing required key '{req}' for command '{command}'"),
            });
        }
    }
    Ok(ExperimentConfig { command, params })
}

/// Inverse of [`parse_config`] up to key order and whitespace.
#[allow(dead_code)] // exercised by the round-trip tests
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let mut out = format!("[{}]\n", cfg.command);
    for (k, v) in &cfg.params {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}

impl ExperimentConfig {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(|s| s.as_str())
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64, String> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| format!("key '{key}': malformed number '{v}': {e}")),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize, String> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| format!("key '{key}': malformed integer '{v}': {e}")),
        }
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64, String> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| format!("key '{key}': malformed integer '{v}': {e}")),
        }
    }

    pub fn get_list(&self, key: &str) -> Result<Vec<f64>, String> {
        match self.params.get(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|e| format!("key '{key}': bad list entry '{s}': {e}")))
                .collect(),
        }
    }
}
