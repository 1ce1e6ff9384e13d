use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::error::exit;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Infeasible,
    Undecided,
    Passed,
    Failed,
    Done,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Feasible => "feasible",
            Verdict::Infeasible => "infeasible",
            Verdict::Undecided => "undecided",
            Verdict::Passed => "passed",
            Verdict::Failed => "failed",
            Verdict::Done => "done",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Feasible | Verdict::Passed | Verdict::Done => exit::SUCCESS,
            Verdict::Infeasible | Verdict::Failed => exit::INFEASIBLE,
            Verdict::Undecided => exit::UNDECIDED,
        }
    }
}

/// Result of one subcommand: a verdict, machine fields, human lines and
/// the files that were written.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub verdict: Verdict,
    pub fields: BTreeMap<String, Value>,
    pub lines: Vec<String>,
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(command: &str, verdict: Verdict) -> Self {
        Self {
            command: command.to_string(),
            verdict,
            fields: BTreeMap::new(),
            lines: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn field(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.fields.insert(key.to_string(), value.into());
        self
    }

    pub fn line(&mut self, text: impl Into<String>) -> &mut Self {
        self.lines.push(text.into());
        self
    }

    pub fn artifact(&mut self, path: &str) -> &mut Self {
        self.artifacts.push(path.to_string());
        self
    }

    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}

/// Human summary and machine JSON for a report.
pub fn report_render(report: &Report) -> (String, Value) {
    let mut text = String::new();
    let _ = writeln!(text, "{}: {}", report.command, report.verdict.as_str());
    for l in &report.lines {
        let _ = writeln!(text, "  {l}");
    }
    for a in &report.artifacts {
        let _ = writeln!(text, "  wrote {a}");
    }
    let value = json!({
        "schema_version": SCHEMA_VERSION,
        "command": report.command,
        "verdict": report.verdict.as_str(),
        "exit_code": report.exit_code(),
        "result": report.fields,
        "artifacts": report.artifacts,
    });
    (text, value)
}

/// Same shape as `report_render` for errors that stop a subcommand.
pub fn error_render(command: &str, code: i32, message: &str) -> (String, Value) {
    let text = format!("{command}: error: {message}\n");
    let value = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "verdict": "error",
        "exit_code": code,
        "error": message,
    });
    (text, value)
}
