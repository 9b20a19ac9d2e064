use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};
use varkit_core::jet::Decision;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub label: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    /// Decided by random evaluation rather than canonical forms.
    pub probabilistic: bool,
    pub detail: String,
    pub witness: Vec<Witness>,
}

impl Check {
    pub fn new(name: impl Into<String>, verdict: Verdict, detail: impl Into<String>) -> Self {
        Check { name: name.into(), verdict, probabilistic: false, detail: detail.into(), witness: Vec::new() }
    }

    pub fn decided(name: impl Into<String>, d: Decision, detail: impl Into<String>) -> Self {
        Check { probabilistic: d.is_probabilistic(), ..Check::new(name, Verdict::from_bool(d.holds()), detail) }
    }

    pub fn with_witness(mut self, witness: Vec<Witness>) -> Self {
        self.witness = witness;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Inputs {
    pub model: Option<String>,
    pub arguments: Vec<String>,
    /// SHA-256 of the model text followed by the arguments.
    pub sha256: String,
}

impl Inputs {
    pub fn new(model: Option<(&str, &str)>, arguments: Vec<String>) -> Self {
        let mut h = Sha256::new();
        if let Some((_, text)) = model {
            h.update(text.as_bytes());
        }
        for a in &arguments {
            h.update([0u8]);
            h.update(a.as_bytes());
        }
        Inputs { model: model.map(|(p, _)| p.to_string()), arguments, sha256: hex::encode(h.finalize()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub command: String,
    pub inputs: Inputs,
    pub seed: u64,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub results: BTreeMap<String, serde_json::Value>,
    pub timing_ms: u64,
}

impl Report {
    pub fn new(command: &str, inputs: Inputs, seed: u64) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            inputs,
            seed,
            verdict: Verdict::Pass,
            checks: Vec::new(),
            results: BTreeMap::new(),
            timing_ms: 0,
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn result(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    /// Fails iff some check failed.
    pub fn finish(&mut self, timing_ms: u64) {
        self.timing_ms = timing_ms;
        self.verdict = if self.checks.iter().any(|c| c.verdict == Verdict::Fail) {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Fail => 1,
            _ => 0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{}", self.command);
        if let Some(m) = &self.inputs.model {
            let _ = write!(out, " {m}");
        }
        out.push('\n');
        for c in &self.checks {
            let prob = if c.probabilistic { " (probabilistic)" } else { "" };
            let _ = writeln!(out, "[{}] {}{prob}: {}", c.verdict.tag(), c.name, c.detail);
            for w in &c.witness {
                let _ = writeln!(out, "    {} = {}", w.label, w.value);
            }
        }
        for (k, v) in &self.results {
            match v {
                serde_json::Value::String(s) => {
                    let _ = writeln!(out, "{k}: {s}");
                }
                other => {
                    let _ = writeln!(out, "{k}: {other}");
                }
            }
        }
        let _ = writeln!(out, "verdict: {}", self.verdict.tag().to_lowercase());
        out
    }
}
