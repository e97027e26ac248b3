//! Plain-text checkpoint format, version 1:
//!
//! ```text
//! auv-ppo-checkpoint 1
//! policy <layer widths...>
//! value <layer widths...>
//! meta <key> <value>        (zero or more)
//! params <count>
//! <one parameter per line>
//! ```
//!
//! Parameters are written in shortest round-trip form, so loading restores
//! the exact bits.

use std::fmt::Write as _;

use thiserror::Error;

use super::policy::ActorCritic;

const MAGIC: &str = "auv-ppo-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file (bad header)")]
    BadHeader,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ActorCritic,
    pub meta: Vec<(String, String)>,
}

impl Checkpoint {
    pub fn new(model: ActorCritic) -> Self {
        Self { model, meta: Vec::new() }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let widths = |s: &[usize]| s.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = format!("{MAGIC} {VERSION}\n");
        let _ = writeln!(out, "policy {}", widths(self.model.policy_sizes()));
        let _ = writeln!(out, "value {}", widths(self.model.value_sizes()));
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta {k} {v}");
        }
        let _ = writeln!(out, "params {}", self.model.n_params());
        for p in self.model.params() {
            let _ = writeln!(out, "{p:?}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CheckpointError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (_, header) = lines.next().ok_or(CheckpointError::BadHeader)?;
        let mut head = header.split_whitespace();
        if head.next() != Some(MAGIC) {
            return Err(CheckpointError::BadHeader);
        }
        let version: u32 = head.next().and_then(|v| v.parse().ok()).ok_or(CheckpointError::BadHeader)?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let parse_err = |line, message: &str| CheckpointError::Parse {
            line,
            message: message.to_string(),
        };
        let mut policy = None;
        let mut value = None;
        let mut meta = Vec::new();
        let count = loop {
            let (n, line) = lines.next().ok_or_else(|| parse_err(0, "missing params section"))?;
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            let sizes = || -> Result<Vec<usize>, CheckpointError> {
                rest.split_whitespace()
                    .map(|w| w.parse().map_err(|_| parse_err(n, "bad layer width")))
                    .collect()
            };
            match key {
                "policy" => policy = Some(sizes()?),
                "value" => value = Some(sizes()?),
                "meta" => {
                    let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                    meta.push((k.to_string(), v.to_string()));
                }
                "params" => break rest.trim().parse::<usize>().map_err(|_| parse_err(n, "bad parameter count"))?,
                _ => return Err(parse_err(n, "unknown section")),
            }
        };
        let mut params = Vec::with_capacity(count);
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            params.push(line.parse::<f64>().map_err(|_| parse_err(n, "bad parameter value"))?);
        }
        if params.len() != count {
            return Err(CheckpointError::Shape(format!("header declares {count} parameters, found {}", params.len())));
        }
        let policy = policy.ok_or_else(|| parse_err(0, "missing policy shape"))?;
        let value = value.ok_or_else(|| parse_err(0, "missing value shape"))?;
        let model = ActorCritic::from_parts(policy, value, params).map_err(CheckpointError::Shape)?;
        Ok(Self { model, meta })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CheckpointError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
