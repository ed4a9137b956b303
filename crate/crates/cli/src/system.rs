//! JSON system description files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tdstab::feedback::Plant;
use tdstab::quasipoly::{DelayTerm, TimeDelaySystem};
use tdstab::RealMatrix;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputBlock {
    #[serde(rename = "B")]
    pub b: RealMatrix,
}

/// On-disk form of a system: its delay terms plus optional input and plant blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    pub terms: Vec<DelayTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant: Option<Plant>,
}

/// A parsed file together with the validated objects built from it.
#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub file: SystemFile,
    pub system: TimeDelaySystem,
    pub plant: Option<Plant>,
}

const NON_FINITE: [&str; 3] = ["-Infinity", "Infinity", "NaN"];

/// Quotes bare `NaN`/`Infinity` tokens so they survive JSON parsing and can be reported by position.
fn quote_non_finite(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
        } else if c == '"' {
            in_string = true;
        } else if let Some(tok) = NON_FINITE.iter().find(|t| rest.starts_with(**t)) {
            out.push('"');
            out.push_str(tok);
            out.push('"');
            rest = &rest[tok.len()..];
            continue;
        }
        out.push(c);
        rest = &rest[c.len_utf8()..];
    }
    out
}

fn find_non_finite(v: &Value, path: &mut Vec<String>) -> Option<String> {
    match v {
        Value::String(s) if NON_FINITE.contains(&s.as_str()) => {
            let at = match path.as_slice() {
                [head @ .., r, c] if r.starts_with('[') && c.starts_with('[') => {
                    format!("{}: row {}, column {}", head.concat(), r.trim_matches(['[', ']']), c.trim_matches(['[', ']']))
                }
                _ => path.concat(),
            };
            Some(format!("{at} is {s}"))
        }
        Value::Array(items) => items.iter().enumerate().find_map(|(i, x)| {
            path.push(format!("[{i}]"));
            let r = find_non_finite(x, path);
            path.pop();
            r
        }),
        Value::Object(map) => map.iter().find_map(|(k, x)| {
            path.push(if path.is_empty() { k.clone() } else { format!(".{k}") });
            let r = find_non_finite(x, path);
            path.pop();
            r
        }),
        _ => None,
    }
}

impl SystemFile {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let value: Value = serde_json::from_str(&quote_non_finite(text)).map_err(|e| CliError::Parse(e.to_string()))?;
        if let Some(msg) = find_non_finite(&value, &mut Vec::new()) {
            return Err(CliError::Validation(msg));
        }
        serde_json::from_value(value).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system files always serialize") + "\n"
    }

    /// Checks the invariants and builds the system (and plant, when present).
    pub fn validate(self) -> CliResult<LoadedSystem> {
        let n = self.n;
        if n == 0 {
            return Err(CliError::Validation("n must be positive".into()));
        }
        let square = |m: &RealMatrix, what: String| -> CliResult<()> {
            if m.nrows() != n || m.ncols() != n {
                return Err(CliError::Validation(format!("{what} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())));
            }
            Ok(())
        };
        for (i, t) in self.terms.iter().enumerate() {
            square(&t.matrix, format!("terms[{i}].matrix"))?;
        }
        let system = TimeDelaySystem::new(self.terms.clone(), self.input.as_ref().map(|i| i.b.clone()))?;
        let plant = match &self.plant {
            Some(p) => {
                square(&p.a0, "plant.A0".into())?;
                square(&p.a1, "plant.A1".into())?;
                Some(Plant::new(p.a0.clone(), p.a1.clone(), p.h, p.b.clone())?)
            }
            None => None,
        };
        Ok(LoadedSystem { file: self, system, plant })
    }
}

pub fn load_system(path: &Path) -> CliResult<LoadedSystem> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    SystemFile::from_json(&text)?.validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting_skips_strings() {
        assert_eq!(quote_non_finite(r#"{"a": NaN, "b": "NaN", "c": -Infinity}"#), r#"{"a": "NaN", "b": "NaN", "c": "-Infinity"}"#);
    }

    #[test]
    fn nan_position_is_named() {
        let text = r#"{"n": 1, "terms": [{"delay": 0, "variable": false, "matrix": [[1.0]]},
            {"delay": 0, "variable": true, "matrix": [[NaN]]}]}"#;
        match SystemFile::from_json(text) {
            Err(CliError::Validation(m)) => assert_eq!(m, "terms[1].matrix: row 0, column 0 is NaN"),
            other => panic!("{other:?}"),
        }
    }
}
