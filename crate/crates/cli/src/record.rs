use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const ARTIFACT_VERSION: &str = concat!("rho-lab/", env!("CARGO_PKG_VERSION"));

/// One line of the records file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub command: String,
    pub params: Value,
    pub seed: u64,
    /// UTC, RFC 3339.
    pub started_at: String,
    pub duration_ms: u64,
    pub outputs: Value,
    pub version: String,
}

pub fn append(path: &Path, record: &ExperimentRecord) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut line = serde_json::to_string(record).map_err(std::io::Error::other)?;
    line.push('\n');
    // one write per record keeps concurrent appenders from interleaving lines
    OpenOptions::new().create(true).append(true).open(path)?.write_all(line.as_bytes())
}

#[derive(Debug)]
pub enum ReadError {
    Io(std::io::Error),
    NoSuchLine(usize),
    Parse(serde_json::Error),
}

impl std::fmt::Display for ReadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io(e) => write!(f, "cannot read records: {e}"),
            Self::NoSuchLine(n) => write!(f, "no record on line {n}"),
            Self::Parse(e) => write!(f, "malformed record: {e}"),
        }
    }
}

pub fn read_line(path: &Path, line: usize) -> Result<ExperimentRecord, ReadError> {
    let text = fs::read_to_string(path).map_err(ReadError::Io)?;
    let raw = line
        .checked_sub(1)
        .and_then(|i| text.lines().nth(i))
        .ok_or(ReadError::NoSuchLine(line))?;
    serde_json::from_str(raw).map_err(ReadError::Parse)
}

/// Path to the first place two JSON values differ, e.g. `outputs.rows[2].s`.
pub fn first_difference(path: &str, a: &Value, b: &Value) -> Option<String> {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for (k, va) in x {
                let sub = format!("{path}.{k}");
                match y.get(k) {
                    Some(vb) => {
                        if let Some(d) = first_difference(&sub, va, vb) {
                            return Some(d);
                        }
                    }
                    None => return Some(sub),
                }
            }
            y.keys().find(|k| !x.contains_key(*k)).map(|k| format!("{path}.{k}"))
        }
        (Value::Array(x), Value::Array(y)) => {
            for (i, (va, vb)) in x.iter().zip(y).enumerate() {
                if let Some(d) = first_difference(&format!("{path}[{i}]"), va, vb) {
                    return Some(d);
                }
            }
            (x.len() != y.len()).then(|| format!("{path}[{}]", x.len().min(y.len())))
        }
        _ => (a != b).then(|| path.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn differences() {
        let a = json!({"x": 1, "y": [1, 2, {"z": 3.5}]});
        assert_eq!(first_difference("outputs", &a, &a), None);
        let b = json!({"x": 1, "y": [1, 2, {"z": 3.25}]});
        assert_eq!(first_difference("outputs", &a, &b).as_deref(), Some("outputs.y[2].z"));
        let c = json!({"x": 1, "y": [1, 2]});
        assert_eq!(first_difference("outputs", &a, &c).as_deref(), Some("outputs.y[2]"));
        let d = json!({"x": 1});
        assert_eq!(first_difference("outputs", &a, &d).as_deref(), Some("outputs.y"));
    }

    #[test]
    fn append_and_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/records.jsonl");
        let rec = ExperimentRecord {
            command: "mix".into(),
            params: json!({"p": 7}),
            seed: u64::MAX,
            started_at: "2026-01-01T00:00:00Z".into(),
            duration_ms: 3,
            outputs: json!({"tau": 4, "x": 0.1}),
            version: ARTIFACT_VERSION.into(),
        };
        append(&path, &rec).unwrap();
        append(&path, &rec).unwrap();
        assert_eq!(read_line(&path, 2).unwrap(), rec);
        assert!(matches!(read_line(&path, 3), Err(ReadError::NoSuchLine(3))));
        assert!(matches!(read_line(&path, 0), Err(ReadError::NoSuchLine(0))));
    }
}
