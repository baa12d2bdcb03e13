//! Small input formats read only by the command line.

use std::collections::HashMap;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InputError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate doc_id `{id}`")]
    Duplicate { line: usize, id: String },
}

fn field<'a>(obj: &'a Value, name: &str, line: usize) -> Result<&'a str, InputError> {
    obj.get(name).and_then(Value::as_str).ok_or_else(|| InputError::Parse {
        line,
        message: format!("missing string field `{name}`"),
    })
}

/// Reads `{"doc_id": ..., "text": ...}` rows.
pub fn parse_hypotheses(text: &str) -> Result<HashMap<String, String>, InputError> {
    let mut out = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let obj: Value = serde_json::from_str(raw).map_err(|e| InputError::Parse {
            line,
            message: e.to_string(),
        })?;
        let id = field(&obj, "doc_id", line)?.to_owned();
        let text = field(&obj, "text", line)?.to_owned();
        if out.insert(id.clone(), text).is_some() {
            return Err(InputError::Duplicate { line, id });
        }
    }
    Ok(out)
}

/// One finite number per line; blank lines and `#` comments are skipped.
pub fn parse_values(text: &str) -> Result<Vec<f64>, InputError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| InputError::Parse {
            line: idx + 1,
            message: format!("`{t}` is not a number"),
        })?;
        if !v.is_finite() {
            return Err(InputError::Parse {
                line: idx + 1,
                message: format!("`{t}` is not finite"),
            });
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypotheses() {
        let h = parse_hypotheses("{\"doc_id\":\"a\",\"text\":\"x\"}\n\n{\"doc_id\":\"b\",\"text\":\"\"}\n").unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h["a"], "x");
        assert!(matches!(parse_hypotheses("{\"doc_id\":\"a\"}"), Err(InputError::Parse { line: 1, .. })));
        assert!(matches!(
            parse_hypotheses("{\"doc_id\":\"a\",\"text\":\"x\"}\n{\"doc_id\":\"a\",\"text\":\"y\"}"),
            Err(InputError::Duplicate { line: 2, .. })
        ));
    }

    #[test]
    fn values() {
        assert_eq!(parse_values("1\n# c\n\n-2.5\n").unwrap(), vec![1.0, -2.5]);
        assert!(parse_values("abc").is_err());
        assert!(parse_values("inf").is_err());
    }
}
