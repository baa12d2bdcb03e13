//! Flat `key = value` config files.
//!
//! Blank lines and lines starting with `#` are ignored. Values may be
//! wrapped in double quotes, and `${NAME}` is replaced by the environment
//! variable `NAME`. Keys are flag names without the leading dashes;
//! underscores and hyphens are interchangeable.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config line {line}: environment variable `{name}` is not set")]
    MissingVar { line: usize, name: String },
    #[error("cannot read config file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

fn expand(value: &str, line: usize, env: &dyn Fn(&str) -> Option<String>) -> Result<String, ConfigError> {
    let mut out = String::with_capacity(value.len());
    let mut rest = value;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find('}').ok_or_else(|| ConfigError::Syntax {
            line,
            message: "unterminated `${`".into(),
        })?;
        let name = &after[..end];
        if name.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: "empty variable name".into(),
            });
        }
        let v = env(name).ok_or_else(|| ConfigError::MissingVar {
            line,
            name: name.to_owned(),
        })?;
        out.push_str(&v);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Parses config text, resolving variables through `env`. Later entries
/// for the same key replace earlier ones.
pub fn parse_config(text: &str, env: &dyn Fn(&str) -> Option<String>) -> Result<Vec<ConfigEntry>, ConfigError> {
    let mut entries: Vec<ConfigEntry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(ConfigError::Syntax {
                line,
                message: format!("invalid key `{}`", key),
            });
        }
        let mut value = value.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        let value = expand(value, line, env)?;
        entries.retain(|e| e.key != key);
        entries.push(ConfigEntry { line, key, value });
    }
    Ok(entries)
}

pub fn load_config(path: &Path) -> Result<Vec<ConfigEntry>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text, &|name| std::env::var(name).ok())
}
