use std::io;
use std::path::Path;

use thiserror::Error;

/// Problems found while loading or validating a resource file.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{source_name}: {message}")]
    Invalid { source_name: String, message: String },
    #[error("{source_name}:{line}: {message}")]
    Line { source_name: String, line: usize, message: String },
    #[error("{source_name}: {error}")]
    Io { source_name: String, error: io::Error },
}

impl ConfigError {
    pub fn invalid(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid { source_name: source_name.into(), message: message.into() }
    }

    pub fn line(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        ConfigError::Line { source_name: source_name.into(), line, message: message.into() }
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path)
        .map_err(|error| ConfigError::Io { source_name: path.display().to_string(), error })
}

/// Reads `#`-commented, comma-delimited rows; yields (1-based line, fields).
pub(crate) fn delimited_rows(
    content: &str,
    source_name: &str,
) -> Result<Vec<(usize, Vec<String>)>, ConfigError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            ConfigError::line(source_name, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let fields: Vec<String> = record.iter().map(str::to_string).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push((line, fields));
    }
    Ok(rows)
}

/// One entry per non-blank, non-comment line.
pub(crate) fn plain_lines(content: &str) -> Vec<(usize, String)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.to_string()))
        .collect()
}
