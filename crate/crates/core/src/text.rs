//! Line-oriented TAB-separated input helpers shared by the file readers.

use std::fs;
use std::io;
use std::path::Path;

/// A non-comment, non-blank input line with its 1-based line number.
pub(crate) struct Record<'a> {
    pub line: usize,
    pub fields: Vec<&'a str>,
}

/// Splits `text` into records, skipping blank lines and `#` comments.
pub(crate) fn records(text: &str) -> impl Iterator<Item = Record<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            return None;
        }
        Some(Record {
            line: i + 1,
            fields: raw.split('\t').collect(),
        })
    })
}

pub(crate) fn read_to_string(path: &Path) -> io::Result<String> {
    fs::read_to_string(path)
}

/// Parses a finite float, rejecting NaN and infinities.
pub(crate) fn parse_finite(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}
