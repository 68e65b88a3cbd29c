use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One raw row of an interaction log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub user_id: String,
    pub item_id: String,
    /// Rating or count, never negative.
    pub value: f64,
    pub timestamp: Option<i64>,
}

impl InteractionRecord {
    pub fn new(user_id: impl Into<String>, item_id: impl Into<String>, value: f64) -> Self {
        Self {
            user_id: user_id.into(),
            item_id: item_id.into(),
            value,
            timestamp: None,
        }
    }
}

/// Layout of a delimited interaction file: `user, item, value[, timestamp]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delimited {
    pub delimiter: u8,
    pub has_header: bool,
}

impl Delimited {
    pub fn csv() -> Self {
        Self {
            delimiter: b',',
            has_header: true,
        }
    }

    pub fn tsv() -> Self {
        Self {
            delimiter: b'\t',
            has_header: false,
        }
    }
}

impl Default for Delimited {
    fn default() -> Self {
        Self::csv()
    }
}

/// Read every row of `path` in file order. No filtering is applied.
pub fn load_interactions(path: &Path, format: &Delimited) -> Result<Vec<InteractionRecord>> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    file.read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    parse_interactions(&text, format).map_err(|e| match e {
        Error::Empty(_) => Error::Empty(path.display().to_string()),
        other => other,
    })
}

pub fn parse_interactions(text: &str, format: &Delimited) -> Result<Vec<InteractionRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(format.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        out.push(parse_row(&row, line)?);
    }
    if out.is_empty() {
        return Err(Error::Empty("interaction file".into()));
    }
    Ok(out)
}

fn parse_row(row: &csv::StringRecord, line: u64) -> Result<InteractionRecord> {
    let malformed = |message: String| Error::MalformedRow { line, message };
    if row.len() < 3 || row.len() > 4 {
        return Err(malformed(format!(
            "expected 3 or 4 fields (user, item, value[, timestamp]), found {}",
            row.len()
        )));
    }
    let user_id = &row[0];
    let item_id = &row[1];
    if user_id.is_empty() || item_id.is_empty() {
        return Err(malformed("empty user or item id".into()));
    }
    let value: f64 = row[2]
        .parse()
        .map_err(|_| malformed(format!("value {:?} is not a number", &row[2])))?;
    if !value.is_finite() || value < 0.0 {
        return Err(malformed(format!("value {value} must be finite and >= 0")));
    }
    let timestamp = match row.get(3) {
        None | Some("") => None,
        Some(t) => Some(
            t.parse::<i64>()
                .map_err(|_| malformed(format!("timestamp {t:?} is not an integer")))?,
        ),
    };
    Ok(InteractionRecord {
        user_id: user_id.to_string(),
        item_id: item_id.to_string(),
        value,
        timestamp,
    })
}
