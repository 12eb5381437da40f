//! Newline-delimited JSON record files and the shared record types.
//!
//! Every corpus the pipeline reads or writes is one JSON object per line.
//! Blank lines are ignored; malformed lines are skipped and reported with
//! their 1-based line number.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A short report: one tweet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub user_id: String,
    /// Seconds since the Unix epoch, UTC.
    pub created_at: i64,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    /// Detected story (event cluster) this post belongs to, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub story_id: Option<String>,
}

impl Post {
    pub fn new(id: &str, user_id: &str, created_at: i64, text: &str) -> Self {
        Post {
            id: id.to_owned(),
            user_id: user_id.to_owned(),
            created_at,
            text: text.to_owned(),
            lat: None,
            lon: None,
            story_id: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Records<T> {
    pub items: Vec<T>,
    /// `(line, reason)` for every line that failed to parse.
    pub skipped: Vec<(usize, String)>,
}

pub fn parse_records<T: DeserializeOwned>(content: &str) -> Records<T> {
    let mut items = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(v) => items.push(v),
            Err(e) => skipped.push((i + 1, e.to_string())),
        }
    }
    Records { items, skipped }
}

pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Records<T>> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput(path.to_owned()),
        _ => Error::Io(e),
    })?;
    let mut items = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => items.push(v),
            Err(e) => {
                log::warn!("{}:{}: skipping bad record: {e}", path.display(), i + 1);
                skipped.push((i + 1, e.to_string()));
            }
        }
    }
    Ok(Records { items, skipped })
}

pub fn write_records<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
