//! JSON Lines helpers: one serde value per line, blank lines ignored.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, items: &[T]) -> Result<(), JsonlError> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead, T: DeserializeOwned>(r: R) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| JsonlError::Parse { line: i + 1, source })?);
    }
    Ok(out)
}
