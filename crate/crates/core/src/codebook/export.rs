use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{join_multi, split_multi, CodedEmail};
use crate::jsonl::{read_jsonl, write_jsonl, JsonlError};

pub const CSV_COLUMNS: [&str; 10] = [
    "email_id",
    "company_names",
    "sector",
    "salutation",
    "threat",
    "urgency",
    "actions_generic",
    "action_specific",
    "main_topic",
    "indirect_flag",
];

#[derive(Debug, thiserror::Error)]
pub enum CodedFileError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("row {row}: invalid indirect_flag {value:?}")]
    BadFlag { row: usize, value: String },
    #[error("unrecognised coded file extension for {0}")]
    Extension(String),
}

pub fn write_coded_csv<W: Write>(w: W, coded: &[CodedEmail]) -> Result<(), CodedFileError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_COLUMNS)?;
    for c in coded {
        wtr.write_record([
            c.email_id.as_str(),
            &join_multi(&c.company_names),
            &c.sector,
            &c.salutation,
            &c.threat,
            &c.urgency,
            &join_multi(&c.actions_generic),
            &join_multi(&c.action_specific),
            &c.main_topic,
            if c.indirect_flag { "true" } else { "false" },
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_flag(row: usize, value: &str) -> Result<bool, CodedFileError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Ok(true),
        "false" | "0" | "no" | "n" | "" => Ok(false),
        _ => Err(CodedFileError::BadFlag { row, value: value.to_string() }),
    }
}

/// Read the coded CSV export. Extra columns are ignored.
pub fn read_coded_csv<R: Read>(r: R) -> Result<Vec<CodedEmail>, CodedFileError> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 10];
    for (slot, col) in idx.iter_mut().zip(CSV_COLUMNS) {
        *slot = headers.iter().position(|h| h.trim() == col).ok_or(CodedFileError::MissingColumn(col))?;
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| rec.get(idx[i]).unwrap_or("").trim().to_string();
        out.push(CodedEmail {
            email_id: get(0),
            company_names: split_multi(&get(1)),
            sector: get(2),
            salutation: get(3),
            threat: get(4),
            urgency: get(5),
            actions_generic: split_multi(&get(6)).into_iter().collect(),
            action_specific: split_multi(&get(7)),
            main_topic: get(8),
            indirect_flag: parse_flag(row + 2, &get(9))?,
            action_specific_raw: Vec::new(),
            main_topic_raw: String::new(),
        });
    }
    Ok(out)
}

pub fn write_coded_jsonl<W: Write>(w: W, coded: &[CodedEmail]) -> Result<(), CodedFileError> {
    Ok(write_jsonl(w, coded)?)
}

pub fn read_coded_jsonl<R: BufRead>(r: R) -> Result<Vec<CodedEmail>, CodedFileError> {
    Ok(read_jsonl(r)?)
}

/// Read a coded dataset, choosing the format from the file extension.
pub fn read_coded_file(path: &Path) -> Result<Vec<CodedEmail>, CodedFileError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let file = std::fs::File::open(path)?;
    match ext.as_str() {
        "csv" => read_coded_csv(file),
        "jsonl" | "json" | "ndjson" => read_coded_jsonl(BufReader::new(file)),
        _ => Err(CodedFileError::Extension(path.display().to_string())),
    }
}
