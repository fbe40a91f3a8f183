use serde::{Deserialize, Serialize};

use super::{CorpusError, Origin, RawEmail};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchiveFormat {
    Mbox,
    Eml,
}

impl std::str::FromStr for ArchiveFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mbox" => Ok(ArchiveFormat::Mbox),
            "eml" => Ok(ArchiveFormat::Eml),
            other => Err(format!("unknown archive format {other:?}")),
        }
    }
}

/// A message that was framed correctly but could not be decoded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedMessage {
    pub origin: Origin,
    pub offset: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct ParsedArchive {
    pub emails: Vec<RawEmail>,
    pub skipped: Vec<SkippedMessage>,
}

/// Split an archive into raw messages, preserving order of appearance.
///
/// Message indices in [`Origin`] count every framed message, including
/// skipped ones, so they stay stable if the decoder improves.
pub fn parse_mailbox(archive: &[u8], format: ArchiveFormat, archive_name: &str) -> Result<ParsedArchive, CorpusError> {
    let chunks = match format {
        ArchiveFormat::Eml => {
            if archive.iter().all(u8::is_ascii_whitespace) {
                Vec::new()
            } else {
                vec![(0, archive.to_vec())]
            }
        }
        ArchiveFormat::Mbox => split_mbox(archive)?,
    };

    let mut out = ParsedArchive::default();
    for (index, (offset, source)) in chunks.into_iter().enumerate() {
        let origin = Origin { archive: archive_name.to_string(), index };
        match check_decodable(&source) {
            Ok(()) => out.emails.push(RawEmail { source, origin }),
            Err(reason) => out.skipped.push(SkippedMessage { origin, offset, reason }),
        }
    }
    Ok(out)
}

fn check_decodable(source: &[u8]) -> Result<(), String> {
    if source.iter().all(u8::is_ascii_whitespace) {
        return Err("empty message".into());
    }
    let (headers, _) = mailparse::parse_headers(source).map_err(|e| e.to_string())?;
    if headers.is_empty() {
        return Err("no header block".into());
    }
    mailparse::parse_mail(source).map(|_| ()).map_err(|e| e.to_string())
}

fn is_separator(line: &[u8]) -> bool {
    // RFC 4155 separators carry a sender and a timestamp; requiring a digit
    // keeps body lines like "From the desk of ..." from splitting a message.
    line.starts_with(b"From ") && line.iter().any(u8::is_ascii_digit)
}

/// Returns (byte offset of the separator line, message bytes) pairs.
fn split_mbox(archive: &[u8]) -> Result<Vec<(usize, Vec<u8>)>, CorpusError> {
    let mut messages: Vec<(usize, Vec<u8>)> = Vec::new();
    let mut current: Option<(usize, Vec<u8>)> = None;
    let mut pos = 0;

    while pos < archive.len() {
        let end = archive[pos..].iter().position(|&b| b == b'\n').map(|i| pos + i + 1).unwrap_or(archive.len());
        let line = &archive[pos..end];
        if is_separator(line) {
            if let Some(done) = current.take() {
                messages.push(done);
            }
            current = Some((pos, Vec::new()));
        } else if let Some((_, buf)) = current.as_mut() {
            buf.extend_from_slice(unescape_from(line));
        } else if !line.iter().all(u8::is_ascii_whitespace) {
            return Err(CorpusError::Framing {
                offset: pos,
                reason: "content before the first \"From \" separator line".into(),
            });
        }
        pos = end;
    }
    if let Some(done) = current.take() {
        messages.push(done);
    }
    for (_, buf) in messages.iter_mut() {
        strip_separator_blank(buf);
    }
    Ok(messages)
}

/// mboxrd quoting: one leading '>' is removed from `>+From ` lines.
fn unescape_from(line: &[u8]) -> &[u8] {
    let quotes = line.iter().take_while(|&&b| b == b'>').count();
    if quotes > 0 && line[quotes..].starts_with(b"From ") {
        &line[1..]
    } else {
        line
    }
}

fn strip_separator_blank(buf: &mut Vec<u8>) {
    if buf.ends_with(b"\r\n\r\n") {
        buf.truncate(buf.len() - 2);
    } else if buf.ends_with(b"\n\n") {
        buf.truncate(buf.len() - 1);
    }
}
