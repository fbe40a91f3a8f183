//! Mail archive ingestion: framing, MIME decoding, preprocessing, sampling,
//! and the URL/transport metadata attached to each record.

mod html;
mod language;
mod mbox;
mod record;
mod sampling;
mod transport;
mod urls;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use html::{contains_markup, html_to_text};
pub use language::{preprocess, DropReason, Dropped, LanguageDetector, Preprocessed, StopwordDetector};
pub use mbox::{parse_mailbox, ArchiveFormat, ParsedArchive, SkippedMessage};
pub use record::{assign_ids, to_record};
pub use sampling::{month_counts, sample_by_frequency, SampleOutcome, SamplingPlan};
pub use transport::{extract_transport, extract_transport_from_bytes};
pub use urls::{extract_urls, parse_visible_url, registrable_domain};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("malformed mbox framing at byte offset {offset}: {reason}")]
    Framing { offset: usize, reason: String },
    #[error("invalid email id {0:?}: expected YYYY_NNN")]
    InvalidId(String),
    #[error("message could not be parsed: {0}")]
    Parse(String),
    #[error("invalid sampling plan: {0}")]
    Plan(String),
}

/// Where a raw message came from: archive name plus its position in it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Origin {
    pub archive: String,
    pub index: usize,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.archive, self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawEmail {
    pub source: Vec<u8>,
    pub origin: Origin,
}

/// `YYYY_NNN` identifier: the year and the 1-based position within that
/// year's archive, zero padded to three digits (four past 999).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EmailId(String);

impl EmailId {
    pub fn new(year: u16, index: usize, width: usize) -> Self {
        let width = width.max(3);
        EmailId(format!("{year:04}_{index:0width$}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn year(&self) -> u16 {
        self.0[..4].parse().expect("validated on construction")
    }

    pub fn index(&self) -> usize {
        self.0[5..].parse().expect("validated on construction")
    }

    pub fn is_valid(s: &str) -> bool {
        let b = s.as_bytes();
        b.len() >= 8
            && b[..4].iter().all(u8::is_ascii_digit)
            && b[4] == b'_'
            && b[5..].iter().all(u8::is_ascii_digit)
            && b.len() <= 9
    }
}

impl FromStr for EmailId {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if EmailId::is_valid(s) {
            Ok(EmailId(s.to_string()))
        } else {
            Err(CorpusError::InvalidId(s.to_string()))
        }
    }
}

impl TryFrom<String> for EmailId {
    type Error = CorpusError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<EmailId> for String {
    fn from(id: EmailId) -> String {
        id.0
    }
}

impl fmt::Display for EmailId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Ord for EmailId {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.year(), self.index()).cmp(&(other.year(), other.index())).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for EmailId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlRef {
    pub visible_text: String,
    pub href: String,
    /// Registrable-domain approximation of the href host; empty when the href did not parse.
    pub href_domain: String,
    pub mismatch: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unparseable: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportMeta {
    pub first_ip: Option<String>,
    pub received_count: usize,
    pub dkim_present: bool,
}

/// A parsed message restricted to what a mail client shows, plus the
/// machine-readable extras (URLs, transport) used downstream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmailRecord {
    pub id: EmailId,
    #[serde(with = "iso_date")]
    pub date: Option<DateTime<Utc>>,
    pub sender_display: String,
    pub sender_address: String,
    pub sender_domain: String,
    pub subject: String,
    pub body_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_html: Option<String>,
    pub urls: Vec<UrlRef>,
    pub has_attachment: bool,
    pub transport: TransportMeta,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EmailRecord {
    /// Year from the date header, falling back to the id prefix.
    pub fn year(&self) -> u16 {
        use chrono::Datelike;
        self.date.map(|d| d.year() as u16).unwrap_or_else(|| self.id.year())
    }

    /// An empty record carrying only an id; convenient for fixtures.
    pub fn blank(id: EmailId) -> Self {
        EmailRecord {
            id,
            date: None,
            sender_display: String::new(),
            sender_address: String::new(),
            sender_domain: String::new(),
            subject: String::new(),
            body_text: String::new(),
            body_html: None,
            urls: Vec::new(),
            has_attachment: false,
            transport: TransportMeta::default(),
            warnings: Vec::new(),
        }
    }
}

/// Domain part of an addr-spec, lowercased.
pub fn address_domain(addr: &str) -> String {
    addr.rsplit_once('@').map(|(_, d)| d.trim().trim_end_matches('>').to_lowercase()).unwrap_or_default()
}

mod iso_date {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<DateTime<Utc>>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_str(&d.to_rfc3339_opts(SecondsFormat::Secs, true)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DateTime<Utc>>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        raw.map(|s| DateTime::parse_from_rfc3339(&s).map(|d| d.with_timezone(&Utc)).map_err(serde::de::Error::custom))
            .transpose()
    }
}
