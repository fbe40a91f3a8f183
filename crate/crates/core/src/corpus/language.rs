use serde::{Deserialize, Serialize};

use super::EmailRecord;
use crate::text::{is_stopword, tokenize};

/// Decides whether a body is English enough to keep.
pub trait LanguageDetector {
    fn is_english(&self, text: &str) -> bool;
}

/// Keeps text unless it is long enough to judge and almost free of common
/// English function words.
#[derive(Clone, Debug)]
pub struct StopwordDetector {
    pub min_ratio: f64,
    pub min_tokens: usize,
}

impl Default for StopwordDetector {
    fn default() -> Self {
        StopwordDetector { min_ratio: 0.02, min_tokens: 10 }
    }
}

impl StopwordDetector {
    pub fn stopword_ratio(text: &str) -> (f64, usize) {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return (0.0, 0);
        }
        let hits = tokens.iter().filter(|t| is_stopword(t)).count();
        (hits as f64 / tokens.len() as f64, tokens.len())
    }
}

impl LanguageDetector for StopwordDetector {
    fn is_english(&self, text: &str) -> bool {
        let (ratio, count) = Self::stopword_ratio(text);
        count < self.min_tokens || ratio >= self.min_ratio
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    Empty,
    NonEnglish,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dropped {
    pub record: EmailRecord,
    pub reason: DropReason,
}

#[derive(Clone, Debug, Default)]
pub struct Preprocessed {
    pub kept: Vec<EmailRecord>,
    pub dropped: Vec<Dropped>,
}

/// Split records into kept and dropped; every input lands in exactly one side.
pub fn preprocess(records: Vec<EmailRecord>, language_filter: Option<&dyn LanguageDetector>) -> Preprocessed {
    let mut out = Preprocessed::default();
    for record in records {
        let reason = if record.body_text.trim().is_empty() {
            Some(DropReason::Empty)
        } else if language_filter.is_some_and(|d| !d.is_english(&record.body_text)) {
            Some(DropReason::NonEnglish)
        } else {
            None
        };
        match reason {
            Some(reason) => out.dropped.push(Dropped { record, reason }),
            None => out.kept.push(record),
        }
    }
    out
}
