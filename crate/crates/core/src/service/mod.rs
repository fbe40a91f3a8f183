//! Annotation store behind the human coding workflow, and the HTTP API that
//! exposes it. Annotations are appended to a journal file and replayed on
//! startup; the last write per (coder, email) wins.

mod api;

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::agreement::{agreement_report, disagreements, AgreementReport, AnnotationSet, Disagreement};
use crate::codebook::{validate_coded, Code, CodebookSchema, CodedEmail, Violation};
use crate::corpus::{EmailId, EmailRecord};

pub use api::{router, serve, AppState, ErrorBody};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown coder {0:?}")]
    UnknownCoder(String),
    #[error("unknown email {0:?}")]
    UnknownEmail(String),
    #[error("annotation violates the codebook")]
    Invalid(Vec<Violation>),
    #[error("journal {path}: {source}")]
    Journal {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("journal {path} line {line}: {message}")]
    CorruptJournal { path: String, line: usize, message: String },
}

/// One stored judgement; also the journal and export line format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub coder: String,
    pub at: DateTime<Utc>,
    pub revision: u64,
    pub coded: CodedEmail,
}

/// Agreement between two coders over the emails both have annotated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum LiveAgreement {
    Ok { shared: usize, report: AgreementReport },
    Empty { coder_a: String, coder_b: String },
}

pub struct AnnotationStore {
    emails: BTreeMap<EmailId, EmailRecord>,
    schema: CodebookSchema,
    /// coder id → bearer token
    coders: BTreeMap<String, String>,
    annotations: BTreeMap<(String, String), Annotation>,
    revision: u64,
    last_at: Option<DateTime<Utc>>,
    journal: Option<(PathBuf, File)>,
}

impl AnnotationStore {
    pub fn new(records: Vec<EmailRecord>, schema: CodebookSchema, coders: BTreeMap<String, String>) -> Self {
        AnnotationStore {
            emails: records.into_iter().map(|r| (r.id.clone(), r)).collect(),
            schema,
            coders,
            annotations: BTreeMap::new(),
            revision: 0,
            last_at: None,
            journal: None,
        }
    }

    /// Replay an existing journal, then append every later write to it.
    /// A torn final line (crash mid-write) is ignored; any other bad line is
    /// an error. Returns the number of replayed annotations.
    pub fn open_journal(&mut self, path: &Path) -> Result<usize, StoreError> {
        let io = |source| StoreError::Journal { path: path.display().to_string(), source };
        let mut replayed = 0;
        if path.exists() {
            let lines: Vec<String> =
                BufReader::new(File::open(path).map_err(io)?).lines().collect::<Result<_, _>>().map_err(io)?;
            let last = lines.iter().rposition(|l| !l.trim().is_empty());
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let corrupt = |message: String| StoreError::CorruptJournal {
                    path: path.display().to_string(),
                    line: i + 1,
                    message,
                };
                let a: Annotation = match serde_json::from_str(line) {
                    Ok(a) => a,
                    Err(_) if Some(i) == last => break,
                    Err(e) => return Err(corrupt(e.to_string())),
                };
                self.apply(a).map_err(|e| corrupt(e.to_string()))?;
                replayed += 1;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        self.journal = Some((path.to_path_buf(), file));
        Ok(replayed)
    }

    pub fn schema(&self) -> &CodebookSchema {
        &self.schema
    }

    pub fn coder_for_token(&self, token: &str) -> Option<&str> {
        self.coders.iter().find(|(_, t)| t.as_str() == token).map(|(c, _)| c.as_str())
    }

    pub fn is_coder(&self, coder: &str) -> bool {
        self.coders.contains_key(coder)
    }

    fn require_coder(&self, coder: &str) -> Result<(), StoreError> {
        if self.is_coder(coder) {
            Ok(())
        } else {
            Err(StoreError::UnknownCoder(coder.to_string()))
        }
    }

    pub fn email(&self, id: &str) -> Option<&EmailRecord> {
        id.parse::<EmailId>().ok().and_then(|id| self.emails.get(&id))
    }

    pub fn records(&self) -> impl Iterator<Item = &EmailRecord> {
        self.emails.values()
    }

    /// The lowest-id email this coder has not annotated yet; `None` once the
    /// coder is done.
    pub fn next_email(&self, coder: &str) -> Result<Option<&EmailRecord>, StoreError> {
        self.require_coder(coder)?;
        Ok(self
            .emails
            .values()
            .find(|r| !self.annotations.contains_key(&(coder.to_string(), r.id.as_str().to_string()))))
    }

    /// Canonicalize, validate and upsert. Timestamps strictly increase so a
    /// resubmission is always visibly newer.
    pub fn submit(&mut self, coder: &str, coded: &CodedEmail) -> Result<Annotation, StoreError> {
        self.require_coder(coder)?;
        let coded = coded.canonicalize();
        if self.email(&coded.email_id).is_none() {
            return Err(StoreError::UnknownEmail(coded.email_id));
        }
        let violations = validate_coded(&coded, &self.schema);
        if !violations.is_empty() {
            return Err(StoreError::Invalid(violations));
        }
        let mut at = Utc::now();
        if let Some(last) = self.last_at {
            at = at.max(last + Duration::microseconds(1));
        }
        let a = Annotation { coder: coder.to_string(), at, revision: self.revision + 1, coded };
        if let Some((path, file)) = &mut self.journal {
            let mut line = serde_json::to_string(&a).expect("annotation serializes");
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|source| StoreError::Journal { path: path.display().to_string(), source })?;
        }
        self.apply(a.clone())?;
        Ok(a)
    }

    fn apply(&mut self, a: Annotation) -> Result<(), StoreError> {
        self.require_coder(&a.coder)?;
        if self.email(&a.coded.email_id).is_none() {
            return Err(StoreError::UnknownEmail(a.coded.email_id.clone()));
        }
        let violations = validate_coded(&a.coded, &self.schema);
        if !violations.is_empty() {
            return Err(StoreError::Invalid(violations));
        }
        self.revision = self.revision.max(a.revision);
        self.last_at = Some(self.last_at.map_or(a.at, |t| t.max(a.at)));
        self.annotations.insert((a.coder.clone(), a.coded.email_id.clone()), a);
        Ok(())
    }

    /// Load exported annotations, as if they had been journaled.
    pub fn import(&mut self, annotations: Vec<Annotation>) -> Result<(), StoreError> {
        annotations.into_iter().try_for_each(|a| self.apply(a))
    }

    pub fn annotations(&self) -> impl Iterator<Item = &Annotation> {
        self.annotations.values()
    }

    /// One coder's annotations, ordered by email id.
    pub fn coded_by(&self, coder: &str) -> Result<Vec<CodedEmail>, StoreError> {
        self.require_coder(coder)?;
        let mut v: Vec<&Annotation> = self.annotations.values().filter(|a| a.coder == coder).collect();
        v.sort_by_key(|a| a.coded.email_id.parse::<EmailId>().ok());
        Ok(v.into_iter().map(|a| a.coded.clone()).collect())
    }

    /// The most recent annotation of each email, whoever made it.
    pub fn latest_per_email(&self) -> Vec<CodedEmail> {
        let mut latest: BTreeMap<Option<EmailId>, &Annotation> = BTreeMap::new();
        for a in self.annotations.values() {
            let e = latest.entry(a.coded.email_id.parse().ok()).or_insert(a);
            if a.revision > e.revision {
                *e = a;
            }
        }
        latest.into_values().map(|a| a.coded.clone()).collect()
    }

    /// Copies of both coders' annotations, so agreement can be computed
    /// without holding the store.
    pub fn annotation_sets(&self, a: &str, b: &str) -> Result<(AnnotationSet, AnnotationSet), StoreError> {
        Ok((AnnotationSet::from_coded(a, &self.coded_by(a)?), AnnotationSet::from_coded(b, &self.coded_by(b)?)))
    }
}

pub fn live_agreement(a: &AnnotationSet, b: &AnnotationSet) -> LiveAgreement {
    let shared = a.email_ids().intersection(&b.email_ids()).count();
    match agreement_report(a, b, &Code::RELIABILITY) {
        Ok(report) if shared > 0 => LiveAgreement::Ok { shared, report },
        _ => LiveAgreement::Empty { coder_a: a.coder_id.clone(), coder_b: b.coder_id.clone() },
    }
}

pub fn live_disagreements(a: &AnnotationSet, b: &AnnotationSet) -> Vec<Disagreement> {
    disagreements(a, b, &Code::RELIABILITY)
}
