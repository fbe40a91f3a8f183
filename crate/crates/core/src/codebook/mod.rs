//! The phishing codebook: eight high-level codes, their sub-code
//! vocabularies, validation of coded records and in-vivo normalization.

mod export;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use export::{
    read_coded_csv, read_coded_file, read_coded_jsonl, write_coded_csv, write_coded_jsonl, CodedFileError, CSV_COLUMNS,
};

/// Sub-code labels of the canonical codebook.
pub mod label {
    pub const NONE: &str = "none";

    pub const ORGANIZATION: &str = "organization";

    pub const FINANCIAL: &str = "financial";
    pub const EMAIL: &str = "email";
    pub const DOCUMENT_SHARE: &str = "document share";
    pub const LOGISTICS: &str = "logistics";
    pub const SHOPPING: &str = "shopping";
    pub const SERVICE_PROVIDER: &str = "service provider";
    pub const SECURITY: &str = "security";
    pub const GOVERNMENT: &str = "government";
    pub const UNKNOWN: &str = "unknown";

    pub const NAME: &str = "name";
    pub const GENERIC: &str = "generic";

    pub const THREAT: &str = "threat";
    pub const URGENT: &str = "urgent";

    pub const CLICK: &str = "click";
    pub const DOWNLOAD: &str = "download";
    pub const REPLY: &str = "reply/email";
    pub const CALL: &str = "call";
    pub const OTHER: &str = "other";
}

pub const CANONICAL_SECTORS: [&str; 9] = [
    label::FINANCIAL,
    label::EMAIL,
    label::DOCUMENT_SHARE,
    label::LOGISTICS,
    label::SHOPPING,
    label::SERVICE_PROVIDER,
    label::SECURITY,
    label::GOVERNMENT,
    label::UNKNOWN,
];
pub const SALUTATIONS: [&str; 4] = [label::NAME, label::EMAIL, label::GENERIC, label::NONE];
pub const THREAT_VALUES: [&str; 2] = [label::THREAT, label::NONE];
pub const URGENCY_VALUES: [&str; 2] = [label::URGENT, label::NONE];
pub const ACTIONS: [&str; 6] = [label::CLICK, label::DOWNLOAD, label::REPLY, label::CALL, label::OTHER, label::NONE];

/// Vocabulary of every closed code. Only the sector list can grow.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodebookSchema {
    sectors: Vec<String>,
    salutations: Vec<String>,
    threat_values: Vec<String>,
    urgency_values: Vec<String>,
    actions: Vec<String>,
}

impl Default for CodebookSchema {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        CodebookSchema {
            sectors: owned(&CANONICAL_SECTORS),
            salutations: owned(&SALUTATIONS),
            threat_values: owned(&THREAT_VALUES),
            urgency_values: owned(&URGENCY_VALUES),
            actions: owned(&ACTIONS),
        }
    }
}

impl CodebookSchema {
    /// Append a sector sub-code. Returns false if it was already present.
    pub fn extend_sector(&mut self, sector: &str) -> bool {
        let sector = sector.trim().to_lowercase();
        if sector.is_empty() || self.has_sector(&sector) {
            return false;
        }
        self.sectors.push(sector);
        true
    }

    pub fn sectors(&self) -> &[String] {
        &self.sectors
    }

    pub fn salutations(&self) -> &[String] {
        &self.salutations
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn has_sector(&self, s: &str) -> bool {
        self.sectors.iter().any(|x| x == s)
    }

    /// Labels allowed for a closed-vocabulary code; `None` for in-vivo codes.
    pub fn vocabulary(&self, code: Code) -> Option<&[String]> {
        match code {
            Code::Sector => Some(&self.sectors),
            Code::Salutation => Some(&self.salutations),
            Code::Threat => Some(&self.threat_values),
            Code::Urgency => Some(&self.urgency_values),
            Code::ActionGeneric => Some(&self.actions),
            Code::CompanyName | Code::ActionSpecific | Code::MainTopic => None,
        }
    }
}

/// One coded email. Labels are plain strings so arbitrary submissions can be
/// validated rather than rejected at parse time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedEmail {
    pub email_id: String,
    pub company_names: Vec<String>,
    pub sector: String,
    pub salutation: String,
    pub threat: String,
    pub urgency: String,
    pub actions_generic: BTreeSet<String>,
    pub action_specific: Vec<String>,
    pub main_topic: String,
    pub indirect_flag: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub action_specific_raw: Vec<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub main_topic_raw: String,
}

impl CodedEmail {
    /// Every code at its "nothing found" value.
    pub fn empty(email_id: impl Into<String>) -> Self {
        CodedEmail {
            email_id: email_id.into(),
            company_names: vec![label::NONE.to_string()],
            sector: label::UNKNOWN.to_string(),
            salutation: label::NONE.to_string(),
            threat: label::NONE.to_string(),
            urgency: label::NONE.to_string(),
            actions_generic: BTreeSet::from([label::NONE.to_string()]),
            action_specific: Vec::new(),
            main_topic: String::new(),
            indirect_flag: false,
            action_specific_raw: Vec::new(),
            main_topic_raw: String::new(),
        }
    }

    pub fn is_threat(&self) -> bool {
        self.threat == label::THREAT
    }

    pub fn is_urgent(&self) -> bool {
        self.urgency == label::URGENT
    }

    pub fn first_company(&self) -> &str {
        self.company_names.first().map(String::as_str).unwrap_or(label::NONE)
    }

    /// Normalize every field to storage form. Raw in-vivo phrases are kept
    /// alongside when normalization changed them.
    pub fn canonicalize(&self) -> CodedEmail {
        let mut out = self.clone();
        out.email_id = self.email_id.trim().to_string();
        let mut companies: Vec<String> = Vec::new();
        for c in self.company_names.iter().map(|c| normalize_company(c)).filter(|c| !c.is_empty()) {
            if !companies.contains(&c) {
                companies.push(c);
            }
        }
        out.company_names = companies;
        out.sector = self.sector.trim().to_lowercase();
        out.salutation = self.salutation.trim().to_lowercase();
        out.threat = self.threat.trim().to_lowercase();
        out.urgency = self.urgency.trim().to_lowercase();
        out.actions_generic = self.actions_generic.iter().map(|a| a.trim().to_lowercase()).collect();
        out.action_specific =
            self.action_specific.iter().map(|p| normalize_invivo(p)).filter(|p| !p.is_empty()).collect();
        out.main_topic = normalize_invivo(&self.main_topic);
        if out.action_specific != self.action_specific && out.action_specific_raw.is_empty() {
            out.action_specific_raw = self.action_specific.clone();
        }
        if out.main_topic != self.main_topic && out.main_topic_raw.is_empty() {
            out.main_topic_raw = self.main_topic.clone();
        }
        out
    }
}

/// The eight high-level codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Code {
    #[serde(rename = "company_names")]
    CompanyName,
    Sector,
    Salutation,
    Threat,
    Urgency,
    #[serde(rename = "actions_generic")]
    ActionGeneric,
    ActionSpecific,
    MainTopic,
}

impl Code {
    pub const ALL: [Code; 8] = [
        Code::CompanyName,
        Code::Sector,
        Code::Salutation,
        Code::Threat,
        Code::Urgency,
        Code::ActionGeneric,
        Code::ActionSpecific,
        Code::MainTopic,
    ];

    /// Codes with predefined sub-codes, the ones reliability is reported on.
    pub const RELIABILITY: [Code; 6] =
        [Code::CompanyName, Code::Sector, Code::Salutation, Code::Threat, Code::Urgency, Code::ActionGeneric];

    pub fn key(self) -> &'static str {
        match self {
            Code::CompanyName => "company_names",
            Code::Sector => "sector",
            Code::Salutation => "salutation",
            Code::Threat => "threat",
            Code::Urgency => "urgency",
            Code::ActionGeneric => "actions_generic",
            Code::ActionSpecific => "action_specific",
            Code::MainTopic => "main_topic",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Code::CompanyName => "From - Company Name",
            Code::Sector => "From - Sector",
            Code::Salutation => "Salutation",
            Code::Threat => "Threatening Language",
            Code::Urgency => "Urgency Cues",
            Code::ActionGeneric => "Action - Generic",
            Code::ActionSpecific => "Action - Specific",
            Code::MainTopic => "Main Topic",
        }
    }

    pub fn is_multi_valued(self) -> bool {
        matches!(self, Code::CompanyName | Code::ActionGeneric | Code::ActionSpecific)
    }

    /// Individual labels this email carries for the code.
    pub fn values(self, c: &CodedEmail) -> Vec<String> {
        match self {
            Code::CompanyName => c.company_names.clone(),
            Code::Sector => vec![c.sector.clone()],
            Code::Salutation => vec![c.salutation.clone()],
            Code::Threat => vec![c.threat.clone()],
            Code::Urgency => vec![c.urgency.clone()],
            Code::ActionGeneric => c.actions_generic.iter().cloned().collect(),
            Code::ActionSpecific => c.action_specific.clone(),
            Code::MainTopic => vec![c.main_topic.clone()],
        }
    }

    /// One comparable string: multi-valued codes are sorted and comma-joined.
    pub fn canonical_value(self, c: &CodedEmail) -> String {
        let mut vals = self.values(c);
        if self.is_multi_valued() {
            vals.sort();
            vals.dedup();
        }
        vals.join(",")
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Code {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let k = s.trim().to_lowercase().replace(['-', ' '], "_");
        Ok(match k.as_str() {
            "company_names" | "company_name" | "company" | "from_company_name" => Code::CompanyName,
            "sector" | "from_sector" => Code::Sector,
            "salutation" => Code::Salutation,
            "threat" | "threatening_language" => Code::Threat,
            "urgency" | "urgency_cues" => Code::Urgency,
            "actions_generic" | "action_generic" | "actions" => Code::ActionGeneric,
            "action_specific" => Code::ActionSpecific,
            "main_topic" | "topic" => Code::MainTopic,
            _ => return Err(format!("unknown code {s:?}")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Violation { field: field.to_string(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// All ways `c` breaks the codebook; empty means valid.
pub fn validate_coded(c: &CodedEmail, schema: &CodebookSchema) -> Vec<Violation> {
    let mut out = Vec::new();
    if c.email_id.trim().is_empty() {
        out.push(Violation::new("email_id", "email_id must not be empty"));
    }

    if c.company_names.is_empty() {
        out.push(Violation::new("company_names", "at least one company name (or \"none\") is required"));
    }
    if c.company_names.len() > 1 && c.company_names.iter().any(|n| n == label::NONE) {
        out.push(Violation::new("company_names", "none must be sole"));
    }
    for name in &c.company_names {
        if name.is_empty() || normalize_company(name) != *name {
            out.push(Violation::new("company_names", format!("company name {name:?} is not normalized")));
        }
    }

    let closed = [
        (Code::Sector, "sector", &c.sector),
        (Code::Salutation, "salutation", &c.salutation),
        (Code::Threat, "threat", &c.threat),
        (Code::Urgency, "urgency", &c.urgency),
    ];
    for (code, field, value) in closed {
        let vocab = schema.vocabulary(code).unwrap_or(&[]);
        if !vocab.iter().any(|v| v == value) {
            out.push(Violation::new(field, format!("unknown {field} {value:?}")));
        }
    }

    if c.actions_generic.is_empty() {
        out.push(Violation::new("actions_generic", "at least one action (or \"none\") is required"));
    }
    if c.actions_generic.len() > 1 && c.actions_generic.contains(label::NONE) {
        out.push(Violation::new("actions_generic", "none must be sole"));
    }
    for a in &c.actions_generic {
        if !schema.actions().contains(a) {
            out.push(Violation::new("actions_generic", format!("unknown action {a:?}")));
        }
    }

    for p in &c.action_specific {
        if p.is_empty() || normalize_invivo(p) != *p {
            out.push(Violation::new("action_specific", format!("phrase {p:?} is not normalized")));
        }
    }
    if normalize_invivo(&c.main_topic) != c.main_topic {
        out.push(Violation::new("main_topic", format!("phrase {:?} is not normalized", c.main_topic)));
    }
    out
}

/// Upper-then-lower, char by char, repeated until stable: "ẞ" becomes "ss"
/// and final sigma does not depend on the following character.
fn case_fold(s: &str) -> String {
    let mut cur = s.to_string();
    loop {
        let next: String = cur
            .chars()
            .flat_map(char::to_uppercase)
            .flat_map(char::to_lowercase)
            .map(|c| if c == 'ς' { 'σ' } else { c })
            .collect();
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

const LEADING_ARTICLES: [&str; 4] = ["a", "an", "the", "to"];

/// Storage form of an in-vivo phrase: lowercase, punctuation removed,
/// single spaces, leading articles dropped.
pub fn normalize_invivo(phrase: &str) -> String {
    let cleaned: String = case_fold(phrase).chars().filter(|c| c.is_alphanumeric() || c.is_whitespace()).collect();
    let tokens: Vec<&str> = cleaned.split_whitespace().collect();
    let start = tokens.iter().position(|t| !LEADING_ARTICLES.contains(t)).unwrap_or(tokens.len());
    tokens[start..].join(" ")
}

/// Storage form of a company name: lowercase, single spaces, no commas.
pub fn normalize_company(name: &str) -> String {
    name.to_lowercase().replace(',', " ").split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Comma-separated multi-value cell.
pub fn join_multi<'a>(values: impl IntoIterator<Item = &'a String>) -> String {
    values.into_iter().map(String::as_str).collect::<Vec<_>>().join(",")
}

pub fn split_multi(cell: &str) -> Vec<String> {
    cell.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}
