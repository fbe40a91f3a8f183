//! Tailored end-user guidance built from a coded email: what kind of scam
//! it is, what it asks for, where its domains disagree with the company it
//! names, and what pressure it applies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::autocoder::Lexicons;
use crate::codebook::{label, CodedEmail};
use crate::corpus::{registrable_domain, EmailRecord};

const DEFAULT_TEMPLATES: &str = include_str!("../data/templates/guidance.toml");

const REQUIRED_TABLES: [&str; 5] = ["verdict", "sector", "action", "mismatch", "pressure"];
const SLOTS: [&str; 6] = ["company", "sector", "topic", "domain", "legit_domain", "action"];
const FALLBACK: &str = "fallback";

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("template file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("template table [{0}] is missing or has no fallback entry")]
    MissingFallback(String),
    #[error("template {table}.{key} uses unknown slot {{{slot}}}")]
    UnknownSlot { table: String, key: String, slot: String },
}

static SLOT_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([a-z_]+)\}").unwrap());

/// Guidance wording, one table per part of the response.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Templates {
    tables: BTreeMap<String, BTreeMap<String, String>>,
}

impl Templates {
    pub fn embedded() -> Self {
        Self::parse(DEFAULT_TEMPLATES).expect("shipped templates are valid")
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let src = std::fs::read_to_string(path)
            .map_err(|source| TemplateError::Io { path: path.display().to_string(), source })?;
        Self::parse(&src)
    }

    pub fn parse(src: &str) -> Result<Self, TemplateError> {
        let tables: BTreeMap<String, BTreeMap<String, String>> = toml::from_str(src)?;
        for t in REQUIRED_TABLES {
            if !tables.get(t).is_some_and(|m| m.contains_key(FALLBACK)) {
                return Err(TemplateError::MissingFallback(t.to_string()));
            }
        }
        for (table, entries) in &tables {
            for (key, text) in entries {
                if let Some(c) = SLOT_RE.captures_iter(text).find(|c| !SLOTS.contains(&&c[1])) {
                    return Err(TemplateError::UnknownSlot {
                        table: table.clone(),
                        key: key.clone(),
                        slot: c[1].to_string(),
                    });
                }
            }
        }
        Ok(Templates { tables })
    }

    /// Text for `key`, or the table's fallback plus a warning.
    fn pick(&self, table: &str, key: &str, warnings: &mut Vec<String>) -> &str {
        let t = &self.tables[table];
        match t.get(key) {
            Some(text) => text,
            None => {
                warnings.push(format!("no {table} template for {key:?}; used the fallback"));
                &t[FALLBACK]
            }
        }
    }

    fn optional(&self, table: &str, key: &str) -> Option<&str> {
        self.tables.get(table).and_then(|t| t.get(key)).map(String::as_str)
    }
}

fn fill(template: &str, slots: &BTreeMap<&str, String>) -> String {
    SLOT_RE.replace_all(template, |c: &regex::Captures| slots.get(&c[1]).cloned().unwrap_or_default()).into_owned()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Informational,
    Caution,
    HighRisk,
}

impl Verdict {
    pub fn key(self) -> &'static str {
        match self {
            Verdict::Informational => "informational",
            Verdict::Caution => "caution",
            Verdict::HighRisk => "high-risk",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManipulationFlag {
    Threat,
    Urgency,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MismatchLocation {
    Sender,
    Url,
}

impl MismatchLocation {
    fn key(self) -> &'static str {
        match self {
            MismatchLocation::Sender => "sender",
            MismatchLocation::Url => "url",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchFinding {
    pub company: String,
    pub observed_domain: String,
    pub legitimate_domain: String,
    pub location: MismatchLocation,
}

/// A coded or observed fact that a piece of guidance rests on.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Evidence {
    pub field: String,
    pub value: String,
}

fn ev(field: &str, value: impl Into<String>) -> Evidence {
    Evidence { field: field.to_string(), value: value.into() }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub text: String,
    pub evidence: Vec<Evidence>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuidanceResponse {
    pub email_id: String,
    pub overall_verdict: Verdict,
    pub verdict: Paragraph,
    pub scam_category_explanation: Paragraph,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indirect_notice: Option<Paragraph>,
    pub action_advice: BTreeMap<String, Paragraph>,
    pub mismatch_findings: Vec<(MismatchFinding, Paragraph)>,
    pub manipulation_flags: BTreeSet<ManipulationFlag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure: Option<Paragraph>,
    /// Every fact used anywhere above, in order of first use.
    pub evidence: Vec<Evidence>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn same_site(observed: &str, legit: &str) -> bool {
    registrable_domain(observed) == registrable_domain(legit)
}

/// Sender and link domains that do not belong to the company the email
/// names. A domain that matches any named company is consistent; others are
/// reported against the first named company that has a known domain, once
/// per distinct domain and location.
pub fn detect_mismatch(coded: &CodedEmail, record: &EmailRecord, lex: &Lexicons) -> Vec<MismatchFinding> {
    let known: Vec<(&str, &str)> = coded
        .company_names
        .iter()
        .filter(|n| n.as_str() != label::NONE && n.as_str() != label::ORGANIZATION)
        .filter_map(|n| lex.gazetteer_entry(n).and_then(|g| g.domain.as_deref()).map(|d| (n.as_str(), d)))
        .collect();
    let Some(&(company, legit)) = known.first() else {
        return Vec::new();
    };
    let consistent = |domain: &str| known.iter().any(|(_, d)| same_site(domain, d));

    let mut out = Vec::new();
    let sender = record.sender_domain.trim().to_lowercase();
    if !sender.is_empty() && !consistent(&sender) {
        out.push(MismatchFinding {
            company: company.to_string(),
            observed_domain: registrable_domain(&sender),
            legitimate_domain: legit.to_string(),
            location: MismatchLocation::Sender,
        });
    }
    let mut seen = BTreeSet::new();
    for u in &record.urls {
        let d = u.href_domain.trim().to_lowercase();
        if d.is_empty() || consistent(&d) || !seen.insert(d.clone()) {
            continue;
        }
        out.push(MismatchFinding {
            company: company.to_string(),
            observed_domain: d,
            legitimate_domain: legit.to_string(),
            location: MismatchLocation::Url,
        });
    }
    out
}

fn company_phrase(coded: &CodedEmail) -> String {
    match coded.first_company() {
        label::NONE | label::ORGANIZATION | "" => "the sender".to_string(),
        name => name.to_string(),
    }
}

/// Guidance for one email. Output depends only on the inputs, so the same
/// email always gets byte-identical text.
pub fn generate_guidance(
    coded: &CodedEmail,
    record: &EmailRecord,
    lex: &Lexicons,
    templates: &Templates,
) -> GuidanceResponse {
    let mut warnings = Vec::new();
    let mut slots: BTreeMap<&str, String> = BTreeMap::new();
    slots.insert("company", company_phrase(coded));
    slots.insert("sector", coded.sector.clone());
    slots.insert(
        "topic",
        if coded.main_topic.is_empty() { "an unclear subject".into() } else { coded.main_topic.clone() },
    );

    let sector_ev = ev("sector", &coded.sector);
    let mut explanation_ev = vec![sector_ev.clone()];
    let sector_text = templates.pick("sector", &coded.sector, &mut warnings);
    if sector_text.contains("{topic}") {
        explanation_ev.push(ev("main_topic", &coded.main_topic));
    }
    let scam_category_explanation = Paragraph { text: fill(sector_text, &slots), evidence: explanation_ev };

    let indirect_notice =
        coded.indirect_flag.then(|| templates.optional("indirect", "text")).flatten().map(|t| Paragraph {
            text: fill(t, &slots),
            evidence: vec![ev("indirect_flag", "true"), ev("company_names", coded.first_company())],
        });

    let mut action_advice = BTreeMap::new();
    for action in &coded.actions_generic {
        let mut s = slots.clone();
        s.insert("action", action.clone());
        let text = templates.pick("action", action, &mut warnings);
        let mut evidence = vec![ev("actions_generic", action)];
        if text.contains("{company}") {
            evidence.push(ev("company_names", coded.first_company()));
        }
        action_advice.insert(action.clone(), Paragraph { text: fill(text, &s), evidence });
    }

    let mut mismatch_findings = Vec::new();
    for f in detect_mismatch(coded, record, lex) {
        let mut s = slots.clone();
        s.insert("company", f.company.clone());
        s.insert("domain", f.observed_domain.clone());
        s.insert("legit_domain", f.legitimate_domain.clone());
        let text = fill(templates.pick("mismatch", f.location.key(), &mut warnings), &s);
        let observed_field = match f.location {
            MismatchLocation::Sender => "sender_domain",
            MismatchLocation::Url => "href_domain",
        };
        let evidence = vec![ev("company_names", &f.company), ev(observed_field, &f.observed_domain)];
        mismatch_findings.push((f, Paragraph { text, evidence }));
    }

    let mut manipulation_flags = BTreeSet::new();
    if coded.is_threat() {
        manipulation_flags.insert(ManipulationFlag::Threat);
    }
    if coded.is_urgent() {
        manipulation_flags.insert(ManipulationFlag::Urgency);
    }
    let pressure_key = match (coded.is_threat(), coded.is_urgent()) {
        (true, true) => Some("both"),
        (true, false) => Some("threat"),
        (false, true) => Some("urgency"),
        (false, false) => None,
    };
    let pressure = pressure_key.map(|key| {
        let mut evidence = Vec::new();
        if coded.is_threat() {
            evidence.push(ev("threat", &coded.threat));
        }
        if coded.is_urgent() {
            evidence.push(ev("urgency", &coded.urgency));
        }
        Paragraph { text: fill(templates.pick("pressure", key, &mut warnings), &slots), evidence }
    });

    let (overall_verdict, verdict_ev) = verdict(coded, &mismatch_findings);
    let verdict = Paragraph {
        text: fill(templates.pick("verdict", overall_verdict.key(), &mut warnings), &slots),
        evidence: verdict_ev,
    };

    let mut evidence: Vec<Evidence> = Vec::new();
    let parts = std::iter::once(&verdict)
        .chain(std::iter::once(&scam_category_explanation))
        .chain(indirect_notice.iter())
        .chain(action_advice.values())
        .chain(mismatch_findings.iter().map(|(_, p)| p))
        .chain(pressure.iter());
    for p in parts {
        for e in &p.evidence {
            if !evidence.contains(e) {
                evidence.push(e.clone());
            }
        }
    }

    GuidanceResponse {
        email_id: coded.email_id.clone(),
        overall_verdict,
        verdict,
        scam_category_explanation,
        indirect_notice,
        action_advice,
        mismatch_findings,
        manipulation_flags,
        pressure,
        evidence,
        warnings,
    }
}

/// High risk on any domain mismatch or threat together with urgency;
/// caution on a single pressure flag or an unknown sector.
fn verdict(coded: &CodedEmail, findings: &[(MismatchFinding, Paragraph)]) -> (Verdict, Vec<Evidence>) {
    let mut reasons = Vec::new();
    for (f, _) in findings {
        let field = match f.location {
            MismatchLocation::Sender => "sender_domain",
            MismatchLocation::Url => "href_domain",
        };
        reasons.push(ev(field, &f.observed_domain));
    }
    if coded.is_threat() {
        reasons.push(ev("threat", &coded.threat));
    }
    if coded.is_urgent() {
        reasons.push(ev("urgency", &coded.urgency));
    }
    let unknown = coded.sector == label::UNKNOWN;
    if unknown {
        reasons.push(ev("sector", &coded.sector));
    }
    let v = if !findings.is_empty() || (coded.is_threat() && coded.is_urgent()) {
        Verdict::HighRisk
    } else if coded.is_threat() || coded.is_urgent() || unknown {
        Verdict::Caution
    } else {
        reasons.push(ev("sector", &coded.sector));
        Verdict::Informational
    };
    (v, reasons)
}

impl GuidanceResponse {
    fn paragraphs(&self) -> Vec<(&'static str, Vec<&str>)> {
        let mut out = vec![("", vec![self.verdict.text.as_str()])];
        let mut about = vec![self.scam_category_explanation.text.as_str()];
        if let Some(p) = &self.indirect_notice {
            about.push(&p.text);
        }
        out.push(("What this email is", about));
        if let Some(p) = &self.pressure {
            out.push(("Pressure tactics", vec![&p.text]));
        }
        if !self.mismatch_findings.is_empty() {
            out.push(("Inconsistencies", self.mismatch_findings.iter().map(|(_, p)| p.text.as_str()).collect()));
        }
        out.push(("What to do", self.action_advice.values().map(|p| p.text.as_str()).collect()));
        out
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Verdict: {}", self.overall_verdict.key().to_uppercase());
        for (heading, texts) in self.paragraphs() {
            if heading.is_empty() {
                for t in texts {
                    let _ = writeln!(s, "{t}");
                }
                continue;
            }
            let _ = writeln!(s, "\n{heading}:");
            let bullets = heading == "Inconsistencies" || heading == "What to do";
            for t in texts {
                if bullets {
                    let _ = writeln!(s, "- {t}");
                } else {
                    let _ = writeln!(s, "{t}");
                }
            }
        }
        s
    }

    /// A self-contained HTML fragment suitable for a mail banner.
    pub fn render_html(&self) -> String {
        let mut s = String::new();
        let key = self.overall_verdict.key();
        let _ = writeln!(s, "<div class=\"phishbook-guidance verdict-{key}\">");
        let _ = writeln!(s, "<p><strong>Verdict: {}</strong></p>", escape_html(&key.to_uppercase()));
        for (heading, texts) in self.paragraphs() {
            if heading.is_empty() {
                for t in texts {
                    let _ = writeln!(s, "<p>{}</p>", escape_html(t));
                }
                continue;
            }
            let _ = writeln!(s, "<h4>{}</h4>", escape_html(heading));
            let _ = writeln!(s, "<ul>");
            for t in texts {
                let _ = writeln!(s, "<li>{}</li>", escape_html(t));
            }
            let _ = writeln!(s, "</ul>");
        }
        let _ = writeln!(s, "</div>");
        s
    }
}

pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{CodebookSchema, ACTIONS};
    use crate::corpus::{EmailId, UrlRef};
    use proptest::prelude::*;

    fn lex() -> &'static Lexicons {
        static LEX: LazyLock<Lexicons> = LazyLock::new(Lexicons::embedded);
        &LEX
    }

    fn record(sender_domain: &str, urls: &[&str]) -> EmailRecord {
        let mut r = EmailRecord::blank(EmailId::new(2016, 4, 3));
        r.sender_domain = sender_domain.into();
        r.urls = urls
            .iter()
            .map(|d| UrlRef {
                visible_text: "here".into(),
                href: format!("https://{d}/x"),
                href_domain: registrable_domain(d),
                mismatch: false,
                unparseable: false,
            })
            .collect();
        r
    }

    fn coded(company: &str, sector: &str, actions: &[&str]) -> CodedEmail {
        let mut c = CodedEmail::empty("2016_004");
        c.company_names = vec![company.into()];
        c.sector = sector.into();
        c.actions_generic = actions.iter().map(|s| s.to_string()).collect();
        c.main_topic = "account notice".into();
        c
    }

    #[test]
    fn consistent_domains_have_no_findings() {
        let c = coded("paypal", "financial", &["click"]);
        assert_eq!(detect_mismatch(&c, &record("paypal.com", &["www.paypal.com"]), lex()), vec![]);
        assert_eq!(detect_mismatch(&coded("none", "unknown", &["click"]), &record("x.biz", &["y.biz"]), lex()), vec![]);
        assert_eq!(
            detect_mismatch(&coded("organization", "email", &["click"]), &record("x.biz", &["y.biz"]), lex()),
            vec![]
        );
    }

    #[test]
    fn usaa_sender_mismatch() {
        let f = detect_mismatch(&coded("usaa", "financial", &["click"]), &record("ubagroup.com", &[]), lex());
        assert_eq!(
            f,
            vec![MismatchFinding {
                company: "usaa".into(),
                observed_domain: "ubagroup.com".into(),
                legitimate_domain: "usaa.com".into(),
                location: MismatchLocation::Sender,
            }]
        );
    }

    #[test]
    fn wetransfer_url_mismatch_only() {
        let c = coded("wetransfer", "document share", &["click"]);
        let f = detect_mismatch(
            &c,
            &record("wetransfer.com", &["files.web.app", "files.web.app", "wetransfer.com"]),
            lex(),
        );
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].location, MismatchLocation::Url);
        assert_eq!(f[0].observed_domain, "files.web.app");
    }

    #[test]
    fn second_company_domain_is_consistent() {
        let mut c = coded("microsoft", "email", &["click"]);
        c.company_names.push("outlook".into());
        assert_eq!(detect_mismatch(&c, &record("outlook.com", &[]), lex()), vec![]);
    }

    #[test]
    fn high_risk_with_everything() {
        let mut c = coded("paypal", "financial", &["click"]);
        c.threat = "threat".into();
        c.urgency = "urgent".into();
        let g = generate_guidance(&c, &record("evil.biz", &["evil.biz"]), lex(), &Templates::embedded());
        assert_eq!(g.overall_verdict, Verdict::HighRisk);
        assert_eq!(g.manipulation_flags, BTreeSet::from([ManipulationFlag::Threat, ManipulationFlag::Urgency]));
        assert_eq!(g.mismatch_findings.len(), 2);
        assert!(g.pressure.as_ref().unwrap().text.contains("threats with deadlines"));
        assert!(g.warnings.is_empty());
    }

    #[test]
    fn download_only_advice() {
        let g = generate_guidance(
            &coded("none", "financial", &["download"]),
            &record("", &[]),
            lex(),
            &Templates::embedded(),
        );
        assert_eq!(g.action_advice.keys().collect::<Vec<_>>(), vec!["download"]);
        assert!(g.action_advice["download"].text.contains("attachments"));
        assert!(!g.render_text().contains("click a link"));
        assert_eq!(g.overall_verdict, Verdict::Informational);
    }

    #[test]
    fn missing_template_falls_back_with_warning() {
        let g =
            generate_guidance(&coded("none", "crypto", &["click"]), &record("", &[]), lex(), &Templates::embedded());
        assert!(g.scam_category_explanation.text.contains("account notice"));
        assert_eq!(g.warnings, vec!["no sector template for \"crypto\"; used the fallback"]);
    }

    #[test]
    fn template_validation() {
        assert!(
            matches!(Templates::parse("[verdict]\nfallback = \"x\"\n"), Err(TemplateError::MissingFallback(t)) if t == "sector")
        );
        let bad = DEFAULT_TEMPLATES.replace("{legit_domain})", "{legit})");
        assert!(matches!(Templates::parse(&bad), Err(TemplateError::UnknownSlot { slot, .. }) if slot == "legit"));
    }

    #[test]
    fn every_sector_and_action_has_text() {
        let schema = CodebookSchema::default();
        let t = Templates::embedded();
        for sector in schema.sectors() {
            for action in ACTIONS {
                let g = generate_guidance(&coded("paypal", sector, &[action]), &record("", &[]), lex(), &t);
                assert!(g.warnings.is_empty(), "{sector} {action}: {:?}", g.warnings);
                assert!(!g.scam_category_explanation.text.is_empty());
                assert!(!g.action_advice[action].text.is_empty());
            }
        }
    }

    #[test]
    fn html_is_escaped() {
        assert_eq!(escape_html("<a href=\"x\">&'"), "&lt;a href=&quot;x&quot;&gt;&amp;&#39;");
    }

    proptest! {
        #[test]
        fn evidence_is_complete_and_verdict_monotone(
            threat: bool, urgent: bool, sector_i in 0usize..9, action_i in 0usize..6,
            sender in prop::sample::select(vec!["", "paypal.com", "evil.biz"]),
            url in prop::sample::select(vec!["", "paypal.com", "evil.biz"]),
        ) {
            let schema = CodebookSchema::default();
            let mut c = coded("paypal", &schema.sectors()[sector_i], &[ACTIONS[action_i]]);
            if threat { c.threat = "threat".into(); }
            if urgent { c.urgency = "urgent".into(); }
            let urls: Vec<&str> = if url.is_empty() { vec![] } else { vec![url] };
            let r = record(sender, &urls);
            let g = generate_guidance(&c, &r, lex(), &Templates::embedded());
            prop_assert_eq!(g.manipulation_flags.contains(&ManipulationFlag::Threat), threat);
            prop_assert_eq!(g.manipulation_flags.contains(&ManipulationFlag::Urgency), urgent);
            let paragraphs = std::iter::once(&g.verdict).chain([&g.scam_category_explanation])
                .chain(g.action_advice.values()).chain(g.pressure.iter())
                .chain(g.mismatch_findings.iter().map(|(_, p)| p));
            for p in paragraphs {
                prop_assert!(!p.text.is_empty());
                prop_assert!(!p.evidence.is_empty());
                for e in &p.evidence {
                    prop_assert!(g.evidence.contains(e));
                }
            }
            // one more mismatching domain never lowers the verdict
            let mut worse = r.clone();
            worse.sender_domain = "another-evil.biz".into();
            let g2 = generate_guidance(&c, &worse, lex(), &Templates::embedded());
            prop_assert!(g2.overall_verdict >= g.overall_verdict);
            prop_assert_eq!(generate_guidance(&c, &r, lex(), &Templates::embedded()).render_text(), g.render_text());
        }
    }
}
