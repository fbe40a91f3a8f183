//! Rule-based coding of an email: lexicon lookups and clause patterns that
//! emulate the manual coding rules. Everything here is pure and
//! deterministic for a fixed set of lexicons.

mod evaluate;
mod lexicon;

use std::collections::{BTreeSet, HashMap};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::codebook::{label, normalize_invivo, CodebookSchema, CodedEmail};
use crate::corpus::{parse_visible_url, registrable_domain, EmailRecord, UrlRef};
use crate::text::{collapse_whitespace, trim_edge_stopwords};

pub use evaluate::{evaluate, CodeAccuracy, Evaluation};
pub use lexicon::{
    ActionVerb, GazetteerEntry, LexiconError, Lexicons, ACTION_VERBS_FILE, GAZETTEER_FILE, GENERIC_SUBJECTS_FILE,
    INTERNAL_ORG_FILE, LINK_VERBS_FILE, SECTOR_KEYWORDS_FILE, THREAT_FILE, URGENCY_FILE,
};

/// Who the corpus was delivered to. Used only to tell a name salutation
/// from a generic one.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipient {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub address: String,
}

/// Sector keyword score needed before content overrides the company's sector.
pub const SECTOR_OVERRIDE_MIN: usize = 2;
/// Longest in-vivo phrase the autocoder extracts, in tokens.
pub const PHRASE_MAX_TOKENS: usize = 8;
/// Link texts longer than this are not treated as a call to action.
const LINK_TEXT_MAX_TOKENS: usize = 6;
/// Non-empty lines searched for a greeting.
const GREETING_LINES: usize = 3;

const GREETINGS: [&str; 11] = [
    "good morning", "good afternoon", "good evening", "good day", "dear", "hello", "hi", "hey", "greetings",
    "attention", "attn",
];

static GREETING_RE: LazyLock<Regex> = LazyLock::new(|| {
    let alts: Vec<String> = GREETINGS.iter().map(|g| g.replace(' ', r"\s+")).collect();
    Regex::new(&format!(r"^(?:{})\b[\s,:!-]*", alts.join("|"))).unwrap()
});
static EMAIL_ADDR_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+").unwrap());
static URL_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S+").unwrap());
static REPLY_PREFIX_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(?:(?:re|fwd?|aw|tr)\s*:\s*)+").unwrap());
static PURPOSE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:in\s+order\s+)?to\s+(\S.*?)[\s,]*$").unwrap());

fn strip_addresses(text: &str) -> String {
    URL_RE.replace_all(&EMAIL_ADDR_RE.replace_all(text, " "), " ").into_owned()
}

fn contains_word(haystack: &str, word: &str) -> bool {
    haystack.split(|c: char| !c.is_alphanumeric()).any(|t| t == word)
}

/// Salutation from the first lines of the body; the header is ignored.
pub fn code_salutation(body_text: &str, recipient_name: &str, recipient_address: &str) -> &'static str {
    let name = recipient_name.trim().to_lowercase();
    let address = recipient_address.trim().to_lowercase();
    let starts_with_recipient = |line: &str| {
        [&name, &address].into_iter().filter(|r| !r.is_empty()).find_map(|r| {
            line.strip_prefix(r.as_str()).filter(|rest| rest.trim_start().starts_with([',', ':'])).map(|_| r.clone())
        })
    };

    for line in body_text.lines().map(str::trim).filter(|l| !l.is_empty()).take(GREETING_LINES) {
        let lower = line.to_lowercase();
        let addressed = if let Some(m) = GREETING_RE.find(&lower) {
            lower[m.end()..].split([',', ':', ';', '!']).next().unwrap_or("").trim().to_string()
        } else if let Some(r) = starts_with_recipient(&lower) {
            r
        } else {
            continue;
        };
        if addressed.is_empty() || addressed == "there" {
            return label::NONE;
        }
        if EMAIL_ADDR_RE.is_match(&addressed) || (!address.is_empty() && addressed.contains(&address)) {
            return label::EMAIL;
        }
        let named = name.split_whitespace().filter(|t| t.chars().count() >= 2).any(|t| contains_word(&addressed, t));
        return if named { label::NAME } else { label::GENERIC };
    }
    label::NONE
}

fn subject_and_body(subject: &str, body: &str) -> String {
    format!("{}\n{}", subject.to_lowercase(), body.to_lowercase())
}

/// One instruction found in the body or in a link's text.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Instruction {
    pos: usize,
    action: String,
    phrase: String,
}

fn cap_tokens(s: &str, max: usize) -> String {
    s.split_whitespace().take(max).collect::<Vec<_>>().join(" ")
}

/// The purpose of an instruction: "to ..." after the verb's object, or a
/// leading "to ..." clause, or else the instruction itself.
fn purpose_clause(sentence_before: &str, verb: &str, rest: &str) -> String {
    let rest_tokens: Vec<&str> = rest.split_whitespace().collect();
    if let Some(i) = rest_tokens.iter().skip(1).position(|t| *t == "to").map(|i| i + 1) {
        let clause = &rest_tokens[i + 1..];
        if !clause.is_empty() {
            return normalize_invivo(&clause.iter().take(PHRASE_MAX_TOKENS).copied().collect::<Vec<_>>().join(" "));
        }
    }
    if let Some(c) = PURPOSE_RE.captures(sentence_before) {
        return normalize_invivo(&cap_tokens(&c[1], PHRASE_MAX_TOKENS));
    }
    normalize_invivo(&cap_tokens(&format!("{verb} {rest}"), PHRASE_MAX_TOKENS))
}

impl Lexicons {
    pub fn code_threat(&self, subject: &str, body_text: &str) -> &'static str {
        let text = subject_and_body(subject, body_text);
        match &self.threat_re {
            Some(re) if re.is_match(&text) => label::THREAT,
            _ => label::NONE,
        }
    }

    pub fn code_urgency(&self, subject: &str, body_text: &str) -> &'static str {
        let text = subject_and_body(subject, body_text);
        match &self.urgency_re {
            Some(re) if re.is_match(&text) => label::URGENT,
            _ => label::NONE,
        }
    }

    fn instructions(&self, body_text: &str, urls: &[UrlRef], has_attachment: bool) -> Vec<Instruction> {
        // addresses written out in the text are not part of the purpose clause
        let text = URL_RE.replace_all(&body_text.to_lowercase(), " ").into_owned();
        let mut found = Vec::new();
        for rule in &self.action_rules {
            if (rule.action == label::CLICK && urls.is_empty()) || (rule.needs_attachment && !has_attachment) {
                continue;
            }
            for caps in rule.pattern.captures_iter(&text) {
                let verb = caps.name("verb").expect("verb group");
                let rest = caps.name("rest").map_or("", |m| m.as_str());
                let sentence_start = text[..verb.start()].rfind(['.', '!', '?', '\n']).map_or(0, |i| i + 1);
                let before =
                    text[sentence_start..verb.start()].trim_end_matches(|c: char| c.is_whitespace() || c == ',');
                let before = strip_softeners(before);
                let phrase = purpose_clause(before, verb.as_str(), rest);
                found.push(Instruction { pos: verb.start(), action: rule.action.clone(), phrase });
            }
        }
        for url in urls {
            let link_text = collapse_whitespace(&url.visible_text.to_lowercase());
            if link_text.is_empty()
                || link_text.split_whitespace().count() > LINK_TEXT_MAX_TOKENS
                || parse_visible_url(&link_text).is_some()
            {
                continue;
            }
            if let Some((action, _)) = self.link_rules.iter().find(|(_, re)| re.is_match(&link_text)) {
                let pos = text.find(&link_text).unwrap_or(usize::MAX);
                found.push(Instruction { pos, action: action.clone(), phrase: normalize_invivo(&link_text) });
            }
        }
        found.sort_by(|a, b| (a.pos, &a.action, &a.phrase).cmp(&(b.pos, &b.action, &b.phrase)));
        found
    }

    /// Explicitly requested actions; `{none}` when nothing is asked.
    pub fn code_action_generic(&self, body_text: &str, urls: &[UrlRef], has_attachment: bool) -> BTreeSet<String> {
        let mut set: BTreeSet<String> =
            self.instructions(body_text, urls, has_attachment).into_iter().map(|i| i.action).collect();
        if set.is_empty() {
            set.insert(label::NONE.to_string());
        }
        set
    }

    /// In-vivo purpose phrases for the instructions behind `actions`.
    pub fn code_action_specific(
        &self,
        body_text: &str,
        urls: &[UrlRef],
        has_attachment: bool,
        actions: &BTreeSet<String>,
    ) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for i in self.instructions(body_text, urls, has_attachment) {
            if actions.contains(&i.action) && !i.phrase.is_empty() && !out.contains(&i.phrase) {
                out.push(i.phrase);
            }
        }
        out
    }

    /// Gazetteer names in the display name, subject and body, ordered by
    /// gazetteer rank. Addresses and URLs are not searched: their domains
    /// are routinely forged or random.
    pub fn code_company(
        &self,
        sender_display: &str,
        _sender_address: &str,
        subject: &str,
        body_text: &str,
    ) -> Vec<String> {
        let text = strip_addresses(&format!("{sender_display}\n{subject}\n{body_text}")).to_lowercase();
        let mut hits = BTreeSet::new();
        if let Some(re) = &self.company_re {
            for m in re.find_iter(&text) {
                if let Some(&i) = self.company_index.get(&collapse_whitespace(m.as_str())) {
                    hits.insert(i);
                }
            }
        }
        if !hits.is_empty() {
            return hits.into_iter().map(|i| self.org_gazetteer[i].name.clone()).collect();
        }
        if self.internal_re.as_ref().is_some_and(|re| re.is_match(&text)) {
            return vec![label::ORGANIZATION.to_string()];
        }
        vec![label::NONE.to_string()]
    }

    /// Keyword score per sector: subject hits count double.
    pub fn sector_scores(&self, subject: &str, body_text: &str) -> HashMap<String, usize> {
        let subject = strip_addresses(subject).to_lowercase();
        let body = strip_addresses(body_text).to_lowercase();
        self.sector_res
            .iter()
            .map(|(s, re)| (s.clone(), 2 * re.find_iter(&subject).count() + re.find_iter(&body).count()))
            .collect()
    }

    /// The company's sector unless the content clearly points elsewhere;
    /// without a known company, the best keyword sector. Ties are unknown.
    pub fn code_sector(&self, company_names: &[String], subject: &str, body_text: &str) -> String {
        let scores = self.sector_scores(subject, body_text);
        let company_sector = company_names.iter().find_map(|n| self.gazetteer_entry(n)).map(|g| g.sector.clone());

        let best = |exclude: Option<&str>| {
            let mut ranked: Vec<(&String, usize)> =
                scores.iter().filter(|(s, _)| Some(s.as_str()) != exclude).map(|(s, &n)| (s, n)).collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            match ranked.as_slice() {
                [] => None,
                [(s, n)] => (*n > 0).then(|| ((*s).clone(), *n)),
                [(s, n), (_, m), ..] => (*n > 0 && n > m).then(|| ((*s).clone(), *n)),
            }
        };

        match company_sector {
            Some(own) => {
                let own_score = scores.get(&own).copied().unwrap_or(0);
                match best(Some(&own)) {
                    Some((other, n)) if n >= SECTOR_OVERRIDE_MIN && n > own_score => other,
                    _ => own,
                }
            }
            None => best(None).map_or_else(|| label::UNKNOWN.to_string(), |(s, _)| s),
        }
    }

    fn is_generic_subject(&self, tokens: &[&str]) -> bool {
        tokens.iter().all(|t| self.generic_subjects.contains(*t))
    }

    /// The email's purpose as a short phrase: the cleaned subject, or the
    /// first body sentence when the subject says nothing.
    pub fn code_main_topic(&self, subject: &str, body_text: &str) -> String {
        let cleaned = normalize_invivo(&REPLY_PREFIX_RE.replace(subject, ""));
        let tokens: Vec<&str> = cleaned.split_whitespace().collect();
        if !tokens.is_empty() && !self.is_generic_subject(&tokens) {
            let trimmed = trim_edge_stopwords(&tokens);
            if !trimmed.is_empty() {
                return normalize_invivo(&trimmed.join(" "));
            }
        }
        body_topic(body_text)
    }
}

fn strip_softeners(s: &str) -> &str {
    static SOFT: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(r"(?:\s+(?:please|kindly|simply|just|now|then|and|or|so))+$").unwrap());
    SOFT.find(s).map_or(s, |m| &s[..m.start()])
}

fn body_topic(body_text: &str) -> String {
    for sentence in body_text.split(['.', '!', '?', '\n']) {
        let lower = sentence.trim().to_lowercase();
        let content = match GREETING_RE.find(&lower) {
            Some(_) => match lower.split_once(',') {
                Some((_, after)) => after.to_string(),
                None => continue,
            },
            None => lower,
        };
        let normalized = normalize_invivo(&strip_addresses(&content));
        let tokens: Vec<&str> = normalized.split_whitespace().collect();
        let lead = trim_edge_stopwords(&tokens);
        let capped: Vec<&str> = lead.iter().map(String::as_str).take(PHRASE_MAX_TOKENS).collect();
        let phrase = trim_edge_stopwords(&capped);
        if !phrase.is_empty() {
            return normalize_invivo(&phrase.join(" "));
        }
    }
    String::new()
}

/// Code one email with every rule. The result always validates against
/// `schema`; a sector the schema lacks becomes unknown.
pub fn code_email(record: &EmailRecord, lex: &Lexicons, schema: &CodebookSchema, recipient: &Recipient) -> CodedEmail {
    let company_names =
        lex.code_company(&record.sender_display, &record.sender_address, &record.subject, &record.body_text);
    let mut sector = lex.code_sector(&company_names, &record.subject, &record.body_text);
    if !schema.has_sector(&sector) {
        sector = label::UNKNOWN.to_string();
    }
    let actions_generic = lex.code_action_generic(&record.body_text, &record.urls, record.has_attachment);
    let action_specific =
        lex.code_action_specific(&record.body_text, &record.urls, record.has_attachment, &actions_generic);

    let claimed_domain = company_names.first().and_then(|n| lex.gazetteer_entry(n)).and_then(|g| g.domain.as_deref());
    let indirect_flag = sector == label::DOCUMENT_SHARE
        && !record.sender_domain.is_empty()
        && claimed_domain.is_some_and(|d| registrable_domain(d) == registrable_domain(&record.sender_domain));

    CodedEmail {
        email_id: record.id.as_str().to_string(),
        sector,
        salutation: code_salutation(&record.body_text, &recipient.name, &recipient.address).to_string(),
        threat: lex.code_threat(&record.subject, &record.body_text).to_string(),
        urgency: lex.code_urgency(&record.subject, &record.body_text).to_string(),
        actions_generic,
        action_specific,
        main_topic: lex.code_main_topic(&record.subject, &record.body_text),
        indirect_flag,
        company_names,
        action_specific_raw: Vec::new(),
        main_topic_raw: String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::validate_coded;
    use crate::corpus::EmailId;
    use proptest::prelude::*;

    fn lex() -> &'static Lexicons {
        static LEX: LazyLock<Lexicons> = LazyLock::new(Lexicons::embedded);
        &LEX
    }

    fn link(text: &str, href: &str) -> UrlRef {
        UrlRef {
            visible_text: text.into(),
            href: href.into(),
            href_domain: registrable_domain(url::Url::parse(href).unwrap().host_str().unwrap()),
            mismatch: false,
            unparseable: false,
        }
    }

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn salutations() {
        assert_eq!(code_salutation("Dear Jose,\nYour mailbox is full.", "Jose", "jose@monkey.org"), "name");
        assert_eq!(code_salutation("Attention Jose: update now", "Jose Nazario", ""), "name");
        assert_eq!(code_salutation("Dear jose@monkey.org,\n\nhello", "Jose", "jose@monkey.org"), "email");
        assert_eq!(code_salutation("jose@monkey.org,\nYour password expires", "", "jose@monkey.org"), "email");
        assert_eq!(code_salutation("Hello,\nYour invoice is attached.", "Jose", ""), "none");
        assert_eq!(code_salutation("Hi there,\nnews", "Jose", ""), "none");
        assert_eq!(code_salutation("Dear user,\n", "Jose", ""), "generic");
        assert_eq!(code_salutation("Dear Valued Customer,\n", "Jose", ""), "generic");
        assert_eq!(code_salutation("Your statement is ready.", "Jose", ""), "none");
        assert_eq!(code_salutation("", "", ""), "none");
        // "hi" must be a whole word
        assert_eq!(code_salutation("Highlights for this week", "Jose", ""), "none");
    }

    #[test]
    fn threats() {
        assert_eq!(lex().code_threat("", "Hello, your files will be deleted tonight."), "threat");
        assert_eq!(lex().code_threat("", "your statement is ready"), "none");
        assert_eq!(lex().code_threat("Account will be suspended", ""), "threat");
        assert_eq!(lex().code_threat("", "Your mailbox will be permanently closed"), "threat");
        assert_eq!(lex().code_threat("", "Failure to verify will result in loss of access."), "threat");
        assert_eq!(lex().code_threat("", "Your package will be delivered tomorrow."), "none");
    }

    #[test]
    fn urgency() {
        assert_eq!(lex().code_urgency("", "Activation expires after 24 hours"), "urgent");
        assert_eq!(lex().code_urgency("Passwords expiring soon", ""), "urgent");
        assert_eq!(lex().code_urgency("Monthly account estatements", "Your estatement is available."), "none");
        assert_eq!(lex().code_urgency("", "files will be lost in 24hrs"), "urgent");
        assert_eq!(lex().code_urgency("", "Please respond immediately."), "urgent");
        assert_eq!(lex().code_urgency("", "The link will expire in 3 days."), "urgent");
        assert_eq!(lex().code_urgency("", "Thanks for shopping with us."), "none");
    }

    #[test]
    fn actions() {
        let urls = [link("here", "https://evil.test/x")];
        assert_eq!(lex().code_action_generic("Click here to verify", &urls, false), set(&["click"]));
        assert_eq!(lex().code_action_generic("Click here to verify", &[], false), set(&["none"]));
        assert_eq!(lex().code_action_generic("Please download the attached statement.", &[], true), set(&["download"]));
        assert_eq!(lex().code_action_generic("See attached invoice.", &[], true), set(&["download"]));
        assert_eq!(lex().code_action_generic("See attached invoice.", &[], false), set(&["none"]));
        assert_eq!(
            lex().code_action_generic(
                "We noticed fraud on your card. Our fraud team at 1-800-555-0100 is reviewing the charges.",
                &[],
                false
            ),
            set(&["none"])
        );
        assert_eq!(lex().code_action_generic("Call us at 1-800-555-0100 now.", &[], false), set(&["call"]));
        assert_eq!(
            lex().code_action_generic("Reply with your username and password.", &[], false),
            set(&["reply/email"])
        );
        assert_eq!(lex().code_action_generic("Copy and paste the code into the form.", &[], false), set(&["other"]));
        assert_eq!(
            lex().code_action_generic("Log in and download the file.", &urls, false),
            set(&["click", "download"])
        );
    }

    #[test]
    fn action_specific_phrases() {
        let urls = [link("link", "https://evil.test/x")];
        let click = set(&["click"]);
        assert_eq!(
            lex().code_action_specific("Please click the link below to verify your account.", &urls, false, &click),
            vec!["verify your account"]
        );
        assert_eq!(
            lex().code_action_specific("To keep your mailbox active, click here.", &urls, false, &click),
            vec!["keep your mailbox active"]
        );
        assert_eq!(lex().code_action_specific("Click here.", &urls, false, &click), vec!["click here"]);
        let cta = [link("Get your files", "https://wetransfer.com/d/1")];
        assert_eq!(
            lex().code_action_specific(
                "Get your files\n",
                &cta,
                false,
                &lex().code_action_generic("Get your files\n", &cta, false)
            ),
            vec!["get your files"]
        );
        assert_eq!(
            lex().code_action_specific("Click here to verify", &urls, false, &set(&["none"])),
            Vec::<String>::new()
        );
        let long = "Click the button to confirm the ownership of this mailbox and all the folders within it";
        assert_eq!(
            lex().code_action_specific(long, &urls, false, &click),
            vec!["confirm the ownership of this mailbox and all"]
        );
    }

    #[test]
    fn companies() {
        assert_eq!(lex().code_company("WeTransfer", "noreply@wetransfer.com", "", ""), vec!["wetransfer"]);
        assert_eq!(lex().code_company("", "", "", "Contact HR for your payslip."), vec!["organization"]);
        assert_eq!(lex().code_company("xk3j9q", "q8z@zz9.biz", "", "asdf qwer"), vec!["none"]);
        // "pay" alone is not paypal, and paypal is ranked before microsoft
        assert_eq!(lex().code_company("", "", "Microsoft and PayPal", "pay now"), vec!["paypal", "microsoft"]);
        assert_eq!(lex().code_company("", "", "", "Write to Bank  of\nAmerica"), vec!["bank of america"]);
        // addresses and links are ignored
        assert_eq!(lex().code_company("", "", "", "mail jose@paypal.com or https://amazon.com/x"), vec!["none"]);
    }

    #[test]
    fn sectors() {
        let amazon = vec!["amazon".to_string()];
        assert_eq!(
            lex().code_sector(&amazon, "Delivery problem", "Your package delivery failed. Reschedule your package."),
            "logistics"
        );
        assert_eq!(lex().code_sector(&amazon, "Your order", "Thanks for your order."), "shopping");
        assert_eq!(lex().code_sector(&["paypal".to_string()], "Hello", "Please review."), "financial");
        assert_eq!(lex().code_sector(&["none".to_string()], "Hello", "Nothing here."), "unknown");
        assert_eq!(lex().code_sector(&["none".to_string()], "", "Your mailbox quota is full."), "email");
        // one hit each: a tie
        assert_eq!(lex().code_sector(&["none".to_string()], "", "package and invoice"), "unknown");
    }

    #[test]
    fn main_topics() {
        assert_eq!(lex().code_main_topic("Your password is expiring soon", ""), "password is expiring soon");
        assert_eq!(
            lex().code_main_topic("", "You received a file via WeTransfer. Get it."),
            "received a file via wetransfer"
        );
        assert_eq!(
            lex().code_main_topic("Notification", "Dear user,\nYour mailbox quota has been exceeded."),
            "mailbox quota has been exceeded"
        );
        assert_eq!(lex().code_main_topic("RE: Fwd: Invoice #442", ""), "invoice 442");
        assert_eq!(lex().code_main_topic("", ""), "");
    }

    fn record(subject: &str, body: &str) -> EmailRecord {
        let mut r = EmailRecord::blank(EmailId::new(2018, 11, 3));
        r.subject = subject.into();
        r.body_text = body.into();
        r
    }

    #[test]
    fn empty_email_codes_to_defaults() {
        let c = code_email(&record("", ""), lex(), &CodebookSchema::default(), &Recipient::default());
        let mut expected = CodedEmail::empty("2018_011");
        expected.main_topic = String::new();
        assert_eq!(c, expected);
    }

    #[test]
    fn indirect_flag_needs_real_domain() {
        let mut r = record("You received files via WeTransfer", "Download your files.");
        r.sender_display = "WeTransfer".into();
        r.sender_domain = "wetransfer.com".into();
        let schema = CodebookSchema::default();
        let c = code_email(&r, lex(), &schema, &Recipient::default());
        assert_eq!(c.sector, "document share");
        assert!(c.indirect_flag);
        r.sender_domain = "wetransfer-share.xyz".into();
        assert!(!code_email(&r, lex(), &schema, &Recipient::default()).indirect_flag);
    }

    proptest! {
        #[test]
        fn output_always_validates(subject in "\\PC{0,40}", body in "\\PC{0,200}", attach: bool) {
            let mut r = record(&subject, &body);
            r.has_attachment = attach;
            let schema = CodebookSchema::default();
            let c = code_email(&r, lex(), &schema, &Recipient { name: "Jose".into(), address: "jose@monkey.org".into() });
            prop_assert_eq!(validate_coded(&c, &schema), vec![]);
        }

        #[test]
        fn threat_and_urgency_are_monotone(body in "[a-z .,\n]{0,120}", i in 0usize..200) {
            let at = body.char_indices().map(|(j, _)| j).nth(i % (body.len() + 1)).unwrap_or(body.len());
            let threat = format!("{}. Your account will be deleted. {}", &body[..at], &body[at..]);
            let urgent = format!("{}. Act now. {}", &body[..at], &body[at..]);
            prop_assert_eq!(lex().code_threat("", &threat), "threat");
            prop_assert_eq!(lex().code_urgency("", &urgent), "urgent");
            if lex().code_threat("", &body) == "threat" {
                prop_assert_eq!(lex().code_threat("", &format!("{body} your mailbox will be closed")), "threat");
            }
        }
    }
}
