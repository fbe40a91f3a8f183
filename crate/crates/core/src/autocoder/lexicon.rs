use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use regex::Regex;

use crate::codebook::{label, CodebookSchema, ACTIONS};
use crate::text::{collapse_whitespace, parse_word_list};

pub const URGENCY_FILE: &str = "urgency.txt";
pub const THREAT_FILE: &str = "threat.txt";
pub const GAZETTEER_FILE: &str = "gazetteer.tsv";
pub const SECTOR_KEYWORDS_FILE: &str = "sector_keywords.tsv";
pub const ACTION_VERBS_FILE: &str = "action_verbs.tsv";
pub const LINK_VERBS_FILE: &str = "link_verbs.tsv";
pub const INTERNAL_ORG_FILE: &str = "internal_org.txt";
pub const GENERIC_SUBJECTS_FILE: &str = "generic_subjects.txt";

const DEFAULTS: [(&str, &str); 8] = [
    (URGENCY_FILE, include_str!("../../data/lexicons/urgency.txt")),
    (THREAT_FILE, include_str!("../../data/lexicons/threat.txt")),
    (GAZETTEER_FILE, include_str!("../../data/lexicons/gazetteer.tsv")),
    (SECTOR_KEYWORDS_FILE, include_str!("../../data/lexicons/sector_keywords.tsv")),
    (ACTION_VERBS_FILE, include_str!("../../data/lexicons/action_verbs.tsv")),
    (LINK_VERBS_FILE, include_str!("../../data/lexicons/link_verbs.tsv")),
    (INTERNAL_ORG_FILE, include_str!("../../data/lexicons/internal_org.txt")),
    (GENERIC_SUBJECTS_FILE, include_str!("../../data/lexicons/generic_subjects.txt")),
];

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("{file}:{line}: {message}")]
    Entry { file: String, line: usize, message: String },
    #[error("{file}:{line}: bad pattern: {source}")]
    Pattern {
        file: String,
        line: usize,
        #[source]
        source: regex::Error,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GazetteerEntry {
    pub name: String,
    pub sector: String,
    pub domain: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionVerb {
    pub action: String,
    pub phrase: String,
    pub needs_attachment: bool,
}

/// Compiled pattern groups for one generic action.
#[derive(Debug)]
pub(crate) struct ActionRule {
    pub action: String,
    pub needs_attachment: bool,
    pub pattern: Regex,
}

/// Word lists and patterns that drive the autocoder. Every entry is
/// lowercased at load; `/.../` entries are regular expressions.
#[derive(Debug)]
pub struct Lexicons {
    pub urgency_terms: Vec<String>,
    pub threat_patterns: Vec<String>,
    pub org_gazetteer: Vec<GazetteerEntry>,
    pub sector_keywords: BTreeMap<String, Vec<String>>,
    pub action_verbs: Vec<ActionVerb>,
    pub link_verbs: Vec<(String, String)>,
    pub internal_org_terms: Vec<String>,
    pub generic_subjects: HashSet<String>,

    pub(crate) urgency_re: Option<Regex>,
    pub(crate) threat_re: Option<Regex>,
    pub(crate) company_re: Option<Regex>,
    pub(crate) company_index: HashMap<String, usize>,
    pub(crate) internal_re: Option<Regex>,
    pub(crate) sector_res: Vec<(String, Regex)>,
    pub(crate) action_rules: Vec<ActionRule>,
    pub(crate) link_rules: Vec<(String, Regex)>,
}

/// Softeners allowed between a clause boundary and an instruction verb.
const SOFTENERS: &str = r"(?:please|kindly|simply|just|now|then|also|and|or|so|immediately|quickly|you\s+(?:must|should|can|may|will\s+need\s+to|need\s+to|have\s+to)|be\s+sure\s+to|make\s+sure\s+to|remember\s+to|we\s+(?:need|ask|require)\s+you\s+to|you\s+are\s+(?:required|requested|asked)\s+to)";

fn entry_pattern(entry: &str) -> String {
    if let Some(inner) = entry.strip_prefix('/').and_then(|e| e.strip_suffix('/')) {
        return format!("(?:{inner})");
    }
    let words: Vec<String> = entry.split_whitespace().map(regex::escape).collect();
    let body = words.join(r"\s+");
    let lead = if entry.starts_with(|c: char| c.is_alphanumeric()) { r"\b" } else { "" };
    let trail = if entry.ends_with(|c: char| c.is_alphanumeric()) { r"\b" } else { "" };
    format!("{lead}(?:{body}){trail}")
}

fn check(file: &str, line: usize, entry: &str) -> Result<(), LexiconError> {
    Regex::new(&entry_pattern(entry)).map(|_| ()).map_err(|source| LexiconError::Pattern {
        file: file.to_string(),
        line,
        source,
    })
}

/// Alternation of entries, longest literal first so that a shorter name
/// never wins inside a longer one.
fn alternation(entries: &[String]) -> Option<Regex> {
    if entries.is_empty() {
        return None;
    }
    let mut sorted: Vec<&String> = entries.iter().collect();
    sorted.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    let alts: Vec<String> = sorted.iter().map(|e| entry_pattern(e)).collect();
    Some(Regex::new(&alts.join("|")).expect("entries are checked at load"))
}

fn numbered(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches(['\r', '\n'])))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn lower_entry(entry: &str) -> String {
    let e = entry.trim();
    if e.starts_with('/') && e.ends_with('/') && e.len() > 1 {
        e.to_string()
    } else {
        collapse_whitespace(&e.to_lowercase())
    }
}

fn phrase_list(file: &str, src: &str) -> Result<Vec<String>, LexiconError> {
    let mut out = Vec::new();
    for (line, raw) in numbered(src) {
        let e = lower_entry(raw);
        check(file, line, &e)?;
        out.push(e);
    }
    Ok(out)
}

fn columns<'a>(file: &str, line: usize, raw: &'a str, min: usize, max: usize) -> Result<Vec<&'a str>, LexiconError> {
    let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
    if cols.len() < min || cols.len() > max || cols[..min].iter().any(|c| c.is_empty()) {
        return Err(LexiconError::Entry {
            file: file.to_string(),
            line,
            message: format!("expected {min} to {max} tab-separated columns"),
        });
    }
    Ok(cols)
}

impl Lexicons {
    /// The lexicons shipped with the crate.
    pub fn embedded() -> Self {
        Self::from_sources(|name| Ok(DEFAULTS.iter().find(|(n, _)| *n == name).map(|(_, s)| s.to_string())))
            .expect("embedded lexicons are valid")
    }

    /// Load from a directory. A file missing from `dir` falls back to the
    /// shipped default, so a deployment can override just one list.
    pub fn load_dir(dir: &Path) -> Result<Self, LexiconError> {
        Self::load(Some(dir), None)
    }

    /// Like [`Lexicons::load_dir`], with an optional gazetteer file taking
    /// precedence over the directory's.
    pub fn load(dir: Option<&Path>, gazetteer: Option<&Path>) -> Result<Self, LexiconError> {
        let default = |name: &str| DEFAULTS.iter().find(|(n, _)| *n == name).map(|(_, s)| s.to_string());
        Self::from_sources(|name| {
            let explicit = name == GAZETTEER_FILE && gazetteer.is_some();
            let path = match (explicit, dir) {
                (true, _) => gazetteer.unwrap().to_path_buf(),
                (false, Some(d)) => d.join(name),
                (false, None) => return Ok(default(name)),
            };
            match std::fs::read_to_string(&path) {
                Ok(s) => Ok(Some(s)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound && !explicit => Ok(default(name)),
                Err(source) => Err(LexiconError::Io { path: path.display().to_string(), source }),
            }
        })
    }

    fn from_sources(mut read: impl FnMut(&str) -> Result<Option<String>, LexiconError>) -> Result<Self, LexiconError> {
        let mut get = |name: &str| read(name).map(Option::unwrap_or_default);

        let urgency_terms = phrase_list(URGENCY_FILE, &get(URGENCY_FILE)?)?;
        let threat_patterns = phrase_list(THREAT_FILE, &get(THREAT_FILE)?)?;
        let internal_org_terms = phrase_list(INTERNAL_ORG_FILE, &get(INTERNAL_ORG_FILE)?)?;
        let generic_subjects = parse_word_list(&get(GENERIC_SUBJECTS_FILE)?).map(str::to_lowercase).collect();

        let mut org_gazetteer: Vec<GazetteerEntry> = Vec::new();
        for (line, raw) in numbered(&get(GAZETTEER_FILE)?) {
            let cols = columns(GAZETTEER_FILE, line, raw, 2, 3)?;
            let name = collapse_whitespace(&cols[0].to_lowercase());
            if org_gazetteer.iter().any(|g| g.name == name) {
                return Err(LexiconError::Entry {
                    file: GAZETTEER_FILE.into(),
                    line,
                    message: format!("duplicate name {name:?}"),
                });
            }
            org_gazetteer.push(GazetteerEntry {
                name,
                sector: cols[1].to_lowercase(),
                domain: cols.get(2).filter(|d| !d.is_empty()).map(|d| d.to_lowercase()),
            });
        }

        let mut sector_keywords: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (line, raw) in numbered(&get(SECTOR_KEYWORDS_FILE)?) {
            let cols = columns(SECTOR_KEYWORDS_FILE, line, raw, 2, 2)?;
            let kw = lower_entry(cols[1]);
            check(SECTOR_KEYWORDS_FILE, line, &kw)?;
            sector_keywords.entry(cols[0].to_lowercase()).or_default().push(kw);
        }

        let mut action_verbs = Vec::new();
        for (line, raw) in numbered(&get(ACTION_VERBS_FILE)?) {
            let cols = columns(ACTION_VERBS_FILE, line, raw, 2, 3)?;
            let action = cols[0].to_lowercase();
            let needs_attachment = match cols.get(2).copied().unwrap_or("") {
                "" => false,
                "attachment" => true,
                other => {
                    return Err(LexiconError::Entry {
                        file: ACTION_VERBS_FILE.into(),
                        line,
                        message: format!("unknown requirement {other:?}"),
                    })
                }
            };
            if !ACTIONS.contains(&action.as_str()) || action == label::NONE {
                return Err(LexiconError::Entry {
                    file: ACTION_VERBS_FILE.into(),
                    line,
                    message: format!("unknown action {action:?}"),
                });
            }
            let phrase = lower_entry(cols[1]);
            check(ACTION_VERBS_FILE, line, &phrase)?;
            action_verbs.push(ActionVerb { action, phrase, needs_attachment });
        }

        let mut link_verbs = Vec::new();
        for (line, raw) in numbered(&get(LINK_VERBS_FILE)?) {
            let cols = columns(LINK_VERBS_FILE, line, raw, 2, 2)?;
            let verb = lower_entry(cols[1]);
            check(LINK_VERBS_FILE, line, &verb)?;
            link_verbs.push((cols[0].to_lowercase(), verb));
        }

        Ok(Self::compile(
            urgency_terms,
            threat_patterns,
            org_gazetteer,
            sector_keywords,
            action_verbs,
            link_verbs,
            internal_org_terms,
            generic_subjects,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn compile(
        urgency_terms: Vec<String>,
        threat_patterns: Vec<String>,
        org_gazetteer: Vec<GazetteerEntry>,
        sector_keywords: BTreeMap<String, Vec<String>>,
        action_verbs: Vec<ActionVerb>,
        link_verbs: Vec<(String, String)>,
        internal_org_terms: Vec<String>,
        generic_subjects: HashSet<String>,
    ) -> Self {
        let names: Vec<String> = org_gazetteer.iter().map(|g| g.name.clone()).collect();
        let company_index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let sector_res =
            sector_keywords.iter().filter_map(|(s, kws)| alternation(kws).map(|re| (s.clone(), re))).collect();

        let mut groups: Vec<((String, bool), Vec<String>)> = Vec::new();
        for v in &action_verbs {
            let key = (v.action.clone(), v.needs_attachment);
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, list)) => list.push(v.phrase.clone()),
                None => groups.push((key, vec![v.phrase.clone()])),
            }
        }
        let action_rules = groups
            .into_iter()
            .map(|((action, needs_attachment), phrases)| {
                let alts = alternation(&phrases).expect("non-empty group").as_str().to_string();
                let pattern = Regex::new(&format!(
                    r"(?m)(?:^|[.!?;:,•*>\u{{2013}}\u{{2014}}]\s*|\s-\s+|\s(?:and|or|then)\s+)(?:{SOFTENERS}\s+)*(?P<verb>{alts})(?P<rest>[^.!?\n]*)"
                ))
                .expect("entries are checked at load");
                ActionRule { action, needs_attachment, pattern }
            })
            .collect();

        let mut link_groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (action, verb) in &link_verbs {
            link_groups.entry(action.clone()).or_default().push(verb.clone());
        }
        let link_rules = link_groups
            .into_iter()
            .filter_map(|(action, verbs)| {
                let alts = alternation(&verbs)?.as_str().to_string();
                Some((action, Regex::new(&format!("^(?:{alts})")).expect("entries are checked at load")))
            })
            .collect();

        Lexicons {
            urgency_re: alternation(&urgency_terms),
            threat_re: alternation(&threat_patterns),
            company_re: alternation(&names),
            internal_re: alternation(&internal_org_terms),
            company_index,
            sector_res,
            action_rules,
            link_rules,
            urgency_terms,
            threat_patterns,
            org_gazetteer,
            sector_keywords,
            action_verbs,
            link_verbs,
            internal_org_terms,
            generic_subjects,
        }
    }

    /// Problems with these lexicons under `schema`, e.g. a gazetteer sector
    /// the codebook does not know.
    pub fn check_schema(&self, schema: &CodebookSchema) -> Vec<String> {
        let mut out = Vec::new();
        for g in &self.org_gazetteer {
            if !schema.has_sector(&g.sector) {
                out.push(format!("gazetteer entry {:?} has unknown sector {:?}", g.name, g.sector));
            }
        }
        for s in self.sector_keywords.keys() {
            if !schema.has_sector(s) {
                out.push(format!("sector keywords for unknown sector {s:?}"));
            }
        }
        out
    }

    pub fn gazetteer_entry(&self, name: &str) -> Option<&GazetteerEntry> {
        self.company_index.get(name).map(|&i| &self.org_gazetteer[i])
    }
}
