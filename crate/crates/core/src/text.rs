//! Tokenizing and stopword helpers shared by the language filter, the
//! autocoder and the corpus reports.

use std::collections::HashSet;
use std::sync::LazyLock;

const STOPWORDS_TXT: &str = include_str!("../data/stopwords.txt");

static STOPWORDS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| parse_word_list(STOPWORDS_TXT).collect());

/// Lines of a plain-text list, skipping blanks and `#` comments.
pub fn parse_word_list(src: &str) -> impl Iterator<Item = &str> {
    src.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

pub fn stopwords() -> &'static HashSet<&'static str> {
    &STOPWORDS
}

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(token)
}

/// Lowercased alphanumeric tokens. Apostrophes split words ("s'il" -> "s", "il").
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Collapse every whitespace run to a single space and trim the ends.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Drop stopwords from both ends of a token list, keeping interior ones.
pub fn trim_edge_stopwords(tokens: &[&str]) -> Vec<String> {
    let start = tokens.iter().position(|t| !is_stopword(t));
    let end = tokens.iter().rposition(|t| !is_stopword(t));
    match (start, end) {
        (Some(s), Some(e)) => tokens[s..=e].iter().map(|t| t.to_string()).collect(),
        _ => Vec::new(),
    }
}
