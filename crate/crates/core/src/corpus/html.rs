use std::sync::LazyLock;

use regex::Regex;

const BLOCK_TAGS: &[&str] = &[
    "address", "article", "aside", "blockquote", "br", "center", "dd", "div", "dl", "dt", "footer", "form", "h1", "h2",
    "h3", "h4", "h5", "h6", "header", "hr", "li", "main", "nav", "ol", "p", "pre", "section", "table", "tbody",
    "thead", "tfoot", "title", "tr", "ul",
];

const CELL_TAGS: &[&str] = &["td", "th"];

static MARKUP: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)</?(?:html|head|body|div|p|br|span|table|tr|td|th|a|img|font|b|i|u|strong|em|ul|ol|li|h[1-6]|center|style|script|meta|title|blockquote|hr)\b[^>]*>",
    )
    .unwrap()
});

/// True if the text carries recognisable HTML element tags.
pub fn contains_markup(text: &str) -> bool {
    MARKUP.is_match(text)
}

/// Render HTML to the plain text a reader would see.
///
/// Script and style content is dropped, block elements become line breaks,
/// entities are decoded and whitespace is collapsed. Stripping and decoding
/// repeat until nothing changes, which makes the function idempotent even on
/// doubly-escaped input.
pub fn html_to_text(html: &str) -> String {
    let mut current = html.replace("\r\n", "\n").replace('\r', "\n");
    loop {
        let next = decode_entities(&strip_tags(&current));
        if next == current {
            break;
        }
        current = next;
    }
    normalize_whitespace(&current)
}

fn normalize_whitespace(s: &str) -> String {
    s.split('\n')
        .map(|line| line.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|line| !line.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

fn tag_starts_at(bytes: &[u8], i: usize) -> bool {
    match bytes.get(i + 1) {
        Some(c) if c.is_ascii_alphabetic() || *c == b'!' || *c == b'?' => true,
        Some(b'/') => bytes.get(i + 2).is_some_and(u8::is_ascii_alphabetic),
        _ => false,
    }
}

fn find_ci(haystack: &str, from: usize, needle: &str) -> Option<usize> {
    haystack[from..].to_ascii_lowercase().find(needle).map(|i| from + i)
}

fn strip_tags(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    let mut literal_start = 0;

    while i < bytes.len() {
        if bytes[i] != b'<' || !tag_starts_at(bytes, i) {
            i += 1;
            continue;
        }
        if s[i..].starts_with("<!--") {
            out.push_str(&s[literal_start..i]);
            i = s[i + 4..].find("-->").map(|j| i + 4 + j + 3).unwrap_or(bytes.len());
            literal_start = i;
            continue;
        }
        let Some(close) = s[i..].find('>').map(|j| i + j) else {
            // unterminated: show the rest literally
            break;
        };
        out.push_str(&s[literal_start..i]);
        let inner = &s[i + 1..close];
        let closing = inner.starts_with('/');
        let name: String = inner
            .trim_start_matches('/')
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        i = close + 1;
        if !closing && (name == "script" || name == "style") {
            let end_tag = format!("</{name}");
            i = match find_ci(s, i, &end_tag) {
                Some(j) => s[j..].find('>').map(|k| j + k + 1).unwrap_or(bytes.len()),
                None => bytes.len(),
            };
        } else if BLOCK_TAGS.contains(&name.as_str()) {
            out.push('\n');
        } else if CELL_TAGS.contains(&name.as_str()) {
            out.push(' ');
        }
        literal_start = i;
    }
    out.push_str(&s[literal_start..]);
    out
}

fn named_entity(name: &str) -> Option<char> {
    Some(match name {
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => '\u{a0}',
        "copy" => '©',
        "reg" => '®',
        "trade" => '™',
        "hellip" => '…',
        "mdash" => '—',
        "ndash" => '–',
        "lsquo" => '‘',
        "rsquo" => '’',
        "ldquo" => '“',
        "rdquo" => '”',
        "bull" => '•',
        "middot" => '·',
        "euro" => '€',
        "pound" => '£',
        "yen" => '¥',
        "cent" => '¢',
        "laquo" => '«',
        "raquo" => '»',
        "shy" => '\u{ad}',
        _ => return None,
    })
}

fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let after = &rest[amp + 1..];
        let semi = after.find(';').filter(|&j| j <= 10);
        let decoded = semi.and_then(|j| {
            let body = &after[..j];
            let ch = if let Some(num) = body.strip_prefix('#') {
                let code = match num.strip_prefix(['x', 'X']) {
                    Some(hex) if !hex.is_empty() => u32::from_str_radix(hex, 16).ok(),
                    Some(_) => None,
                    None if !num.is_empty() => num.parse::<u32>().ok(),
                    None => None,
                }?;
                char::from_u32(code).filter(|&c| c != '\0').unwrap_or('\u{fffd}')
            } else {
                named_entity(body)?
            };
            Some((ch, j))
        });
        match decoded {
            Some((ch, j)) => {
                out.push(ch);
                rest = &after[j + 1..];
            }
            None => {
                out.push('&');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
