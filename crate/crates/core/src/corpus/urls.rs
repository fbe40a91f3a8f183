use std::collections::HashSet;
use std::net::IpAddr;
use std::sync::LazyLock;

use regex::Regex;
use url::Url;

use super::{address_domain, html_to_text, UrlRef};
use crate::text::parse_word_list;

static MULTIPART_SUFFIXES: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| parse_word_list(include_str!("../../data/multipart_suffixes.txt")).collect());

static ANCHOR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?is)<a\b[^>]*?\bhref\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s>]+))[^>]*>(.*?)</a\s*>"#).unwrap()
});

static BARE_URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?i)\b(?:https?://|www\.)[^\s<>"'()\[\]{}]+"#).unwrap());

/// Organisation-level part of a host name.
///
/// Last two labels, or last three when the final two form a known multi-part
/// suffix (`co.uk`, `web.app`, ...). IP literals are returned unchanged.
pub fn registrable_domain(host: &str) -> String {
    let host = host.trim().trim_end_matches('.').trim_start_matches('[').trim_end_matches(']').to_lowercase();
    if host.parse::<IpAddr>().is_ok() {
        return host;
    }
    let labels: Vec<&str> = host.split('.').filter(|l| !l.is_empty()).collect();
    if labels.len() <= 2 {
        return labels.join(".");
    }
    let last_two = labels[labels.len() - 2..].join(".");
    let keep = if MULTIPART_SUFFIXES.contains(last_two.as_str()) { 3 } else { 2 };
    labels[labels.len() - keep..].join(".")
}

/// Parse text a reader would take to be a web address.
pub fn parse_visible_url(text: &str) -> Option<Url> {
    let t = text.trim();
    let lower = t.to_ascii_lowercase();
    let candidate = if lower.starts_with("http://") || lower.starts_with("https://") {
        t.to_string()
    } else if lower.starts_with("www.") {
        format!("http://{t}")
    } else {
        return None;
    };
    Url::parse(&candidate).ok().filter(|u| u.host_str().is_some_and(|h| h.contains('.')))
}

fn href_domain(href: &str) -> Option<String> {
    let href = href.trim();
    if let Some(addr) = href.strip_prefix("mailto:").or_else(|| href.strip_prefix("MAILTO:")) {
        let domain = address_domain(addr.split('?').next().unwrap_or(""));
        return (!domain.is_empty()).then(|| registrable_domain(&domain));
    }
    let parsed = Url::parse(href).ok().or_else(|| parse_visible_url(href));
    parsed.and_then(|u| u.host_str().map(registrable_domain)).filter(|d| !d.is_empty())
}

fn make_ref(visible_text: String, href: String) -> UrlRef {
    let domain = href_domain(&href);
    let visible_domain = parse_visible_url(&visible_text).and_then(|u| u.host_str().map(registrable_domain));
    let href_domain = domain.clone().unwrap_or_default();
    let mismatch = visible_domain.is_some_and(|v| v != href_domain);
    UrlRef { visible_text, href, href_domain, mismatch, unparseable: domain.is_none() }
}

fn trim_trailing_punct(u: &str) -> &str {
    u.trim_end_matches(['.', ',', ';', ':', '!', '?'])
}

fn bare_urls(text: &str) -> impl Iterator<Item = UrlRef> + '_ {
    BARE_URL.find_iter(text).map(|m| {
        let u = trim_trailing_punct(m.as_str()).to_string();
        make_ref(u.clone(), u)
    })
}

/// Links a reader can follow: every anchor in the HTML body plus bare URLs
/// in the visible text. Fragment-only and empty hrefs are ignored.
pub fn extract_urls(body_html: Option<&str>, body_text: &str) -> Vec<UrlRef> {
    let Some(html) = body_html else {
        return bare_urls(body_text).collect();
    };
    let mut out = Vec::new();
    for cap in ANCHOR.captures_iter(html) {
        let raw_href = cap.get(1).or_else(|| cap.get(2)).or_else(|| cap.get(3)).map_or("", |m| m.as_str());
        let href = html_to_text(raw_href).replace('\n', "");
        if href.is_empty() || href.starts_with('#') {
            continue;
        }
        let visible = html_to_text(cap.get(4).map_or("", |m| m.as_str())).replace('\n', " ");
        out.push(make_ref(visible, href));
    }
    let without_anchors = ANCHOR.replace_all(html, " ");
    let visible = html_to_text(&without_anchors);
    out.extend(bare_urls(&visible));
    out
}
