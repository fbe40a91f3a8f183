use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use mailparse::{DispositionType, MailHeaderMap, ParsedMail};
use regex::Regex;

use super::{
    address_domain, contains_markup, extract_transport, extract_urls, html_to_text, CorpusError, EmailId, EmailRecord,
    RawEmail,
};

pub const WARN_MISSING_FROM: &str = "missing-from";
pub const WARN_LOSSY_CHARSET: &str = "lossy-charset";

static ANGLE_ADDR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<\s*([^<>\s]+@[^<>\s]+)\s*>").unwrap());
static BARE_ADDR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[^\s<>,;:\x22]+@[^\s<>,;:\x22]+").unwrap());

/// Ids for `count` messages from one year's archive, in order of appearance.
pub fn assign_ids(year: u16, count: usize) -> Vec<EmailId> {
    let width = if count > 999 { 4 } else { 3 };
    (1..=count).map(|i| EmailId::new(year, i, width)).collect()
}

#[derive(Default)]
struct Bodies {
    plain: Option<String>,
    html: Option<String>,
    has_attachment: bool,
    lossy: bool,
}

fn decode_part(part: &ParsedMail<'_>, lossy: &mut bool) -> String {
    let raw = match part.get_body_raw() {
        Ok(raw) => raw,
        Err(_) => {
            *lossy = true;
            return String::from_utf8_lossy(part.raw_bytes).into_owned();
        }
    };
    let label = part.ctype.charset.to_ascii_lowercase();
    let known = charset::Charset::for_label_no_replacement(label.as_bytes());
    let utf8_like = matches!(label.as_str(), "utf-8" | "utf8") || known.is_none();
    if utf8_like {
        match String::from_utf8(raw) {
            Ok(s) => s,
            Err(e) => {
                *lossy = true;
                String::from_utf8_lossy(e.as_bytes()).into_owned()
            }
        }
    } else {
        let (text, had_errors) = known.expect("checked").decode_without_bom_handling(&raw);
        *lossy |= had_errors;
        text.into_owned()
    }
}

fn is_attachment(part: &ParsedMail<'_>) -> bool {
    let disp = part.get_content_disposition();
    if disp.disposition == DispositionType::Attachment || disp.params.contains_key("filename") {
        return true;
    }
    let mime = part.ctype.mimetype.to_ascii_lowercase();
    mime.starts_with("application/") || mime == "message/rfc822"
}

fn walk(part: &ParsedMail<'_>, acc: &mut Bodies) {
    let mime = part.ctype.mimetype.to_ascii_lowercase();
    if mime.starts_with("multipart/") {
        for sub in &part.subparts {
            walk(sub, acc);
        }
        return;
    }
    if is_attachment(part) {
        acc.has_attachment = true;
        return;
    }
    match mime.as_str() {
        "text/plain" if acc.plain.is_none() => acc.plain = Some(decode_part(part, &mut acc.lossy)),
        "text/html" if acc.html.is_none() => acc.html = Some(decode_part(part, &mut acc.lossy)),
        _ => {}
    }
}

fn parse_sender(value: &str) -> Option<(String, String)> {
    if let Ok(list) = mailparse::addrparse(value) {
        for addr in list.iter() {
            match addr {
                mailparse::MailAddr::Single(info) => {
                    return Some((info.display_name.clone().unwrap_or_default(), info.addr.clone()));
                }
                mailparse::MailAddr::Group(group) => {
                    if let Some(info) = group.addrs.first() {
                        return Some((info.display_name.clone().unwrap_or_default(), info.addr.clone()));
                    }
                }
            }
        }
    }
    // lenient fallback for headers the strict parser rejects
    if let Some(c) = ANGLE_ADDR.captures(value) {
        let m = c.get(0).unwrap();
        let display = value[..m.start()].trim().trim_matches('"').trim().to_string();
        return Some((display, c[1].to_string()));
    }
    BARE_ADDR.find(value).map(|m| (String::new(), m.as_str().to_string()))
}

fn normalize_plain(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n").trim().to_string()
}

/// Decode a raw message into the fields a mail client would show.
pub fn to_record(raw: &RawEmail, id: EmailId) -> Result<EmailRecord, CorpusError> {
    let mail = mailparse::parse_mail(&raw.source).map_err(|e| CorpusError::Parse(format!("{}: {e}", raw.origin)))?;
    let mut record = EmailRecord::blank(id);

    record.subject = mail.headers.get_first_value("Subject").map(|s| s.trim().to_string()).unwrap_or_default();
    record.date = mail
        .headers
        .get_first_value("Date")
        .and_then(|d| mailparse::dateparse(&d).ok())
        .and_then(|ts| DateTime::<Utc>::from_timestamp(ts, 0));

    match mail.headers.get_first_value("From").and_then(|v| parse_sender(&v)) {
        Some((display, addr)) => {
            record.sender_display = display;
            record.sender_domain = address_domain(&addr);
            record.sender_address = addr;
        }
        None => record.warnings.push(WARN_MISSING_FROM.to_string()),
    }

    let mut bodies = Bodies::default();
    walk(&mail, &mut bodies);
    record.body_text = match (&bodies.plain, &bodies.html) {
        (Some(plain), _) if !plain.trim().is_empty() => {
            if contains_markup(plain) {
                html_to_text(plain)
            } else {
                normalize_plain(plain)
            }
        }
        (_, Some(html)) => html_to_text(html),
        (Some(plain), None) => normalize_plain(plain),
        (None, None) => String::new(),
    };
    record.body_html = bodies.html;
    record.has_attachment = bodies.has_attachment;
    if bodies.lossy {
        record.warnings.push(WARN_LOSSY_CHARSET.to_string());
    }

    record.urls = extract_urls(record.body_html.as_deref(), &record.body_text);
    let headers: Vec<(String, String)> = mail.headers.iter().map(|h| (h.get_key(), h.get_value())).collect();
    record.transport = extract_transport(&headers);
    Ok(record)
}
