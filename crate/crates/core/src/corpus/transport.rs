use std::net::IpAddr;
use std::sync::LazyLock;

use regex::Regex;

use super::TransportMeta;

static IPV4: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(?:\d{1,3}\.){3}\d{1,3}\b").unwrap());
static IPV6: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\[(?:ipv6:)?([0-9a-f:.]*:[0-9a-f:.]*:[0-9a-f:.]*)\]").unwrap());

fn first_ip(value: &str) -> Option<String> {
    let v4 = IPV4.find_iter(value).filter(|m| m.as_str().parse::<IpAddr>().is_ok()).map(|m| (m.start(), m.as_str()));
    let v6 = IPV6
        .captures_iter(value)
        .filter_map(|c| c.get(1))
        .filter(|m| m.as_str().parse::<IpAddr>().is_ok())
        .map(|m| (m.start(), m.as_str()));
    v4.chain(v6).min_by_key(|(pos, _)| *pos).map(|(_, ip)| ip.to_string())
}

/// Transport facts from a header list in message order.
///
/// The bottom-most `Received` header is the hop where the message left the
/// sending host; its first IP literal is reported.
pub fn extract_transport(headers: &[(String, String)]) -> TransportMeta {
    let received: Vec<&str> =
        headers.iter().filter(|(k, _)| k.eq_ignore_ascii_case("received")).map(|(_, v)| v.as_str()).collect();
    TransportMeta {
        first_ip: received.last().and_then(|v| first_ip(v)),
        received_count: received.len(),
        dkim_present: headers.iter().any(|(k, _)| k.eq_ignore_ascii_case("dkim-signature")),
    }
}

pub fn extract_transport_from_bytes(raw: &[u8]) -> TransportMeta {
    let headers = mailparse::parse_headers(raw)
        .map(|(hs, _)| hs.iter().map(|h| (h.get_key(), h.get_value())).collect::<Vec<_>>())
        .unwrap_or_default();
    extract_transport(&headers)
}
