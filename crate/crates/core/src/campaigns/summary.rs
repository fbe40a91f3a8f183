use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{cluster_stats, levenshtein, Cluster, ClusterKey, ClusterStats, Clustering, Matcher};
use crate::codebook::CodedEmail;
use crate::corpus::EmailRecord;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CampaignError {
    #[error("cluster member {0:?} has no email record")]
    UnknownId(String),
}

/// Lookup of records and coded emails by id.
pub struct CorpusIndex<'a> {
    records: HashMap<&'a str, &'a EmailRecord>,
    coded: HashMap<&'a str, &'a CodedEmail>,
}

impl<'a> CorpusIndex<'a> {
    pub fn new(records: &'a [EmailRecord], coded: &'a [CodedEmail]) -> Self {
        CorpusIndex {
            records: records.iter().map(|r| (r.id.as_str(), r)).collect(),
            coded: coded.iter().map(|c| (c.email_id.as_str(), c)).collect(),
        }
    }

    fn record(&self, id: &str) -> Result<&'a EmailRecord, CampaignError> {
        self.records.get(id).copied().ok_or_else(|| CampaignError::UnknownId(id.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub key: ClusterKey,
    pub size: usize,
    pub member_ids: Vec<String>,
    pub years: BTreeSet<u16>,
    /// Mean over unordered member pairs of the raw subject edit distance.
    pub avg_subject_levenshtein: f64,
    pub unique_sender_domains: usize,
    pub unique_url_domains: usize,
    pub sample_topics: Vec<String>,
}

const SAMPLE_TOPICS: usize = 3;

pub fn summarize_cluster(c: &Cluster, index: &CorpusIndex<'_>) -> Result<ClusterSummary, CampaignError> {
    let records: Vec<&EmailRecord> = c.member_ids.iter().map(|id| index.record(id)).collect::<Result<_, _>>()?;

    let mut total = 0usize;
    let mut pairs = 0usize;
    for (i, a) in records.iter().enumerate() {
        for b in &records[i + 1..] {
            total += levenshtein(&a.subject, &b.subject);
            pairs += 1;
        }
    }
    let avg_subject_levenshtein = if pairs == 0 { 0.0 } else { total as f64 / pairs as f64 };

    let senders: BTreeSet<&str> = records.iter().map(|r| r.sender_domain.as_str()).filter(|d| !d.is_empty()).collect();
    let url_domains: BTreeSet<&str> =
        records.iter().flat_map(|r| r.urls.iter().map(|u| u.href_domain.as_str())).filter(|d| !d.is_empty()).collect();

    let mut sample_topics: Vec<String> = Vec::new();
    for id in &c.member_ids {
        if let Some(coded) = index.coded.get(id.as_str()) {
            if !coded.main_topic.is_empty() && !sample_topics.contains(&coded.main_topic) {
                sample_topics.push(coded.main_topic.clone());
            }
        }
    }
    sample_topics.truncate(SAMPLE_TOPICS);

    Ok(ClusterSummary {
        key: c.key.clone(),
        size: c.size(),
        member_ids: c.member_ids.clone(),
        years: records.iter().map(|r| r.year()).collect(),
        avg_subject_levenshtein,
        unique_sender_domains: senders.len(),
        unique_url_domains: url_domains.len(),
        sample_topics,
    })
}

/// Machine-readable header facts for one member of a cluster.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportRow {
    pub email_id: String,
    pub sender_name: String,
    pub sender_address: String,
    pub first_ip: Option<String>,
    pub main_url_domain: Option<String>,
    pub dkim: bool,
}

pub fn transport_rows(c: &Cluster, index: &CorpusIndex<'_>) -> Result<Vec<TransportRow>, CampaignError> {
    c.member_ids
        .iter()
        .map(|id| {
            let r = index.record(id)?;
            Ok(TransportRow {
                email_id: id.clone(),
                sender_name: r.sender_display.clone(),
                sender_address: r.sender_address.clone(),
                first_ip: r.transport.first_ip.clone(),
                main_url_domain: r.urls.iter().map(|u| u.href_domain.clone()).find(|d| !d.is_empty()),
                dkim: r.transport.dkim_present,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerListing {
    pub depth: u8,
    pub stats: ClusterStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub matcher: Matcher,
    pub emails: usize,
    pub layers: Vec<LayerListing>,
    pub leaves: Vec<ClusterSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transport: Vec<(ClusterKey, Vec<TransportRow>)>,
}

/// Summaries of every leaf with at least `min_size` members, largest first.
/// Transport tables are added when `with_transport` is set.
pub fn campaign_report(
    clustering: &Clustering,
    index: &CorpusIndex<'_>,
    min_size: usize,
    with_transport: bool,
) -> Result<CampaignReport, CampaignError> {
    let layers = (1..=clustering.layers.len() as u8)
        .map(|depth| LayerListing { depth, stats: cluster_stats(clustering.layer(depth)) })
        .collect();
    let mut chosen: Vec<&Cluster> = clustering.leaves().iter().filter(|c| c.size() >= min_size).collect();
    chosen.sort_by(|a, b| b.size().cmp(&a.size()).then_with(|| a.key.cmp(&b.key)));
    let leaves = chosen.iter().map(|c| summarize_cluster(c, index)).collect::<Result<Vec<_>, _>>()?;
    let transport = if with_transport {
        chosen.iter().map(|c| Ok((c.key.clone(), transport_rows(c, index)?))).collect::<Result<_, CampaignError>>()?
    } else {
        Vec::new()
    };
    Ok(CampaignReport {
        matcher: clustering.matcher,
        emails: clustering.leaves().iter().map(Cluster::size).sum(),
        layers,
        leaves,
        transport,
    })
}

fn years_cell(years: &BTreeSet<u16>) -> String {
    years.iter().map(u16::to_string).collect::<Vec<_>>().join(", ")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

impl CampaignReport {
    /// Aligned text: layer statistics, then one two-line row per cluster
    /// (attributes over actions, topic over specific actions).
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Matcher: {}   Emails: {}", self.matcher, self.emails);
        let _ =
            writeln!(s, "{:<6} {:>8} {:>6} {:>6} {:>8} {:>8}", "Depth", "Clusters", "Multi", "Large", "Mean", "Median");
        for l in &self.layers {
            let _ = writeln!(
                s,
                "{:<6} {:>8} {:>6} {:>6} {:>8} {:>8}",
                l.depth,
                l.stats.total_clusters,
                l.stats.multi_clusters,
                l.stats.large_clusters,
                opt(l.stats.mean_size_excl_singletons),
                opt(l.stats.median_size_excl_singletons)
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<32} {:<40} {:>4} {:<12} {:>7} {:>5} {:>5}",
            "Attributes", "Main Topic and Action", "No.", "Years", "Subject", "From", "URLs"
        );
        for c in &self.leaves {
            let attrs = format!("{} [{}]", c.key.sector, c.key.company.as_deref().unwrap_or(""));
            let _ = writeln!(
                s,
                "{:<32} {:<40} {:>4} {:<12} {:>7.1} {:>5} {:>5}",
                attrs,
                c.key.topic.as_deref().unwrap_or(""),
                c.size,
                years_cell(&c.years),
                c.avg_subject_levenshtein,
                c.unique_sender_domains,
                c.unique_url_domains
            );
            let _ = writeln!(
                s,
                "{:<32} {:<40}",
                c.key.action_set.as_deref().unwrap_or(""),
                c.key.action_specific.as_deref().unwrap_or("")
            );
        }
        for (key, rows) in &self.transport {
            let _ = writeln!(s);
            let _ = writeln!(
                s,
                "{} [{}] / {}",
                key.sector,
                key.company.as_deref().unwrap_or(""),
                key.topic.as_deref().unwrap_or("")
            );
            let _ = writeln!(
                s,
                "{:<10} {:<20} {:<40} {:<16} {:<28} {:<5}",
                "ID", "Sender Name", "Sender Address", "First IP", "Main URL - Domain", "DKIM"
            );
            for r in rows {
                let _ = writeln!(
                    s,
                    "{:<10} {:<20} {:<40} {:<16} {:<28} {:<5}",
                    r.email_id,
                    r.sender_name,
                    r.sender_address,
                    r.first_ip.as_deref().unwrap_or("-"),
                    r.main_url_domain.as_deref().unwrap_or("-"),
                    if r.dkim { "yes" } else { "none" }
                );
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::five;
    use super::*;
    use crate::campaigns::cluster_multilayer;
    use crate::corpus::{EmailId, UrlRef};

    fn record(id: &str, subject: &str, sender_domain: &str, url_domain: &str) -> EmailRecord {
        let mut r = EmailRecord::blank(id.parse::<EmailId>().unwrap());
        r.subject = subject.into();
        r.sender_domain = sender_domain.into();
        r.sender_display = "Sender".into();
        r.sender_address = format!("x@{sender_domain}");
        if !url_domain.is_empty() {
            r.urls.push(UrlRef {
                visible_text: "here".into(),
                href: format!("https://{url_domain}/"),
                href_domain: url_domain.into(),
                mismatch: false,
                unparseable: false,
            });
        }
        r
    }

    fn records() -> Vec<EmailRecord> {
        vec![
            record("2018_001", "You received files", "a.com", "x.web.app"),
            record("2019_002", "Account notice", "p.com", "p1.com"),
            record("2018_003", "You received a file", "b.com", "y.web.app"),
            record("2015_004", "New security safeguard", "u.com", "u.com"),
            record("2019_005", "Account notice", "p.com", "p2.com"),
        ]
    }

    #[test]
    fn summaries_of_the_five_email_fixture() {
        let coded = five();
        let records = records();
        let index = CorpusIndex::new(&records, &coded);
        let clustering = cluster_multilayer(&coded, Matcher::Exact);
        let leaves = clustering.leaves();

        let wt = summarize_cluster(&leaves[0], &index).unwrap();
        assert_eq!(wt.size, 2);
        assert_eq!(wt.avg_subject_levenshtein, levenshtein("You received files", "You received a file") as f64);
        assert_eq!(wt.unique_sender_domains, 2);
        assert_eq!(wt.unique_url_domains, 2);
        assert_eq!(wt.years, BTreeSet::from([2018]));

        let pp = summarize_cluster(&leaves[1], &index).unwrap();
        assert_eq!(pp.avg_subject_levenshtein, 0.0);
        assert_eq!((pp.unique_sender_domains, pp.unique_url_domains), (1, 2));

        let single = summarize_cluster(&leaves[2], &index).unwrap();
        assert_eq!(single.avg_subject_levenshtein, 0.0);
    }

    #[test]
    fn unknown_member_is_an_error() {
        let coded = five();
        let index = CorpusIndex::new(&[], &coded);
        let clustering = cluster_multilayer(&coded, Matcher::Exact);
        assert_eq!(
            summarize_cluster(&clustering.leaves()[0], &index).unwrap_err(),
            CampaignError::UnknownId("2018_001".into())
        );
    }

    #[test]
    fn report_table_and_json() {
        let coded = five();
        let records = records();
        let index = CorpusIndex::new(&records, &coded);
        let report = campaign_report(&cluster_multilayer(&coded, Matcher::Exact), &index, 2, true).unwrap();
        assert_eq!(report.leaves.len(), 2);
        assert_eq!(report.emails, 5);
        assert_eq!(report.transport.len(), 2);
        let table = report.to_table();
        assert!(table.contains("document share [wetransfer]"));
        assert!(table.contains("Main Topic and Action"));
        assert!(table.contains("Main URL - Domain"));
        let json = serde_json::to_string(&report).unwrap();
        let back: CampaignReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
