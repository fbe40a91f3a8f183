//! The sector × action × pressure combinations pinned by golden files.

#![allow(dead_code)]

use phishbook::codebook::CodedEmail;
use phishbook::corpus::{EmailId, EmailRecord, UrlRef};

pub const SECTORS: [&str; 4] = ["financial", "email", "document share", "unknown"];
pub const ACTIONS: [&str; 3] = ["click", "download", "reply/email"];
pub const FLAGS: [&str; 4] = ["none", "threat", "urgency", "both"];

pub struct Case {
    pub name: String,
    pub coded: CodedEmail,
    pub record: EmailRecord,
}

/// Twelve cases: every sector with every action, pressure flags rotating so
/// each flag value appears three times. Odd cases carry a lookalike link.
pub fn combinations() -> Vec<Case> {
    let mut out = Vec::new();
    for (i, (sector, action)) in SECTORS.iter().flat_map(|s| ACTIONS.iter().map(move |a| (*s, *a))).enumerate() {
        let flag = FLAGS[i % FLAGS.len()];
        let company = match sector {
            "financial" => "paypal",
            "email" => "microsoft",
            "document share" => "docusign",
            _ => "none",
        };
        let mut coded = CodedEmail::empty(format!("2019_{:03}", i + 1));
        coded.company_names = vec![company.into()];
        coded.sector = sector.into();
        coded.actions_generic = [action.to_string()].into();
        coded.main_topic = "account review".into();
        if flag == "threat" || flag == "both" {
            coded.threat = "threat".into();
        }
        if flag == "urgency" || flag == "both" {
            coded.urgency = "urgent".into();
        }
        let mut record = EmailRecord::blank(EmailId::new(2019, i + 1, 3));
        if i % 2 == 1 {
            record.urls.push(UrlRef {
                visible_text: "Review".into(),
                href: "https://secure-review.top/a".into(),
                href_domain: "secure-review.top".into(),
                mismatch: false,
                unparseable: false,
            });
        }
        let name = format!("{:02}_{}_{}_{}", i + 1, sector.replace(' ', "-"), action.replace('/', "-"), flag);
        out.push(Case { name, coded, record });
    }
    out
}
