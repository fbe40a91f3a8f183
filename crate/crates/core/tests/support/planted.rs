//! Synthetic corpora with known campaigns, for checking that coding plus
//! clustering recovers them.
//!
//! Each campaign shares one body and one subject template. Sender and link
//! domains rotate per email, and the subject takes up to two letter edits
//! inside its longer words, so exact matching on raw headers would fail while
//! the coded topic stays within a few edits.

#![allow(dead_code)]

use phishbook::corpus::{extract_urls, EmailId, EmailRecord};
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Planted {
    pub records: Vec<EmailRecord>,
    /// Campaign index per record; `None` for noise.
    pub truth: Vec<Option<usize>>,
}

struct Template {
    subject: &'static str,
    /// Words that carry the company name stay untouched.
    protected: &'static [&'static str],
    body: &'static str,
    sender_stem: &'static str,
}

const CAMPAIGNS: [Template; 3] = [
    Template {
        subject: "Your PayPal account access has been limited",
        protected: &["PayPal"],
        body: "Dear Customer,\n\nWe noticed unusual sign-in activity on your PayPal account.\n\
               Please click here to restore full account access: {url}\n\nPayPal Security Team\n",
        sender_stem: "service-paypal",
    },
    Template {
        subject: "You have received shared documents via WeTransfer",
        protected: &["WeTransfer"],
        body: "Hi,\n\nYou have received three shared documents via WeTransfer.\n\
               Click here to view your documents: {url}\n\nWeTransfer\n",
        sender_stem: "wetransfer-notify",
    },
    Template {
        subject: "Mailbox storage quota almost exceeded",
        protected: &[],
        body: "Dear user,\n\nYour monkey.org mailbox storage quota is almost exceeded.\n\
               Click the link below to upgrade your mailbox storage: {url}\n\nMail Administrator\n",
        sender_stem: "mail-admin",
    },
];

const TLDS: [&str; 5] = ["com", "net", "info", "top", "biz"];

fn random_word(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len).map(|_| char::from(b'a' + rng.random_range(0..26u8))).collect()
}

/// Apply `edits` single-letter edits to words of five or more letters that
/// are not protected. Word boundaries and word count never change.
pub fn perturb(subject: &str, protected: &[&str], edits: usize, rng: &mut ChaCha8Rng) -> String {
    let mut words: Vec<String> = subject.split(' ').map(str::to_string).collect();
    let editable: Vec<usize> = words
        .iter()
        .enumerate()
        .filter(|(_, w)| w.len() >= 5 && !protected.contains(&w.as_str()))
        .map(|(i, _)| i)
        .collect();
    for _ in 0..edits {
        let w = &mut words[editable[rng.random_range(0..editable.len())]];
        let mut chars: Vec<char> = w.chars().collect();
        let pos = rng.random_range(0..chars.len());
        let letter = char::from(b'a' + rng.random_range(0..26u8));
        match rng.random_range(0..3) {
            0 => chars[pos] = letter,
            1 => chars.insert(pos, letter),
            _ if chars.len() > 4 => {
                chars.remove(pos);
            }
            _ => chars[pos] = letter,
        }
        *w = chars.into_iter().collect();
    }
    words.join(" ")
}

fn record(id: EmailId, sender: String, subject: String, body: String) -> EmailRecord {
    let mut r = EmailRecord::blank(id);
    r.sender_domain = sender.rsplit('@').next().unwrap_or_default().to_string();
    r.sender_address = sender;
    r.subject = subject;
    r.urls = extract_urls(None, &body);
    r.body_text = body;
    r
}

/// `per_campaign` emails for each of the three campaigns plus `noise`
/// unrelated singletons, shuffled and numbered as one year's corpus.
pub fn planted_corpus(seed: u64, per_campaign: usize, noise: usize) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items: Vec<(Option<usize>, String, String, String)> = Vec::new();
    for (k, t) in CAMPAIGNS.iter().enumerate() {
        for i in 0..per_campaign {
            let domain = format!("{}-{}.{}", t.sender_stem, random_word(&mut rng, 4), TLDS[i % TLDS.len()]);
            let link = format!(
                "https://{}.{}/{}",
                random_word(&mut rng, 8),
                TLDS[(i + k) % TLDS.len()],
                random_word(&mut rng, 6)
            );
            let edits = rng.random_range(0..=2);
            items.push((
                Some(k),
                format!("no-reply@{domain}"),
                perturb(t.subject, t.protected, edits, &mut rng),
                t.body.replace("{url}", &link),
            ));
        }
    }
    for _ in 0..noise {
        let w: Vec<String> = (0..6).map(|_| random_word(&mut rng, 7)).collect();
        items.push((
            None,
            format!("{}@{}.org", w[0], w[1]),
            format!("{} {} notice", w[2], w[3]),
            format!("Hello,\n\nPlease click here to see the {} {} report: https://{}.org/r\n", w[4], w[5], w[1]),
        ));
    }
    items.shuffle(&mut rng);
    let width = items.len().to_string().len().max(3);
    let (mut records, mut truth) = (Vec::new(), Vec::new());
    for (i, (campaign, sender, subject, body)) in items.into_iter().enumerate() {
        records.push(record(EmailId::new(2019, i + 1, width), sender, subject, body));
        truth.push(campaign);
    }
    Planted { records, truth }
}
