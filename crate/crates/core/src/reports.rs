//! Corpus-level label distributions and code co-occurrence.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::codebook::{Code, CodedEmail};
use crate::text::{is_stopword, tokenize};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no coded emails to report on")]
    Empty,
    #[error("unknown code {0:?}")]
    UnknownCode(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Codes reported as label counts; the open-ended ones get phrase and token
/// frequencies instead.
pub const COUNTED_CODES: [Code; 6] =
    [Code::CompanyName, Code::Sector, Code::Salutation, Code::Threat, Code::Urgency, Code::ActionGeneric];
pub const PHRASE_CODES: [Code; 2] = [Code::ActionSpecific, Code::MainTopic];
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: String,
    pub count: usize,
    /// Share of emails, rounded half-up to two decimals.
    pub percentage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub text: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub denominator: usize,
    pub codes: BTreeMap<Code, Vec<LabelCount>>,
    pub top_phrases: BTreeMap<Code, Vec<Frequency>>,
    pub top_tokens: BTreeMap<Code, Vec<Frequency>>,
}

/// `100 * count / total` rounded half-up to two decimals, in integer
/// arithmetic so .005 boundaries are exact.
pub fn percentage(count: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let hundredths = (count as u128 * 20_000 + total as u128) / (2 * total as u128);
    hundredths as f64 / 100.0
}

fn ranked(counts: HashMap<String, usize>, k: Option<usize>) -> Vec<(String, usize)> {
    let mut v: Vec<(String, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if let Some(k) = k {
        v.truncate(k);
    }
    v
}

pub fn distribution_report(coded: &[CodedEmail], top_k: usize) -> Result<DistributionReport, ReportError> {
    if coded.is_empty() {
        return Err(ReportError::Empty);
    }
    let n = coded.len();
    let mut codes = BTreeMap::new();
    for code in COUNTED_CODES {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for c in coded {
            for v in code.values(c) {
                *counts.entry(v).or_insert(0) += 1;
            }
        }
        let rows = ranked(counts, None)
            .into_iter()
            .map(|(label, count)| LabelCount { percentage: percentage(count, n), label, count })
            .collect();
        codes.insert(code, rows);
    }

    let mut top_phrases = BTreeMap::new();
    let mut top_tokens = BTreeMap::new();
    for code in PHRASE_CODES {
        let mut phrases: HashMap<String, usize> = HashMap::new();
        let mut tokens: HashMap<String, usize> = HashMap::new();
        for c in coded {
            for p in code.values(c).into_iter().filter(|p| !p.is_empty()) {
                for t in tokenize(&p).into_iter().filter(|t| !is_stopword(t)) {
                    *tokens.entry(t).or_insert(0) += 1;
                }
                *phrases.entry(p).or_insert(0) += 1;
            }
        }
        let freq = |m| ranked(m, Some(top_k)).into_iter().map(|(text, count)| Frequency { text, count }).collect();
        top_phrases.insert(code, freq(phrases));
        top_tokens.insert(code, freq(tokens));
    }
    Ok(DistributionReport { denominator: n, codes, top_phrases, top_tokens })
}

impl DistributionReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Emails: {}", self.denominator);
        for (code, rows) in &self.codes {
            let _ = writeln!(s, "\n{}", code.title());
            for r in rows {
                let _ = writeln!(s, "  {:<36} {:>6} {:>8.2}%", r.label, r.count, r.percentage);
            }
        }
        for (code, phrases) in &self.top_phrases {
            let _ = writeln!(s, "\n{} (top phrases)", code.title());
            for f in phrases {
                let _ = writeln!(s, "  {:<48} {:>6}", f.text, f.count);
            }
            let _ = writeln!(s, "{} (top terms)", code.title());
            for f in &self.top_tokens[code] {
                let _ = writeln!(s, "  {:<48} {:>6}", f.text, f.count);
            }
        }
        s
    }

    /// `code,label,count,percentage` rows for the counted codes.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ReportError> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["code", "label", "count", "percentage"])?;
        for (code, rows) in &self.codes {
            for r in rows {
                wtr.write_record([code.key(), &r.label, &r.count.to_string(), &format!("{:.2}", r.percentage)])?;
            }
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cooccurrence {
    pub count: usize,
    pub count_a: usize,
    pub count_b: usize,
    /// `count / count_a`; absent when no email has value A.
    pub frac_of_a: Option<f64>,
    pub frac_of_b: Option<f64>,
}

/// How many emails carry both `code_a = value_a` and `code_b = value_b`.
pub fn cooccurrence_report(
    coded: &[CodedEmail],
    code_a: &str,
    code_b: &str,
    value_a: &str,
    value_b: &str,
) -> Result<Cooccurrence, ReportError> {
    let a: Code = code_a.parse().map_err(|_| ReportError::UnknownCode(code_a.to_string()))?;
    let b: Code = code_b.parse().map_err(|_| ReportError::UnknownCode(code_b.to_string()))?;
    let has = |code: Code, value: &str, c: &CodedEmail| code.values(c).iter().any(|v| v == value);
    let (mut count, mut count_a, mut count_b) = (0, 0, 0);
    for c in coded {
        let (x, y) = (has(a, value_a, c), has(b, value_b, c));
        count_a += usize::from(x);
        count_b += usize::from(y);
        count += usize::from(x && y);
    }
    let frac = |m: usize| (m > 0).then(|| count as f64 / m as f64);
    Ok(Cooccurrence { count, count_a, count_b, frac_of_a: frac(count_a), frac_of_b: frac(count_b) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn with(id: usize, threat: bool, urgent: bool) -> CodedEmail {
        let mut c = CodedEmail::empty(format!("2020_{id:03}"));
        if threat {
            c.threat = "threat".into();
        }
        if urgent {
            c.urgency = "urgent".into();
        }
        c
    }

    #[test]
    fn threat_share() {
        let v: Vec<_> = (0..4).map(|i| with(i, i == 0, false)).collect();
        let r = distribution_report(&v, 5).unwrap();
        let threat = &r.codes[&Code::Threat];
        assert_eq!(threat[0], LabelCount { label: "none".into(), count: 3, percentage: 75.0 });
        assert_eq!(threat[1], LabelCount { label: "threat".into(), count: 1, percentage: 25.0 });
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(percentage(1, 3), 33.33);
        assert_eq!(percentage(2, 3), 66.67);
        // 1/8 = 12.5% exactly; 1/16 = 6.25%; 1/32 = 3.125% -> 3.13
        assert_eq!(percentage(1, 32), 3.13);
        assert_eq!(percentage(1, 400), 0.25);
        assert_eq!(percentage(1, 800), 0.13);
        assert_eq!(percentage(0, 5), 0.0);
    }

    #[test]
    fn cooccurrence_fixture() {
        // 10 emails: 4 urgent+threat, 1 urgent only, 4 threat only, 1 neither
        let mut v = Vec::new();
        for i in 0..4 {
            v.push(with(i, true, true));
        }
        v.push(with(4, false, true));
        for i in 5..9 {
            v.push(with(i, true, false));
        }
        v.push(with(9, false, false));
        let r = cooccurrence_report(&v, "urgency", "threat", "urgent", "threat").unwrap();
        assert_eq!((r.count, r.count_a, r.count_b), (4, 5, 8));
        assert_eq!(r.frac_of_a, Some(0.8));
        assert_eq!(r.frac_of_b, Some(0.5));
    }

    #[test]
    fn disjoint_and_unknown() {
        let v = vec![with(0, true, false), with(1, false, true)];
        assert_eq!(cooccurrence_report(&v, "threat", "urgency", "threat", "urgent").unwrap().count, 0);
        assert!(matches!(
            cooccurrence_report(&v, "logo", "urgency", "x", "urgent"),
            Err(ReportError::UnknownCode(c)) if c == "logo"
        ));
        assert!(matches!(distribution_report(&[], 5), Err(ReportError::Empty)));
    }

    #[test]
    fn phrases_and_tokens() {
        let mut a = CodedEmail::empty("1");
        a.main_topic = "passwords expiring soon".into();
        a.action_specific = vec!["verify your account".into()];
        let mut b = a.clone();
        b.email_id = "2".into();
        b.main_topic = "password expiring".into();
        let r = distribution_report(&[a, b], 10).unwrap();
        let topics = &r.top_phrases[&Code::MainTopic];
        assert_eq!(topics.len(), 2);
        let tokens = &r.top_tokens[&Code::MainTopic];
        assert_eq!(tokens[0], Frequency { text: "expiring".into(), count: 2 });
        assert!(r.top_tokens[&Code::ActionSpecific].iter().all(|f| f.text != "your"));

        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let csv = String::from_utf8(out).unwrap();
        assert!(csv.starts_with("code,label,count,percentage\n"));
        assert!(csv.contains("threat,none,2,100.00"));
        assert!(r.to_table().contains("Urgency Cues"));
    }

    fn arb() -> impl Strategy<Value = Vec<CodedEmail>> {
        prop::collection::vec((any::<bool>(), any::<bool>(), 0usize..4), 1..120).prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (t, u, s))| {
                    let mut c = with(i, t, u);
                    c.sector = ["email", "financial", "unknown", "logistics"][s].into();
                    c
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn single_valued_codes_sum_to_total(v in arb()) {
            let r = distribution_report(&v, 5).unwrap();
            for code in [Code::Sector, Code::Salutation, Code::Threat, Code::Urgency] {
                let rows = &r.codes[&code];
                prop_assert_eq!(rows.iter().map(|r| r.count).sum::<usize>(), v.len());
                let pct: f64 = rows.iter().map(|r| r.percentage).sum();
                prop_assert!((pct - 100.0).abs() <= 0.05 + 1e-9, "{pct}");
            }
            let mut rev = v.clone();
            rev.reverse();
            prop_assert_eq!(distribution_report(&rev, 5).unwrap(), r);
            let co = cooccurrence_report(&v, "threat", "urgency", "threat", "urgent").unwrap();
            prop_assert!(co.count <= co.count_a.min(co.count_b));
        }
    }
}
