use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::codebook::{Code, CodedEmail};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CodeAccuracy {
    pub matched: usize,
    pub total: usize,
    pub mismatches: Vec<String>,
}

impl CodeAccuracy {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }
}

/// Exact-match accuracy of predicted codes against hand labels, per code.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Evaluation {
    pub per_code: BTreeMap<Code, CodeAccuracy>,
    /// Hand-labelled ids with no prediction.
    pub unmatched: Vec<String>,
}

pub fn evaluate(predicted: &[CodedEmail], labels: &[CodedEmail]) -> Evaluation {
    let by_id: HashMap<&str, &CodedEmail> = predicted.iter().map(|c| (c.email_id.as_str(), c)).collect();
    let mut eval = Evaluation::default();
    for hand in labels {
        let Some(auto) = by_id.get(hand.email_id.as_str()) else {
            eval.unmatched.push(hand.email_id.clone());
            continue;
        };
        for code in Code::ALL {
            let acc = eval.per_code.entry(code).or_default();
            acc.total += 1;
            if code.canonical_value(auto) == code.canonical_value(hand) {
                acc.matched += 1;
            } else {
                acc.mismatches.push(hand.email_id.clone());
            }
        }
    }
    eval
}

impl Evaluation {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<30} {:>8} {:>9}", "Code", "Matched", "Accuracy");
        for (code, acc) in &self.per_code {
            let _ = writeln!(s, "{:<30} {:>4}/{:<3} {:>9.2}", code.title(), acc.matched, acc.total, acc.rate());
        }
        s
    }
}
