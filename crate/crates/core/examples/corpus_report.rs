//! Label distributions, frequent phrases and a co-occurrence count over a
//! coded corpus.
//!
//! ```text
//! cargo run --example corpus_report -- [CODED.csv|CODED.jsonl]
//! ```

use std::path::PathBuf;

use phishbook::codebook::read_coded_file;
use phishbook::reports::{cooccurrence_report, distribution_report, DEFAULT_TOP_K};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/labeled_codes.csv"));
    let coded = read_coded_file(&path)?;
    let report = distribution_report(&coded, DEFAULT_TOP_K)?;
    println!("{}", report.to_table());

    let both = cooccurrence_report(&coded, "urgency", "threat", "urgent", "threat")?;
    println!("urgent and threatening: {} of {} urgent, {} threatening", both.count, both.count_a, both.count_b);
    Ok(())
}
